// Serial reference vs OpenMP kernel, same inputs. Run with --benchmark_filter=<kernel>.

#include <benchmark/benchmark.h>

#include <random>

#include "postscan/augment.hpp"
#include "postscan/bleu.hpp"
#include "postscan/captioner.hpp"
#include "postscan/nbayes.hpp"
#include "postscan/pipeline.hpp"
#include "postscan/textprep.hpp"
#include "synthetic.hpp"

using namespace postscan;

namespace {

std::vector<std::vector<std::string>> random_docs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::string>> docs;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& words = i % 2 ? synthetic::concerning_words() : synthetic::benign_words();
    docs.push_back(textprep::tokenize(synthetic::random_sentence(rng, words, 5, 40)));
  }
  return docs;
}

const nbayes::NbModel& model() {
  static const nbayes::NbModel m = [] {
    const auto docs = random_docs(2000, 1);
    std::vector<nbayes::TrainingDoc> train;
    for (std::size_t i = 0; i < docs.size(); ++i) train.push_back({docs[i], i % 2 ? Label::Concerning : Label::Benign});
    return nbayes::train(train, nbayes::Variant::Complement);
  }();
  return m;
}

std::vector<corpus::CaptionedImage> image_corpus(std::size_t n, int side) {
  std::mt19937_64 rng(2);
  std::vector<corpus::CaptionedImage> out;
  for (std::size_t i = 0; i < n; ++i) {
    corpus::CaptionedImage item;
    item.name = "img" + std::to_string(i);
    item.image = synthetic::random_image(rng, side, side);
    item.category = i % 2 ? corpus::Category::SchoolShooting : corpus::Category::MassShooting;
    for (std::size_t k = 0; k < corpus::kCaptionsPerImage; ++k)
      item.captions[k] = synthetic::random_sentence(rng, synthetic::concerning_words(), 4, 12) + " gun with gray parts";
    out.push_back(std::move(item));
  }
  return out;
}

void BM_predict_batch(benchmark::State& state, bool parallel) {
  const auto docs = random_docs(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) {
    auto out = parallel ? nbayes::predict_batch(model(), docs) : nbayes::predict_batch_serial(model(), docs);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_build_index(benchmark::State& state, bool parallel) {
  const auto corpus = image_corpus(static_cast<std::size_t>(state.range(0)), 64);
  for (auto _ : state) {
    auto index = parallel ? captioner::build_index(corpus) : captioner::build_index_serial(corpus);
    benchmark::DoNotOptimize(index);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_nearest(benchmark::State& state, bool parallel) {
  static const auto index = captioner::build_index(image_corpus(792, 32), 16);
  std::mt19937_64 rng(4);
  const auto query = captioner::featurize(synthetic::random_image(rng, 32, 32), 16);
  for (auto _ : state) {
    auto n = parallel ? index.nearest(query) : index.nearest_serial(query);
    benchmark::DoNotOptimize(n);
  }
}

void BM_corpus_bleu(benchmark::State& state, bool parallel) {
  const auto docs = random_docs(static_cast<std::size_t>(state.range(0)) * 6, 5);
  std::vector<bleu::Pair> pairs;
  for (std::size_t i = 0; i + 5 < docs.size(); i += 6) pairs.push_back({docs[i], {docs[i + 1], docs[i + 2], docs[i + 3], docs[i + 4], docs[i + 5]}});
  for (auto _ : state) {
    auto r = parallel ? bleu::corpus_bleu(pairs) : bleu::corpus_bleu_serial(pairs);
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pairs.size()));
}

void BM_augment_batch(benchmark::State& state, bool parallel) {
  const auto corpus = image_corpus(static_cast<std::size_t>(state.range(0)), 64);
  augment::Recipe recipe;
  recipe.seed = 7;
  recipe.ops_per_image = 2;
  for (auto c : {corpus::Category::SchoolShooting, corpus::Category::MassShooting})
    recipe.ops[c] = {augment::FlipH{}, augment::Rotate90{1}, augment::Brightness{30}, augment::Contrast{1.2}};
  const auto translator = augment::DictionaryTranslator::shipped_pseudo_french();
  for (auto _ : state) {
    auto out = parallel ? augment::augment_batch(corpus, recipe, translator)
                        : augment::augment_batch_serial(corpus, recipe, translator);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_batch_classify(benchmark::State& state, bool parallel) {
  const auto world = synthetic::make_world(9, static_cast<std::size_t>(state.range(0)), 200);
  const captioner::IndexCaptioner cap(captioner::build_index(world.caption_corpus));
  const pipeline::NbClassifier clf(model());
  const pipeline::FusionSettings settings;
  for (auto _ : state) {
    auto out = parallel ? pipeline::batch_classify(world.posts, &cap, clf, settings)
                        : pipeline::batch_classify_serial(world.posts, &cap, clf, settings);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK_CAPTURE(BM_predict_batch, serial, false)->Arg(4096)->UseRealTime();
BENCHMARK_CAPTURE(BM_predict_batch, openmp, true)->Arg(4096)->UseRealTime();
BENCHMARK_CAPTURE(BM_build_index, serial, false)->Arg(792)->UseRealTime();
BENCHMARK_CAPTURE(BM_build_index, openmp, true)->Arg(792)->UseRealTime();
BENCHMARK_CAPTURE(BM_nearest, serial, false)->UseRealTime();
BENCHMARK_CAPTURE(BM_nearest, openmp, true)->UseRealTime();
BENCHMARK_CAPTURE(BM_corpus_bleu, serial, false)->Arg(3960)->UseRealTime();
BENCHMARK_CAPTURE(BM_corpus_bleu, openmp, true)->Arg(3960)->UseRealTime();
BENCHMARK_CAPTURE(BM_augment_batch, serial, false)->Arg(146)->UseRealTime();
BENCHMARK_CAPTURE(BM_augment_batch, openmp, true)->Arg(146)->UseRealTime();
BENCHMARK_CAPTURE(BM_batch_classify, serial, false)->Arg(1000)->UseRealTime();
BENCHMARK_CAPTURE(BM_batch_classify, openmp, true)->Arg(1000)->UseRealTime();

BENCHMARK_MAIN();
