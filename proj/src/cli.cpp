#include "postscan/cli.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "postscan/augment.hpp"
#include "postscan/bleu.hpp"
#include "postscan/captioner.hpp"
#include "postscan/config.hpp"
#include "postscan/corpus.hpp"
#include "postscan/metrics.hpp"
#include "postscan/nbayes.hpp"
#include "postscan/pipeline.hpp"
#include "postscan/textprep.hpp"

namespace postscan::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 0;
  std::string stopwords;
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  f << content;
  if (!f) throw DataError("failed writing " + path);
}

std::shared_ptr<const textprep::StopwordSet> stopwords_for(const std::string& path) {
  return path.empty() ? textprep::default_stopwords() : textprep::load_stopwords(path);
}

std::vector<corpus::LabeledText> load_corpus(const std::string& path, const std::string& format) {
  const auto fmt = format.empty() ? corpus::text_format_for(path)
                   : format == "csv" ? corpus::TextFormat::Csv
                   : format == "jsonl" ? corpus::TextFormat::Jsonl
                                       : throw UsageError("--format must be csv or jsonl");
  return corpus::load_text_corpus(path, fmt);
}

std::vector<nbayes::TrainingDoc> to_docs(const std::vector<corpus::LabeledText>& items,
                                         const textprep::CleanConfig& clean) {
  std::vector<nbayes::TrainingDoc> docs;
  docs.reserve(items.size());
  for (const auto& it : items) docs.push_back({textprep::tokenize(textprep::clean(it.text, clean)), it.label});
  return docs;
}

// Train/test partition shared by `train` and `eval`: fraction 0 keeps everything on both sides.
std::pair<std::vector<corpus::LabeledText>, std::vector<corpus::LabeledText>> partition(
    const std::vector<corpus::LabeledText>& items, double fraction, std::uint64_t seed) {
  if (fraction == 0.0) return {items, items};
  return corpus::split(items, corpus::SplitSpec{fraction, seed});
}

std::vector<corpus::CaptionedImage> select_combination(std::vector<corpus::CaptionedImage> images, int combination) {
  if (combination == 0) return images;
  const auto combos = corpus::standard_combinations();
  if (combination < 1 || combination > static_cast<int>(combos.size()))
    throw UsageError("--combination must be between 1 and " + std::to_string(combos.size()));
  const auto& sel = combos[static_cast<std::size_t>(combination - 1)];
  const auto combo = corpus::combine(sel.selectors, images, sel.name);
  std::vector<corpus::CaptionedImage> out;
  out.reserve(combo.members.size());
  for (auto i : combo.members) out.push_back(std::move(images[i]));
  return out;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"postscan: multimodal (text + image caption) post classifier toolkit", "postscan"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config_path, "Pipeline config file (key = value)");
  app.add_option("--seed", g.seed, "Seed for splits and augmentation");
  app.add_option("--out", g.out, "Output path (default: stdout)");
  app.add_option("--threads", g.threads, "OpenMP threads (0: default)")->check(CLI::NonNegativeNumber);
  app.add_option("--stopwords", g.stopwords, "Stopword list (default: shipped data/stopwords_en.txt)");

  // prep
  auto* prep = app.add_subcommand("prep", "Clean a labelled text corpus into JSONL");
  std::string prep_in;
  std::string prep_format;
  std::string prep_preset = "post";
  prep->add_option("--in", prep_in, "Corpus (.csv with header label,text or .jsonl)")->required();
  prep->add_option("--format", prep_format, "csv or jsonl (default: from extension)");
  prep->add_option("--preset", prep_preset, "post, caption or none");

  // augment
  auto* aug = app.add_subcommand("augment", "Augment an image corpus (image ops + back-translated captions)");
  std::string aug_images;
  std::string aug_recipe;
  std::string aug_dict;
  std::string aug_dict_rev;
  bool aug_identity = false;
  aug->add_option("--images", aug_images, "Image corpus directory (with manifest.jsonl)")->required();
  aug->add_option("--recipe", aug_recipe, "Augmentation recipe (JSON)")->required();
  aug->add_option("--dict", aug_dict, "Forward translation TSV (default: shipped pseudo-French)");
  aug->add_option("--dict-reverse", aug_dict_rev, "Reverse translation TSV");
  aug->add_flag("--identity-translator", aug_identity, "Keep captions unchanged");

  // train
  auto* train = app.add_subcommand("train", "Train a Naive Bayes text classifier");
  std::string train_data;
  std::string train_format;
  std::string train_variant = "cnb";
  double train_alpha = 1.0;
  double train_split = 0.2;
  bool train_wnorm = false;
  std::string train_preset = "post";
  train->add_option("--data", train_data, "Labelled corpus (.csv or .jsonl)")->required();
  train->add_option("--format", train_format, "csv or jsonl");
  train->add_option("--variant", train_variant, "mnb, cnb or bnb");
  train->add_option("--alpha", train_alpha, "Additive smoothing");
  train->add_option("--split", train_split, "Held-out test fraction (0: train on everything)");
  train->add_flag("--weight-normalize", train_wnorm, "Complement NB: L1-normalize class weights");
  train->add_option("--preset", train_preset, "Text clean preset");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a model on the held-out split");
  std::string eval_model;
  std::string eval_data;
  std::string eval_format;
  double eval_split = 0.2;
  double eval_threshold = 0.5;
  std::string eval_preset = "post";
  std::string eval_roc;
  eval->add_option("--model", eval_model, "Model JSON")->required();
  eval->add_option("--data", eval_data, "Labelled corpus")->required();
  eval->add_option("--format", eval_format, "csv or jsonl");
  eval->add_option("--split", eval_split, "Test fraction used at training time (0: whole corpus)");
  eval->add_option("--threshold", eval_threshold, "Decision threshold on P(concerning)");
  eval->add_option("--preset", eval_preset, "Text clean preset");
  eval->add_option("--roc-csv", eval_roc, "Write ROC points as CSV");

  // caption
  auto* cap = app.add_subcommand("caption", "Build, run, serve or evaluate the k-NN caption index");
  cap->require_subcommand(1);
  auto* cap_build = cap->add_subcommand("build", "Build an index from an image corpus");
  std::string cap_images;
  int cap_bins = 4;
  std::string cap_metric = "chi2";
  int cap_combination = 0;
  cap_build->add_option("--images", cap_images, "Image corpus directory")->required();
  cap_build->add_option("--bins", cap_bins, "Histogram bins per channel (divides 256)");
  cap_build->add_option("--metric", cap_metric, "l2 or chi2");
  cap_build->add_option("--combination", cap_combination, "Restrict to standard category combination 1..7");
  auto* cap_run = cap->add_subcommand("run", "Caption images");
  std::string cap_index;
  std::vector<std::string> cap_paths;
  cap_run->add_option("--index", cap_index, "Index JSON")->required();
  cap_run->add_option("images", cap_paths, "Image files")->required();
  auto* cap_serve = cap->add_subcommand("serve", "Answer image-path lines on stdin with caption lines");
  cap_serve->add_option("--index", cap_index, "Index JSON")->required();
  auto* cap_eval = cap->add_subcommand("eval", "Corpus BLEU of index captions against reference captions");
  std::string cap_eval_images;
  cap_eval->add_option("--index", cap_index, "Index JSON")->required();
  cap_eval->add_option("--images", cap_eval_images, "Image corpus directory with references")->required();

  // bleu
  auto* bl = app.add_subcommand("bleu", "Corpus BLEU-1/BLEU-2 of hypotheses against references");
  std::string bl_refs;
  std::string bl_hyps;
  bool bl_smooth = false;
  int bl_order = 2;
  bl->add_option("--refs", bl_refs, "JSONL {\"id\":..,\"references\":[..]}")->required();
  bl->add_option("--hyps", bl_hyps, "JSONL {\"id\":..,\"caption\":..}")->required();
  bl->add_flag("--smooth", bl_smooth, "Add-epsilon smoothing for zero-match orders");
  bl->add_option("--max-order", bl_order, "1 or 2")->check(CLI::IsMember({1, 2}));

  // classify
  auto* cls = app.add_subcommand("classify", "Classify posts (text + optional image)");
  std::string cls_posts;
  std::string cls_model;
  std::string cls_index;
  std::string cls_captioner;
  std::string cls_command;
  std::optional<double> cls_threshold;
  cls->add_option("--posts", cls_posts, "Posts JSONL")->required();
  cls->add_option("--model", cls_model, "Model JSON (overrides config)");
  cls->add_option("--index", cls_index, "Caption index JSON (overrides config)");
  cls->add_option("--captioner", cls_captioner, "knn, subprocess or none (overrides config)");
  cls->add_option("--captioner-command", cls_command, "External captioner command line");
  cls->add_option("--threshold", cls_threshold, "Decision threshold on P(concerning)");

  // report
  auto* rep = app.add_subcommand("report", "Evaluation tables from verdicts carrying gold labels");
  std::string rep_verdicts;
  std::string rep_roc;
  std::string rep_json;
  rep->add_option("--verdicts", rep_verdicts, "Verdicts JSONL")->required();
  rep->add_option("--roc-csv", rep_roc, "Write ROC points as CSV");
  rep->add_option("--json", rep_json, "Write the EvalReport JSON here (--out gets the text table)");

  for (auto* sub : {prep, aug, train, eval, cap, cap_build, cap_run, cap_serve, cap_eval, bl, cls, rep})
    sub->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsageError;
  }

  try {
    std::optional<config::PipelineConfig> cfg;
    if (!g.config_path.empty()) cfg = config::load_config(g.config_path);
    const std::uint64_t seed = g.seed ? *g.seed : cfg ? cfg->seed : 0;
    int threads = g.threads;
    if (threads == 0 && cfg) threads = cfg->threads;
    if (threads > 0) omp_set_num_threads(threads);
    std::string stopwords_path = g.stopwords;
    if (stopwords_path.empty() && cfg) stopwords_path = cfg->stopwords.string();
    auto stopwords = [&] { return stopwords_for(stopwords_path); };

    if (*prep) {
      const auto clean = textprep::preset_by_name(prep_preset, prep_preset == "post" ? stopwords() : nullptr);
      const auto items = load_corpus(prep_in, prep_format);
      std::string body;
      std::size_t dropped = 0;
      for (const auto& it : items) {
        const auto cleaned = textprep::clean(it.text, clean);
        if (cleaned.empty()) {
          ++dropped;
          continue;
        }
        nlohmann::ordered_json rec;
        rec["label"] = label_index(it.label);
        rec["text"] = cleaned;
        body += rec.dump() + "\n";
      }
      emit(g.out, body, out);
      err << "prep: " << items.size() - dropped << " records written";
      if (dropped) err << ", " << dropped << " dropped (empty after cleaning)";
      err << "\n";
      return kOk;
    }

    if (*aug) {
      if (g.out.empty()) throw UsageError("augment needs --out DIR");
      auto recipe = augment::load_recipe(aug_recipe);
      if (g.seed) recipe.seed = *g.seed;
      std::unique_ptr<augment::Translator> translator;
      if (aug_identity) {
        translator = std::make_unique<augment::IdentityTranslator>();
      } else if (!aug_dict.empty() || !aug_dict_rev.empty()) {
        if (aug_dict.empty() || aug_dict_rev.empty()) throw UsageError("--dict and --dict-reverse go together");
        translator = std::make_unique<augment::DictionaryTranslator>(
            augment::DictionaryTranslator::from_files(recipe.pivot, aug_dict, aug_dict_rev));
      } else {
        translator = std::make_unique<augment::DictionaryTranslator>(augment::DictionaryTranslator::shipped_pseudo_french());
      }
      const auto images = corpus::load_image_corpus(aug_images);
      std::vector<corpus::CaptionedImage> sources;
      for (const auto& im : images)
        if (!im.augmented && recipe.ops.count(im.category)) sources.push_back(im);
      const auto augmented = augment::augment_batch(sources, recipe, *translator);
      fs::create_directories(g.out);
      std::string manifest;
      for (std::size_t i = 0; i < augmented.size(); ++i) {
        const auto& item = augmented[i];
        char prefix[32];
        std::snprintf(prefix, sizeof(prefix), "aug_%04zu_", i);
        const auto stem = prefix + fs::path(item.name).stem().string();
        write_ppm(fs::path(g.out) / (stem + ".ppm"), item.image);
        std::string caps;
        for (const auto& c : item.captions) caps += c + "\n";
        emit((fs::path(g.out) / (stem + ".txt")).string(), caps, out);
        nlohmann::ordered_json rec;
        rec["image"] = stem + ".ppm";
        rec["captions"] = stem + ".txt";
        rec["category"] = std::string(corpus::category_name(item.category));
        rec["augmented"] = true;
        manifest += rec.dump() + "\n";
      }
      emit((fs::path(g.out) / "manifest.jsonl").string(), manifest, out);
      err << "augment: " << augmented.size() << " augmented images written to " << g.out << "\n";
      return kOk;
    }

    if (*train) {
      if (g.out.empty()) throw UsageError("train needs --out MODEL.json");
      const auto variant = nbayes::parse_variant(train_variant);
      const auto clean = textprep::preset_by_name(train_preset, stopwords());
      const auto items = load_corpus(train_data, train_format);
      const auto [train_items, test_items] = partition(items, train_split, seed);
      const auto docs = to_docs(train_items, clean);
      const auto model = nbayes::train(docs, variant, {train_alpha, train_wnorm});
      nbayes::save_model(g.out, model);
      err << "train: " << nbayes::variant_name(variant) << " on " << train_items.size() << " docs (held out "
          << (train_split == 0.0 ? 0 : test_items.size()) << "), vocabulary " << model.vocabulary().size() << "\n";
      return kOk;
    }

    if (*eval) {
      const auto model = nbayes::load_model(eval_model);
      const auto clean = textprep::preset_by_name(eval_preset, stopwords());
      const auto items = load_corpus(eval_data, eval_format);
      const auto test_items = partition(items, eval_split, seed).second;
      const auto docs = to_docs(test_items, clean);
      std::vector<std::vector<std::string>> tokens;
      std::vector<Label> gold;
      for (const auto& d : docs) {
        tokens.push_back(d.tokens);
        gold.push_back(d.label);
      }
      const auto preds = nbayes::predict_batch(model, tokens, eval_threshold);
      std::vector<Label> predicted;
      std::vector<double> scores;
      for (const auto& p : preds) {
        predicted.push_back(p.label);
        scores.push_back(p.score);
      }
      auto report = metrics::evaluate(gold, predicted);
      const auto m = report.matrix;
      if (m.tp + m.fn > 0 && m.tn + m.fp > 0) report.roc = metrics::roc(gold, scores);
      out << metrics::format_table(report, std::string(nbayes::variant_name(model.variant())) + " results");
      if (!g.out.empty()) emit(g.out, metrics::to_json(report), out);
      if (!eval_roc.empty() && report.roc) emit(eval_roc, metrics::roc_csv(*report.roc), out);
      return kOk;
    }

    if (*cap) {
      if (*cap_build) {
        if (g.out.empty()) throw UsageError("caption build needs --out INDEX.json");
        const auto metric = captioner::parse_metric(cap_metric);
        auto images = select_combination(corpus::load_image_corpus(cap_images), cap_combination);
        const auto index = captioner::build_index(images, cap_bins, metric);
        captioner::save_index(g.out, index);
        err << "caption build: " << index.size() << " images, " << index.size() * corpus::kCaptionsPerImage
            << " captions\n";
        return kOk;
      }
      const captioner::IndexCaptioner cap_impl(captioner::load_index(cap_index));
      if (*cap_run) {
        std::string body;
        for (const auto& p : cap_paths) body += cap_impl.caption(load_image(p)) + "\n";
        emit(g.out, body, out);
        return kOk;
      }
      if (*cap_serve) {
        captioner::serve(cap_impl, stdin, stdout);
        return kOk;
      }
      if (*cap_eval) {
        const auto images = corpus::load_image_corpus(cap_eval_images);
        std::vector<bleu::Pair> pairs;
        for (const auto& im : images) {
          bleu::Pair p;
          p.candidate = bleu::caption_tokens(cap_impl.caption(im.image));
          for (const auto& c : im.captions) p.references.push_back(bleu::caption_tokens(c));
          pairs.push_back(std::move(p));
        }
        const auto report = bleu::corpus_bleu(pairs);
        out << bleu::summary_line(report) << "\n";
        if (!g.out.empty()) emit(g.out, bleu::to_json(report), out);
        return kOk;
      }
    }

    if (*bl) {
      using nlohmann::json;
      std::map<std::string, std::vector<bleu::Tokens>> refs;
      {
        std::istringstream in(read_text(bl_refs));
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) {
          ++n;
          if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
          try {
            const auto rec = json::parse(line);
            const auto id = rec.at("id").is_string() ? rec["id"].get<std::string>() : rec["id"].dump();
            auto& list = refs[id];
            for (const auto& r : rec.at("references")) list.push_back(bleu::caption_tokens(r.get<std::string>()));
          } catch (const json::exception& e) {
            throw DataError(bl_refs + ": line " + std::to_string(n) + ": " + e.what());
          }
        }
      }
      std::vector<bleu::Pair> pairs;
      {
        std::istringstream in(read_text(bl_hyps));
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) {
          ++n;
          if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
          try {
            const auto rec = json::parse(line);
            const auto id = rec.at("id").is_string() ? rec["id"].get<std::string>() : rec["id"].dump();
            const auto it = refs.find(id);
            if (it == refs.end()) throw DataError(bl_hyps + ": line " + std::to_string(n) + ": no references for id " + id);
            pairs.push_back({bleu::caption_tokens(rec.at("caption").get<std::string>()), it->second});
          } catch (const json::exception& e) {
            throw DataError(bl_hyps + ": line " + std::to_string(n) + ": " + e.what());
          }
        }
      }
      if (pairs.empty()) throw DataError("no hypotheses to score");
      bleu::BleuReport report;
      try {
        report = bleu::corpus_bleu(pairs, {bl_order, bl_smooth});
      } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
      }
      out << bleu::summary_line(report) << "\n";
      if (!g.out.empty()) emit(g.out, bleu::to_json(report), out);
      return kOk;
    }

    if (*cls) {
      config::PipelineConfig c = cfg.value_or(config::PipelineConfig{});
      if (!cls_model.empty()) c.model = cls_model;
      if (!cls_index.empty()) c.index = cls_index;
      if (!cls_captioner.empty()) c.captioner = cls_captioner;
      if (!cls_command.empty()) c.captioner_command = cls_command;
      if (cls_threshold) c.threshold = *cls_threshold;
      if (!g.stopwords.empty()) c.stopwords = g.stopwords;
      config::validate(c);
      const auto sw = c.stopwords.empty() ? textprep::default_stopwords() : textprep::load_stopwords(c.stopwords);
      pipeline::FusionSettings settings{textprep::preset_by_name(c.post_preset, sw),
                                        textprep::preset_by_name(c.caption_preset, sw)};
      const pipeline::NbClassifier classifier(nbayes::load_model(c.model), c.threshold);
      std::unique_ptr<captioner::Captioner> cap_ptr;
      if (c.captioner == "knn" && !c.index.empty())
        cap_ptr = std::make_unique<captioner::IndexCaptioner>(captioner::load_index(c.index));
      else if (c.captioner == "subprocess")
        cap_ptr = std::make_unique<captioner::SubprocessCaptioner>(c.captioner_command);
      const auto posts = pipeline::load_posts(cls_posts);
      const auto verdicts = pipeline::batch_classify(posts, cap_ptr.get(), classifier, settings);
      emit(g.out, pipeline::verdicts_jsonl(verdicts), out);
      std::size_t concerning = 0;
      for (const auto& v : verdicts) concerning += v.label == Label::Concerning;
      err << "classify: " << verdicts.size() << " posts, " << concerning << " concerning\n";
      return kOk;
    }

    if (*rep) {
      const auto verdicts = pipeline::parse_verdicts(read_text(rep_verdicts));
      std::vector<Label> gold;
      std::vector<Label> predicted;
      std::vector<double> scores;
      for (const auto& v : verdicts) {
        if (!v.gold) continue;
        gold.push_back(*v.gold);
        predicted.push_back(v.label);
        scores.push_back(v.score);
      }
      if (gold.empty()) throw DataError("no verdicts carry a gold label");
      auto report = metrics::evaluate(gold, predicted);
      const auto m = report.matrix;
      if (m.tp + m.fn > 0 && m.tn + m.fp > 0) report.roc = metrics::roc(gold, scores);
      emit(g.out, metrics::format_table(report), out);
      if (!rep_json.empty()) emit(rep_json, metrics::to_json(report), out);
      if (!rep_roc.empty() && report.roc) emit(rep_roc, metrics::roc_csv(*report.roc), out);
      return kOk;
    }
    throw UsageError("no subcommand given");
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
}

}  // namespace postscan::cli
