#include "postscan/nbayes.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace postscan::nbayes {

namespace {

constexpr int kFormatVersion = 1;
constexpr const char* kFormatName = "postscan-nb";

}  // namespace

std::string_view variant_name(Variant variant) {
  switch (variant) {
    case Variant::Multinomial:
      return "mnb";
    case Variant::Complement:
      return "cnb";
    case Variant::Bernoulli:
      return "bnb";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  if (name == "mnb" || name == "multinomial") return Variant::Multinomial;
  if (name == "cnb" || name == "complement") return Variant::Complement;
  if (name == "bnb" || name == "bernoulli") return Variant::Bernoulli;
  throw std::invalid_argument("unknown Naive Bayes variant '" + std::string(name) + "' (mnb, cnb, bnb)");
}

NbModel::NbModel(Variant variant, TrainOptions options, textprep::Vocabulary vocab,
                 std::array<std::uint64_t, 2> class_doc_counts,
                 std::array<std::vector<std::uint64_t>, 2> token_counts)
    : variant_(variant),
      options_(options),
      vocab_(std::move(vocab)),
      class_doc_counts_(class_doc_counts),
      token_counts_(std::move(token_counts)) {
  if (!(options_.alpha > 0.0) || !std::isfinite(options_.alpha))
    throw std::invalid_argument("smoothing alpha must be a positive finite number");
  if (vocab_.empty()) throw DataError("Naive Bayes model needs a non-empty vocabulary");
  for (const auto& counts : token_counts_)
    if (counts.size() != vocab_.size()) throw DataError("token count table does not match vocabulary size");
  if (class_doc_counts_[0] == 0 || class_doc_counts_[1] == 0)
    throw DataError("training data must contain both classes");
  derive_parameters();
}

void NbModel::derive_parameters() {
  const double a = options_.alpha;
  const double v = static_cast<double>(vocab_.size());
  const double n_docs = static_cast<double>(class_doc_counts_[0] + class_doc_counts_[1]);
  for (int c = 0; c < 2; ++c) {
    log_priors_[c] = std::log(static_cast<double>(class_doc_counts_[c]) / n_docs);
    if (variant_ == Variant::Bernoulli) {
      class_totals_[c] = class_doc_counts_[c];
      for (auto d : token_counts_[c])
        if (d > class_doc_counts_[c]) throw DataError("document occurrence count exceeds class document count");
    } else {
      std::uint64_t total = 0;
      for (auto n : token_counts_[c]) total += n;
      class_totals_[c] = total;
    }
  }
  for (int c = 0; c < 2; ++c) {
    auto& w = token_weights_[c];
    w.assign(vocab_.size(), 0.0);
    switch (variant_) {
      case Variant::Multinomial: {
        const double denom = static_cast<double>(class_totals_[c]) + a * v;
        for (std::size_t t = 0; t < w.size(); ++t) w[t] = std::log((static_cast<double>(token_counts_[c][t]) + a) / denom);
        break;
      }
      case Variant::Complement: {
        const int other = 1 - c;
        const double denom = static_cast<double>(class_totals_[other]) + a * v;
        double l1 = 0.0;
        for (std::size_t t = 0; t < w.size(); ++t) {
          const double log_theta = std::log((static_cast<double>(token_counts_[other][t]) + a) / denom);
          w[t] = -log_theta;
          l1 += std::abs(log_theta);
        }
        if (options_.weight_normalize && l1 > 0.0)
          for (auto& x : w) x /= l1;
        break;
      }
      case Variant::Bernoulli: {
        const double denom = static_cast<double>(class_doc_counts_[c]) + 2.0 * a;
        double base = log_priors_[c];
        for (std::size_t t = 0; t < w.size(); ++t) {
          const double theta = (static_cast<double>(token_counts_[c][t]) + a) / denom;
          const double log_absent = std::log1p(-theta);
          base += log_absent;
          w[t] = std::log(theta) - log_absent;
        }
        absent_base_[c] = base;
        break;
      }
    }
  }
}

double NbModel::token_probability(Label c, std::size_t token) const {
  const double a = options_.alpha;
  const int ci = label_index(c);
  switch (variant_) {
    case Variant::Multinomial:
      return (static_cast<double>(token_counts_[ci].at(token)) + a) /
             (static_cast<double>(class_totals_[ci]) + a * static_cast<double>(vocab_.size()));
    case Variant::Complement:
      return (static_cast<double>(token_counts_[1 - ci].at(token)) + a) /
             (static_cast<double>(class_totals_[1 - ci]) + a * static_cast<double>(vocab_.size()));
    case Variant::Bernoulli:
      return (static_cast<double>(token_counts_[ci].at(token)) + a) /
             (static_cast<double>(class_doc_counts_[ci]) + 2.0 * a);
  }
  return 0.0;
}

std::array<double, 2> NbModel::log_scores(std::span<const std::string> doc) const {
  std::array<double, 2> scores{};
  if (variant_ == Variant::Bernoulli) {
    scores = absent_base_;
    std::vector<std::size_t> present;
    for (const auto& tok : doc) {
      const auto idx = vocab_.index_of(tok);
      if (!idx) continue;
      bool seen = false;
      for (auto p : present) seen = seen || p == *idx;
      if (seen) continue;
      present.push_back(*idx);
      for (int c = 0; c < 2; ++c) scores[c] += token_weights_[c][*idx];
    }
    return scores;
  }
  scores = log_priors_;
  for (const auto& tok : doc) {
    const auto idx = vocab_.index_of(tok);
    if (!idx) continue;
    for (int c = 0; c < 2; ++c) scores[c] += token_weights_[c][*idx];
  }
  return scores;
}

Prediction NbModel::predict(std::span<const std::string> doc, double threshold) const {
  Prediction p;
  p.log_scores = log_scores(doc);
  // Softmax over the two class scores, in the overflow-safe logistic form.
  p.score = 1.0 / (1.0 + std::exp(p.log_scores[0] - p.log_scores[1]));
  p.label = p.score > threshold ? Label::Concerning : Label::Benign;
  return p;
}

bool operator==(const NbModel& a, const NbModel& b) {
  return a.variant_ == b.variant_ && a.options_.alpha == b.options_.alpha &&
         a.options_.weight_normalize == b.options_.weight_normalize && a.vocab_ == b.vocab_ &&
         a.class_doc_counts_ == b.class_doc_counts_ && a.token_counts_ == b.token_counts_ &&
         a.log_priors_ == b.log_priors_ && a.token_weights_ == b.token_weights_;
}

NbModel train(std::span<const TrainingDoc> docs, Variant variant, TrainOptions options) {
  if (!(options.alpha > 0.0) || !std::isfinite(options.alpha))
    throw std::invalid_argument("smoothing alpha must be a positive finite number");
  if (docs.empty()) throw DataError("cannot train on an empty corpus");
  std::vector<std::vector<std::string>> token_lists;
  token_lists.reserve(docs.size());
  std::array<std::uint64_t, 2> class_docs{};
  for (const auto& d : docs) {
    token_lists.push_back(d.tokens);
    ++class_docs[label_index(d.label)];
  }
  if (class_docs[0] == 0 || class_docs[1] == 0)
    throw DataError("training data must contain both classes (got a single-class corpus)");
  auto vocab = textprep::build_vocab(token_lists, 1);
  std::array<std::vector<std::uint64_t>, 2> counts{std::vector<std::uint64_t>(vocab.size(), 0),
                                                   std::vector<std::uint64_t>(vocab.size(), 0)};
  std::vector<std::size_t> last_doc(vocab.size(), static_cast<std::size_t>(-1));
  for (std::size_t i = 0; i < docs.size(); ++i) {
    auto& row = counts[label_index(docs[i].label)];
    for (const auto& tok : docs[i].tokens) {
      const auto idx = *vocab.index_of(tok);
      if (variant == Variant::Bernoulli) {
        if (last_doc[idx] != i) {
          last_doc[idx] = i;
          ++row[idx];
        }
      } else {
        ++row[idx];
      }
    }
  }
  return NbModel(variant, options, std::move(vocab), class_docs, std::move(counts));
}

std::vector<Prediction> predict_batch_serial(const NbModel& model, std::span<const std::vector<std::string>> docs,
                                             double threshold) {
  std::vector<Prediction> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(model.predict(d, threshold));
  return out;
}

std::vector<Prediction> predict_batch(const NbModel& model, std::span<const std::vector<std::string>> docs,
                                      double threshold) {
  std::vector<Prediction> out(docs.size());
  const auto n = static_cast<std::ptrdiff_t>(docs.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = model.predict(docs[static_cast<std::size_t>(i)], threshold);
  return out;
}

std::string to_json(const NbModel& model) {
  nlohmann::ordered_json doc;
  doc["format"] = kFormatName;
  doc["version"] = kFormatVersion;
  doc["variant"] = std::string(variant_name(model.variant()));
  doc["alpha"] = model.alpha();
  doc["weight_normalize"] = model.weight_normalized();
  doc["class_doc_counts"] = {model.class_doc_count(Label::Benign), model.class_doc_count(Label::Concerning)};
  doc["log_priors"] = {model.log_prior(Label::Benign), model.log_prior(Label::Concerning)};
  doc["vocabulary"] = model.vocabulary().tokens();
  doc["document_frequency"] = model.vocabulary().document_frequencies();
  doc["total_tokens"] = model.vocabulary().total_tokens();
  doc["token_counts"] = {model.token_counts(Label::Benign), model.token_counts(Label::Concerning)};
  return doc.dump(1) + "\n";
}

NbModel from_json(std::string_view text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kFormatName) throw DataError("not a postscan Naive Bayes model");
    if (doc.at("version").get<int>() != kFormatVersion)
      throw DataError("unsupported model version " + doc.at("version").dump());
    TrainOptions options;
    options.alpha = doc.at("alpha").get<double>();
    options.weight_normalize = doc.value("weight_normalize", false);
    const auto variant = parse_variant(doc.at("variant").get<std::string>());
    textprep::Vocabulary vocab(doc.at("vocabulary").get<std::vector<std::string>>(),
                               doc.at("document_frequency").get<std::vector<std::size_t>>(),
                               doc.at("total_tokens").get<std::size_t>());
    const auto class_docs = doc.at("class_doc_counts").get<std::array<std::uint64_t, 2>>();
    auto counts = doc.at("token_counts").get<std::array<std::vector<std::uint64_t>, 2>>();
    NbModel model(variant, options, std::move(vocab), class_docs, std::move(counts));
    if (doc.contains("log_priors")) {
      const auto priors = doc.at("log_priors").get<std::array<double, 2>>();
      if (priors[0] != model.log_prior(Label::Benign) || priors[1] != model.log_prior(Label::Concerning))
        throw DataError("stored log priors disagree with class document counts");
    }
    return model;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const NbModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model " + path.string());
  out << to_json(model);
}

NbModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace postscan::nbayes
