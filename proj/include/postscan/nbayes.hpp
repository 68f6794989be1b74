#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "postscan/common.hpp"
#include "postscan/textprep.hpp"

namespace postscan::nbayes {

enum class Variant { Multinomial, Complement, Bernoulli };

/// "mnb", "cnb", "bnb".
std::string_view variant_name(Variant variant);
Variant parse_variant(std::string_view name);

struct TrainingDoc {
  std::vector<std::string> tokens;
  Label label = Label::Benign;
};

struct TrainOptions {
  double alpha = 1.0;
  /// Complement NB only: divide each class's log weights by their L1 norm.
  bool weight_normalize = false;
};

struct Prediction {
  Label label = Label::Benign;
  /// P(Concerning | doc).
  double score = 0.0;
  /// Indexed by label_index().
  std::array<double, 2> log_scores{};
};

/// Trained Naive Bayes parameters. Immutable; concurrent prediction is safe.
///
/// Statistics per class c and vocabulary token t:
///   Multinomial  theta_ct = (N_ct + a) / (N_c + a|V|), score_c = log pi_c + sum_t f_t log theta_ct
///   Complement   theta~_ct from the counts of every class except c,
///                score_c = log pi_c - sum_t f_t log theta~_ct
///   Bernoulli    theta_ct = (D_ct + a) / (D_c + 2a),
///                score_c = log pi_c + sum_{t in V} [x_t log theta_ct + (1 - x_t) log(1 - theta_ct)]
/// with pi_c the class document fraction. Out-of-vocabulary tokens are ignored.
class NbModel {
 public:
  /// Rebuilds a model from raw statistics (used by deserialization).
  /// `token_counts[c][t]` is N_ct (MNB/CNB) or D_ct (BNB).
  NbModel(Variant variant, TrainOptions options, textprep::Vocabulary vocab,
          std::array<std::uint64_t, 2> class_doc_counts, std::array<std::vector<std::uint64_t>, 2> token_counts);

  Variant variant() const { return variant_; }
  double alpha() const { return options_.alpha; }
  bool weight_normalized() const { return options_.weight_normalize; }
  const textprep::Vocabulary& vocabulary() const { return vocab_; }
  std::uint64_t class_doc_count(Label c) const { return class_doc_counts_[label_index(c)]; }
  const std::vector<std::uint64_t>& token_counts(Label c) const { return token_counts_[label_index(c)]; }
  /// N_c for MNB/CNB (sum of token counts), D_c for BNB.
  std::uint64_t class_total(Label c) const { return class_totals_[label_index(c)]; }
  double log_prior(Label c) const { return log_priors_[label_index(c)]; }
  /// Smoothed per-class token probability: theta_ct (MNB/BNB) or theta~_ct (CNB, unnormalized).
  double token_probability(Label c, std::size_t token) const;

  std::array<double, 2> log_scores(std::span<const std::string> doc) const;
  /// Concerning iff score > threshold, so an exact tie goes to Benign.
  Prediction predict(std::span<const std::string> doc, double threshold = 0.5) const;

  friend bool operator==(const NbModel& a, const NbModel& b);

 private:
  void derive_parameters();

  Variant variant_;
  TrainOptions options_;
  textprep::Vocabulary vocab_;
  std::array<std::uint64_t, 2> class_doc_counts_{};
  std::array<std::vector<std::uint64_t>, 2> token_counts_;
  std::array<std::uint64_t, 2> class_totals_{};
  std::array<double, 2> log_priors_{};
  // Per class, per token: weight added once per occurrence (MNB/CNB) or on presence (BNB).
  std::array<std::vector<double>, 2> token_weights_;
  // BNB: score of the all-absent document (log prior + sum_t log(1 - theta_ct)).
  std::array<double, 2> absent_base_{};
};

/// Builds the vocabulary from `docs` (min_df 1). Throws DataError when a class is missing and
/// std::invalid_argument when alpha <= 0.
NbModel train(std::span<const TrainingDoc> docs, Variant variant, TrainOptions options = {});

inline Prediction predict(const NbModel& model, std::span<const std::string> doc, double threshold = 0.5) {
  return model.predict(doc, threshold);
}

/// OpenMP over documents; order preserved, bit-identical to predict_batch_serial.
std::vector<Prediction> predict_batch(const NbModel& model, std::span<const std::vector<std::string>> docs,
                                      double threshold = 0.5);
std::vector<Prediction> predict_batch_serial(const NbModel& model, std::span<const std::vector<std::string>> docs,
                                             double threshold = 0.5);

/// Versioned JSON: {"format":"postscan-nb","version":1,"variant":..,"alpha":..,"weight_normalize":..,
/// "class_doc_counts":[n0,n1],"log_priors":[..],"vocabulary":[..],"document_frequency":[..],
/// "total_tokens":..,"token_counts":[[..],[..]]}.
std::string to_json(const NbModel& model);
NbModel from_json(std::string_view text);
void save_model(const std::filesystem::path& path, const NbModel& model);
NbModel load_model(const std::filesystem::path& path);

}  // namespace postscan::nbayes
