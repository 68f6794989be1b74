#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace postscan::bleu {

using Tokens = std::vector<std::string>;

struct Pair {
  Tokens candidate;
  std::vector<Tokens> references;
};

struct BleuOptions {
  int max_order = 2;  // 1 or 2
  /// Replace a zero clipped-match count by 1e-9 so the order still contributes.
  bool smooth = false;
};

inline constexpr double kSmoothingEpsilon = 1e-9;

struct BleuReport {
  int max_order = 2;
  double bleu1 = 0.0;
  /// Present when max_order == 2.
  std::optional<double> bleu2;
  std::array<std::uint64_t, 2> clipped_matches{};
  std::array<std::uint64_t, 2> candidate_ngrams{};
  std::array<double, 2> precisions{};
  double brevity_penalty = 0.0;
  std::uint64_t candidate_length = 0;
  std::uint64_t reference_length = 0;
};

/// Clipped n-gram statistics for one pair; the unit every score is built from.
struct PairCounts {
  std::array<std::uint64_t, 2> clipped{};
  std::array<std::uint64_t, 2> total{};
  std::uint64_t candidate_length = 0;
  std::uint64_t reference_length = 0;  // closest reference length, ties toward the shorter one
};

/// Throws std::invalid_argument for an empty reference list or when all references are empty.
PairCounts count_pair(const Tokens& candidate, std::span<const Tokens> references, int max_order = 2);

/// Scores aggregated counts. BP = 1 if c > r else exp(1 - r/c); an empty candidate scores 0 with
/// BP reported as 0 (the c -> 0 limit).
BleuReport score_counts(const PairCounts& totals, const BleuOptions& options = {});

BleuReport sentence_bleu(const Tokens& candidate, std::span<const Tokens> references, const BleuOptions& options = {});

/// Sums counts and lengths over all pairs before computing precisions and BP. Per-pair counting runs
/// under OpenMP with an integer merge, so the result is identical to corpus_bleu_serial.
BleuReport corpus_bleu(std::span<const Pair> pairs, const BleuOptions& options = {});
BleuReport corpus_bleu_serial(std::span<const Pair> pairs, const BleuOptions& options = {});

/// Mean of the per-pair sentence scores (bleu1, bleu2).
std::array<double, 2> average_sentence_bleu(std::span<const Pair> pairs, const BleuOptions& options = {});

/// Cleans with the caption preset and tokenizes.
Tokens caption_tokens(const std::string& text);

std::string to_json(const BleuReport& report);
/// "BLEU-1 0.5800 BLEU-2 0.3700" (BLEU-2 omitted when max_order is 1).
std::string summary_line(const BleuReport& report);

}  // namespace postscan::bleu
