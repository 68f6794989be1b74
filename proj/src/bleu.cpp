#include "postscan/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "postscan/textprep.hpp"

namespace postscan::bleu {

namespace {

using NgramCounts = std::map<std::vector<std::string_view>, std::uint64_t>;

NgramCounts ngram_counts(const Tokens& tokens, int n) {
  NgramCounts counts;
  const auto un = static_cast<std::size_t>(n);
  if (tokens.size() < un) return counts;
  for (std::size_t i = 0; i + un <= tokens.size(); ++i) {
    std::vector<std::string_view> gram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                       tokens.begin() + static_cast<std::ptrdiff_t>(i + un));
    ++counts[std::move(gram)];
  }
  return counts;
}

void check_order(int max_order) {
  if (max_order != 1 && max_order != 2) throw std::invalid_argument("BLEU max_order must be 1 or 2");
}

}  // namespace

PairCounts count_pair(const Tokens& candidate, std::span<const Tokens> references, int max_order) {
  check_order(max_order);
  if (references.empty()) throw std::invalid_argument("BLEU needs at least one reference");
  if (std::all_of(references.begin(), references.end(), [](const Tokens& r) { return r.empty(); }))
    throw std::invalid_argument("BLEU needs at least one non-empty reference");
  PairCounts out;
  out.candidate_length = candidate.size();
  const auto c = static_cast<long long>(candidate.size());
  long long best = -1;
  for (const auto& ref : references) {
    const auto r = static_cast<long long>(ref.size());
    if (best < 0 || std::llabs(r - c) < std::llabs(best - c) || (std::llabs(r - c) == std::llabs(best - c) && r < best))
      best = r;
  }
  out.reference_length = static_cast<std::uint64_t>(best);
  for (int n = 1; n <= max_order; ++n) {
    const auto cand = ngram_counts(candidate, n);
    NgramCounts max_ref;
    for (const auto& ref : references)
      for (const auto& [gram, count] : ngram_counts(ref, n)) {
        auto& slot = max_ref[gram];
        slot = std::max(slot, count);
      }
    std::uint64_t clipped = 0;
    std::uint64_t total = 0;
    for (const auto& [gram, count] : cand) {
      total += count;
      const auto it = max_ref.find(gram);
      if (it != max_ref.end()) clipped += std::min(count, it->second);
    }
    out.clipped[n - 1] = clipped;
    out.total[n - 1] = total;
  }
  return out;
}

BleuReport score_counts(const PairCounts& totals, const BleuOptions& options) {
  check_order(options.max_order);
  BleuReport report;
  report.max_order = options.max_order;
  report.clipped_matches = totals.clipped;
  report.candidate_ngrams = totals.total;
  report.candidate_length = totals.candidate_length;
  report.reference_length = totals.reference_length;

  const double c = static_cast<double>(totals.candidate_length);
  const double r = static_cast<double>(totals.reference_length);
  if (totals.candidate_length == 0) {
    report.brevity_penalty = 0.0;
  } else {
    report.brevity_penalty = c > r ? 1.0 : std::exp(1.0 - r / c);
  }

  double log_sum = 0.0;
  bool zero = totals.candidate_length == 0;
  for (int n = 1; n <= options.max_order; ++n) {
    const auto m = totals.clipped[n - 1];
    const auto t = totals.total[n - 1];
    double p = 0.0;
    if (t > 0) {
      if (m > 0)
        p = static_cast<double>(m) / static_cast<double>(t);
      else if (options.smooth)
        p = kSmoothingEpsilon / static_cast<double>(t);
    }
    report.precisions[n - 1] = p;
    if (p == 0.0) zero = true;
    else log_sum += std::log(p);
    const double score = zero ? 0.0 : report.brevity_penalty * std::exp(log_sum / n);
    if (n == 1) report.bleu1 = score;
    else report.bleu2 = score;
  }
  return report;
}

BleuReport sentence_bleu(const Tokens& candidate, std::span<const Tokens> references, const BleuOptions& options) {
  return score_counts(count_pair(candidate, references, options.max_order), options);
}

BleuReport corpus_bleu_serial(std::span<const Pair> pairs, const BleuOptions& options) {
  if (pairs.empty()) throw std::invalid_argument("corpus BLEU needs at least one pair");
  PairCounts sum;
  for (const auto& p : pairs) {
    const auto pc = count_pair(p.candidate, p.references, options.max_order);
    for (int n = 0; n < 2; ++n) {
      sum.clipped[n] += pc.clipped[n];
      sum.total[n] += pc.total[n];
    }
    sum.candidate_length += pc.candidate_length;
    sum.reference_length += pc.reference_length;
  }
  return score_counts(sum, options);
}

BleuReport corpus_bleu(std::span<const Pair> pairs, const BleuOptions& options) {
  if (pairs.empty()) throw std::invalid_argument("corpus BLEU needs at least one pair");
  check_order(options.max_order);
  std::vector<PairCounts> per_pair(pairs.size());
  std::vector<std::exception_ptr> errors(pairs.size());
  const auto n = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      per_pair[k] = count_pair(pairs[k].candidate, pairs[k].references, options.max_order);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  PairCounts sum;
  for (const auto& pc : per_pair) {
    for (int o = 0; o < 2; ++o) {
      sum.clipped[o] += pc.clipped[o];
      sum.total[o] += pc.total[o];
    }
    sum.candidate_length += pc.candidate_length;
    sum.reference_length += pc.reference_length;
  }
  return score_counts(sum, options);
}

std::array<double, 2> average_sentence_bleu(std::span<const Pair> pairs, const BleuOptions& options) {
  if (pairs.empty()) throw std::invalid_argument("average BLEU needs at least one pair");
  std::array<double, 2> sum{};
  for (const auto& p : pairs) {
    const auto r = sentence_bleu(p.candidate, p.references, options);
    sum[0] += r.bleu1;
    sum[1] += r.bleu2.value_or(0.0);
  }
  const double n = static_cast<double>(pairs.size());
  return {sum[0] / n, sum[1] / n};
}

Tokens caption_tokens(const std::string& text) {
  return textprep::tokenize(textprep::clean(text, textprep::CleanConfig::caption_preset()));
}

std::string to_json(const BleuReport& report) {
  nlohmann::ordered_json doc;
  doc["max_order"] = report.max_order;
  doc["bleu1"] = report.bleu1;
  doc["bleu2"] = report.bleu2 ? nlohmann::ordered_json(*report.bleu2) : nlohmann::ordered_json(nullptr);
  doc["clipped_matches"] = std::vector<std::uint64_t>(report.clipped_matches.begin(),
                                                      report.clipped_matches.begin() + report.max_order);
  doc["candidate_ngrams"] = std::vector<std::uint64_t>(report.candidate_ngrams.begin(),
                                                       report.candidate_ngrams.begin() + report.max_order);
  doc["precisions"] = std::vector<double>(report.precisions.begin(), report.precisions.begin() + report.max_order);
  doc["brevity_penalty"] = report.brevity_penalty;
  doc["candidate_length"] = report.candidate_length;
  doc["reference_length"] = report.reference_length;
  return doc.dump(2) + "\n";
}

std::string summary_line(const BleuReport& report) {
  char buf[96];
  if (report.bleu2)
    std::snprintf(buf, sizeof(buf), "BLEU-1 %.4f BLEU-2 %.4f", report.bleu1, *report.bleu2);
  else
    std::snprintf(buf, sizeof(buf), "BLEU-1 %.4f", report.bleu1);
  return buf;
}

}  // namespace postscan::bleu
