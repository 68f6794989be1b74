#include "postscan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace postscan::metrics {

namespace {

double ratio(std::uint64_t num, std::uint64_t den, bool& zero_division) {
  if (den == 0) {
    zero_division = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

double f1_of(double p, double r, bool& zero_division) {
  if (p + r == 0.0) {
    zero_division = true;
    return 0.0;
  }
  return 2.0 * p * r / (p + r);
}

}  // namespace

ConfusionMatrix confusion(std::span<const Label> gold, std::span<const Label> predicted) {
  if (gold.size() != predicted.size())
    throw std::invalid_argument("gold and predicted label lists differ in length (" + std::to_string(gold.size()) +
                                " vs " + std::to_string(predicted.size()) + ")");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool g = gold[i] == Label::Concerning;
    const bool p = predicted[i] == Label::Concerning;
    if (g && p) ++m.tp;
    else if (!g && p) ++m.fp;
    else if (!g && !p) ++m.tn;
    else ++m.fn;
  }
  return m;
}

EvalReport evaluate(const ConfusionMatrix& m) {
  if (m.total() == 0) throw std::invalid_argument("cannot evaluate an empty label set");
  EvalReport r;
  r.matrix = m;
  auto& neg = r.per_class[0];
  auto& pos = r.per_class[1];
  bool zd = false;
  pos.precision = ratio(m.tp, m.tp + m.fp, zd);
  pos.recall = ratio(m.tp, m.tp + m.fn, zd);
  pos.f1 = f1_of(pos.precision, pos.recall, zd);
  pos.support = m.tp + m.fn;
  if (zd) r.warnings.push_back("positive class has a zero-denominator metric, reported as 0");
  bool zd_neg = false;
  neg.precision = ratio(m.tn, m.tn + m.fn, zd_neg);
  neg.recall = ratio(m.tn, m.tn + m.fp, zd_neg);
  neg.f1 = f1_of(neg.precision, neg.recall, zd_neg);
  neg.support = m.tn + m.fp;
  if (zd_neg) r.warnings.push_back("negative class has a zero-denominator metric, reported as 0");
  r.zero_division = zd || zd_neg;

  const double total = static_cast<double>(m.total());
  r.accuracy = static_cast<double>(m.tp + m.tn) / total;
  r.macro = {(neg.precision + pos.precision) / 2.0, (neg.recall + pos.recall) / 2.0, (neg.f1 + pos.f1) / 2.0};
  const double wn = static_cast<double>(neg.support) / total;
  const double wp = static_cast<double>(pos.support) / total;
  r.weighted = {wn * neg.precision + wp * pos.precision, wn * neg.recall + wp * pos.recall,
                wn * neg.f1 + wp * pos.f1};
  // Support-weighted recall is (tn + tp) / N; use the exact form so it equals accuracy bit-for-bit.
  r.weighted.recall = r.accuracy;
  return r;
}

EvalReport evaluate(std::span<const Label> gold, std::span<const Label> predicted) {
  if (gold.empty()) throw std::invalid_argument("cannot evaluate an empty label set");
  return evaluate(confusion(gold, predicted));
}

RocCurve roc(std::span<const Label> gold, std::span<const double> scores) {
  if (gold.size() != scores.size()) throw std::invalid_argument("gold labels and scores differ in length");
  std::uint64_t pos = 0;
  for (auto g : gold) pos += g == Label::Concerning;
  const std::uint64_t neg = gold.size() - pos;
  if (pos == 0 || neg == 0) throw std::invalid_argument("ROC is undefined when gold labels contain a single class");
  for (double s : scores)
    if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("scores must lie in [0, 1]");

  std::vector<std::size_t> order(gold.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0});
  curve.thresholds.push_back(std::numeric_limits<double>::infinity());
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      if (gold[order[i]] == Label::Concerning) ++tp;
      else ++fp;
      ++i;
    }
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos)});
    curve.thresholds.push_back(threshold);
  }
  double auc = 0.0;
  for (std::size_t k = 1; k < curve.points.size(); ++k) {
    const auto& a = curve.points[k - 1];
    const auto& b = curve.points[k];
    auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
  }
  curve.auc = auc;
  return curve;
}

std::string format_2dp(double value) {
  const double scaled = std::round(value * 100.0);  // std::round is half away from zero
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.2f", scaled / 100.0);
  return buf;
}

std::string to_json(const EvalReport& r) {
  nlohmann::ordered_json doc;
  doc["format"] = "postscan-eval";
  doc["version"] = 1;
  auto cls = [](const ClassMetrics& c) {
    nlohmann::ordered_json j;
    j["precision"] = c.precision;
    j["recall"] = c.recall;
    j["f1"] = c.f1;
    j["support"] = c.support;
    return j;
  };
  auto avg = [](const Averages& a) {
    nlohmann::ordered_json j;
    j["precision"] = a.precision;
    j["recall"] = a.recall;
    j["f1"] = a.f1;
    return j;
  };
  doc["classes"]["0"] = cls(r.per_class[0]);
  doc["classes"]["1"] = cls(r.per_class[1]);
  doc["accuracy"] = r.accuracy;
  doc["macro_avg"] = avg(r.macro);
  doc["weighted_avg"] = avg(r.weighted);
  doc["confusion"] = {{"tp", r.matrix.tp}, {"fp", r.matrix.fp}, {"tn", r.matrix.tn}, {"fn", r.matrix.fn}};
  doc["zero_division"] = r.zero_division;
  doc["warnings"] = r.warnings;
  if (r.roc) {
    auto pts = nlohmann::ordered_json::array();
    for (const auto& p : r.roc->points) pts.push_back({p.fpr, p.tpr});
    doc["roc"]["points"] = pts;
    doc["roc"]["auc"] = r.roc->auc;
  } else {
    doc["roc"] = nullptr;
  }
  return doc.dump(2) + "\n";
}

std::string format_table(const EvalReport& r, const std::string& title) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-16s%10s%10s%10s%10s\n", title.c_str(), "Precision", "Recall", "F1-score",
                "Support");
  out += buf;
  const char* names[2] = {"Negative (0)", "Positive (1)"};
  for (int c = 0; c < 2; ++c) {
    const auto& m = r.per_class[c];
    std::snprintf(buf, sizeof(buf), "%-16s%10s%10s%10s%10llu\n", names[c], format_2dp(m.precision).c_str(),
                  format_2dp(m.recall).c_str(), format_2dp(m.f1).c_str(), static_cast<unsigned long long>(m.support));
    out += buf;
  }
  const auto total = static_cast<unsigned long long>(r.matrix.total());
  std::snprintf(buf, sizeof(buf), "%-16s%10s%10s%10s%10llu\n", "Accuracy", "", "", format_2dp(r.accuracy).c_str(), total);
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-16s%10s%10s%10s%10llu\n", "Macro avg", format_2dp(r.macro.precision).c_str(),
                format_2dp(r.macro.recall).c_str(), format_2dp(r.macro.f1).c_str(), total);
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-16s%10s%10s%10s%10llu\n", "Weighted avg", format_2dp(r.weighted.precision).c_str(),
                format_2dp(r.weighted.recall).c_str(), format_2dp(r.weighted.f1).c_str(), total);
  out += buf;
  if (r.roc) {
    std::snprintf(buf, sizeof(buf), "AUC %.4f\n", r.roc->auc);
    out += buf;
  }
  for (const auto& w : r.warnings) out += "warning: " + w + "\n";
  return out;
}

std::string roc_csv(const RocCurve& curve) {
  std::string out = "fpr,tpr\n";
  for (const auto& p : curve.points) out += format_double(p.fpr) + "," + format_double(p.tpr) + "\n";
  return out;
}

}  // namespace postscan::metrics
