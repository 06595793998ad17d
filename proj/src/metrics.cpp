#include "icurisk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "icurisk/error.hpp"
#include "icurisk/rng.hpp"

namespace icurisk {

namespace {

void check_lengths(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ConfigError("scores/labels length mismatch");
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const int> labels) {
  std::size_t pos = 0;
  for (int y : labels) pos += y == 1;
  return {pos, labels.size() - pos};
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores, labels);
  const auto [n1, n0] = class_counts(labels);
  if (n1 == 0 || n0 == 0) throw DataError("AUROC is undefined with a single class");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Twice the rank sum of positives keeps every quantity an exact integer.
  double rank2_pos = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double mid2 = static_cast<double>(i + 1 + j);  // 2 * mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k)
      if (labels[idx[k]] == 1) rank2_pos += mid2;
    i = j;
  }
  const double n1d = static_cast<double>(n1), n0d = static_cast<double>(n0);
  const double u2 = rank2_pos - n1d * (n1d + 1.0);
  return (0.5 * u2) / (n1d * n0d);
}

double auroc_pairwise(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores, labels);
  const auto [n1, n0] = class_counts(labels);
  if (n1 == 0 || n0 == 0) throw DataError("AUROC is undefined with a single class");
  double u = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] == 1) continue;
      if (scores[i] > scores[j]) u += 1.0;
      else if (scores[i] == scores[j]) u += 0.5;
    }
  }
  return u / (static_cast<double>(n1) * static_cast<double>(n0));
}

std::vector<double> bootstrap_auroc(std::span<const double> scores, std::span<const int> labels,
                                    int B, std::uint64_t seed, Exec exec) {
  check_lengths(scores, labels);
  if (B < 1) throw ConfigError("bootstrap needs B >= 1");
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < scores.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(scores[i]);
  if (pos.empty() || neg.empty()) throw DataError("AUROC is undefined with a single class");

  std::vector<double> out(static_cast<std::size_t>(B));
  auto replicate = [&](int b) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(b));
    std::vector<double> s;
    std::vector<int> y;
    s.reserve(scores.size());
    y.reserve(scores.size());
    for (std::size_t i = 0; i < pos.size(); ++i) {
      s.push_back(pos[uniform_index(rng, pos.size())]);
      y.push_back(1);
    }
    for (std::size_t i = 0; i < neg.size(); ++i) {
      s.push_back(neg[uniform_index(rng, neg.size())]);
      y.push_back(0);
    }
    out[static_cast<std::size_t>(b)] = auroc(s, y);
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (int b = 0; b < B; ++b) replicate(b);
  } else {
    for (int b = 0; b < B; ++b) replicate(b);
  }
  return out;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw ConfigError("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

Interval bootstrap_auroc_ci(std::span<const double> scores, std::span<const int> labels, int B,
                            std::uint64_t seed, Exec exec) {
  auto reps = bootstrap_auroc(scores, labels, B, seed, exec);
  return {percentile(reps, 0.025), percentile(reps, 0.975)};
}

nlohmann::json to_json(const ThresholdPolicy& p) {
  if (p.kind == ThresholdPolicy::Kind::youden) return {{"kind", "youden"}};
  return {{"kind", "sensitivity_floor"}, {"min_sensitivity", p.min_sensitivity}};
}

ThresholdPolicy threshold_policy_from_json(const nlohmann::json& j) {
  ThresholdPolicy p;
  const auto kind = j.value("kind", std::string("youden"));
  if (kind == "youden") {
    p.kind = ThresholdPolicy::Kind::youden;
  } else if (kind == "sensitivity_floor") {
    p.kind = ThresholdPolicy::Kind::sensitivity_floor;
    p.min_sensitivity = j.value("min_sensitivity", p.min_sensitivity);
    if (p.min_sensitivity < 0.0 || p.min_sensitivity > 1.0)
      throw ConfigError("min_sensitivity must be in [0,1]");
  } else {
    throw ConfigError("unknown threshold policy '" + kind + "'");
  }
  return p;
}

double tune_threshold(std::span<const double> scores, std::span<const int> labels,
                      const ThresholdPolicy& policy) {
  check_lengths(scores, labels);
  const auto [P, N] = class_counts(labels);
  if (P == 0 || N == 0) throw DataError("threshold tuning needs both classes");

  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Candidate k: threshold between distinct value k-1 and k (k = 0 is the
  // minimum itself). tp/tn count rows at or above / below it.
  struct Cand {
    double threshold;
    std::size_t tp, tn;
  };
  std::vector<Cand> cands;
  std::size_t pos_below = 0, neg_below = 0;
  double prev = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    const double v = scores[idx[i]];
    double thr = i == 0 ? v : prev + 0.5 * (v - prev);
    // Adjacent doubles: the midpoint rounds onto prev and would flip its rows.
    if (i > 0 && thr <= prev) thr = v;
    cands.push_back({thr, P - pos_below, neg_below});
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == v) {
      (labels[idx[j]] == 1 ? pos_below : neg_below) += 1;
      ++j;
    }
    prev = v;
    i = j;
  }

  if (policy.kind == ThresholdPolicy::Kind::youden) {
    // Compare J * P * N as exact integers; ascending order keeps the lower
    // threshold on ties.
    using i64 = long long;
    i64 best = std::numeric_limits<i64>::min();
    double best_thr = cands.front().threshold;
    for (const auto& c : cands) {
      const i64 j = static_cast<i64>(c.tp) * static_cast<i64>(N) + static_cast<i64>(c.tn) * static_cast<i64>(P);
      if (j > best) {
        best = j;
        best_thr = c.threshold;
      }
    }
    return best_thr;
  }
  for (auto it = cands.rbegin(); it != cands.rend(); ++it)
    if (static_cast<double>(it->tp) >= policy.min_sensitivity * static_cast<double>(P)) return it->threshold;
  return cands.front().threshold;
}

ConfusionCounts confusion_counts(std::span<const double> scores, std::span<const int> labels,
                                 double threshold) {
  check_lengths(scores, labels);
  ConfusionCounts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    if (labels[i] == 1) (pred ? c.tp : c.fn) += 1;
    else (pred ? c.fp : c.tn) += 1;
  }
  return c;
}

MetricReport metrics_from_counts(const ConfusionCounts& c) {
  auto ratio = [](std::size_t a, std::size_t b) -> std::optional<double> {
    if (b == 0) return std::nullopt;
    return static_cast<double>(a) / static_cast<double>(b);
  };
  MetricReport r;
  r.counts = c;
  r.accuracy = ratio(c.tp + c.tn, c.tp + c.tn + c.fp + c.fn);
  r.sensitivity = ratio(c.tp, c.tp + c.fn);
  r.specificity = ratio(c.tn, c.tn + c.fp);
  r.ppv = ratio(c.tp, c.tp + c.fp);
  r.npv = ratio(c.tn, c.tn + c.fn);
  if (r.ppv && r.sensitivity) r.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  return r;
}

MetricReport confusion_metrics(std::span<const double> scores, std::span<const int> labels,
                               double threshold) {
  MetricReport r = metrics_from_counts(confusion_counts(scores, labels, threshold));
  r.threshold = threshold;
  return r;
}

namespace {

nlohmann::json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> opt_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

std::string opt_csv(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

}  // namespace

nlohmann::json to_json(const MetricReport& r) {
  return {{"model", r.model},
          {"auroc", opt_json(r.auroc)},
          {"auroc_ci_low", opt_json(r.auroc_ci_low)},
          {"auroc_ci_high", opt_json(r.auroc_ci_high)},
          {"threshold", r.threshold},
          {"accuracy", opt_json(r.accuracy)},
          {"f1", opt_json(r.f1)},
          {"sensitivity", opt_json(r.sensitivity)},
          {"specificity", opt_json(r.specificity)},
          {"ppv", opt_json(r.ppv)},
          {"npv", opt_json(r.npv)},
          {"tp", r.counts.tp},
          {"fp", r.counts.fp},
          {"tn", r.counts.tn},
          {"fn", r.counts.fn}};
}

MetricReport metric_report_from_json(const nlohmann::json& j) {
  MetricReport r;
  r.model = j.value("model", std::string());
  r.auroc = opt_from(j, "auroc");
  r.auroc_ci_low = opt_from(j, "auroc_ci_low");
  r.auroc_ci_high = opt_from(j, "auroc_ci_high");
  r.threshold = j.at("threshold").get<double>();
  r.accuracy = opt_from(j, "accuracy");
  r.f1 = opt_from(j, "f1");
  r.sensitivity = opt_from(j, "sensitivity");
  r.specificity = opt_from(j, "specificity");
  r.ppv = opt_from(j, "ppv");
  r.npv = opt_from(j, "npv");
  r.counts = {j.at("tp").get<std::size_t>(), j.at("fp").get<std::size_t>(),
              j.at("tn").get<std::size_t>(), j.at("fn").get<std::size_t>()};
  return r;
}

std::string metrics_csv(std::span<const MetricReport> reports) {
  std::ostringstream out;
  out << "model,auroc,auroc_ci_low,auroc_ci_high,threshold,accuracy,f1,sensitivity,specificity,ppv,npv,"
         "tp,fp,tn,fn\n";
  for (const auto& r : reports) {
    out << r.model << ',' << opt_csv(r.auroc) << ',' << opt_csv(r.auroc_ci_low) << ','
        << opt_csv(r.auroc_ci_high) << ',' << format_double(r.threshold) << ',' << opt_csv(r.accuracy)
        << ',' << opt_csv(r.f1) << ',' << opt_csv(r.sensitivity) << ',' << opt_csv(r.specificity)
        << ',' << opt_csv(r.ppv) << ',' << opt_csv(r.npv) << ',' << r.counts.tp << ','
        << r.counts.fp << ',' << r.counts.tn << ',' << r.counts.fn << '\n';
  }
  return out.str();
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores, labels);
  const auto [P, N] = class_counts(labels);
  if (P == 0 || N == 0) throw DataError("ROC curve needs both classes");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<RocPoint> pts{{0.0, 0.0, std::numeric_limits<double>::infinity()}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < idx.size();) {
    const double v = scores[idx[i]];
    while (i < idx.size() && scores[idx[i]] == v) {
      (labels[idx[i]] == 1 ? tp : fp) += 1;
      ++i;
    }
    pts.push_back({static_cast<double>(fp) / static_cast<double>(N),
                   static_cast<double>(tp) / static_cast<double>(P), v});
  }
  return pts;
}

// ---------------------------------------------------------------------------

namespace {

double beta_cf(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h;
  }
  throw NumericError("incomplete beta continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("incomplete beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(log_front) * beta_cf(a, b, x) / a;
  return 1.0 - std::exp(log_front) * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided(double t, double df) {
  if (!(df > 0.0)) throw ConfigError("Student t needs df > 0");
  if (std::isinf(t)) return 0.0;
  if (t == 0.0) return 1.0;
  return std::clamp(incomplete_beta(0.5 * df, 0.5, df / (df + t * t)), 0.0, 1.0);
}

WelchResult welch_t(double m1, double s1, double n1, double m2, double s2, double n2) {
  if (n1 < 2.0 || n2 < 2.0) throw ConfigError("Welch test needs at least 2 observations per group");
  if (s1 < 0.0 || s2 < 0.0) throw ConfigError("standard deviations must be >= 0");
  const double a = s1 * s1 / n1, b = s2 * s2 / n2;
  WelchResult r;
  if (a + b == 0.0) {
    r.df = n1 + n2 - 2.0;
    if (m1 == m2) return r;
    r.t = m1 > m2 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    r.p = 0.0;
    return r;
  }
  r.t = (m1 - m2) / std::sqrt(a + b);
  r.df = (a + b) * (a + b) / (a * a / (n1 - 1.0) + b * b / (n2 - 1.0));
  r.p = student_t_two_sided(r.t, r.df);
  return r;
}

std::vector<CohortComparison> compare_cohorts(const CohortTable& a, const CohortTable& b) {
  std::vector<CohortComparison> out;
  for (std::size_t c = 0; c < a.cols(); ++c) {
    const auto& name = a.schema()[c].name;
    const auto cb = find_feature(b.schema(), name);
    if (!cb) throw SchemaError("feature '" + name + "' missing from the second cohort");
    const FeatureStats sa = column_stats(a, c), sb = column_stats(b, *cb);
    CohortComparison row;
    row.feature = name;
    row.n1 = sa.documented;
    row.n2 = sb.documented;
    row.mean1 = sa.mean;
    row.sd1 = sa.sd;
    row.mean2 = sb.mean;
    row.sd2 = sb.sd;
    if (sa.documented < 2 || sb.documented < 2) {
      row.note = "fewer than 2 observations in a group";
    } else {
      row.result = welch_t(*sa.mean, *sa.sd, static_cast<double>(sa.documented), *sb.mean, *sb.sd,
                           static_cast<double>(sb.documented));
    }
    out.push_back(std::move(row));
  }
  return out;
}

nlohmann::json to_json(const CohortComparison& c) {
  nlohmann::json j{{"feature", c.feature}, {"n1", c.n1},          {"n2", c.n2},
                   {"mean1", opt_json(c.mean1)}, {"sd1", opt_json(c.sd1)}, {"mean2", opt_json(c.mean2)},
                   {"sd2", opt_json(c.sd2)},     {"note", c.note}};
  if (c.result && std::isfinite(c.result->t)) {
    j["t"] = c.result->t;
    j["df"] = c.result->df;
    j["p"] = c.result->p;
  } else if (c.result) {
    j["t"] = c.result->t > 0 ? "inf" : "-inf";
    j["df"] = c.result->df;
    j["p"] = c.result->p;
  } else {
    j["t"] = nullptr;
    j["df"] = nullptr;
    j["p"] = nullptr;
  }
  return j;
}

CohortComparison cohort_comparison_from_json(const nlohmann::json& j) {
  CohortComparison c;
  c.feature = j.at("feature").get<std::string>();
  c.n1 = j.at("n1").get<std::size_t>();
  c.n2 = j.at("n2").get<std::size_t>();
  c.mean1 = opt_from(j, "mean1");
  c.sd1 = opt_from(j, "sd1");
  c.mean2 = opt_from(j, "mean2");
  c.sd2 = opt_from(j, "sd2");
  c.note = j.value("note", std::string());
  if (!j.at("p").is_null()) {
    WelchResult r;
    const auto& t = j.at("t");
    if (t.is_string())
      r.t = t.get<std::string>() == "inf" ? std::numeric_limits<double>::infinity()
                                          : -std::numeric_limits<double>::infinity();
    else
      r.t = t.get<double>();
    r.df = j.at("df").get<double>();
    r.p = j.at("p").get<double>();
    c.result = r;
  }
  return c;
}

std::string cohort_ttest_csv(std::span<const CohortComparison> rows) {
  std::ostringstream out;
  out << "feature,n1,mean1,sd1,n2,mean2,sd2,t,df,p,note\n";
  for (const auto& r : rows) {
    auto quoted = [](const std::string& s) {
      return s.find_first_of(",\"") == std::string::npos ? s : '"' + s + '"';
    };
    out << quoted(r.feature) << ',' << r.n1 << ',' << opt_csv(r.mean1) << ',' << opt_csv(r.sd1) << ','
        << r.n2 << ',' << opt_csv(r.mean2) << ',' << opt_csv(r.sd2) << ',';
    if (r.result) {
      out << (std::isfinite(r.result->t) ? format_double(r.result->t) : (r.result->t > 0 ? "inf" : "-inf"))
          << ',' << format_double(r.result->df) << ',' << format_double(r.result->p);
    } else {
      out << "NA,NA,NA";
    }
    out << ',' << quoted(r.note) << '\n';
  }
  return out.str();
}

}  // namespace icurisk
