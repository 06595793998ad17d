#include "icurisk/select.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "icurisk/error.hpp"
#include "icurisk/log.hpp"

namespace icurisk {

std::string to_string(DropReason r) {
  switch (r) {
    case DropReason::missingness: return "missingness";
    case DropReason::low_documentation: return "low_documentation";
    case DropReason::low_variance: return "zero_variance";
    case DropReason::near_zero_mi: return "near_zero_mi";
    case DropReason::below_top_k: return "below_top_k";
  }
  return "";
}

CoverageReport coverage_filter(const CohortTable& table, const CoverageFilterConfig& cfg) {
  if (!(cfg.max_missing_fraction >= 0.0 && cfg.max_missing_fraction <= 1.0) || cfg.min_variance < 0.0)
    throw ConfigError("coverage thresholds out of range");
  CoverageReport rep;
  for (std::size_t c = 0; c < table.cols(); ++c) {
    CoverageDecision dec;
    dec.feature = table.schema()[c].name;
    double mean = 0.0, m2 = 0.0;
    for (std::size_t r = 0; r < table.rows(); ++r) {
      const auto& cell = table.at(r, c);
      if (!cell) continue;
      ++dec.documented;
      const double delta = *cell - mean;
      mean += delta / static_cast<double>(dec.documented);
      m2 += delta * (*cell - mean);
    }
    dec.missing_fraction = 1.0 - static_cast<double>(dec.documented) / static_cast<double>(table.rows());
    dec.variance = dec.documented > 0 ? m2 / static_cast<double>(dec.documented) : 0.0;
    if (dec.missing_fraction > cfg.max_missing_fraction) dec.reasons.push_back(DropReason::missingness);
    if (dec.documented < cfg.min_documented_patients) dec.reasons.push_back(DropReason::low_documentation);
    if (dec.variance <= cfg.min_variance) dec.reasons.push_back(DropReason::low_variance);
    if (dec.kept()) rep.kept.push_back(dec.feature);
    rep.decisions.push_back(std::move(dec));
  }
  if (rep.kept.empty()) throw SelectionError("coverage filter dropped every feature");
  return rep;
}

double mutual_information(std::span<const int> x, std::span<const int> y) {
  if (x.size() != y.size()) throw ConfigError("mutual information needs equal-length vectors");
  if (x.empty()) return 0.0;
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> px, py;
  for (std::size_t i = 0; i < x.size(); ++i) {
    joint[{x[i], y[i]}] += 1.0;
    px[x[i]] += 1.0;
    py[y[i]] += 1.0;
  }
  const double n = static_cast<double>(x.size());
  double mi = 0.0;
  for (const auto& [xy, c] : joint) {
    // p(x,y) log(p(x,y) / (p(x) p(y))) with counts: c/n * log(c n / (cx cy))
    mi += c / n * std::log(c * n / (px[xy.first] * py[xy.second]));
  }
  return std::max(mi, 0.0);
}

std::vector<double> quantile_cuts(std::vector<double> values, std::size_t n_bins) {
  std::vector<double> cuts;
  if (values.empty() || n_bins < 2) return cuts;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  for (std::size_t q = 1; q < n_bins; ++q) {
    // Linear-interpolated quantile at q / n_bins.
    const double pos = static_cast<double>(q) / static_cast<double>(n_bins) * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double v = values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
    if (v >= values.back()) continue;  // would leave an empty top bin
    if (cuts.empty() || v > cuts.back()) cuts.push_back(v);
  }
  return cuts;
}

int bin_of(double v, std::span<const double> cuts) {
  // Bin i holds (cuts[i-1], cuts[i]].
  return static_cast<int>(std::lower_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
}

MIRanking rank_features(const CohortTable& table, const SelectConfig& cfg, std::size_t top_k) {
  MIRanking out;
  out.n_bins = cfg.n_bins;
  const std::size_t d = table.cols();
  out.scores.resize(d);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(d); ++c) {
    const auto& spec = table.schema()[c];
    MIScore s;
    s.feature = spec.name;
    std::vector<double> vals;
    std::vector<int> ys;
    for (std::size_t r = 0; r < table.rows(); ++r) {
      if (const auto& cell = table.at(r, c)) {
        vals.push_back(*cell);
        ys.push_back(table.labels()[r]);
      }
    }
    std::vector<int> xs(vals.size());
    if (spec.kind == FeatureKind::binary || spec.kind == FeatureKind::categorical) {
      for (std::size_t i = 0; i < vals.size(); ++i) xs[i] = static_cast<int>(std::lround(vals[i]));
    } else {
      s.cuts = quantile_cuts(vals, cfg.n_bins);
      for (std::size_t i = 0; i < vals.size(); ++i) xs[i] = bin_of(vals[i], s.cuts);
    }
    s.mi = mutual_information(xs, ys);
    s.near_zero = s.mi < cfg.min_mi;
    out.scores[static_cast<std::size_t>(c)] = std::move(s);
  }
  std::sort(out.scores.begin(), out.scores.end(), [](const MIScore& a, const MIScore& b) {
    if (a.mi != b.mi) return a.mi > b.mi;
    return a.feature < b.feature;
  });
  std::size_t eligible = 0;
  for (std::size_t i = 0; i < out.scores.size(); ++i) {
    out.scores[i].rank = i + 1;
    eligible += !out.scores[i].near_zero;
  }
  if (top_k > eligible) {
    log_warning("top_k=" + std::to_string(top_k) + " exceeds the " + std::to_string(eligible) +
                " features with non-negligible MI; clamping");
    top_k = eligible;
  }
  for (auto& s : out.scores) {
    if (out.selected.size() >= top_k) break;
    if (s.near_zero) continue;
    s.selected = true;
    out.selected.push_back(s.feature);
  }
  if (out.selected.empty()) throw SelectionError("no feature passed mutual-information ranking");
  return out;
}

std::string selection_report_csv(const CoverageReport& coverage, const MIRanking& ranking) {
  std::ostringstream os;
  os << "feature,mi,kept,reason\n";
  auto quote = [](const std::string& s) {
    return s.find(',') == std::string::npos ? s : "\"" + s + "\"";
  };
  for (const auto& s : ranking.scores) {
    std::string reason;
    if (!s.selected) reason = to_string(s.near_zero ? DropReason::near_zero_mi : DropReason::below_top_k);
    os << quote(s.feature) << ',' << format_double(s.mi) << ',' << (s.selected ? "true" : "false") << ','
       << reason << '\n';
  }
  for (const auto& dec : coverage.decisions) {
    if (dec.kept()) continue;
    std::string reason;
    for (auto r : dec.reasons) reason += (reason.empty() ? "" : "|") + to_string(r);
    os << quote(dec.feature) << ",,false," << reason << '\n';
  }
  return os.str();
}

DropReason drop_reason_from_string(const std::string& s) {
  for (auto r : {DropReason::missingness, DropReason::low_documentation, DropReason::low_variance,
                 DropReason::near_zero_mi, DropReason::below_top_k})
    if (to_string(r) == s) return r;
  throw DataError("unknown drop reason '" + s + "'");
}

nlohmann::json to_json(const CoverageReport& r) {
  nlohmann::json decisions = nlohmann::json::array();
  for (const auto& d : r.decisions) {
    nlohmann::json reasons = nlohmann::json::array();
    for (auto why : d.reasons) reasons.push_back(to_string(why));
    decisions.push_back({{"feature", d.feature},
                         {"missing_fraction", d.missing_fraction},
                         {"documented", d.documented},
                         {"variance", d.variance},
                         {"reasons", reasons}});
  }
  return {{"kept", r.kept}, {"decisions", decisions}};
}

CoverageReport coverage_report_from_json(const nlohmann::json& j) {
  CoverageReport r;
  r.kept = j.at("kept").get<std::vector<std::string>>();
  for (const auto& d : j.at("decisions")) {
    CoverageDecision dec;
    dec.feature = d.at("feature").get<std::string>();
    dec.missing_fraction = d.at("missing_fraction").get<double>();
    dec.documented = d.at("documented").get<std::size_t>();
    dec.variance = d.at("variance").get<double>();
    for (const auto& why : d.at("reasons")) dec.reasons.push_back(drop_reason_from_string(why.get<std::string>()));
    r.decisions.push_back(std::move(dec));
  }
  return r;
}

nlohmann::json to_json(const MIRanking& r) {
  nlohmann::json scores = nlohmann::json::array();
  for (const auto& s : r.scores)
    scores.push_back({{"feature", s.feature},
                      {"mi", s.mi},
                      {"cuts", s.cuts},
                      {"rank", s.rank},
                      {"near_zero", s.near_zero},
                      {"selected", s.selected}});
  return {{"scores", scores}, {"selected", r.selected}, {"n_bins", r.n_bins}};
}

MIRanking mi_ranking_from_json(const nlohmann::json& j) {
  MIRanking r;
  for (const auto& s : j.at("scores")) {
    MIScore m;
    m.feature = s.at("feature").get<std::string>();
    m.mi = s.at("mi").get<double>();
    m.cuts = s.at("cuts").get<std::vector<double>>();
    m.rank = s.at("rank").get<std::size_t>();
    m.near_zero = s.at("near_zero").get<bool>();
    m.selected = s.at("selected").get<bool>();
    r.scores.push_back(std::move(m));
  }
  r.selected = j.at("selected").get<std::vector<std::string>>();
  r.n_bins = j.at("n_bins").get<std::size_t>();
  return r;
}

}  // namespace icurisk
