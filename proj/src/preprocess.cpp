#include "icurisk/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "icurisk/error.hpp"
#include "icurisk/log.hpp"

namespace icurisk {

namespace {

// Sums in sorted order so the result does not depend on row order.
double sorted_mean(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sorted_population_sd(std::vector<double> v, double mean) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size()));
}

void require_same_schema(const Schema& expected, const Schema& got) {
  if (expected.size() != got.size())
    throw SchemaError("expected " + std::to_string(expected.size()) + " features, got " +
                      std::to_string(got.size()));
  for (std::size_t i = 0; i < expected.size(); ++i)
    if (expected[i].name != got[i].name)
      throw SchemaError("feature " + std::to_string(i) + " is '" + got[i].name + "', expected '" +
                        expected[i].name + "'");
}

nlohmann::json table_to_json(const CohortTable& t) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : t.cells()) cells.push_back(c ? nlohmann::json(*c) : nlohmann::json(nullptr));
  return {{"schema", schema_to_json(t.schema())}, {"labels", t.labels()}, {"cells", cells}};
}

CohortTable table_from_json(const nlohmann::json& j) {
  Schema schema = schema_from_json(j.at("schema"));
  std::vector<Cell> cells;
  for (const auto& c : j.at("cells")) cells.push_back(c.is_null() ? Cell{} : Cell{c.get<double>()});
  return CohortTable(std::move(schema), std::move(cells), j.at("labels").get<std::vector<int>>());
}

}  // namespace

// ---------------------------------------------------------------------------
// KNN imputation

KnnImputer fit_imputer(const CohortTable& train, std::size_t k) {
  if (k < 1) throw ConfigError("KNN imputation needs k >= 1");
  KnnImputer imp;
  imp.k = k;
  imp.reference = train;
  const std::size_t d = train.cols();
  imp.fallback_means.resize(d);
  imp.dist_mean.assign(d, 0.0);
  imp.dist_sd.assign(d, 1.0);
  for (std::size_t c = 0; c < d; ++c) {
    std::vector<double> obs;
    for (std::size_t r = 0; r < train.rows(); ++r)
      if (const auto& cell = train.at(r, c)) obs.push_back(*cell);
    if (obs.empty()) {
      log_warning("feature '" + train.schema()[c].name + "' has no observed training values");
      continue;
    }
    const double m = sorted_mean(obs);
    const double sd = sorted_population_sd(obs, m);
    // Discrete columns fall back to their most frequent value, ties to the
    // lower one, so imputed cells stay valid codes.
    const auto kind = train.schema()[c].kind;
    if (kind == FeatureKind::categorical || kind == FeatureKind::binary) {
      std::map<double, std::size_t> freq;
      for (double v : obs) ++freq[v];
      std::size_t best = 0;
      for (const auto& [v, count] : freq)
        if (count > best) imp.fallback_means[c] = v, best = count;
    } else {
      imp.fallback_means[c] = m;
    }
    imp.dist_mean[c] = m;
    imp.dist_sd[c] = sd > 0.0 ? sd : 1.0;
  }
  return imp;
}

namespace {

struct Candidate {
  double dist;
  double value;
  std::size_t index;
  bool operator<(const Candidate& o) const {
    if (dist != o.dist) return dist < o.dist;
    if (value != o.value) return value < o.value;
    return index < o.index;
  }
};

void impute_row(const KnnImputer& imp, std::span<const Cell> query, std::span<Cell> out,
                std::vector<double>& dist, std::vector<Candidate>& cand) {
  const auto& ref = imp.reference;
  const std::size_t d = ref.cols();
  bool any_missing = false;
  for (const auto& c : query) any_missing |= !c.has_value();
  if (!any_missing) return;

  const std::size_t n = ref.rows();
  dist.assign(n, std::numeric_limits<double>::infinity());
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    std::size_t shared = 0;
    auto rr = ref.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      if (!query[c] || !rr[c]) continue;
      const double z = (*query[c] - *rr[c]) / imp.dist_sd[c];
      s += z * z;
      ++shared;
    }
    if (shared > 0) dist[r] = s / static_cast<double>(shared);
  }

  for (std::size_t c = 0; c < d; ++c) {
    if (query[c]) continue;
    cand.clear();
    for (std::size_t r = 0; r < n; ++r)
      if (std::isfinite(dist[r]) && ref.at(r, c)) cand.push_back({dist[r], *ref.at(r, c), r});
    if (cand.empty()) {
      out[c] = imp.fallback_means[c];
      continue;
    }
    const std::size_t k = std::min(imp.k, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
    const auto kind = ref.schema()[c].kind;
    if (kind == FeatureKind::categorical || kind == FeatureKind::binary) {
      std::map<double, std::size_t> votes;
      for (std::size_t i = 0; i < k; ++i) ++votes[cand[i].value];
      double best = 0.0;
      std::size_t best_count = 0;
      for (const auto& [level, count] : votes)
        if (count > best_count) best = level, best_count = count;
      out[c] = best;
    } else {
      double s = 0.0;
      for (std::size_t i = 0; i < k; ++i) s += cand[i].value;
      out[c] = s / static_cast<double>(k);
    }
  }
}

}  // namespace

CohortTable impute(const KnnImputer& imputer, const CohortTable& table, Exec exec) {
  require_same_schema(imputer.reference.schema(), table.schema());
  const std::size_t d = table.cols();
  std::vector<Cell> cells = table.cells();
  const auto n = static_cast<std::ptrdiff_t>(table.rows());
  if (exec == Exec::serial) {
    std::vector<double> dist;
    std::vector<Candidate> cand;
    for (std::ptrdiff_t r = 0; r < n; ++r)
      impute_row(imputer, table.row(r), std::span<Cell>(cells.data() + r * d, d), dist, cand);
  } else {
#pragma omp parallel
    {
      std::vector<double> dist;
      std::vector<Candidate> cand;
#pragma omp for schedule(dynamic, 8)
      for (std::ptrdiff_t r = 0; r < n; ++r)
        impute_row(imputer, table.row(r), std::span<Cell>(cells.data() + r * d, d), dist, cand);
    }
  }
  return CohortTable(table.schema(), std::move(cells), table.labels());
}

// ---------------------------------------------------------------------------
// Target encoding

double TargetEncoder::encode_value(double category) const {
  auto it = categories.find(category);
  if (it == categories.end()) return global_mean;
  const double n = static_cast<double>(it->second.count);
  return (n * it->second.mean + alpha * global_mean) / (n + alpha);
}

TargetEncoder fit_encoder(const CohortTable& train, const std::string& feature, double alpha) {
  if (!(alpha >= 0.0)) throw ConfigError("smoothing alpha must be >= 0");
  auto col = find_feature(train.schema(), feature);
  if (!col) throw SchemaError("feature '" + feature + "' not in table");
  const auto kind = train.schema()[*col].kind;
  if (kind != FeatureKind::categorical && kind != FeatureKind::ordinal_score)
    throw ConfigError("target encoding applies to categorical or ordinal features, not '" + feature + "'");
  if (train.rows() == 0) throw DataError("cannot fit an encoder on an empty table");

  TargetEncoder enc;
  enc.feature = feature;
  enc.alpha = alpha;
  enc.global_mean = train.event_rate();
  std::map<double, std::pair<std::size_t, std::size_t>> counts;  // category -> (n, positives)
  for (std::size_t r = 0; r < train.rows(); ++r) {
    const auto& cell = train.at(r, *col);
    if (!cell) continue;
    auto& [n, pos] = counts[*cell];
    ++n;
    pos += static_cast<std::size_t>(train.labels()[r]);
  }
  for (const auto& [cat, np] : counts)
    enc.categories[cat] = {np.first, static_cast<double>(np.second) / static_cast<double>(np.first)};
  return enc;
}

CohortTable encode(const TargetEncoder& encoder, const CohortTable& table) {
  auto col = find_feature(table.schema(), encoder.feature);
  if (!col) throw SchemaError("feature '" + encoder.feature + "' not in table");
  std::vector<Cell> cells = table.cells();
  const std::size_t d = table.cols();
  std::size_t unseen = 0;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    auto& cell = cells[r * d + *col];
    if (!cell) continue;
    if (!encoder.categories.contains(*cell)) ++unseen;
    cell = encoder.encode_value(*cell);
  }
  if (unseen > 0)
    log_info("'" + encoder.feature + "': " + std::to_string(unseen) +
             " value(s) from categories unseen at fit time mapped to the global mean");
  return CohortTable(table.schema(), std::move(cells), table.labels());
}

// ---------------------------------------------------------------------------
// Scaling

StandardScaler fit_scaler(const CohortTable& train, std::vector<bool> active) {
  const std::size_t d = train.cols();
  if (active.empty()) {
    active.resize(d);
    for (std::size_t c = 0; c < d; ++c) active[c] = train.schema()[c].kind != FeatureKind::binary;
  }
  if (active.size() != d) throw ConfigError("scaler mask has the wrong width");
  if (train.missing_count() > 0) throw OrderingError("scaler fitted before imputation");
  if (train.rows() == 0) throw DataError("cannot fit a scaler on an empty table");
  StandardScaler s;
  s.active = std::move(active);
  s.mean.assign(d, 0.0);
  s.sd.assign(d, 1.0);
  const double n = static_cast<double>(train.rows());
  for (std::size_t c = 0; c < d; ++c) {
    if (!s.active[c]) continue;
    double m = 0.0;
    for (std::size_t r = 0; r < train.rows(); ++r) m += *train.at(r, c);
    m /= n;
    double v = 0.0;
    for (std::size_t r = 0; r < train.rows(); ++r) v += (*train.at(r, c) - m) * (*train.at(r, c) - m);
    s.mean[c] = m;
    s.sd[c] = std::sqrt(v / n);
  }
  return s;
}

CohortTable scale(const StandardScaler& scaler, const CohortTable& table) {
  const std::size_t d = table.cols();
  if (scaler.mean.size() != d) throw SchemaError("scaler width does not match table");
  if (table.missing_count() > 0) throw OrderingError("scaling requires imputed data");
  std::vector<Cell> cells = table.cells();
  for (std::size_t r = 0; r < table.rows(); ++r)
    for (std::size_t c = 0; c < d; ++c) {
      if (!scaler.active[c]) continue;
      auto& cell = cells[r * d + c];
      cell = scaler.sd[c] > 0.0 ? (*cell - scaler.mean[c]) / scaler.sd[c] : 0.0;
    }
  return CohortTable(table.schema(), std::move(cells), table.labels());
}

// ---------------------------------------------------------------------------
// Class weights

std::vector<double> ClassWeights::per_sample(std::span<const int> labels) const {
  std::vector<double> w(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) w[i] = (*this)(labels[i]);
  return w;
}

ClassWeights class_weights(std::span<const int> labels) {
  const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t n = labels.size();
  if (pos == 0 || pos == n) throw DataError("class weights need both classes present");
  const double dn = static_cast<double>(n);
  return {dn / static_cast<double>(n - pos), dn / static_cast<double>(pos)};
}

// ---------------------------------------------------------------------------
// Pipeline

nlohmann::json to_json(const PipelineConfig& cfg) {
  return {{"knn_k", cfg.knn_k}, {"alpha", cfg.alpha}, {"passthrough_categorical", cfg.passthrough_categorical}};
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  PipelineConfig cfg;
  cfg.knn_k = j.value("knn_k", cfg.knn_k);
  cfg.alpha = j.value("alpha", cfg.alpha);
  cfg.passthrough_categorical = j.value("passthrough_categorical", cfg.passthrough_categorical);
  return cfg;
}

FittedPipeline fit_pipeline(const CohortTable& train, const PipelineConfig& config,
                            std::vector<std::size_t> provenance) {
  if (train.rows() == 0) throw DataError("cannot fit a pipeline on an empty training fold");
  FittedPipeline p;
  p.config = config;
  p.schema = train.schema();
  p.provenance = std::move(provenance);
  p.weights = class_weights(train.labels());

  p.imputer = fit_imputer(train, config.knn_k);
  CohortTable cur = impute(p.imputer, train);

  std::vector<bool> active(train.cols());
  for (std::size_t c = 0; c < train.cols(); ++c) {
    const auto kind = train.schema()[c].kind;
    active[c] = kind != FeatureKind::binary;
    if (kind != FeatureKind::categorical) continue;
    if (config.passthrough_categorical) {
      active[c] = false;
      continue;
    }
    p.encoders.push_back(fit_encoder(cur, train.schema()[c].name, config.alpha));
    cur = encode(p.encoders.back(), cur);
  }
  p.scaler = fit_scaler(cur, std::move(active));
  return p;
}

CohortTable apply(const FittedPipeline& pipeline, const CohortTable& table, Exec exec) {
  require_same_schema(pipeline.schema, table.schema());
  CohortTable cur = impute(pipeline.imputer, table, exec);
  for (const auto& enc : pipeline.encoders) cur = encode(enc, cur);
  return scale(pipeline.scaler, cur);
}

Matrix apply_matrix(const FittedPipeline& pipeline, const CohortTable& table, Exec exec) {
  return apply(pipeline, table, exec).to_matrix();
}

std::vector<std::size_t> passthrough_columns(const FittedPipeline& pipeline) {
  std::vector<std::size_t> cols;
  if (!pipeline.config.passthrough_categorical) return cols;
  for (std::size_t c = 0; c < pipeline.schema.size(); ++c)
    if (pipeline.schema[c].kind == FeatureKind::categorical) cols.push_back(c);
  return cols;
}

nlohmann::json to_json(const FittedPipeline& p) {
  nlohmann::json encoders = nlohmann::json::array();
  for (const auto& e : p.encoders) {
    nlohmann::json cats = nlohmann::json::array();
    for (const auto& [cat, st] : e.categories) cats.push_back({cat, st.count, st.mean});
    encoders.push_back({{"feature", e.feature}, {"alpha", e.alpha}, {"global_mean", e.global_mean},
                        {"categories", cats}});
  }
  nlohmann::json fallback = nlohmann::json::array();
  for (const auto& m : p.imputer.fallback_means) fallback.push_back(m ? nlohmann::json(*m) : nlohmann::json(nullptr));
  return {
      {"format", "icurisk-pipeline"},
      {"version", 1},
      {"config", to_json(p.config)},
      {"schema", schema_to_json(p.schema)},
      {"imputer",
       {{"k", p.imputer.k},
        {"fallback_means", fallback},
        {"dist_mean", p.imputer.dist_mean},
        {"dist_sd", p.imputer.dist_sd},
        {"reference", table_to_json(p.imputer.reference)}}},
      {"encoders", encoders},
      {"scaler", {{"mean", p.scaler.mean}, {"sd", p.scaler.sd}, {"active", p.scaler.active}}},
      {"class_weights", {{"w0", p.weights.w0}, {"w1", p.weights.w1}}},
      {"provenance", p.provenance},
  };
}

FittedPipeline pipeline_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string()) != "icurisk-pipeline")
    throw ConfigError("not a pipeline artifact");
  if (j.value("version", 0) != 1) throw ConfigError("unsupported pipeline artifact version");
  FittedPipeline p;
  p.config = pipeline_config_from_json(j.at("config"));
  p.schema = schema_from_json(j.at("schema"));
  const auto& ij = j.at("imputer");
  p.imputer.k = ij.at("k").get<std::size_t>();
  for (const auto& m : ij.at("fallback_means"))
    p.imputer.fallback_means.push_back(m.is_null() ? std::optional<double>{} : m.get<double>());
  p.imputer.dist_mean = ij.at("dist_mean").get<std::vector<double>>();
  p.imputer.dist_sd = ij.at("dist_sd").get<std::vector<double>>();
  p.imputer.reference = table_from_json(ij.at("reference"));
  for (const auto& ej : j.at("encoders")) {
    TargetEncoder e;
    e.feature = ej.at("feature").get<std::string>();
    e.alpha = ej.at("alpha").get<double>();
    e.global_mean = ej.at("global_mean").get<double>();
    for (const auto& c : ej.at("categories"))
      e.categories[c.at(0).get<double>()] = {c.at(1).get<std::size_t>(), c.at(2).get<double>()};
    p.encoders.push_back(std::move(e));
  }
  const auto& sj = j.at("scaler");
  p.scaler.mean = sj.at("mean").get<std::vector<double>>();
  p.scaler.sd = sj.at("sd").get<std::vector<double>>();
  p.scaler.active = sj.at("active").get<std::vector<bool>>();
  p.weights.w0 = j.at("class_weights").at("w0").get<double>();
  p.weights.w1 = j.at("class_weights").at("w1").get<double>();
  p.provenance = j.at("provenance").get<std::vector<std::size_t>>();
  return p;
}

}  // namespace icurisk
