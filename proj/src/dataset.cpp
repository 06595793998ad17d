#include "icurisk/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "icurisk/error.hpp"
#include "icurisk/rng.hpp"

namespace icurisk {

std::string to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::continuous: return "continuous";
    case FeatureKind::binary: return "binary";
    case FeatureKind::ordinal_score: return "ordinal_score";
    case FeatureKind::categorical: return "categorical";
  }
  return "continuous";
}

FeatureKind feature_kind_from_string(const std::string& s) {
  if (s == "continuous") return FeatureKind::continuous;
  if (s == "binary") return FeatureKind::binary;
  if (s == "ordinal_score") return FeatureKind::ordinal_score;
  if (s == "categorical") return FeatureKind::categorical;
  throw SchemaError("unknown feature kind '" + s + "'");
}

void validate_schema(const Schema& schema) {
  std::set<std::string> seen;
  for (const auto& f : schema) {
    if (f.name.empty()) throw SchemaError("feature with empty name");
    if (f.name == "label") throw SchemaError("'label' is reserved for the outcome column");
    if (!seen.insert(f.name).second) throw SchemaError("duplicate feature name '" + f.name + "'");
    if (f.kind == FeatureKind::ordinal_score && (!f.lower || !f.upper))
      throw SchemaError("ordinal score '" + f.name + "' needs a declared range");
    if (f.kind == FeatureKind::categorical && f.levels.empty())
      throw SchemaError("categorical feature '" + f.name + "' declares no levels");
    if (f.lower && f.upper && *f.lower > *f.upper)
      throw SchemaError("feature '" + f.name + "' has lower bound above upper bound");
  }
}

std::optional<std::size_t> find_feature(const Schema& schema, const std::string& name) {
  for (std::size_t i = 0; i < schema.size(); ++i)
    if (schema[i].name == name) return i;
  return std::nullopt;
}

Schema schema_from_json(const nlohmann::json& j) {
  const auto& arr = j.contains("features") ? j.at("features") : j;
  if (!arr.is_array()) throw SchemaError("schema JSON must be an array or hold a 'features' array");
  Schema schema;
  for (const auto& e : arr) {
    FeatureSpec f;
    f.name = e.at("name").get<std::string>();
    f.kind = feature_kind_from_string(e.value("kind", std::string("continuous")));
    f.unit = e.value("unit", std::string());
    if (e.contains("lower") && !e.at("lower").is_null()) f.lower = e.at("lower").get<double>();
    if (e.contains("upper") && !e.at("upper").is_null()) f.upper = e.at("upper").get<double>();
    if (e.contains("levels")) f.levels = e.at("levels").get<std::vector<std::string>>();
    if (f.kind == FeatureKind::binary) {
      f.lower = f.lower.value_or(0.0);
      f.upper = f.upper.value_or(1.0);
    }
    schema.push_back(std::move(f));
  }
  validate_schema(schema);
  return schema;
}

nlohmann::json schema_to_json(const Schema& schema) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& f : schema) {
    nlohmann::json e{{"name", f.name}, {"kind", to_string(f.kind)}, {"unit", f.unit}};
    if (f.lower) e["lower"] = *f.lower;
    if (f.upper) e["upper"] = *f.upper;
    if (!f.levels.empty()) e["levels"] = f.levels;
    arr.push_back(std::move(e));
  }
  return nlohmann::json{{"features", arr}};
}

Schema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open schema file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("schema file " + path.string() + ": " + e.what());
  }
  return schema_from_json(j);
}

void save_schema(const Schema& schema, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << schema_to_json(schema).dump(2) << '\n';
}

Schema default_schema() {
  using K = FeatureKind;
  auto cont = [](std::string name, std::string unit, double lo, double hi) {
    return FeatureSpec{std::move(name), K::continuous, std::move(unit), lo, hi, {}};
  };
  auto score = [](std::string name, double lo, double hi) {
    return FeatureSpec{std::move(name), K::ordinal_score, "score", lo, hi, {}};
  };
  auto flag = [](std::string name) {
    return FeatureSpec{std::move(name), K::binary, "presence", 0.0, 1.0, {}};
  };
  return {
      cont("BUN", "mg/dL", 0.0, 300.0),
      score("Richmond-RAS Scale", -5.0, 4.0),
      cont("PTT", "sec", 10.0, 150.0),
      cont("Phosphorous", "mg/dL", 0.0, 20.0),
      cont("Total Bilirubin", "mg/dL", 0.0, 60.0),
      cont("Anion gap", "mEq/L", 0.0, 50.0),
      cont("Differential-Lymphs", "%", 0.0, 100.0),
      score("Braden Nutrition", 1.0, 4.0),
      score("Braden Moisture", 1.0, 4.0),
      cont("Respiratory Rate (Set)", "breaths/min", 0.0, 60.0),
      score("Activity / Mobility (JH-HLM)", 1.0, 8.0),
      cont("Peak Inspiratory Pressure", "cmH2O", 0.0, 80.0),
      cont("pO2", "mmHg", 0.0, 700.0),
      flag("Invasive Ventilation"),
      flag("CefePIME"),
      cont("Age", "years", 18.0, 110.0),
      score("Charlson Comorbidity Index", 0.0, 20.0),
  };
}

// ---------------------------------------------------------------------------
// CohortTable

CohortTable::CohortTable(Schema schema, std::vector<Cell> cells, std::vector<int> labels)
    : schema_(std::move(schema)), cells_(std::move(cells)), labels_(std::move(labels)) {
  if (cells_.size() != schema_.size() * labels_.size())
    throw SchemaError("cell count does not match rows x features");
  for (int y : labels_)
    if (y != 0 && y != 1) throw DataError("labels must be 0 or 1");
}

std::size_t CohortTable::missing_count() const {
  return static_cast<std::size_t>(
      std::count_if(cells_.begin(), cells_.end(), [](const Cell& c) { return !c.has_value(); }));
}

std::size_t CohortTable::positives() const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), 1));
}

double CohortTable::event_rate() const {
  return rows() == 0 ? 0.0 : static_cast<double>(positives()) / static_cast<double>(rows());
}

CohortTable CohortTable::subset(std::span<const std::size_t> idx) const {
  std::vector<Cell> cells;
  cells.reserve(idx.size() * cols());
  std::vector<int> labels;
  labels.reserve(idx.size());
  for (auto r : idx) {
    auto src = row(r);
    cells.insert(cells.end(), src.begin(), src.end());
    labels.push_back(labels_[r]);
  }
  return CohortTable(schema_, std::move(cells), std::move(labels));
}

CohortTable CohortTable::select_features(std::span<const std::string> names) const {
  std::vector<std::size_t> cols_idx;
  Schema schema;
  for (const auto& n : names) {
    auto c = find_feature(schema_, n);
    if (!c) throw SchemaError("feature '" + n + "' not in table");
    cols_idx.push_back(*c);
    schema.push_back(schema_[*c]);
  }
  std::vector<Cell> cells;
  cells.reserve(rows() * cols_idx.size());
  for (std::size_t r = 0; r < rows(); ++r)
    for (auto c : cols_idx) cells.push_back(at(r, c));
  return CohortTable(std::move(schema), std::move(cells), labels_);
}

CohortTable CohortTable::drop_feature(const std::string& name) const {
  std::vector<std::string> keep;
  for (const auto& f : schema_)
    if (f.name != name) keep.push_back(f.name);
  if (keep.size() == schema_.size()) throw SchemaError("feature '" + name + "' not in table");
  return select_features(keep);
}

Matrix CohortTable::to_matrix() const {
  Matrix m(rows(), cols());
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    if (!cells_[i]) throw OrderingError("table still has missing values; impute first");
    m.data()[i] = *cells_[i];
  }
  return m;
}

CohortTable CohortTable::from_matrix(Schema schema, const Matrix& x, std::vector<int> labels) {
  if (x.cols() != schema.size()) throw SchemaError("matrix width does not match schema");
  std::vector<Cell> cells(x.data().begin(), x.data().end());
  return CohortTable(std::move(schema), std::move(cells), std::move(labels));
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  out.push_back(std::move(field));
  return out;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::optional<double> parse_number(const std::string& s) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  while (begin < end && *begin == ' ') ++begin;
  while (end > begin && end[-1] == ' ') --end;
  if (begin < end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || begin == end) return std::nullopt;
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

CohortTable parse_cohort(std::istream& in, const Schema& schema) {
  validate_schema(schema);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty cohort file");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
  auto header = split_csv_line(line);

  const std::size_t d = schema.size();
  std::vector<std::size_t> col_of_feature(d, SIZE_MAX);
  std::size_t label_col = SIZE_MAX;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "label") {
      label_col = c;
      continue;
    }
    auto f = find_feature(schema, header[c]);
    if (!f) throw SchemaError("CSV column '" + header[c] + "' is not in the schema");
    if (col_of_feature[*f] != SIZE_MAX) throw SchemaError("CSV column '" + header[c] + "' repeated");
    col_of_feature[*f] = c;
  }
  if (label_col == SIZE_MAX) throw SchemaError("CSV has no 'label' column");
  for (std::size_t f = 0; f < d; ++f)
    if (col_of_feature[f] == SIZE_MAX)
      throw SchemaError("schema feature '" + schema[f].name + "' missing from CSV header");

  std::vector<Cell> cells;
  std::vector<int> labels;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       lineno, "*");
    auto lab = parse_number(fields[label_col]);
    if (!lab || (*lab != 0.0 && *lab != 1.0))
      throw ParseError("label must be 0 or 1", lineno, "label");
    labels.push_back(static_cast<int>(*lab));
    for (std::size_t f = 0; f < d; ++f) {
      const std::string& s = fields[col_of_feature[f]];
      if (s.empty()) {
        cells.emplace_back();
        continue;
      }
      const auto& spec = schema[f];
      if (spec.kind == FeatureKind::categorical) {
        auto it = std::find(spec.levels.begin(), spec.levels.end(), s);
        if (it != spec.levels.end()) {
          cells.emplace_back(static_cast<double>(it - spec.levels.begin()));
          continue;
        }
      }
      auto v = parse_number(s);
      if (!v || !std::isfinite(*v))
        throw ParseError("non-numeric value '" + s + "'", lineno, spec.name);
      if (spec.kind == FeatureKind::categorical &&
          (*v < 0 || *v >= static_cast<double>(spec.levels.size()) || std::floor(*v) != *v))
        throw ParseError("unknown level '" + s + "'", lineno, spec.name);
      cells.emplace_back(*v);
    }
  }
  if (labels.empty()) throw DataError("cohort file has no data rows");
  return CohortTable(schema, std::move(cells), std::move(labels));
}

CohortTable load_cohort(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open cohort file " + path.string());
  return parse_cohort(in, schema);
}

void write_cohort(const CohortTable& table, std::ostream& out) {
  const auto& schema = table.schema();
  for (const auto& f : schema) out << csv_quote(f.name) << ',';
  out << "label\n";
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.cols(); ++c) {
      const auto& cell = table.at(r, c);
      if (cell) {
        if (schema[c].kind == FeatureKind::categorical)
          out << csv_quote(schema[c].levels.at(static_cast<std::size_t>(*cell)));
        else
          out << format_double(*cell);
      }
      out << ',';
    }
    out << table.labels()[r] << '\n';
  }
}

void save_cohort(const CohortTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_cohort(table, out);
}

// ---------------------------------------------------------------------------
// Splitting

nlohmann::json split_to_json(const SplitIndex& split) {
  return {{"seed", split.seed}, {"train_rows", split.train_rows}, {"test_rows", split.test_rows}};
}

SplitIndex split_from_json(const nlohmann::json& j) {
  SplitIndex s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.train_rows = j.at("train_rows").get<std::vector<std::size_t>>();
  s.test_rows = j.at("test_rows").get<std::vector<std::size_t>>();
  return s;
}

namespace {

std::size_t round_half_up(double x) { return static_cast<std::size_t>(std::floor(x + 0.5)); }

}  // namespace

SplitIndex stratified_split(std::span<const int> labels, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("train fraction must lie in (0, 1)");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i] == 1].push_back(i);
  for (int c = 0; c < 2; ++c)
    if (by_class[c].size() < 2)
      throw StratificationError("class " + std::to_string(c) + " has fewer than 2 members");

  const int minority = by_class[1].size() <= by_class[0].size() ? 1 : 0;
  const int majority = 1 - minority;
  std::size_t take[2];
  take[minority] = round_half_up(static_cast<double>(by_class[minority].size()) * train_fraction);
  const std::size_t total = round_half_up(static_cast<double>(labels.size()) * train_fraction);
  take[majority] = std::min(by_class[majority].size(), total - std::min(total, take[minority]));

  SplitIndex split;
  split.seed = seed;
  for (int c = 0; c < 2; ++c) {
    auto idx = by_class[c];
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(c));
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
    split.train_rows.insert(split.train_rows.end(), idx.begin(), idx.begin() + take[c]);
    split.test_rows.insert(split.test_rows.end(), idx.begin() + take[c], idx.end());
  }
  std::sort(split.train_rows.begin(), split.train_rows.end());
  std::sort(split.test_rows.begin(), split.test_rows.end());
  return split;
}

SplitIndex stratified_split(const CohortTable& table, double train_fraction, std::uint64_t seed) {
  return stratified_split(table.labels(), train_fraction, seed);
}

// ---------------------------------------------------------------------------
// Summaries

FeatureStats column_stats(const CohortTable& table, std::size_t col, std::optional<int> label_filter) {
  FeatureStats st;
  std::size_t n = 0;
  double mean = 0.0, m2 = 0.0;
  const auto& spec = table.schema()[col];
  std::vector<double> counts(spec.kind == FeatureKind::categorical ? spec.levels.size() : 0, 0.0);
  for (std::size_t r = 0; r < table.rows(); ++r) {
    if (label_filter && table.labels()[r] != *label_filter) continue;
    ++n;
    const auto& cell = table.at(r, col);
    if (!cell) continue;
    ++st.documented;
    const double x = *cell;
    const double delta = x - mean;
    mean += delta / static_cast<double>(st.documented);
    m2 += delta * (x - mean);
    if (!counts.empty()) counts.at(static_cast<std::size_t>(x)) += 1.0;
  }
  st.missing_fraction = n == 0 ? 0.0 : 1.0 - static_cast<double>(st.documented) / static_cast<double>(n);
  if (st.documented >= 1) st.mean = mean;
  if (st.documented >= 2) st.sd = std::sqrt(m2 / static_cast<double>(st.documented - 1));
  if (!counts.empty() && st.documented > 0) {
    for (auto& c : counts) c /= static_cast<double>(st.documented);
    st.level_freq = std::move(counts);
  }
  return st;
}

CohortSummary summarize(const CohortTable& table, bool by_label) {
  CohortSummary s;
  s.schema = table.schema();
  s.n = table.rows();
  s.event_rate = table.event_rate();
  for (std::size_t c = 0; c < table.cols(); ++c) {
    s.overall.push_back(column_stats(table, c));
    if (by_label) {
      s.survivors.push_back(column_stats(table, c, 0));
      s.nonsurvivors.push_back(column_stats(table, c, 1));
    }
  }
  return s;
}

CohortSummary default_class_moments() {
  struct Row {
    double m0, s0, m1, s1;
  };
  // Survivors then non-survivors, mean (sd), in default_schema() order.
  const Row rows[] = {
      {20.71, 13.50, 40.40, 32.81},   // BUN
      {-0.90, 1.13, -2.50, 1.68},     // Richmond-RAS Scale
      {34.87, 13.43, 47.19, 24.01},   // PTT
      {3.39, 0.88, 4.12, 1.57},       // Phosphorous
      {1.21, 1.09, 2.78, 5.82},       // Total Bilirubin
      {12.67, 3.07, 15.33, 4.42},     // Anion gap
      {14.34, 6.83, 9.66, 6.33},      // Differential-Lymphs
      {2.44, 0.43, 2.01, 0.40},       // Braden Nutrition
      {3.59, 0.38, 3.25, 0.42},       // Braden Moisture
      {17.90, 2.98, 20.49, 4.95},     // Respiratory Rate (Set)
      {2.39, 0.51, 2.00, 0.30},       // Activity / Mobility (JH-HLM)
      {19.09, 3.74, 21.70, 5.98},     // Peak Inspiratory Pressure
      {159.96, 68.61, 99.30, 43.49},  // pO2
      {0.47, 0.50, 0.55, 0.50},       // Invasive Ventilation
      {0.24, 0.42, 0.63, 0.48},       // CefePIME
      {69.64, 9.21, 70.54, 10.11},    // Age
      {4.24, 1.70, 4.59, 1.44},       // Charlson Comorbidity Index
  };
  CohortSummary s;
  s.schema = default_schema();
  s.n = 1301;
  s.event_rate = 0.196;
  const double f1 = s.event_rate, f0 = 1.0 - f1;
  for (const auto& r : rows) {
    FeatureStats a, b, all;
    a.mean = r.m0;
    a.sd = r.s0;
    b.mean = r.m1;
    b.sd = r.s1;
    all.mean = f0 * r.m0 + f1 * r.m1;
    const double var = f0 * (r.s0 * r.s0 + r.m0 * r.m0) + f1 * (r.s1 * r.s1 + r.m1 * r.m1) -
                       *all.mean * *all.mean;
    all.sd = std::sqrt(var);
    a.documented = b.documented = all.documented = s.n;
    s.survivors.push_back(a);
    s.nonsurvivors.push_back(b);
    s.overall.push_back(all);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Synthetic cohorts

namespace {

double draw_truncated_normal(Rng& rng, double mean, double sd, std::optional<double> lo,
                             std::optional<double> hi, const std::string& name) {
  if (sd <= 0.0) return std::clamp(mean, lo.value_or(mean), hi.value_or(mean));
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const double x = mean + sd * standard_normal(rng);
    if ((!lo || x >= *lo) && (!hi || x <= *hi)) return x;
  }
  throw ConfigError("truncation bounds of '" + name + "' exclude almost all of the distribution");
}

}  // namespace

CohortTable synth_cohort(const CohortSummary& summary, std::size_t n, double event_rate,
                         std::span<const double> missing_rates, std::uint64_t seed) {
  const auto& schema = summary.schema;
  validate_schema(schema);
  const std::size_t d = schema.size();
  if (n < 10) throw ConfigError("synthetic cohort needs n >= 10");
  if (!(event_rate > 0.0 && event_rate < 1.0)) throw ConfigError("event rate must lie in (0, 1)");
  if (!missing_rates.empty() && missing_rates.size() != d)
    throw ConfigError("missing_rates must have one entry per feature");
  for (double m : missing_rates)
    if (!(m >= 0.0 && m < 1.0)) throw ConfigError("missing rate must lie in [0, 1)");
  if (summary.survivors.size() != d || summary.nonsurvivors.size() != d)
    throw ConfigError("summary lacks per-class moments for every feature");

  std::vector<int> labels(n);
  {
    Rng rng = make_rng(seed, 0);
    for (auto& y : labels) y = uniform01(rng) < event_rate ? 1 : 0;
  }

  std::vector<Cell> cells(n * d);
  for (std::size_t f = 0; f < d; ++f) {
    const auto& spec = schema[f];
    Rng rng = make_rng(seed, 1000 + f);
    for (std::size_t r = 0; r < n; ++r) {
      const auto& st = summary.for_class(labels[r])[f];
      double x = 0.0;
      switch (spec.kind) {
        case FeatureKind::binary: {
          if (!st.mean) throw ConfigError("no class prevalence for '" + spec.name + "'");
          x = uniform01(rng) < *st.mean ? 1.0 : 0.0;
          break;
        }
        case FeatureKind::categorical: {
          const std::size_t k = spec.levels.size();
          double u = uniform01(rng);
          std::size_t level = k - 1;
          for (std::size_t l = 0; l < k; ++l) {
            const double p = st.level_freq.size() == k ? st.level_freq[l] : 1.0 / static_cast<double>(k);
            if (u < p) {
              level = l;
              break;
            }
            u -= p;
          }
          x = static_cast<double>(level);
          break;
        }
        case FeatureKind::continuous:
        case FeatureKind::ordinal_score: {
          if (!st.mean || !st.sd) throw ConfigError("no class moments for '" + spec.name + "'");
          x = draw_truncated_normal(rng, *st.mean, *st.sd, spec.lower, spec.upper, spec.name);
          break;
        }
      }
      cells[r * d + f] = x;
    }
    const double miss = missing_rates.empty() ? 0.0 : missing_rates[f];
    if (miss > 0.0) {
      Rng mrng = make_rng(seed, 2000 + f);
      for (std::size_t r = 0; r < n; ++r)
        if (uniform01(mrng) < miss) cells[r * d + f].reset();
    }
  }
  return CohortTable(schema, std::move(cells), std::move(labels));
}

}  // namespace icurisk
