#include "icurisk/models.hpp"

#include "icurisk/error.hpp"
#include "icurisk/numeric.hpp"

namespace icurisk {

std::string to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::gbdt: return "gbdt";
    case ModelFamily::logistic_regression: return "logistic_regression";
    case ModelFamily::naive_bayes: return "naive_bayes";
    case ModelFamily::mlp: return "mlp";
  }
  return "unknown";
}

ModelFamily model_family_from_string(const std::string& s) {
  if (s == "gbdt") return ModelFamily::gbdt;
  if (s == "logistic_regression") return ModelFamily::logistic_regression;
  if (s == "naive_bayes") return ModelFamily::naive_bayes;
  if (s == "mlp") return ModelFamily::mlp;
  throw UnsupportedModelError("unknown model family '" + s + "'");
}

bool ModelSpec::wants_raw_categoricals() const {
  return family == ModelFamily::gbdt && gbdt_params_from_json(params).ordered_mode;
}

nlohmann::json to_json(const ModelSpec& s) {
  return {{"name", s.name}, {"family", to_string(s.family)}, {"params", s.params}};
}

ModelSpec model_spec_from_json(const nlohmann::json& j) {
  ModelSpec s;
  s.name = j.value("name", std::string());
  s.family = model_family_from_string(j.at("family").get<std::string>());
  s.params = j.value("params", nlohmann::json::object());
  return s;
}

ModelFamily TrainedModel::family() const {
  return static_cast<ModelFamily>(model.index());
}

double TrainedModel::margin(std::span<const double> row) const {
  return std::visit([&](const auto& m) { return m.margin(row); }, model);
}

TrainedModel train(const ModelSpec& spec, const Matrix& x, std::span<const int> y,
                   std::span<const double> weights, std::uint64_t seed,
                   std::span<const std::size_t> categorical_columns) {
  TrainedModel out;
  out.name = spec.name;
  out.n_features = x.cols();
  switch (spec.family) {
    case ModelFamily::gbdt:
      out.model = train_gbdt(x, y, weights, gbdt_params_from_json(spec.params), seed,
                             categorical_columns);
      break;
    case ModelFamily::logistic_regression:
      out.model = train_logreg(x, y, weights, logreg_params_from_json(spec.params));
      break;
    case ModelFamily::naive_bayes:
      out.model = train_gnb(x, y, weights, gnb_params_from_json(spec.params));
      break;
    case ModelFamily::mlp:
      out.model = train_mlp(x, y, weights, mlp_params_from_json(spec.params), seed);
      break;
  }
  return out;
}

std::vector<double> decision_function(const TrainedModel& m, const Matrix& x) {
  if (x.cols() != m.n_features)
    throw SchemaError("model expects " + std::to_string(m.n_features) + " features, got " +
                      std::to_string(x.cols()));
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = m.margin(x.row(i));
  return out;
}

std::vector<double> predict_proba(const TrainedModel& m, const Matrix& x) {
  auto out = decision_function(m, x);
  for (auto& v : out) v = clip_probability(sigmoid(v));
  return out;
}

nlohmann::json to_json(const TrainedModel& m) {
  nlohmann::json body = std::visit([](const auto& v) { return to_json(v); }, m.model);
  return {{"format", "icurisk-model"},
          {"version", 1},
          {"name", m.name},
          {"family", to_string(m.family())},
          {"n_features", m.n_features},
          {"model", std::move(body)}};
}

TrainedModel trained_model_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string()) != "icurisk-model" || j.value("version", 0) != 1)
    throw DataError("not an icurisk-model v1 artifact");
  TrainedModel m;
  m.name = j.value("name", std::string());
  m.n_features = j.at("n_features").get<std::size_t>();
  const auto& body = j.at("model");
  switch (model_family_from_string(j.at("family").get<std::string>())) {
    case ModelFamily::gbdt: m.model = gbdt_from_json(body); break;
    case ModelFamily::logistic_regression: m.model = linear_from_json(body); break;
    case ModelFamily::naive_bayes: m.model = gnb_from_json(body); break;
    case ModelFamily::mlp: m.model = mlp_from_json(body); break;
  }
  return m;
}

std::vector<ModelSpec> default_grid(ModelFamily family, const nlohmann::json& base) {
  std::vector<ModelSpec> grid;
  auto add = [&](nlohmann::json p) {
    nlohmann::json merged = base;
    merged.merge_patch(p);
    grid.push_back({"", family, std::move(merged)});
  };
  switch (family) {
    case ModelFamily::gbdt:
      for (int depth : {2, 3, 4})
        for (int trees : {100, 300})
          for (double lr : {0.05, 0.1})
            for (double l2 : {1.0, 5.0})
              add({{"max_depth", depth}, {"n_trees", trees}, {"learning_rate", lr}, {"l2_leaf", l2}});
      break;
    case ModelFamily::logistic_regression:
      for (const char* pen : {"l1", "l2"})
        for (double c : {0.01, 0.1, 1.0, 10.0}) add({{"penalty", pen}, {"C", c}});
      break;
    case ModelFamily::naive_bayes:
      add(nlohmann::json::object());
      break;
    case ModelFamily::mlp:
      for (int h : {8, 16})
        for (double lr : {1e-3, 1e-2}) add({{"hidden", h}, {"learning_rate", lr}});
      break;
  }
  return grid;
}

std::vector<ModelEntry> default_model_entries() {
  auto entry = [](std::string name, ModelFamily f, nlohmann::json base) {
    ModelEntry e{std::move(name), default_grid(f, base)};
    for (auto& s : e.grid) s.name = e.name;
    return e;
  };
  return {
      entry("gbdt_ordered", ModelFamily::gbdt, {{"ordered_mode", true}}),
      entry("gbdt_subsample", ModelFamily::gbdt, {{"subsample", 0.8}}),
      entry("gbdt_exact", ModelFamily::gbdt, nlohmann::json::object()),
      entry("logistic_regression", ModelFamily::logistic_regression, nlohmann::json::object()),
      entry("naive_bayes", ModelFamily::naive_bayes, nlohmann::json::object()),
      entry("neural_network", ModelFamily::mlp, nlohmann::json::object()),
  };
}

nlohmann::json to_json(const ModelEntry& e) {
  nlohmann::json grid = nlohmann::json::array();
  for (const auto& s : e.grid) grid.push_back(to_json(s));
  return {{"name", e.name}, {"grid", grid}};
}

ModelEntry model_entry_from_json(const nlohmann::json& j) {
  ModelEntry e;
  e.name = j.at("name").get<std::string>();
  for (const auto& [key, value] : j.items())
    if (key != "name" && key != "grid" && key != "family" && key != "base")
      throw ConfigError("unknown key '" + key + "' in model '" + e.name + "'");
  if (!j.contains("grid")) {
    // Shorthand: the family's default grid, optionally with fixed parameters.
    if (!j.contains("family")) throw ConfigError("model '" + e.name + "' needs a grid or a family");
    e.grid = default_grid(model_family_from_string(j.at("family").get<std::string>()),
                          j.value("base", nlohmann::json::object()));
    for (auto& spec : e.grid) spec.name = e.name;
    return e;
  }
  if (j.contains("family") || j.contains("base"))
    throw ConfigError("model '" + e.name + "': give either a grid or family/base, not both");
  for (const auto& s : j.at("grid")) {
    auto spec = model_spec_from_json(s);
    spec.name = e.name;
    e.grid.push_back(std::move(spec));
  }
  if (e.grid.empty()) throw ConfigError("model '" + e.name + "' has an empty grid");
  return e;
}

}  // namespace icurisk
