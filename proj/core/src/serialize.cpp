#include "fpforge/serialize.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <string>

#include "fpforge/errors.hpp"

namespace fpforge {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index cols_if_empty = 0) {
  if (!j.is_array()) throw SchemaError("expected a matrix as an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows == 0 ? cols_if_empty : static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw SchemaError("ragged matrix in JSON");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

template <typename F>
auto schema_guard(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw SchemaError(e.what());
  }
}

}  // namespace

void to_json(json& j, const KernelSpec& spec) {
  j = json{{"family", std::string(family_name(spec.family))},
           {"variance", spec.variance},
           {"length_scale", spec.length_scale}};
  if (spec.alpha) j["alpha"] = *spec.alpha;
}

void from_json(const json& j, KernelSpec& spec) {
  spec.family = parse_family(j.at("family").get<std::string>());
  spec.variance = j.at("variance").get<double>();
  spec.length_scale = j.at("length_scale").get<double>();
  spec.alpha.reset();
  if (j.contains("alpha") && !j["alpha"].is_null()) spec.alpha = j["alpha"].get<double>();
  spec.validate();
}

void to_json(json& j, const Kernel& kernel) {
  json terms = json::array();
  for (const auto& t : kernel.terms()) {
    json term = t.kernel;
    term["weight"] = t.weight;
    terms.push_back(std::move(term));
  }
  j = json{{"terms", std::move(terms)}};
}

Kernel kernel_from_json(const json& j) {
  return schema_guard([&] {
    if (!j.contains("terms")) return Kernel(j.get<KernelSpec>());
    std::vector<WeightedKernel> terms;
    for (const json& t : j.at("terms")) {
      terms.push_back({t.value("weight", 1.0), t.get<KernelSpec>()});
    }
    return Kernel(std::move(terms));
  });
}

json coreg_to_json(const CoregionalizationSpec& coreg) {
  json groups = json::array();
  for (std::size_t q = 0; q < coreg.q_count(); ++q) {
    groups.push_back({{"kernel", coreg.base_kernels[q]}, {"mixing", matrix_to_json(coreg.mixing[q])}});
  }
  json boost = json::array();
  for (Eigen::Index t = 0; t < coreg.diag_boost.size(); ++t) boost.push_back(coreg.diag_boost[t]);
  return json{{"groups", std::move(groups)}, {"diag_boost", std::move(boost)}};
}

CoregionalizationSpec coreg_from_json(const json& j) {
  return schema_guard([&] {
    CoregionalizationSpec coreg;
    const json& boost = j.at("diag_boost");
    coreg.diag_boost.resize(static_cast<Eigen::Index>(boost.size()));
    for (std::size_t t = 0; t < boost.size(); ++t) {
      coreg.diag_boost[static_cast<Eigen::Index>(t)] = boost[t].get<double>();
    }
    for (const json& g : j.at("groups")) {
      coreg.base_kernels.push_back(kernel_from_json(g.at("kernel")));
      coreg.mixing.push_back(matrix_from_json(g.at("mixing")));
    }
    coreg.validate();
    return coreg;
  });
}

std::string_view solver_name(MogpSolver solver) {
  switch (solver) {
    case MogpSolver::Auto:
      return "auto";
    case MogpSolver::Kronecker:
      return "kronecker";
    case MogpSolver::Dense:
      return "dense";
  }
  return "auto";
}

MogpSolver parse_solver(std::string_view name) {
  const std::string n = lower(name);
  if (n == "auto") return MogpSolver::Auto;
  if (n == "kronecker") return MogpSolver::Kronecker;
  if (n == "dense") return MogpSolver::Dense;
  throw ArgumentError("unknown solver '" + std::string(name) + "' (auto, kronecker, dense)");
}

std::string_view sampler_name(SamplerKind kind) {
  return kind == SamplerKind::GaussianAroundRP ? "gaussian" : "uniform";
}

SamplerKind parse_sampler(std::string_view name) {
  const std::string n = lower(name);
  if (n == "gaussian") return SamplerKind::GaussianAroundRP;
  if (n == "uniform") return SamplerKind::UniformInBoundingBox;
  throw ArgumentError("unknown sampler '" + std::string(name) + "' (gaussian, uniform)");
}

json config_to_json(const AugmentationConfig& config) {
  json model{{"kernel", config.model.kernel},
             {"rank", config.model.rank},
             {"noise_variance", config.model.noise_variance},
             {"max_points", config.model.max_points},
             {"min_detection", config.model.min_detection},
             {"solver", std::string(solver_name(config.model.solver))}};
  if (config.model.q_equals_outputs) {
    model["q"] = "T";
  } else {
    model["q"] = config.model.q;
  }
  json overrides = json::array();
  for (const auto& [key, r] : config.ratio_overrides) {
    overrides.push_back({{"building", key.building_id}, {"floor", key.floor_id}, {"ratio", r}});
  }
  return json{{"ratio", config.ratio},
              {"sampler",
               {{"kind", std::string(sampler_name(config.sampler.kind))},
                {"spatial_std", config.sampler.spatial_std}}},
              {"noise_std", config.noise_std},
              {"clip", {config.clip_min, config.clip_max}},
              {"seed", config.seed},
              {"model", std::move(model)},
              {"ratio_overrides", std::move(overrides)}};
}

AugmentationConfig config_from_json(const json& j) {
  return schema_guard([&] {
    AugmentationConfig c;
    c.ratio = j.at("ratio").get<double>();
    const json& sampler = j.at("sampler");
    c.sampler.kind = parse_sampler(sampler.at("kind").get<std::string>());
    c.sampler.spatial_std = sampler.at("spatial_std").get<double>();
    c.noise_std = j.at("noise_std").get<double>();
    c.clip_min = j.at("clip").at(0).get<double>();
    c.clip_max = j.at("clip").at(1).get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    const json& m = j.at("model");
    c.model.kernel = kernel_from_json(m.at("kernel"));
    if (m.at("q").is_string()) {
      if (m["q"].get<std::string>() != "T") throw SchemaError("model.q must be an integer or \"T\"");
      c.model.q_equals_outputs = true;
    } else {
      c.model.q = m["q"].get<std::size_t>();
    }
    c.model.rank = m.at("rank").get<std::size_t>();
    c.model.noise_variance = m.at("noise_variance").get<double>();
    c.model.max_points = m.at("max_points").get<std::size_t>();
    c.model.min_detection = m.at("min_detection").get<double>();
    c.model.solver = parse_solver(m.at("solver").get<std::string>());
    for (const json& o : j.value("ratio_overrides", json::array())) {
      c.ratio_overrides[{o.at("building").get<int>(), o.at("floor").get<int>()}] =
          o.at("ratio").get<double>();
    }
    c.validate();
    return c;
  });
}

json report_to_json(const LocalizationReport& report, bool with_per_query) {
  json j{{"queries", report.queries},
         {"building_hit_rate", report.building_hit_rate},
         {"floor_hit_rate", report.floor_hit_rate},
         {"mean_2d_error_m", report.mean_2d_error},
         {"mean_3d_error_m", report.mean_3d_error}};
  if (!report.config_digest.empty()) j["config_digest"] = report.config_digest;
  if (with_per_query) {
    json rows = json::array();
    for (const auto& e : report.per_query_errors) {
      rows.push_back({{"error_2d", e.error_2d},
                      {"error_3d", e.error_3d},
                      {"building_hit", e.building_hit},
                      {"floor_hit", e.floor_hit}});
    }
    j["per_query"] = std::move(rows);
  }
  return j;
}

std::string digest(const json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
    h >>= 4;
  }
  return out;
}

std::string config_digest(const AugmentationConfig& config) {
  return digest(config_to_json(config));
}

json block_model_to_json(const BlockModel& model) {
  json points = json::array();
  for (const Point& p : model.gp.train_points()) points.push_back({p.x, p.y});
  return json{{"format", "fpforge-block-model"},
              {"version", 1},
              {"building", model.key.building_id},
              {"floor", model.key.floor_id},
              {"active_waps", model.active_waps},
              {"train_records", model.train_records},
              {"extent",
               {model.extent.min.x, model.extent.min.y, model.extent.max.x, model.extent.max.y}},
              {"noise_variance", model.gp.noise_variance()},
              {"solver", std::string(solver_name(model.gp.solver()))},
              {"coregionalization", coreg_to_json(model.gp.coreg())},
              {"points", std::move(points)},
              {"targets", matrix_to_json(model.gp.train_targets())}};
}

BlockModel block_model_from_json(const json& j) {
  return schema_guard([&] {
    if (j.value("format", std::string()) != "fpforge-block-model") {
      throw SchemaError("not a block model file");
    }
    BlockModel m{.key = {j.at("building").get<int>(), j.at("floor").get<int>()},
                 .active_waps = j.at("active_waps").get<std::vector<std::size_t>>(),
                 .train_records = j.at("train_records").get<std::vector<std::size_t>>(),
                 .extent = {},
                 .gp = MogpModel::fit(
                     [&] {
                       std::vector<Point> pts;
                       for (const json& p : j.at("points")) {
                         pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
                       }
                       return pts;
                     }(),
                     matrix_from_json(j.at("targets")), coreg_from_json(j.at("coregionalization")),
                     j.at("noise_variance").get<double>(),
                     parse_solver(j.at("solver").get<std::string>()))};
    const json& e = j.at("extent");
    m.extent.min = {e.at(0).get<double>(), e.at(1).get<double>()};
    m.extent.max = {e.at(2).get<double>(), e.at(3).get<double>()};
    if (m.active_waps.size() != m.gp.outputs()) {
      throw SchemaError("active_waps length does not match the target columns");
    }
    return m;
  });
}

void save_block_model(const BlockModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << block_model_to_json(model).dump() << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

BlockModel load_block_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  return block_model_from_json(j);
}

}  // namespace fpforge
