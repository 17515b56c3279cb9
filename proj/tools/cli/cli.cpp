#include "cli/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpforge/augment.hpp"
#include "fpforge/dataset.hpp"
#include "fpforge/errors.hpp"
#include "fpforge/evaluate.hpp"
#include "fpforge/kernels.hpp"
#include "fpforge/serialize.hpp"

namespace fpforge::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Thrown when a check that the code guarantees fails at run time.
class InternalError : public Error {
 public:
  using Error::Error;
};

struct ModelFlags {
  std::string kernel = "matern52";
  double variance = 1.0;
  double length_scale = 10.0;
  double alpha = 1.0;
  CLI::Option* alpha_opt = nullptr;
  std::string model = "lmc";
  std::string q = "2";
  CLI::Option* q_opt = nullptr;
  std::size_t rank = kDefaultRank;
  double noise_variance = kDefaultNoiseVariance;
  std::size_t max_points = kDefaultMaxPoints;
  double min_detection = kDefaultMinDetection;
  std::string solver = "auto";
};

struct AugmentFlags {
  ModelFlags model;
  double ratio = 1.0;
  std::string sampler = "gaussian";
  double spatial_std = 5.0;
  double noise_std = 1.0;
  std::vector<std::string> ratio_overrides;
};

struct BlockFilter {
  int building = -1;
  int floor = -1;
};

struct StatsArgs {
  std::string input;
  std::string output_dir;
};

struct AugmentArgs {
  std::string input;
  std::string output_dir;
  std::uint64_t seed = 0;
  AugmentFlags flags;
  BlockFilter filter;
  double cell_size = 5.0;
  std::string replay;
};

struct EvalArgs {
  std::string input;
  std::string test;
  double split = 0.2;
  CLI::Option* split_opt = nullptr;
  std::uint64_t seed = 0;
  std::size_t k = kDefaultK;
  double floor_height = kDefaultFloorHeight;
  BlockFilter filter;
  bool augment = false;
  AugmentFlags flags;
  std::string output_dir;
};

struct RadiomapArgs {
  std::string input;
  std::string output_dir;
  BlockFilter filter;
  std::string wap;
  double resolution = 1.0;
  std::uint64_t seed = 0;
  ModelFlags model;
  std::vector<std::string> kernels{"matern52"};
  std::string model_file;
  std::string save_model;
};

void add_kernel_flags(CLI::App* app, ModelFlags& m) {
  app->add_option("--variance", m.variance, "Kernel variance sigma^2 (dBm^2)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app->add_option("--length-scale", m.length_scale, "Kernel length scale (m)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  m.alpha_opt = app->add_option("--alpha", m.alpha, "RQ shape parameter (default 1)")
                    ->check(CLI::PositiveNumber);
}

void add_model_flags(CLI::App* app, ModelFlags& m) {
  app->add_option("--kernel", m.kernel, "rbf, rq, matern32, matern52 or ou")
      ->capture_default_str();
  add_kernel_flags(app, m);
  app->add_option("--model", m.model, "icm (Q = 1) or lmc")
      ->capture_default_str()
      ->check(CLI::IsMember({"icm", "lmc"}, CLI::ignore_case));
  m.q_opt = app->add_option("--q", m.q, "LMC groups, an integer or T (one per active WAP)")
                ->capture_default_str();
  app->add_option("--rank", m.rank, "Latent rank R of each mixing matrix")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app->add_option("--noise-variance", m.noise_variance, "GP observation noise (dBm^2)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  app->add_option("--max-points", m.max_points, "Largest per-block training subsample")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app->add_option("--min-detection", m.min_detection,
                  "Fraction of block records that must hear a WAP for it to be modeled")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  app->add_option("--solver", m.solver, "auto, kronecker or dense")
      ->capture_default_str()
      ->check(CLI::IsMember({"auto", "kronecker", "dense"}, CLI::ignore_case));
}

void add_augment_flags(CLI::App* app, AugmentFlags& a) {
  add_model_flags(app, a.model);
  app->add_option("--ratio", a.ratio, "Synthetic records per original record")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  app->add_option("--sampler", a.sampler, "gaussian (around RPs) or uniform (bounding box)")
      ->capture_default_str()
      ->check(CLI::IsMember({"gaussian", "uniform"}, CLI::ignore_case));
  app->add_option("--spatial-std", a.spatial_std, "Gaussian sampler spread (m)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app->add_option("--noise-std", a.noise_std, "Output noise added to synthetic RSSI (dBm)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  app->add_option("--ratio-override", a.ratio_overrides,
                  "Per-block ratio as BUILDING:FLOOR=RATIO (repeatable)");
}

void add_filter_flags(CLI::App* app, BlockFilter& f) {
  app->add_option("--building", f.building, "Restrict to one building")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--floor", f.floor, "Restrict to one floor (needs --building)")
      ->check(CLI::NonNegativeNumber);
}

Kernel kernel_from_flags(const ModelFlags& m, const std::string& family_text) {
  const KernelFamily family = parse_family(family_text);
  std::optional<double> alpha;
  const bool alpha_given = m.alpha_opt != nullptr && m.alpha_opt->count() > 0;
  if (family == KernelFamily::RQ) {
    alpha = m.alpha;
  } else if (alpha_given) {
    throw ArgumentError("--alpha only applies to the rq kernel");
  }
  return make_kernel(family, m.variance, m.length_scale, alpha);
}

ModelSettings settings_from_flags(const ModelFlags& m, const std::string& family_text) {
  ModelSettings s;
  s.kernel = kernel_from_flags(m, family_text);
  if (m.model == "icm") {
    if (m.q_opt != nullptr && m.q_opt->count() > 0 && m.q != "1") {
      throw ArgumentError("--q " + m.q + " conflicts with --model icm (Q = 1)");
    }
    s.q = 1;
  } else if (m.q == "T" || m.q == "t") {
    s.q_equals_outputs = true;
  } else {
    std::size_t pos = 0;
    long long q = 0;
    try {
      q = std::stoll(m.q, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != m.q.size() || q < 1) {
      throw ArgumentError("--q must be a positive integer or T, got '" + m.q + "'");
    }
    s.q = static_cast<std::size_t>(q);
  }
  s.rank = m.rank;
  s.noise_variance = m.noise_variance;
  s.max_points = m.max_points;
  s.min_detection = m.min_detection;
  s.solver = parse_solver(m.solver);
  return s;
}

BlockKey parse_block_key(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw ArgumentError("expected BUILDING:FLOOR, got '" + text + "'");
  }
  try {
    return {std::stoi(text.substr(0, colon)), std::stoi(text.substr(colon + 1))};
  } catch (const std::exception&) {
    throw ArgumentError("expected BUILDING:FLOOR, got '" + text + "'");
  }
}

AugmentationConfig config_from_flags(const AugmentFlags& a, std::uint64_t seed) {
  AugmentationConfig c;
  c.ratio = a.ratio;
  c.sampler.kind = parse_sampler(a.sampler);
  c.sampler.spatial_std = a.spatial_std;
  c.noise_std = a.noise_std;
  c.seed = seed;
  c.model = settings_from_flags(a.model, a.model.kernel);
  for (const std::string& o : a.ratio_overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) {
      throw ArgumentError("--ratio-override expects BUILDING:FLOOR=RATIO, got '" + o + "'");
    }
    double r = 0.0;
    try {
      r = std::stod(o.substr(eq + 1));
    } catch (const std::exception&) {
      throw ArgumentError("bad ratio in --ratio-override '" + o + "'");
    }
    c.ratio_overrides[parse_block_key(o.substr(0, eq))] = r;
  }
  c.validate();
  return c;
}

json filter_to_json(const BlockFilter& f) {
  json j = json::object();
  if (f.building >= 0) j["building"] = f.building;
  if (f.floor >= 0) j["floor"] = f.floor;
  return j;
}

BlockFilter filter_from_json(const json& j) {
  BlockFilter f;
  f.building = j.value("building", -1);
  f.floor = j.value("floor", -1);
  return f;
}

FingerprintDataset apply_filter(FingerprintDataset dataset, const BlockFilter& f) {
  if (f.floor >= 0 && f.building < 0) {
    throw ArgumentError("--floor needs --building");
  }
  if (f.building < 0) return dataset;
  std::erase_if(dataset.records, [&](const FingerprintRecord& r) {
    return r.building_id != f.building || (f.floor >= 0 && r.floor_id != f.floor);
  });
  if (dataset.empty()) {
    throw ArgumentError("no records for building " + std::to_string(f.building) +
                        (f.floor >= 0 ? " floor " + std::to_string(f.floor) : std::string()));
  }
  return dataset;
}

fs::path prepare_output_dir(const std::string& dir) {
  const fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create output directory " + p.string() + ": " + ec.message());
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

void write_jsonl(const fs::path& path, const std::vector<json>& lines) {
  std::string text;
  for (const json& l : lines) text += l.dump() + '\n';
  write_text(path, text);
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

// ---- stats ----

int cmd_stats(const StatsArgs& args, std::ostream& out) {
  const auto start = Clock::now();
  const FingerprintDataset data = load_ujiindoorloc(args.input);
  const std::vector<Block> blocks = partition_by_block(data);

  out << "building floor records\n";
  std::map<int, std::size_t> building_totals;
  json block_rows = json::array();
  for (const Block& b : blocks) {
    out << std::setw(8) << b.key.building_id << std::setw(6) << b.key.floor_id << std::setw(8)
        << b.size() << '\n';
    building_totals[b.key.building_id] += b.size();
    block_rows.push_back(
        {{"building", b.key.building_id}, {"floor", b.key.floor_id}, {"records", b.size()}});
  }
  json totals = json::object();
  for (const auto& [building, n] : building_totals) {
    out << "building " << building << " total " << n << '\n';
    totals[std::to_string(building)] = n;
  }
  out << "total " << data.size() << '\n';

  std::vector<double> variance(data.n_waps, 0.0);
  std::vector<std::size_t> detections(data.n_waps, 0);
  for (std::size_t w = 0; w < data.n_waps; ++w) {
    if (!data.empty()) variance[w] = wap_variance(data, w);
    for (const auto& r : data.records) detections[w] += r.rssi[w] > kRssiFloor ? 1 : 0;
  }
  const auto never = static_cast<std::size_t>(
      std::count(detections.begin(), detections.end(), std::size_t{0}));
  out << "waps " << data.n_waps << ", never heard " << never;
  if (data.n_waps > 0 && !data.empty()) {
    const auto top = std::max_element(variance.begin(), variance.end()) - variance.begin();
    double mean = 0.0;
    for (double v : variance) mean += v;
    mean /= static_cast<double>(data.n_waps);
    out << ", mean variance " << fixed(mean, 2) << " dBm^2, largest WAP"
        << std::setw(3) << std::setfill('0') << top + 1 << std::setfill(' ') << " ("
        << fixed(variance[static_cast<std::size_t>(top)], 2) << ")";
  }
  out << '\n';

  if (!args.output_dir.empty()) {
    const fs::path dir = prepare_output_dir(args.output_dir);
    json stats{{"input", args.input},
               {"records", data.size()},
               {"n_waps", data.n_waps},
               {"blocks", block_rows},
               {"building_totals", totals},
               {"never_heard_waps", never}};
    write_text(dir / "stats.json", stats.dump(2) + '\n');
    std::string csv = "wap,variance,detections\n";
    for (std::size_t w = 0; w < data.n_waps; ++w) {
      csv += std::to_string(w + 1) + ',' + json(variance[w]).dump() + ',' +
             std::to_string(detections[w]) + '\n';
    }
    write_text(dir / "wap_variance.csv", csv);
    write_jsonl(dir / "manifest.jsonl",
                {{{"kind", "config"}, {"command", "stats"}, {"input", args.input}},
                 {{"kind", "summary"},
                  {"records", data.size()},
                  {"blocks", blocks.size()},
                  {"outputs", {"stats.json", "wap_variance.csv"}},
                  {"seconds", seconds_since(start)}}});
  }
  return kExitOk;
}

// ---- augment ----

struct AugmentPlan {
  std::string input;
  BlockFilter filter;
  double cell_size = 5.0;
  AugmentationConfig config;
};

AugmentPlan plan_from_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path + ": empty manifest");
  try {
    const json head = json::parse(line);
    if (head.value("kind", "") != "config" || head.value("command", "") != "augment") {
      throw SchemaError(path + ": first line is not an augment config record");
    }
    AugmentPlan plan;
    plan.input = head.at("input").get<std::string>();
    plan.filter = filter_from_json(head.value("filter", json::object()));
    plan.cell_size = head.at("cell_size").get<double>();
    plan.config = config_from_json(head.at("config"));
    return plan;
  } catch (const json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

int cmd_augment(AugmentArgs args, bool input_given, std::ostream& out) {
  const auto start = Clock::now();
  AugmentPlan plan;
  if (!args.replay.empty()) {
    plan = plan_from_manifest(args.replay);
    if (input_given) plan.input = args.input;
  } else {
    if (args.input.empty()) throw ArgumentError("--input is required");
    plan.input = args.input;
    plan.filter = args.filter;
    plan.cell_size = args.cell_size;
    plan.config = config_from_flags(args.flags, args.seed);
  }
  if (!(plan.cell_size > 0.0)) throw ArgumentError("--cell-size must be positive");

  const FingerprintDataset data = apply_filter(load_ujiindoorloc(plan.input), plan.filter);
  const fs::path dir = prepare_output_dir(args.output_dir);

  AugmentationRun run = run_augmentation(data, plan.config);
  const CoverageReport coverage = coverage_report(data, run.dataset, plan.cell_size);

  save_fingerprint_csv(run.dataset, dir / "augmented.csv", true);

  std::vector<json> manifest;
  manifest.push_back({{"kind", "config"},
                      {"command", "augment"},
                      {"input", plan.input},
                      {"filter", filter_to_json(plan.filter)},
                      {"cell_size", plan.cell_size},
                      {"config", config_to_json(plan.config)},
                      {"config_digest", config_digest(plan.config)}});
  for (std::size_t i = 0; i < run.blocks.size(); ++i) {
    const BlockAugmentation& b = run.blocks[i];
    const BlockCoverage& c = coverage.blocks.at(i);
    manifest.push_back({{"kind", "block"},
                        {"building", b.key.building_id},
                        {"floor", b.key.floor_id},
                        {"original", b.original_count},
                        {"synthetic", synthetic_count(plan.config.ratio_for(b.key), b.original_count)},
                        {"active_waps", b.active_wap_count},
                        {"fit_points", b.fit_points},
                        {"modeled", b.modeled},
                        {"solver", std::string(solver_name(b.solver))},
                        {"jitter", b.jitter},
                        {"jitter_escalations", b.jitter_escalations},
                        {"fit_seconds", b.fit_seconds},
                        {"generate_seconds", b.generate_seconds},
                        {"cells_before", c.cells_before},
                        {"cells_after", c.cells_after},
                        {"hull_area_before", c.hull_area_before},
                        {"hull_area_after", c.hull_area_after}});
  }
  manifest.push_back({{"kind", "summary"},
                      {"original", data.size()},
                      {"synthetic", run.synthetic_total},
                      {"total", run.dataset.size()},
                      {"output", "augmented.csv"},
                      {"seconds", seconds_since(start)}});
  write_jsonl(dir / "manifest.jsonl", manifest);

  out << "blocks " << run.blocks.size() << ", original " << data.size() << ", synthetic "
      << run.synthetic_total << ", written " << (dir / "augmented.csv").string() << '\n';
  return kExitOk;
}

// ---- eval ----

json eval_settings(const EvalArgs& args) {
  json j{{"input", args.input},
         {"k", args.k},
         {"floor_height", args.floor_height},
         {"filter", filter_to_json(args.filter)}};
  if (args.test.empty()) {
    j["split"] = {{"test_fraction", args.split}, {"seed", args.seed}};
  } else {
    j["test"] = args.test;
  }
  return j;
}

void print_headline(std::ostream& out, const std::string& label, const LocalizationReport& r) {
  out << label << ": queries " << r.queries << ", building hit rate "
      << fixed(r.building_hit_rate, 4) << ", floor hit rate " << fixed(r.floor_hit_rate, 4)
      << ", mean 3D error " << fixed(r.mean_3d_error, 3) << " m\n";
}

int cmd_eval(const EvalArgs& args, std::ostream& out) {
  const auto start = Clock::now();
  if (!args.test.empty() && args.split_opt != nullptr && args.split_opt->count() > 0) {
    throw ArgumentError("--test and --split are mutually exclusive");
  }
  if (args.k < 1) throw ArgumentError("--k must be >= 1");
  const FingerprintDataset data = apply_filter(load_ujiindoorloc(args.input), args.filter);

  FingerprintDataset train;
  FingerprintDataset test;
  if (args.test.empty()) {
    Split split = stratified_split(data, args.split, args.seed);
    std::vector<std::size_t> overlap;
    std::set_intersection(split.train_indices.begin(), split.train_indices.end(),
                          split.test_indices.begin(), split.test_indices.end(),
                          std::back_inserter(overlap));
    if (!overlap.empty()) {
      throw InternalError("stratified split produced " + std::to_string(overlap.size()) +
                          " records in both train and test");
    }
    train = std::move(split.train);
    test = std::move(split.test);
  } else {
    train = data;
    test = apply_filter(load_ujiindoorloc(args.test), args.filter);
  }

  const json settings = eval_settings(args);
  LocalizationReport original = evaluate(train, test, args.k, args.floor_height);
  original.config_digest = digest(settings);
  print_headline(out, "original", original);

  json report{{"settings", settings}, {"original", report_to_json(original, true)}};
  if (args.augment) {
    const AugmentationConfig config = config_from_flags(args.flags, args.seed);
    const FingerprintDataset augmented = run_augmentation(train, config).dataset;
    LocalizationReport aug = evaluate(augmented, test, args.k, args.floor_height);
    aug.config_digest = config_digest(config);
    print_headline(out, "augmented", aug);
    report["augmentation"] = config_to_json(config);
    report["augmented"] = report_to_json(aug, true);
    report["augmented_train_records"] = augmented.size();
    report["relative_3d_error_change"] =
        original.mean_3d_error > 0.0
            ? (aug.mean_3d_error - original.mean_3d_error) / original.mean_3d_error
            : 0.0;
  }

  if (!args.output_dir.empty()) {
    const fs::path dir = prepare_output_dir(args.output_dir);
    write_text(dir / "report.json", report.dump(2) + '\n');
    json config_line{{"kind", "config"}, {"command", "eval"}, {"settings", settings}};
    if (args.augment) config_line["augmentation"] = report["augmentation"];
    write_jsonl(dir / "manifest.jsonl",
                {config_line,
                 {{"kind", "summary"},
                  {"train", train.size()},
                  {"test", test.size()},
                  {"output", "report.json"},
                  {"seconds", seconds_since(start)}}});
  }
  return kExitOk;
}

// ---- radiomap ----

std::size_t parse_wap(std::string text) {
  if (text.size() > 3 && (text.compare(0, 3, "WAP") == 0 || text.compare(0, 3, "wap") == 0)) {
    text = text.substr(3);
  }
  std::size_t pos = 0;
  long long number = 0;
  try {
    number = std::stoll(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != text.size() || number < 1) {
    throw ArgumentError("--wap must be a positive WAP number, got '" + text + "'");
  }
  return static_cast<std::size_t>(number - 1);
}

std::string wap_label(std::size_t index) {
  std::ostringstream s;
  s << "WAP" << std::setw(3) << std::setfill('0') << index + 1;
  return s.str();
}

int cmd_radiomap(const RadiomapArgs& args, std::ostream& out) {
  const auto start = Clock::now();
  const fs::path dir = prepare_output_dir(args.output_dir);

  std::vector<std::pair<std::string, BlockModel>> models;
  json config_line{{"kind", "config"}, {"command", "radiomap"}, {"resolution", args.resolution}};
  if (!args.model_file.empty()) {
    BlockModel m = load_block_model(args.model_file);
    models.emplace_back("model", std::move(m));
    config_line["model_file"] = args.model_file;
  } else {
    if (args.input.empty()) throw ArgumentError("--input or --model-file is required");
    if (args.filter.building < 0 || args.filter.floor < 0) {
      throw ArgumentError("--building and --floor select the block to map");
    }
    const FingerprintDataset data = apply_filter(load_ujiindoorloc(args.input), args.filter);
    const std::vector<Block> blocks = partition_by_block(data);
    json settings = json::array();
    for (const std::string& family : args.kernels) {
      const ModelSettings s = settings_from_flags(args.model, family);
      models.emplace_back(std::string(family_name(parse_family(family))),
                          fit_block_for_config(data, blocks.front(), s, args.seed));
      settings.push_back({{"kernel", s.kernel}, {"q", s.q_equals_outputs ? json("T") : json(s.q)}});
    }
    config_line["input"] = args.input;
    config_line["filter"] = filter_to_json(args.filter);
    config_line["seed"] = args.seed;
    config_line["models"] = settings;
    if (!args.save_model.empty()) {
      if (models.size() != 1) throw ArgumentError("--save-model needs exactly one --kernel");
      save_block_model(models.front().second, args.save_model);
    }
  }

  std::vector<json> manifest{config_line};
  for (const auto& [name, model] : models) {
    const std::size_t wap = parse_wap(args.wap);
    const RadioMapGrid grid = radiomap_grid(model, wap, args.resolution);
    const std::string file = "radiomap_B" + std::to_string(model.key.building_id) + "_F" +
                             std::to_string(model.key.floor_id) + "_" + wap_label(wap) + "_" +
                             name + ".csv";
    std::ostringstream csv;
    write_radiomap_csv(grid, csv);
    write_text(dir / file, csv.str());
    const auto drawn = std::count_if(grid.cells.begin(), grid.cells.end(),
                                     [](const RadioMapCell& c) { return c.drawn; });
    manifest.push_back({{"kind", "grid"},
                        {"file", file},
                        {"nx", grid.nx},
                        {"ny", grid.ny},
                        {"drawn", drawn},
                        {"jitter", model.gp.jitter()}});
    out << file << ": " << grid.nx << " x " << grid.ny << " nodes, " << drawn << " drawn\n";
  }
  manifest.push_back({{"kind", "summary"}, {"grids", models.size()}, {"seconds", seconds_since(start)}});
  write_jsonl(dir / "manifest.jsonl", manifest);
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Wi-Fi fingerprint augmentation with multi-output Gaussian processes", "fpforge"};
  app.set_config("--config", "", "INI file; [augment], [eval], ... sections set subcommand flags");
  app.fallthrough();
  app.require_subcommand(1);

  StatsArgs stats;
  CLI::App* stats_cmd = app.add_subcommand("stats", "Per-block record counts and WAP variance");
  stats_cmd->add_option("--input", stats.input, "Fingerprint CSV")->required();
  stats_cmd->add_option("--output-dir", stats.output_dir, "Write stats.json and wap_variance.csv");

  AugmentArgs augment;
  CLI::App* augment_cmd = app.add_subcommand("augment", "Generate synthetic fingerprints");
  CLI::Option* augment_input = augment_cmd->add_option("--input", augment.input, "Fingerprint CSV");
  augment_cmd->add_option("--output-dir", augment.output_dir, "Output directory")->required();
  CLI::Option* seed_opt = augment_cmd->add_option("--seed", augment.seed, "RNG seed (required)");
  add_augment_flags(augment_cmd, augment.flags);
  add_filter_flags(augment_cmd, augment.filter);
  augment_cmd->add_option("--cell-size", augment.cell_size, "Coverage grid cell (m)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  CLI::Option* replay_opt =
      augment_cmd->add_option("--replay", augment.replay, "Rerun the config recorded in a manifest");

  EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "kNN localization report");
  eval_cmd->add_option("--input", eval.input, "Training fingerprint CSV")->required();
  eval_cmd->add_option("--test", eval.test, "Test fingerprint CSV");
  eval.split_opt = eval_cmd->add_option("--split", eval.split, "Stratified test fraction")
                       ->capture_default_str()
                       ->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_option("--seed", eval.seed, "Split and augmentation seed")->capture_default_str();
  eval_cmd->add_option("--k", eval.k, "Neighbors")->capture_default_str()->check(CLI::PositiveNumber);
  eval_cmd->add_option("--floor-height", eval.floor_height, "Meters per floor in the 3D error")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  add_filter_flags(eval_cmd, eval.filter);
  eval_cmd->add_flag("--augment", eval.augment, "Also evaluate original+augmented training data");
  add_augment_flags(eval_cmd, eval.flags);
  eval_cmd->add_option("--output-dir", eval.output_dir, "Write report.json and manifest.jsonl");

  RadiomapArgs radiomap;
  CLI::App* radiomap_cmd = app.add_subcommand("radiomap", "Predicted RSSI grid for one WAP");
  radiomap_cmd->add_option("--input", radiomap.input, "Fingerprint CSV");
  radiomap_cmd->add_option("--output-dir", radiomap.output_dir, "Output directory")->required();
  add_filter_flags(radiomap_cmd, radiomap.filter);
  radiomap_cmd->add_option("--wap", radiomap.wap, "WAP number, 1-based (500 or WAP500)")
      ->required();
  radiomap_cmd->add_option("--resolution", radiomap.resolution, "Grid spacing (m)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  radiomap_cmd->add_option("--seed", radiomap.seed, "Mixing and subsample seed")
      ->capture_default_str();
  radiomap_cmd->add_option("--kernel", radiomap.kernels, "One or more kernels (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  add_kernel_flags(radiomap_cmd, radiomap.model);
  radiomap_cmd->add_option("--model", radiomap.model.model, "icm or lmc")
      ->capture_default_str()
      ->check(CLI::IsMember({"icm", "lmc"}, CLI::ignore_case));
  radiomap.model.q_opt = radiomap_cmd->add_option("--q", radiomap.model.q, "LMC groups or T")
                             ->capture_default_str();
  radiomap_cmd->add_option("--rank", radiomap.model.rank, "Latent rank")->capture_default_str();
  radiomap_cmd->add_option("--noise-variance", radiomap.model.noise_variance, "GP noise (dBm^2)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  radiomap_cmd->add_option("--max-points", radiomap.model.max_points, "Training subsample cap")
      ->capture_default_str();
  radiomap_cmd->add_option("--min-detection", radiomap.model.min_detection, "Active-WAP threshold")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  radiomap_cmd->add_option("--model-file", radiomap.model_file, "Load a saved block model");
  radiomap_cmd->add_option("--save-model", radiomap.save_model, "Save the fitted block model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*stats_cmd) return cmd_stats(stats, out);
    if (*augment_cmd) {
      if (replay_opt->count() == 0 && seed_opt->count() == 0) {
        throw ArgumentError("augment needs --seed (or --replay)");
      }
      return cmd_augment(augment, augment_input->count() > 0, out);
    }
    if (*eval_cmd) return cmd_eval(eval, out);
    if (*radiomap_cmd) return cmd_radiomap(radiomap, out);
  } catch (const InternalError& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace fpforge::cli
