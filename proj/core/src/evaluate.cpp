#include "fpforge/evaluate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <utility>

#include "fpforge/augment.hpp"
#include "fpforge/errors.hpp"
#include "fpforge/parallel.hpp"

namespace fpforge {

namespace {

using FloatMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic>;

int majority(const std::vector<int>& labels) {
  std::map<int, int> votes;
  for (int label : labels) ++votes[label];
  int best = 0;
  int best_votes = -1;
  // std::map iterates ascending, so strict > keeps the smaller id on ties.
  for (const auto& [label, count] : votes) {
    if (count > best_votes) {
      best = label;
      best_votes = count;
    }
  }
  return best;
}

void append_double(std::string& out, double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

std::vector<double> column_variances(const FingerprintDataset& dataset) {
  std::vector<double> mean(dataset.n_waps, 0.0);
  std::vector<double> var(dataset.n_waps, 0.0);
  if (dataset.empty()) return var;
  for (const auto& r : dataset.records) {
    for (std::size_t w = 0; w < dataset.n_waps; ++w) mean[w] += r.rssi[w];
  }
  const double n = static_cast<double>(dataset.size());
  for (double& m : mean) m /= n;
  for (const auto& r : dataset.records) {
    for (std::size_t w = 0; w < dataset.n_waps; ++w) {
      const double d = r.rssi[w] - mean[w];
      var[w] += d * d;
    }
  }
  for (double& v : var) v /= n;
  return var;
}

}  // namespace

KnnLocalizer::KnnLocalizer(const FingerprintDataset& train)
    : n_waps_(train.n_waps), count_(train.size()) {
  rssi_.reserve(count_ * n_waps_);
  buildings_.reserve(count_);
  floors_.reserve(count_);
  locations_.reserve(count_);
  for (const auto& r : train.records) {
    if (r.rssi.size() != n_waps_) {
      throw ArgumentError("training record RSSI length differs from n_waps");
    }
    rssi_.insert(rssi_.end(), r.rssi.begin(), r.rssi.end());
    buildings_.push_back(r.building_id);
    floors_.push_back(r.floor_id);
    locations_.push_back(r.location());
  }
}

Localization KnnLocalizer::localize(std::span<const float> query_rssi, std::size_t k) const {
  if (k < 1) {
    throw ArgumentError("k must be >= 1");
  }
  if (count_ == 0) {
    throw ArgumentError("kNN training set is empty");
  }
  if (k > count_) {
    throw ArgumentError("k = " + std::to_string(k) + " exceeds the " + std::to_string(count_) +
                        " training records");
  }
  if (query_rssi.size() != n_waps_) {
    throw ArgumentError("query has " + std::to_string(query_rssi.size()) + " RSSI values, expected " +
                        std::to_string(n_waps_));
  }

  const Eigen::Map<const FloatMatrix> train(rssi_.data(), static_cast<Eigen::Index>(n_waps_),
                                            static_cast<Eigen::Index>(count_));
  const Eigen::Map<const Eigen::VectorXf> query(query_rssi.data(),
                                                static_cast<Eigen::Index>(n_waps_));
  const Eigen::VectorXf squared = (train.colwise() - query).colwise().squaredNorm().transpose();

  std::vector<std::size_t> order(count_);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto closer = [&](std::size_t a, std::size_t b) {
    const float da = squared[static_cast<Eigen::Index>(a)];
    const float db = squared[static_cast<Eigen::Index>(b)];
    return da < db || (da == db && a < b);
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    closer);
  order.resize(k);

  std::vector<int> buildings;
  std::vector<int> floors;
  for (std::size_t i : order) {
    buildings.push_back(buildings_[i]);
    floors.push_back(floors_[i]);
  }
  Localization out;
  out.building_id = majority(buildings);
  out.floor_id = majority(floors);

  if (squared[static_cast<Eigen::Index>(order.front())] == 0.0f) {
    out.x = locations_[order.front()].x;
    out.y = locations_[order.front()].y;
    return out;
  }
  double wsum = 0.0;
  for (std::size_t i : order) {
    const double w = 1.0 / std::sqrt(static_cast<double>(squared[static_cast<Eigen::Index>(i)]));
    out.x += w * locations_[i].x;
    out.y += w * locations_[i].y;
    wsum += w;
  }
  out.x /= wsum;
  out.y /= wsum;
  return out;
}

Localization knn_localize(const FingerprintDataset& train, std::span<const float> query_rssi,
                          std::size_t k) {
  return KnnLocalizer(train).localize(query_rssi, k);
}

double error_3d(double planar_error, int floor_predicted, int floor_true, double floor_height) {
  const double vertical = floor_height * std::abs(floor_predicted - floor_true);
  return std::sqrt(planar_error * planar_error + vertical * vertical);
}

LocalizationReport evaluate(const FingerprintDataset& train, const FingerprintDataset& test,
                            std::size_t k, double floor_height) {
  if (test.empty()) {
    throw ArgumentError("evaluate: test set is empty");
  }
  if (!(std::isfinite(floor_height) && floor_height >= 0.0)) {
    throw ArgumentError("evaluate: floor height must be finite and >= 0");
  }
  if (train.n_waps != test.n_waps) {
    throw ArgumentError("evaluate: train and test disagree on the WAP count");
  }
  const KnnLocalizer localizer(train);
  if (k > localizer.size()) {
    throw ArgumentError("k = " + std::to_string(k) + " exceeds the " +
                        std::to_string(localizer.size()) + " training records");
  }

  LocalizationReport report;
  report.queries = test.size();
  report.per_query_errors.resize(test.size());
  parallel_for(test.size(), [&](std::size_t i) {
    const FingerprintRecord& truth = test.records[i];
    const Localization est = localizer.localize(truth.rssi, k);
    QueryError& e = report.per_query_errors[i];
    e.error_2d = std::hypot(est.x - truth.longitude, est.y - truth.latitude);
    e.error_3d = error_3d(e.error_2d, est.floor_id, truth.floor_id, floor_height);
    e.building_hit = est.building_id == truth.building_id;
    e.floor_hit = est.floor_id == truth.floor_id;
  });

  std::size_t building_hits = 0;
  std::size_t floor_hits = 0;
  double sum_2d = 0.0;
  double sum_3d = 0.0;
  for (const auto& e : report.per_query_errors) {
    building_hits += e.building_hit ? 1 : 0;
    floor_hits += e.floor_hit ? 1 : 0;
    sum_2d += e.error_2d;
    sum_3d += e.error_3d;
  }
  const double n = static_cast<double>(test.size());
  report.building_hit_rate = static_cast<double>(building_hits) / n;
  report.floor_hit_rate = static_cast<double>(floor_hits) / n;
  report.mean_2d_error = sum_2d / n;
  report.mean_3d_error = sum_3d / n;
  return report;
}

Split stratified_split(const FingerprintDataset& dataset, double test_fraction,
                       std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) {
    throw ArgumentError("test fraction must lie in [0, 1]");
  }
  Split split;
  for (const Block& block : partition_by_block(dataset)) {
    std::vector<std::size_t> indices = block.record_indices;
    std::mt19937_64 rng = block_stream(seed, block.key, 0);
    std::shuffle(indices.begin(), indices.end(), rng);
    const auto n_test =
        static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(indices.size())));
    split.test_indices.insert(split.test_indices.end(), indices.begin(),
                              indices.begin() + static_cast<std::ptrdiff_t>(n_test));
    split.train_indices.insert(split.train_indices.end(),
                               indices.begin() + static_cast<std::ptrdiff_t>(n_test), indices.end());
  }
  std::sort(split.test_indices.begin(), split.test_indices.end());
  std::sort(split.train_indices.begin(), split.train_indices.end());

  for (auto* part : {&split.train, &split.test}) {
    part->n_waps = dataset.n_waps;
  }
  split.train.source_label = dataset.source_label + " [train]";
  split.test.source_label = dataset.source_label + " [test]";
  for (std::size_t i : split.train_indices) split.train.records.push_back(dataset.records[i]);
  for (std::size_t i : split.test_indices) split.test.records.push_back(dataset.records[i]);
  return split;
}

std::size_t occupied_cells(std::span<const Point> points, const Point& anchor, double cell_size) {
  if (!(std::isfinite(cell_size) && cell_size > 0.0)) {
    throw ArgumentError("cell size must be positive");
  }
  std::set<std::pair<std::int64_t, std::int64_t>> cells;
  for (const Point& p : points) {
    cells.emplace(static_cast<std::int64_t>(std::floor((p.x - anchor.x) / cell_size)),
                  static_cast<std::int64_t>(std::floor((p.y - anchor.y) / cell_size)));
  }
  return cells.size();
}

std::size_t coverage_metric(const FingerprintDataset& dataset, const Block& block,
                            double cell_size) {
  if (!(std::isfinite(cell_size) && cell_size > 0.0)) {
    throw ArgumentError("cell size must be positive");
  }
  if (block.record_indices.empty()) {
    return 0;
  }
  const std::vector<Point> points = block_locations(dataset, block);
  return occupied_cells(points, bounding_box(points).min, cell_size);
}

CoverageReport coverage_report(const FingerprintDataset& original,
                               const FingerprintDataset& augmented, double cell_size) {
  if (!(std::isfinite(cell_size) && cell_size > 0.0)) {
    throw ArgumentError("cell size must be positive");
  }
  CoverageReport report;
  report.cell_size = cell_size;
  std::map<BlockKey, std::vector<Point>> before;
  for (const Block& b : partition_by_block(original)) {
    before[b.key] = block_locations(original, b);
  }
  for (const Block& b : partition_by_block(augmented)) {
    const std::vector<Point> after = block_locations(augmented, b);
    const std::vector<Point>& prior = before[b.key];
    std::vector<Point> both = after;
    both.insert(both.end(), prior.begin(), prior.end());
    const Point anchor = bounding_box(both).min;

    BlockCoverage c;
    c.key = b.key;
    c.cells_before = occupied_cells(prior, anchor, cell_size);
    c.cells_after = occupied_cells(after, anchor, cell_size);
    c.hull_area_before = convex_hull_area(prior);
    c.hull_area_after = convex_hull_area(after);
    report.blocks.push_back(c);
  }
  return report;
}

RadioMapGrid radiomap_grid(const BlockModel& model, std::size_t wap_index, double resolution) {
  const std::size_t output = model.output_of(wap_index);
  if (!(std::isfinite(resolution) && resolution > 0.0)) {
    throw ArgumentError("radio map resolution must be positive");
  }
  const BoundingBox& box = model.extent;
  const auto axis_nodes = [&](double extent) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(extent / resolution)));
  };
  RadioMapGrid grid;
  grid.resolution = resolution;
  grid.nx = axis_nodes(box.width());
  grid.ny = axis_nodes(box.height());
  if (static_cast<double>(grid.nx) * static_cast<double>(grid.ny) > 1e7) {
    throw ResourceError("radio map of " + std::to_string(grid.nx) + " x " +
                        std::to_string(grid.ny) + " cells is too large");
  }

  std::vector<Point> nodes;
  nodes.reserve(grid.nx * grid.ny);
  for (std::size_t iy = 0; iy < grid.ny; ++iy) {
    for (std::size_t ix = 0; ix < grid.nx; ++ix) {
      nodes.push_back({box.min.x + static_cast<double>(ix) * resolution,
                       box.min.y + static_cast<double>(iy) * resolution});
    }
  }

  constexpr std::size_t kChunk = 1024;
  grid.cells.reserve(nodes.size());
  for (std::size_t start = 0; start < nodes.size(); start += kChunk) {
    const std::size_t n = std::min(kChunk, nodes.size() - start);
    const std::span<const Point> chunk(nodes.data() + start, n);
    const MogpPosterior post = model.predict(chunk);
    for (std::size_t i = 0; i < n; ++i) {
      RadioMapCell cell;
      cell.x = chunk[i].x;
      cell.y = chunk[i].y;
      cell.mean_dbm = post.mean(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(output));
      cell.std_dbm = std::sqrt(
          post.variance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(output)));
      cell.drawn = cell.mean_dbm > kRssiFloor;
      grid.cells.push_back(cell);
    }
  }
  return grid;
}

void write_radiomap_csv(const RadioMapGrid& grid, std::ostream& out) {
  std::string line = "x,y,mean_dbm,std_dbm,drawn_flag\n";
  out << line;
  for (const auto& c : grid.cells) {
    line.clear();
    append_double(line, c.x);
    line += ',';
    append_double(line, c.y);
    line += ',';
    append_double(line, c.mean_dbm);
    line += ',';
    append_double(line, c.std_dbm);
    line += c.drawn ? ",1\n" : ",0\n";
    out << line;
  }
}

std::vector<WapVarianceShift> variance_shift_report(const FingerprintDataset& original,
                                                    const FingerprintDataset& augmented) {
  if (original.n_waps != augmented.n_waps) {
    throw ArgumentError("variance_shift_report: WAP counts differ (" +
                        std::to_string(original.n_waps) + " vs " +
                        std::to_string(augmented.n_waps) + ")");
  }
  const std::vector<double> before = column_variances(original);
  const std::vector<double> after = column_variances(augmented);
  std::vector<WapVarianceShift> report(original.n_waps);
  for (std::size_t w = 0; w < original.n_waps; ++w) {
    report[w] = {w, before[w], after[w]};
  }
  std::stable_sort(report.begin(), report.end(),
                   [](const WapVarianceShift& a, const WapVarianceShift& b) {
                     return std::abs(a.var_augmented - a.var_original) >
                            std::abs(b.var_augmented - b.var_original);
                   });
  return report;
}

}  // namespace fpforge
