#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fpforge/dataset.hpp"
#include "fpforge/geometry.hpp"
#include "fpforge/mogp.hpp"

namespace fpforge {

inline constexpr std::size_t kDefaultK = 3;
inline constexpr double kDefaultFloorHeight = 4.0;  // meters

struct Localization {
  int building_id = 0;
  int floor_id = 0;
  double x = 0.0;
  double y = 0.0;
};

// kNN fingerprint matcher. Euclidean distance over every WAP; building and
// floor by majority vote (ties to the smaller id); position by
// inverse-distance weighting, or the exact match when a distance is zero.
class KnnLocalizer {
 public:
  explicit KnnLocalizer(const FingerprintDataset& train);

  Localization localize(std::span<const float> query_rssi, std::size_t k) const;
  std::size_t size() const { return count_; }

 private:
  std::size_t n_waps_ = 0;
  std::size_t count_ = 0;
  std::vector<float> rssi_;  // row-major, count_ x n_waps_
  std::vector<int> buildings_;
  std::vector<int> floors_;
  std::vector<Point> locations_;
};

Localization knn_localize(const FingerprintDataset& train, std::span<const float> query_rssi,
                          std::size_t k);

struct QueryError {
  double error_2d = 0.0;
  double error_3d = 0.0;
  bool building_hit = false;
  bool floor_hit = false;
};

struct LocalizationReport {
  std::size_t queries = 0;
  double building_hit_rate = 0.0;
  double floor_hit_rate = 0.0;
  double mean_2d_error = 0.0;
  double mean_3d_error = 0.0;
  std::vector<QueryError> per_query_errors;
  std::string config_digest;
};

LocalizationReport evaluate(const FingerprintDataset& train, const FingerprintDataset& test,
                            std::size_t k = kDefaultK,
                            double floor_height = kDefaultFloorHeight);

// Planar error plus a vertical term floor_height * |floor difference|.
double error_3d(double planar_error, int floor_predicted, int floor_true, double floor_height);

// Stratified holdout: from every block, round(test_fraction * size) records
// (seeded shuffle) go to the test set.
struct Split {
  FingerprintDataset train;
  FingerprintDataset test;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};
Split stratified_split(const FingerprintDataset& dataset, double test_fraction,
                       std::uint64_t seed);

// Occupied cells of a cell_size grid anchored at the block's bounding-box
// minimum. Empty blocks occupy nothing.
std::size_t coverage_metric(const FingerprintDataset& dataset, const Block& block,
                            double cell_size);
// Same count for explicit points and anchor.
std::size_t occupied_cells(std::span<const Point> points, const Point& anchor, double cell_size);

struct BlockCoverage {
  BlockKey key;
  std::size_t cells_before = 0;
  std::size_t cells_after = 0;
  double hull_area_before = 0.0;
  double hull_area_after = 0.0;
};

struct CoverageReport {
  double cell_size = 0.0;
  std::vector<BlockCoverage> blocks;
};

// Compares each block of `original` with the same block of `augmented`. Both
// grids share one anchor, the minimum of the bounding box of both point sets,
// so cells_after >= cells_before whenever augmented is a superset.
CoverageReport coverage_report(const FingerprintDataset& original,
                               const FingerprintDataset& augmented, double cell_size);

struct RadioMapCell {
  double x = 0.0;
  double y = 0.0;
  double mean_dbm = 0.0;
  double std_dbm = 0.0;
  bool drawn = true;  // false when the prediction is at or below the floor
};

struct RadioMapGrid {
  std::size_t nx = 0;
  std::size_t ny = 0;
  double resolution = 0.0;
  std::vector<RadioMapCell> cells;  // row-major in y, then x
};

// Grid nodes at min + i * resolution over the block extent,
// ceil(width / resolution) (at least one) nodes per axis.
RadioMapGrid radiomap_grid(const BlockModel& model, std::size_t wap_index, double resolution);
void write_radiomap_csv(const RadioMapGrid& grid, std::ostream& out);

struct WapVarianceShift {
  std::size_t wap_index = 0;
  double var_original = 0.0;
  double var_augmented = 0.0;
};

// Every WAP ranked by |Var_aug - Var_orig|, largest first (ties by index).
std::vector<WapVarianceShift> variance_shift_report(const FingerprintDataset& original,
                                                    const FingerprintDataset& augmented);

}  // namespace fpforge
