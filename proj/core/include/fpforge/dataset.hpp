#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fpforge/geometry.hpp"

namespace fpforge {

// Lowest representable signal level. Raw "not detected" entries map here.
inline constexpr double kRssiFloor = -110.0;
inline constexpr double kRssiCeiling = 0.0;
// Value used in UJIIndoorLoc files for an access point that was not heard.
inline constexpr int kRawNotDetected = 100;
inline constexpr std::size_t kUjiWapCount = 520;

enum class Provenance { Original, Synthetic };

struct FingerprintRecord {
  // Signal strength per access point, dBm, always within [kRssiFloor, 0].
  std::vector<float> rssi;
  double longitude = 0.0;
  double latitude = 0.0;
  int floor_id = 0;
  int building_id = 0;
  // Pass-through metadata.
  std::int64_t space_id = 0;
  std::int64_t relative_position = 0;
  std::int64_t user_id = 0;
  std::int64_t phone_id = 0;
  std::int64_t timestamp = 0;
  Provenance provenance = Provenance::Original;

  Point location() const { return {longitude, latitude}; }

  friend bool operator==(const FingerprintRecord&, const FingerprintRecord&) = default;
};

struct FingerprintDataset {
  std::vector<FingerprintRecord> records;
  std::size_t n_waps = kUjiWapCount;
  std::string source_label;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

struct BlockKey {
  int building_id = 0;
  int floor_id = 0;

  friend auto operator<=>(const BlockKey&, const BlockKey&) = default;
};

std::string to_string(const BlockKey& key);

struct Block {
  BlockKey key;
  std::vector<std::size_t> record_indices;

  std::size_t size() const { return record_indices.size(); }
};

// Reads a fingerprint CSV in the UJIIndoorLoc layout: WAP001..WAPnnn columns
// followed by LONGITUDE, LATITUDE, FLOOR, BUILDINGID, SPACEID,
// RELATIVEPOSITION, USERID, PHONEID, TIMESTAMP and an optional PROVENANCE
// column. Throws SchemaError for an unknown header and ParseError (with the
// line number) for malformed rows.
FingerprintDataset load_ujiindoorloc(const std::filesystem::path& path);
FingerprintDataset read_fingerprint_csv(std::istream& in, std::string source_label);

// Writes the same layout. Floor values are emitted as the raw not-detected
// sentinel so the output stays compatible with UJIIndoorLoc tooling.
void write_fingerprint_csv(const FingerprintDataset& dataset, std::ostream& out,
                           bool with_provenance);
void save_fingerprint_csv(const FingerprintDataset& dataset,
                          const std::filesystem::path& path, bool with_provenance);

// Maps a raw file value onto the dBm range.
double normalize_raw_rssi(double raw);

// Blocks ordered by (building, floor); record indices ascending.
std::vector<Block> partition_by_block(const FingerprintDataset& dataset);

// Population variance of one WAP column, over all records or over a subset.
double wap_variance(const FingerprintDataset& dataset, std::size_t wap_index);
double wap_variance(const FingerprintDataset& dataset, std::size_t wap_index,
                    std::span<const std::size_t> record_indices);

// WAPs heard (above the floor) in at least `min_detection_fraction` of the
// block's records, ascending.
std::vector<std::size_t> block_active_waps(const FingerprintDataset& dataset,
                                           const Block& block,
                                           double min_detection_fraction);

std::vector<Point> block_locations(const FingerprintDataset& dataset, const Block& block);

}  // namespace fpforge
