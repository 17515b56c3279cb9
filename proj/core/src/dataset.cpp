#include "fpforge/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string_view>

#include "fpforge/errors.hpp"

namespace fpforge {

namespace {

constexpr std::array<std::string_view, 9> kMetadataColumns = {
    "LONGITUDE", "LATITUDE", "FLOOR", "BUILDINGID", "SPACEID",
    "RELATIVEPOSITION", "USERID", "PHONEID", "TIMESTAMP"};
constexpr std::string_view kProvenanceColumn = "PROVENANCE";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '"' ||
                        s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

void split_fields(std::string_view line, std::vector<std::string_view>& fields) {
  fields.clear();
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      return;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

std::string wap_column_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "WAP%03zu", index + 1);
  return buf;
}

struct Layout {
  std::size_t n_waps = 0;
  bool has_provenance = false;
  std::size_t columns() const {
    return n_waps + kMetadataColumns.size() + (has_provenance ? 1 : 0);
  }
};

Layout parse_header(std::string_view line) {
  std::vector<std::string_view> names;
  split_fields(line, names);
  Layout layout;
  while (layout.n_waps < names.size() && names[layout.n_waps] == wap_column_name(layout.n_waps)) {
    ++layout.n_waps;
  }
  if (layout.n_waps == 0) {
    throw SchemaError("header does not start with WAP001");
  }
  const std::size_t rest = names.size() - layout.n_waps;
  if (rest != kMetadataColumns.size() && rest != kMetadataColumns.size() + 1) {
    throw SchemaError("expected " + std::to_string(kMetadataColumns.size()) +
                      " metadata columns after WAP" + std::to_string(layout.n_waps) +
                      ", found " + std::to_string(rest));
  }
  for (std::size_t i = 0; i < kMetadataColumns.size(); ++i) {
    if (names[layout.n_waps + i] != kMetadataColumns[i]) {
      throw SchemaError("unexpected column '" + std::string(names[layout.n_waps + i]) +
                        "', expected " + std::string(kMetadataColumns[i]));
    }
  }
  if (rest == kMetadataColumns.size() + 1) {
    if (names.back() != kProvenanceColumn) {
      throw SchemaError("unexpected trailing column '" + std::string(names.back()) + "'");
    }
    layout.has_provenance = true;
  }
  return layout;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, std::string_view column) {
  T value{};
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || field.empty()) {
    throw ParseError(line, "non-numeric value '" + std::string(field) + "' in column " +
                               std::string(column));
  }
  return value;
}

template <typename T>
void append_number(std::string& out, T value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, ptr);
}

}  // namespace

std::string to_string(const BlockKey& key) {
  return "building " + std::to_string(key.building_id) + " floor " +
         std::to_string(key.floor_id);
}

double normalize_raw_rssi(double raw) {
  if (raw == kRawNotDetected) {
    return kRssiFloor;
  }
  return std::clamp(raw, kRssiFloor, kRssiCeiling);
}

FingerprintDataset read_fingerprint_csv(std::istream& in, std::string source_label) {
  std::string line;
  if (!std::getline(in, line)) {
    throw SchemaError("missing header row");
  }
  const Layout layout = parse_header(line);

  FingerprintDataset dataset;
  dataset.n_waps = layout.n_waps;
  dataset.source_label = std::move(source_label);

  std::vector<std::string_view> fields;
  fields.reserve(layout.columns());
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) {
      continue;
    }
    split_fields(line, fields);
    if (fields.size() != layout.columns()) {
      throw ParseError(line_number, "expected " + std::to_string(layout.columns()) +
                                        " columns, found " + std::to_string(fields.size()));
    }
    FingerprintRecord record;
    record.rssi.resize(layout.n_waps);
    for (std::size_t w = 0; w < layout.n_waps; ++w) {
      const double raw = parse_number<double>(fields[w], line_number, "WAP");
      record.rssi[w] = static_cast<float>(normalize_raw_rssi(raw));
    }
    const std::size_t m = layout.n_waps;
    record.longitude = parse_number<double>(fields[m + 0], line_number, kMetadataColumns[0]);
    record.latitude = parse_number<double>(fields[m + 1], line_number, kMetadataColumns[1]);
    record.floor_id = parse_number<int>(fields[m + 2], line_number, kMetadataColumns[2]);
    record.building_id = parse_number<int>(fields[m + 3], line_number, kMetadataColumns[3]);
    if (record.floor_id < 0 || record.building_id < 0) {
      throw ParseError(line_number, "negative floor or building id");
    }
    record.space_id = parse_number<std::int64_t>(fields[m + 4], line_number, kMetadataColumns[4]);
    record.relative_position =
        parse_number<std::int64_t>(fields[m + 5], line_number, kMetadataColumns[5]);
    record.user_id = parse_number<std::int64_t>(fields[m + 6], line_number, kMetadataColumns[6]);
    record.phone_id = parse_number<std::int64_t>(fields[m + 7], line_number, kMetadataColumns[7]);
    record.timestamp = parse_number<std::int64_t>(fields[m + 8], line_number, kMetadataColumns[8]);
    if (layout.has_provenance) {
      const std::string_view tag = fields[m + 9];
      if (tag == "ORIGINAL") {
        record.provenance = Provenance::Original;
      } else if (tag == "SYNTHETIC") {
        record.provenance = Provenance::Synthetic;
      } else {
        throw ParseError(line_number, "unknown provenance '" + std::string(tag) + "'");
      }
    }
    dataset.records.push_back(std::move(record));
  }
  return dataset;
}

FingerprintDataset load_ujiindoorloc(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  try {
    return read_fingerprint_csv(in, path.string());
  } catch (const ParseError& e) {
    throw ParseError(e.line(), e.detail() + " (" + path.string() + ")");
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void write_fingerprint_csv(const FingerprintDataset& dataset, std::ostream& out,
                           bool with_provenance) {
  std::string buffer;
  for (std::size_t w = 0; w < dataset.n_waps; ++w) {
    buffer += wap_column_name(w);
    buffer += ',';
  }
  for (std::size_t i = 0; i < kMetadataColumns.size(); ++i) {
    buffer += kMetadataColumns[i];
    buffer += (i + 1 < kMetadataColumns.size() || with_provenance) ? ',' : '\n';
  }
  if (with_provenance) {
    buffer += kProvenanceColumn;
    buffer += '\n';
  }
  out << buffer;

  for (const FingerprintRecord& r : dataset.records) {
    if (r.rssi.size() != dataset.n_waps) {
      throw ArgumentError("record has " + std::to_string(r.rssi.size()) + " RSSI values, expected " +
                          std::to_string(dataset.n_waps));
    }
    buffer.clear();
    for (float value : r.rssi) {
      if (value <= kRssiFloor) {
        append_number(buffer, kRawNotDetected);
      } else {
        append_number(buffer, value);
      }
      buffer += ',';
    }
    append_number(buffer, r.longitude);
    buffer += ',';
    append_number(buffer, r.latitude);
    buffer += ',';
    append_number(buffer, r.floor_id);
    buffer += ',';
    append_number(buffer, r.building_id);
    buffer += ',';
    append_number(buffer, r.space_id);
    buffer += ',';
    append_number(buffer, r.relative_position);
    buffer += ',';
    append_number(buffer, r.user_id);
    buffer += ',';
    append_number(buffer, r.phone_id);
    buffer += ',';
    append_number(buffer, r.timestamp);
    if (with_provenance) {
      buffer += r.provenance == Provenance::Original ? ",ORIGINAL" : ",SYNTHETIC";
    }
    buffer += '\n';
    out << buffer;
  }
  if (!out) {
    throw IoError("write failed");
  }
}

void save_fingerprint_csv(const FingerprintDataset& dataset, const std::filesystem::path& path,
                          bool with_provenance) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot create " + path.string());
  }
  write_fingerprint_csv(dataset, out, with_provenance);
}

std::vector<Block> partition_by_block(const FingerprintDataset& dataset) {
  std::map<BlockKey, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const auto& r = dataset.records[i];
    groups[BlockKey{r.building_id, r.floor_id}].push_back(i);
  }
  std::vector<Block> blocks;
  blocks.reserve(groups.size());
  for (auto& [key, indices] : groups) {
    blocks.push_back(Block{key, std::move(indices)});
  }
  return blocks;
}

double wap_variance(const FingerprintDataset& dataset, std::size_t wap_index,
                    std::span<const std::size_t> record_indices) {
  if (wap_index >= dataset.n_waps) {
    throw ArgumentError("WAP index " + std::to_string(wap_index) + " out of range [0, " +
                        std::to_string(dataset.n_waps) + ")");
  }
  if (record_indices.empty()) {
    return 0.0;
  }
  double mean = 0.0;
  for (std::size_t i : record_indices) {
    mean += dataset.records[i].rssi[wap_index];
  }
  mean /= static_cast<double>(record_indices.size());
  double sum_sq = 0.0;
  for (std::size_t i : record_indices) {
    const double d = dataset.records[i].rssi[wap_index] - mean;
    sum_sq += d * d;
  }
  return sum_sq / static_cast<double>(record_indices.size());
}

double wap_variance(const FingerprintDataset& dataset, std::size_t wap_index) {
  std::vector<std::size_t> all(dataset.records.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return wap_variance(dataset, wap_index, all);
}

std::vector<std::size_t> block_active_waps(const FingerprintDataset& dataset, const Block& block,
                                           double min_detection_fraction) {
  if (block.record_indices.empty()) {
    throw ArgumentError("block_active_waps: empty block");
  }
  if (!(min_detection_fraction >= 0.0 && min_detection_fraction <= 1.0)) {
    throw ArgumentError("min_detection_fraction must lie in [0, 1]");
  }
  std::vector<std::size_t> heard(dataset.n_waps, 0);
  for (std::size_t i : block.record_indices) {
    const auto& rssi = dataset.records[i].rssi;
    for (std::size_t w = 0; w < dataset.n_waps; ++w) {
      if (rssi[w] > kRssiFloor) ++heard[w];
    }
  }
  const double needed = min_detection_fraction * static_cast<double>(block.size());
  std::vector<std::size_t> active;
  for (std::size_t w = 0; w < dataset.n_waps; ++w) {
    if (static_cast<double>(heard[w]) >= needed) active.push_back(w);
  }
  return active;
}

std::vector<Point> block_locations(const FingerprintDataset& dataset, const Block& block) {
  std::vector<Point> points;
  points.reserve(block.size());
  for (std::size_t i : block.record_indices) {
    points.push_back(dataset.records[i].location());
  }
  return points;
}

}  // namespace fpforge
