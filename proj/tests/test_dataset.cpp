#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>
#include <string>

#include "fpforge/dataset.hpp"
#include "fpforge/errors.hpp"
#include "scratch.hpp"

using namespace fpforge;

namespace {

std::string header(int n_waps, bool provenance = false) {
  std::string h;
  for (int w = 1; w <= n_waps; ++w) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "WAP%03d,", w);
    h += buf;
  }
  h += "LONGITUDE,LATITUDE,FLOOR,BUILDINGID,SPACEID,RELATIVEPOSITION,USERID,PHONEID,TIMESTAMP";
  if (provenance) h += ",PROVENANCE";
  return h + "\n";
}

FingerprintDataset parse(const std::string& text) {
  std::istringstream in(text);
  return read_fingerprint_csv(in, "test");
}

FingerprintDataset random_dataset(std::size_t n, std::size_t n_waps, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> level(-109, 0);
  std::uniform_int_distribution<int> coin(0, 2);
  std::uniform_int_distribution<int> building(0, 2);
  std::uniform_int_distribution<int> floor(0, 3);
  std::uniform_real_distribution<double> coord(-100.0, 100.0);
  FingerprintDataset d;
  d.n_waps = n_waps;
  for (std::size_t i = 0; i < n; ++i) {
    FingerprintRecord r;
    for (std::size_t w = 0; w < n_waps; ++w) {
      r.rssi.push_back(coin(rng) == 0 ? static_cast<float>(kRssiFloor)
                                      : static_cast<float>(level(rng)));
    }
    r.longitude = coord(rng);
    r.latitude = coord(rng);
    r.building_id = building(rng);
    r.floor_id = floor(rng);
    r.space_id = static_cast<std::int64_t>(i);
    r.user_id = 3;
    r.phone_id = 14;
    r.timestamp = 1371713733 + static_cast<std::int64_t>(i);
    r.provenance = i % 3 == 0 ? Provenance::Synthetic : Provenance::Original;
    d.records.push_back(r);
  }
  return d;
}

}  // namespace

TEST(DatasetCsv, ParsesRowsAndMapsSentinel) {
  const auto d = parse(header(3) +
                       "-45,100,-120,-7541.26,4864921.9,2,1,106,2,2,23,1371713733\n"
                       "0,-110,5,-7536.6,4864934.1,0,2,101,1,11,13,1369909710\n");
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.n_waps, 3u);
  EXPECT_FLOAT_EQ(d.records[0].rssi[0], -45.0f);
  EXPECT_FLOAT_EQ(d.records[0].rssi[1], -110.0f);
  EXPECT_FLOAT_EQ(d.records[0].rssi[2], -110.0f);  // clamped up to the floor
  EXPECT_FLOAT_EQ(d.records[1].rssi[0], 0.0f);
  EXPECT_FLOAT_EQ(d.records[1].rssi[2], 0.0f);  // clamped down to the ceiling
  EXPECT_DOUBLE_EQ(d.records[0].longitude, -7541.26);
  EXPECT_DOUBLE_EQ(d.records[0].latitude, 4864921.9);
  EXPECT_EQ(d.records[0].floor_id, 2);
  EXPECT_EQ(d.records[0].building_id, 1);
  EXPECT_EQ(d.records[0].space_id, 106);
  EXPECT_EQ(d.records[0].timestamp, 1371713733);
  EXPECT_EQ(d.records[1].provenance, Provenance::Original);
}

TEST(DatasetCsv, NormalizeRaw) {
  EXPECT_EQ(normalize_raw_rssi(100), kRssiFloor);
  EXPECT_EQ(normalize_raw_rssi(-104), -104.0);
  EXPECT_EQ(normalize_raw_rssi(-150), kRssiFloor);
  EXPECT_EQ(normalize_raw_rssi(50), kRssiCeiling);
}

TEST(DatasetCsv, HeaderOnlyGivesEmptyDataset) {
  const auto d = parse(header(520));
  EXPECT_TRUE(d.empty());
  EXPECT_EQ(d.n_waps, 520u);
}

TEST(DatasetCsv, BadValueReportsLine) {
  try {
    parse(header(2) + "-40,-50,1,2,0,0,1,1,1,1,1\n-40,abc,1,2,0,0,1,1,1,1,1\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("abc"), std::string::npos);
  }
}

TEST(DatasetCsv, WrongColumnCountReportsLine) {
  try {
    parse(header(2) + "-40,-50,1,2,0,0,1,1,1,1\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(DatasetCsv, SchemaErrors) {
  EXPECT_THROW(parse(""), SchemaError);
  EXPECT_THROW(parse("FOO,BAR\n"), SchemaError);
  EXPECT_THROW(parse("WAP001,LONGITUDE,LATITUDE\n"), SchemaError);
  std::string swapped = header(1);
  swapped.replace(swapped.find("LONGITUDE,LATITUDE"), 18, "LATITUDE,LONGITUDE");
  EXPECT_THROW(parse(swapped), SchemaError);
  EXPECT_THROW(parse(header(1).substr(0, header(1).size() - 1) + ",EXTRA\n"), SchemaError);
}

TEST(DatasetCsv, UnknownProvenanceIsParseError) {
  EXPECT_THROW(parse(header(1, true) + "-40,1,2,0,0,1,1,1,1,1,MAYBE\n"), ParseError);
}

TEST(DatasetCsv, NegativeIdsRejected) {
  EXPECT_THROW(parse(header(1) + "-40,1,2,-1,0,1,1,1,1,1\n"), ParseError);
}

TEST(DatasetCsv, RoundTripPreservesRecords) {
  const FingerprintDataset d = random_dataset(40, 7, 11);
  for (bool provenance : {false, true}) {
    std::stringstream buf;
    write_fingerprint_csv(d, buf, provenance);
    const FingerprintDataset back = read_fingerprint_csv(buf, "rt");
    ASSERT_EQ(back.size(), d.size());
    ASSERT_EQ(back.n_waps, d.n_waps);
    for (std::size_t i = 0; i < d.size(); ++i) {
      FingerprintRecord expected = d.records[i];
      if (!provenance) expected.provenance = Provenance::Original;
      EXPECT_EQ(back.records[i], expected) << "record " << i;
    }
  }
}

TEST(DatasetCsv, RoundTripKeepsFractionalValues) {
  FingerprintDataset d = random_dataset(3, 4, 5);
  d.records[0].rssi[1] = -87.34567f;
  d.records[1].rssi[3] = -109.999f;
  d.records[2].longitude = -7300.123456789012;
  std::stringstream buf;
  write_fingerprint_csv(d, buf, true);
  const auto back = read_fingerprint_csv(buf, "rt");
  EXPECT_EQ(back.records[0].rssi[1], -87.34567f);
  EXPECT_EQ(back.records[1].rssi[3], -109.999f);
  EXPECT_EQ(back.records[2].longitude, -7300.123456789012);
}

TEST(DatasetCsv, FloorWrittenAsSentinel) {
  FingerprintDataset d = random_dataset(1, 2, 1);
  d.records[0].rssi = {static_cast<float>(kRssiFloor), -60.0f};
  std::stringstream buf;
  write_fingerprint_csv(d, buf, false);
  std::string line;
  std::getline(buf, line);
  std::getline(buf, line);
  EXPECT_EQ(line.rfind("100,-60,", 0), 0u) << line;
}

TEST(DatasetCsv, MissingFileNamesPath) {
  try {
    load_ujiindoorloc("/nonexistent/dir/trainingData.csv");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/trainingData.csv"), std::string::npos);
  }
}

TEST(DatasetCsv, FileErrorsMentionPathAndLine) {
  const auto dir = fpforge::testing::scratch_dir("dataset_file_errors");
  const auto path = dir / "bad.csv";
  {
    std::ofstream out(path);
    out << header(1) << "-40,1,2,0,0,1,1,1,1,1\n-40,1,2,0,x,1,1,1,1,1\n";
  }
  try {
    load_ujiindoorloc(path);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find(path.string()), std::string::npos);
  }
}

TEST(DatasetPartition, BlocksPartitionTheRecords) {
  const FingerprintDataset d = random_dataset(300, 3, 7);
  const auto blocks = partition_by_block(d);
  std::set<std::size_t> seen;
  std::size_t total = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (b > 0) {
      EXPECT_LT(blocks[b - 1].key, blocks[b].key);
    }
    EXPECT_TRUE(std::is_sorted(blocks[b].record_indices.begin(), blocks[b].record_indices.end()));
    for (std::size_t i : blocks[b].record_indices) {
      EXPECT_EQ(d.records[i].building_id, blocks[b].key.building_id);
      EXPECT_EQ(d.records[i].floor_id, blocks[b].key.floor_id);
      seen.insert(i);
    }
    total += blocks[b].size();
  }
  EXPECT_EQ(total, d.size());
  EXPECT_EQ(seen.size(), d.size());
}

TEST(DatasetPartition, EmptyDatasetHasNoBlocks) {
  EXPECT_TRUE(partition_by_block(FingerprintDataset{}).empty());
}

TEST(DatasetStats, WapVarianceMatchesDirectFormula) {
  const FingerprintDataset d = random_dataset(57, 4, 3);
  for (std::size_t w = 0; w < 4; ++w) {
    long double mean = 0;
    for (const auto& r : d.records) mean += r.rssi[w];
    mean /= d.size();
    long double ss = 0;
    for (const auto& r : d.records) ss += (r.rssi[w] - mean) * (r.rssi[w] - mean);
    EXPECT_NEAR(wap_variance(d, w), static_cast<double>(ss / d.size()), 1e-9);
  }
  EXPECT_THROW(wap_variance(d, 4), ArgumentError);
}

TEST(DatasetStats, VarianceOfConstantColumnIsZero) {
  FingerprintDataset d = random_dataset(10, 2, 3);
  for (auto& r : d.records) r.rssi[1] = -70.0f;
  EXPECT_EQ(wap_variance(d, 1), 0.0);
}

TEST(DatasetStats, ActiveWapsUseDetectionFraction) {
  FingerprintDataset d;
  d.n_waps = 3;
  for (int i = 0; i < 10; ++i) {
    FingerprintRecord r;
    r.rssi = {-60.0f, i < 3 ? -80.0f : static_cast<float>(kRssiFloor),
              static_cast<float>(kRssiFloor)};
    d.records.push_back(r);
  }
  const Block block = partition_by_block(d).front();
  EXPECT_EQ(block_active_waps(d, block, 0.3), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(block_active_waps(d, block, 0.31), (std::vector<std::size_t>{0}));
  EXPECT_EQ(block_active_waps(d, block, 1.0), (std::vector<std::size_t>{0}));
  EXPECT_THROW(block_active_waps(d, block, 1.5), ArgumentError);
  EXPECT_THROW(block_active_waps(d, Block{}, 0.1), ArgumentError);
}
