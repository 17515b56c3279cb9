#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "fpforge/dataset.hpp"
#include "surrogate_uji.hpp"

using namespace fpforge;

TEST(Surrogate, BlockCountsMatchTheTrainingFile) {
  const FingerprintDataset d = fpforge::testing::make_surrogate_uji();
  EXPECT_EQ(d.n_waps, 520u);
  EXPECT_EQ(d.size(), 19937u);
  std::map<int, std::size_t> per_building;
  for (const Block& b : partition_by_block(d)) {
    const int want = fpforge::testing::kUjiBlockCounts[static_cast<std::size_t>(b.key.building_id)]
                                             [static_cast<std::size_t>(b.key.floor_id)];
    EXPECT_EQ(static_cast<int>(b.size()), want) << to_string(b.key);
    per_building[b.key.building_id] += b.size();
  }
  EXPECT_EQ(per_building[0], 5249u);
  EXPECT_EQ(per_building[1], 5196u);
  EXPECT_EQ(per_building[2], 9492u);
  EXPECT_EQ(partition_by_block(d).size(), 13u);
}

TEST(Surrogate, DeterministicAndRealistic) {
  fpforge::testing::SurrogateOptions opt;
  opt.scale = 0.05;
  const FingerprintDataset a = fpforge::testing::make_surrogate_uji(opt);
  const FingerprintDataset b = fpforge::testing::make_surrogate_uji(opt);
  EXPECT_EQ(a.records, b.records);

  std::size_t heard = 0;
  std::size_t total = 0;
  for (const auto& r : a.records) {
    ASSERT_EQ(r.rssi.size(), 520u);
    for (float v : r.rssi) {
      EXPECT_GE(v, kRssiFloor);
      EXPECT_LE(v, 0.0f);
      heard += v > kRssiFloor;
      ++total;
    }
  }
  // Sparse like the real file: a few percent of entries are heard.
  const double fraction = static_cast<double>(heard) / static_cast<double>(total);
  EXPECT_GT(fraction, 0.01);
  EXPECT_LT(fraction, 0.10);
}

TEST(Surrogate, CsvRoundTrip) {
  fpforge::testing::SurrogateOptions opt;
  opt.scale = 0.02;
  const FingerprintDataset d = fpforge::testing::make_surrogate_uji(opt);
  std::stringstream s;
  write_fingerprint_csv(d, s, false);
  const FingerprintDataset back = read_fingerprint_csv(s, "roundtrip");
  EXPECT_EQ(back.n_waps, 520u);
  EXPECT_EQ(back.records, d.records);
}
