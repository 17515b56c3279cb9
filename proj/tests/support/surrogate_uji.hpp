#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "fpforge/dataset.hpp"

namespace fpforge::testing {

// Records per (building, floor) in the UJIIndoorLoc training file; -1 marks
// floors that do not exist.
inline constexpr std::array<std::array<int, 5>, 3> kUjiBlockCounts{{
    {1059, 1356, 1443, 1391, -1},
    {1368, 1484, 1396, 948, -1},
    {1942, 2162, 1577, 2709, 1102},
}};

struct SurrogateOptions {
  std::uint64_t seed = 2017;
  // Per-block record counts are round(scale * count), at least one.
  double scale = 1.0;
  std::vector<int> buildings{0, 1, 2};
};

// Synthetic stand-in for the UJIIndoorLoc training set: same schema, 520
// WAPs, the block counts above, corridor-shaped reference points with gaps,
// repeated captures per point, and log-distance RSSI with floor attenuation,
// correlated shadowing, device offsets and detection dropouts.
FingerprintDataset make_surrogate_uji(const SurrogateOptions& options = {});

}  // namespace fpforge::testing
