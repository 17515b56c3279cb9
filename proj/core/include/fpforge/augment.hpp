#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "fpforge/dataset.hpp"
#include "fpforge/kernels.hpp"
#include "fpforge/mogp.hpp"

namespace fpforge {

// Upper bound on synthetic records generated for a single block.
inline constexpr std::size_t kMaxSyntheticPerBlock = 10'000'000;

enum class SamplerKind { GaussianAroundRP, UniformInBoundingBox };

struct SamplerConfig {
  SamplerKind kind = SamplerKind::GaussianAroundRP;
  double spatial_std = 5.0;  // meters, GaussianAroundRP only
};

// Per-block model settings shared by every block of a run.
struct ModelSettings {
  Kernel kernel = make_kernel(KernelFamily::Matern52, 1.0, 10.0);
  std::size_t q = kDefaultQ;
  bool q_equals_outputs = false;  // Q = T, one group per active WAP
  std::size_t rank = kDefaultRank;
  double noise_variance = kDefaultNoiseVariance;
  std::size_t max_points = kDefaultMaxPoints;
  double min_detection = kDefaultMinDetection;
  MogpSolver solver = MogpSolver::Auto;
};

struct AugmentationConfig {
  double ratio = 1.0;
  SamplerConfig sampler;
  double noise_std = 1.0;  // dBm, added to posterior means
  double clip_min = kRssiFloor;
  double clip_max = kRssiCeiling;
  std::uint64_t seed = 0;
  ModelSettings model;
  // Optional per-block ratios; blocks not listed use `ratio`.
  std::map<BlockKey, double> ratio_overrides;

  double ratio_for(const BlockKey& key) const;
  void validate() const;
};

// Number of synthetic records for a block of `original_count` records:
// round(ratio * original_count), halves rounded away from zero.
std::size_t synthetic_count(double ratio, std::size_t original_count);

std::vector<Point> sample_rp_locations(std::span<const Point> block_points, std::size_t count,
                                       const SamplerConfig& sampler, std::mt19937_64& rng);
std::vector<Point> sample_rp_locations(std::span<const Point> block_points, std::size_t count,
                                       const SamplerConfig& sampler, std::uint64_t seed);

// Independent generator for one (run seed, block, purpose) triple.
std::mt19937_64 block_stream(std::uint64_t seed, const BlockKey& key, std::uint64_t purpose);

struct BlockAugmentation {
  BlockKey key;
  std::size_t original_count = 0;
  std::size_t active_wap_count = 0;
  std::size_t fit_points = 0;
  bool modeled = false;  // false when no WAP is active in the block
  MogpSolver solver = MogpSolver::Auto;
  double jitter = 0.0;
  int jitter_escalations = 0;
  double fit_seconds = 0.0;
  double generate_seconds = 0.0;
  std::vector<FingerprintRecord> records;  // provenance Synthetic
};

// Fits the block model and generates round(r * M) synthetic records at
// sampled locations. Active WAPs carry posterior mean plus N(0, noise_std^2),
// clipped; inactive WAPs sit at the floor.
BlockAugmentation augment_block(const FingerprintDataset& dataset, const Block& block,
                                const AugmentationConfig& config);

// Builds the model augment_block would use for this block.
BlockModel fit_block_for_config(const FingerprintDataset& dataset, const Block& block,
                                const ModelSettings& model, std::uint64_t seed);

struct AugmentationRun {
  FingerprintDataset dataset;  // originals followed by synthetic records
  std::vector<BlockAugmentation> blocks;  // summaries; `records` moved out
  std::size_t synthetic_total = 0;
};

// Augments every block (optionally only those in `only_blocks`). Blocks run
// in parallel; output order and content do not depend on thread count.
AugmentationRun run_augmentation(const FingerprintDataset& dataset,
                                 const AugmentationConfig& config,
                                 std::span<const BlockKey> only_blocks = {});

FingerprintDataset augment_dataset(const FingerprintDataset& dataset,
                                   const AugmentationConfig& config);

}  // namespace fpforge
