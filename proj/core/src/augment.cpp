#include "fpforge/augment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iterator>
#include <optional>

#include "fpforge/errors.hpp"
#include "fpforge/parallel.hpp"
#include "fpforge/serialize.hpp"

namespace fpforge {

namespace {

// Stream tags for block_stream.
constexpr std::uint64_t kMixingStream = 1;
constexpr std::uint64_t kSubsampleStream = 2;
constexpr std::uint64_t kLocationStream = 3;
constexpr std::uint64_t kNoiseStream = 4;

constexpr std::size_t kPredictChunk = 2048;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool finite_nonnegative(double v) { return std::isfinite(v) && v >= 0.0; }

template <typename E>
[[noreturn]] void rethrow_with_block(const E& e, const BlockKey& key) {
  throw E(to_string(key) + ": " + e.what());
}

}  // namespace

double AugmentationConfig::ratio_for(const BlockKey& key) const {
  const auto it = ratio_overrides.find(key);
  return it == ratio_overrides.end() ? ratio : it->second;
}

void AugmentationConfig::validate() const {
  if (!finite_nonnegative(ratio)) {
    throw ArgumentError("augmentation ratio must be finite and >= 0");
  }
  for (const auto& [key, r] : ratio_overrides) {
    if (!finite_nonnegative(r)) {
      throw ArgumentError("ratio override for " + to_string(key) + " must be finite and >= 0");
    }
  }
  if (sampler.kind == SamplerKind::GaussianAroundRP &&
      !(std::isfinite(sampler.spatial_std) && sampler.spatial_std > 0.0)) {
    throw ArgumentError("Gaussian sampler needs spatial_std > 0");
  }
  if (!finite_nonnegative(noise_std)) {
    throw ArgumentError("noise_std must be finite and >= 0");
  }
  if (!(clip_min <= clip_max) || clip_min < kRssiFloor || clip_max > kRssiCeiling) {
    throw ArgumentError("clip range must lie within [-110, 0]");
  }
  if (model.q < 1 || model.rank < 1) {
    throw ArgumentError("Q and latent rank must be >= 1");
  }
  if (!finite_nonnegative(model.noise_variance)) {
    throw ArgumentError("noise_variance must be finite and >= 0");
  }
  if (model.max_points < 1) {
    throw ArgumentError("max_points must be >= 1");
  }
  if (!(model.min_detection >= 0.0 && model.min_detection <= 1.0)) {
    throw ArgumentError("min_detection must lie in [0, 1]");
  }
}

std::size_t synthetic_count(double ratio, std::size_t original_count) {
  if (!finite_nonnegative(ratio)) {
    throw ArgumentError("augmentation ratio must be finite and >= 0");
  }
  const double wanted = ratio * static_cast<double>(original_count);
  if (wanted > static_cast<double>(kMaxSyntheticPerBlock)) {
    throw ResourceError("ratio " + std::to_string(ratio) + " asks for " +
                        std::to_string(wanted) + " synthetic records in one block (limit " +
                        std::to_string(kMaxSyntheticPerBlock) + ")");
  }
  // llround rounds halves away from zero.
  return static_cast<std::size_t>(std::llround(wanted));
}

std::mt19937_64 block_stream(std::uint64_t seed, const BlockKey& key, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(key.building_id),
                    static_cast<std::uint32_t>(key.floor_id),
                    static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

std::vector<Point> sample_rp_locations(std::span<const Point> block_points, std::size_t count,
                                       const SamplerConfig& sampler, std::mt19937_64& rng) {
  if (block_points.empty()) {
    throw ArgumentError("sample_rp_locations: empty block");
  }
  std::vector<Point> out;
  out.reserve(count);
  if (sampler.kind == SamplerKind::GaussianAroundRP) {
    if (!(sampler.spatial_std > 0.0) || !std::isfinite(sampler.spatial_std)) {
      throw ArgumentError("Gaussian sampler needs spatial_std > 0");
    }
    std::uniform_int_distribution<std::size_t> pick(0, block_points.size() - 1);
    std::normal_distribution<double> offset(0.0, sampler.spatial_std);
    for (std::size_t i = 0; i < count; ++i) {
      const Point& base = block_points[pick(rng)];
      const double dx = offset(rng);
      const double dy = offset(rng);
      out.push_back({base.x + dx, base.y + dy});
    }
  } else {
    const BoundingBox box = bounding_box(block_points);
    std::uniform_real_distribution<double> ux(box.min.x, box.max.x);
    std::uniform_real_distribution<double> uy(box.min.y, box.max.y);
    for (std::size_t i = 0; i < count; ++i) {
      const double x = ux(rng);
      const double y = uy(rng);
      out.push_back({x, y});
    }
  }
  return out;
}

std::vector<Point> sample_rp_locations(std::span<const Point> block_points, std::size_t count,
                                       const SamplerConfig& sampler, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_rp_locations(block_points, count, sampler, rng);
}

BlockModel fit_block_for_config(const FingerprintDataset& dataset, const Block& block,
                                const ModelSettings& model, std::uint64_t seed) {
  std::vector<std::size_t> active = block_active_waps(dataset, block, model.min_detection);
  if (active.empty()) {
    throw ArgumentError("no WAP reaches the detection threshold in " + to_string(block.key));
  }
  const std::size_t outputs = active.size();
  const std::size_t q = model.q_equals_outputs ? outputs : model.q;
  const std::uint64_t mixing_seed = block_stream(seed, block.key, kMixingStream)();
  const std::uint64_t subsample_seed = block_stream(seed, block.key, kSubsampleStream)();
  CoregionalizationSpec coreg = default_mixing(outputs, q, model.rank, mixing_seed, model.kernel);
  return fit_block_mogp(dataset, block, std::move(active), std::move(coreg),
                        model.noise_variance, model.max_points, subsample_seed, model.solver);
}

BlockAugmentation augment_block(const FingerprintDataset& dataset, const Block& block,
                                const AugmentationConfig& config) {
  config.validate();
  if (block.record_indices.empty()) {
    throw ArgumentError("augment_block: empty block");
  }
  BlockAugmentation out;
  out.key = block.key;
  out.original_count = block.size();
  const std::size_t count = synthetic_count(config.ratio_for(block.key), block.size());
  if (count == 0) {
    return out;
  }

  const auto fit_start = Clock::now();
  std::optional<BlockModel> model;
  const std::vector<std::size_t> active =
      block_active_waps(dataset, block, config.model.min_detection);
  out.active_wap_count = active.size();
  if (!active.empty()) {
    model = fit_block_for_config(dataset, block, config.model, config.seed);
    out.modeled = true;
    out.solver = model->gp.solver();
    out.jitter = model->gp.jitter();
    out.jitter_escalations = model->gp.jitter_escalations();
    out.fit_points = model->gp.points();
  }
  out.fit_seconds = seconds_since(fit_start);

  const auto gen_start = Clock::now();
  const std::vector<Point> rps = block_locations(dataset, block);
  std::mt19937_64 location_rng = block_stream(config.seed, block.key, kLocationStream);
  const std::vector<Point> locations =
      sample_rp_locations(rps, count, config.sampler, location_rng);

  std::mt19937_64 noise_rng = block_stream(config.seed, block.key, kNoiseStream);
  std::normal_distribution<double> noise(0.0, 1.0);

  out.records.reserve(count);
  for (std::size_t start = 0; start < count; start += kPredictChunk) {
    const std::size_t n = std::min(kPredictChunk, count - start);
    const std::span<const Point> chunk(locations.data() + start, n);
    Eigen::MatrixXd means;
    if (model) means = model->gp.predict_mean(chunk);
    for (std::size_t i = 0; i < n; ++i) {
      FingerprintRecord r;
      r.rssi.assign(dataset.n_waps, static_cast<float>(kRssiFloor));
      for (std::size_t t = 0; t < active.size(); ++t) {
        double v = means(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t));
        if (config.noise_std > 0.0) v += config.noise_std * noise(noise_rng);
        r.rssi[active[t]] = static_cast<float>(std::clamp(v, config.clip_min, config.clip_max));
      }
      r.longitude = chunk[i].x;
      r.latitude = chunk[i].y;
      r.building_id = block.key.building_id;
      r.floor_id = block.key.floor_id;
      r.provenance = Provenance::Synthetic;
      out.records.push_back(std::move(r));
    }
  }
  out.generate_seconds = seconds_since(gen_start);
  return out;
}

AugmentationRun run_augmentation(const FingerprintDataset& dataset,
                                 const AugmentationConfig& config,
                                 std::span<const BlockKey> only_blocks) {
  config.validate();
  std::vector<Block> blocks = partition_by_block(dataset);
  if (!only_blocks.empty()) {
    std::vector<Block> selected;
    for (const BlockKey& key : only_blocks) {
      const auto it = std::find_if(blocks.begin(), blocks.end(),
                                   [&](const Block& b) { return b.key == key; });
      if (it == blocks.end()) {
        throw ArgumentError("no records for " + to_string(key));
      }
      selected.push_back(*it);
    }
    std::sort(selected.begin(), selected.end(),
              [](const Block& a, const Block& b) { return a.key < b.key; });
    blocks = std::move(selected);
  }

  std::vector<BlockAugmentation> results(blocks.size());
  parallel_for(blocks.size(), [&](std::size_t i) {
    const BlockKey& key = blocks[i].key;
    try {
      results[i] = augment_block(dataset, blocks[i], config);
    } catch (const NumericalError& e) {
      throw NumericalError(to_string(key) + ": " + e.what(), e.jitter_reached());
    } catch (const ResourceError& e) {
      rethrow_with_block(e, key);
    } catch (const ArgumentError& e) {
      rethrow_with_block(e, key);
    } catch (const Error& e) {
      rethrow_with_block(e, key);
    }
  });

  AugmentationRun run;
  run.dataset.n_waps = dataset.n_waps;
  run.dataset.source_label = dataset.source_label + " +mogp[" + config_digest(config) + "]";
  std::size_t total = dataset.size();
  for (const auto& r : results) total += r.records.size();
  run.dataset.records.reserve(total);
  run.dataset.records.insert(run.dataset.records.end(), dataset.records.begin(),
                             dataset.records.end());
  for (auto& r : results) {
    run.synthetic_total += r.records.size();
    std::move(r.records.begin(), r.records.end(), std::back_inserter(run.dataset.records));
    r.records.clear();
    r.records.shrink_to_fit();
  }
  run.blocks = std::move(results);
  return run;
}

FingerprintDataset augment_dataset(const FingerprintDataset& dataset,
                                   const AugmentationConfig& config) {
  return run_augmentation(dataset, config).dataset;
}

}  // namespace fpforge
