#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "fpforge/augment.hpp"
#include "fpforge/evaluate.hpp"
#include "fpforge/kernels.hpp"
#include "fpforge/mogp.hpp"

namespace fpforge {

// JSON forms. Kernels are {"family", "variance", "length_scale", "alpha"?};
// combinations are {"terms": [{"weight", ...kernel}]}.
void to_json(nlohmann::json& j, const KernelSpec& spec);
void from_json(const nlohmann::json& j, KernelSpec& spec);
void to_json(nlohmann::json& j, const Kernel& kernel);
Kernel kernel_from_json(const nlohmann::json& j);

nlohmann::json coreg_to_json(const CoregionalizationSpec& coreg);
CoregionalizationSpec coreg_from_json(const nlohmann::json& j);

nlohmann::json config_to_json(const AugmentationConfig& config);
AugmentationConfig config_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const LocalizationReport& report, bool with_per_query = false);

std::string_view solver_name(MogpSolver solver);
MogpSolver parse_solver(std::string_view name);
std::string_view sampler_name(SamplerKind kind);
SamplerKind parse_sampler(std::string_view name);

// 16 hex digits of FNV-1a over the canonical JSON dump.
std::string digest(const nlohmann::json& j);
std::string config_digest(const AugmentationConfig& config);

// Fitted block models persist as JSON holding everything the fit consumed
// (points, raw targets, coregionalization, noise, jitter policy inputs).
// Loading refits, which is deterministic, so predictions round-trip exactly.
nlohmann::json block_model_to_json(const BlockModel& model);
BlockModel block_model_from_json(const nlohmann::json& j);
void save_block_model(const BlockModel& model, const std::filesystem::path& path);
BlockModel load_block_model(const std::filesystem::path& path);

}  // namespace fpforge
