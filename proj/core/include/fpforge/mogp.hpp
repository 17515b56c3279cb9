#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fpforge/dataset.hpp"
#include "fpforge/gp.hpp"
#include "fpforge/kernels.hpp"

namespace fpforge {

inline constexpr std::size_t kDefaultQ = 2;
inline constexpr std::size_t kDefaultRank = 1;
inline constexpr double kDefaultDiagBoost = 1e-2;
inline constexpr std::size_t kDefaultMaxPoints = 500;
inline constexpr double kDefaultMinDetection = 0.05;
// Largest stacked (points x outputs) system solved by dense Cholesky.
inline constexpr std::size_t kMaxDenseJointSize = 6000;

// Linear model of coregionalization over T outputs:
//   cov(f_t(x), f_s(x')) = sum_q B_q[t, s] k_q(x, x'),
//   B_q = A_q A_q^T + diag(kappa).
// A single group (Q = 1) is the intrinsic coregionalization model.
struct CoregionalizationSpec {
  std::vector<Kernel> base_kernels;     // Q entries
  std::vector<Eigen::MatrixXd> mixing;  // Q entries, each T x R
  Eigen::VectorXd diag_boost;           // T entries, added to every B_q

  std::size_t q_count() const { return base_kernels.size(); }
  std::size_t outputs() const { return static_cast<std::size_t>(diag_boost.size()); }
  std::size_t latent_rank() const {
    return mixing.empty() ? 0 : static_cast<std::size_t>(mixing.front().cols());
  }

  Eigen::MatrixXd coregionalization(std::size_t q) const;
  // True when every base kernel is identical, so the model collapses to a
  // single coregionalization matrix sum_q B_q times one kernel.
  bool shares_base_kernel() const;

  void validate() const;
};

// Mixing entries ~ N(0, 1) / sqrt(Q R), kappa = 1e-2 for every output, all Q
// groups sharing `base_kernel`. Deterministic for a given seed.
CoregionalizationSpec default_mixing(std::size_t outputs, std::size_t q, std::size_t rank,
                                     std::uint64_t seed, const Kernel& base_kernel = KernelSpec{});

// Coregionalization with B_q = I for every output (no cross-output coupling).
CoregionalizationSpec independent_outputs(std::size_t outputs, const Kernel& base_kernel);

enum class MogpSolver {
  Auto,       // Kronecker when the base kernel is shared, dense otherwise
  Kronecker,  // eigendecompositions of B and K
  Dense,      // Cholesky of the full stacked covariance
};

struct MogpPosterior {
  Eigen::MatrixXd mean;      // queries x T
  Eigen::MatrixXd variance;  // queries x T
};

// Multi-output GP on isotopic data: every output observed at every point.
// The stacked covariance is sum_q B_q (x) K_q + (noise + jitter) I, with the
// stacked vector ordered output-major (index t * M + i).
class MogpModel {
 public:
  static MogpModel fit(std::vector<Point> points, Eigen::MatrixXd targets,
                       CoregionalizationSpec coreg, double noise_variance,
                       MogpSolver solver = MogpSolver::Auto, const JitterPolicy& policy = {},
                       const std::string& context = {});

  MogpPosterior predict(std::span<const Point> queries) const;
  Eigen::MatrixXd predict_mean(std::span<const Point> queries) const;

  std::size_t outputs() const { return static_cast<std::size_t>(targets_.cols()); }
  std::size_t points() const { return points_.size(); }
  const std::vector<Point>& train_points() const { return points_; }
  // Raw (un-centered) targets, points x outputs.
  const Eigen::MatrixXd& train_targets() const { return targets_; }
  const Eigen::VectorXd& output_means() const { return output_means_; }
  const CoregionalizationSpec& coreg() const { return coreg_; }
  double noise_variance() const { return noise_variance_; }
  double jitter() const { return jitter_; }
  int jitter_escalations() const { return escalations_; }
  MogpSolver solver() const { return solver_; }

 private:
  MogpModel() = default;
  void fit_kronecker(const JitterPolicy& policy, const std::string& context);
  void fit_dense(const JitterPolicy& policy, const std::string& context);
  double jitter_scale() const;

  std::vector<Point> points_;
  Eigen::MatrixXd targets_;
  Eigen::VectorXd output_means_;
  CoregionalizationSpec coreg_;
  double noise_variance_ = kDefaultNoiseVariance;
  double jitter_ = 0.0;
  int escalations_ = 0;
  MogpSolver solver_ = MogpSolver::Auto;

  // Solved weights: stacked (Sigma^-1 y) reshaped to points x outputs.
  Eigen::MatrixXd alpha_;

  // Kronecker state: B = U_b diag(l_b) U_b^T, K = U_k diag(l_k) U_k^T.
  Eigen::MatrixXd b_total_;
  Eigen::MatrixXd b_vectors_;
  Eigen::VectorXd b_values_;
  Eigen::MatrixXd k_vectors_;
  Eigen::MatrixXd inv_spectrum_;  // points x outputs, 1 / (l_k l_b + s)

  // Dense state.
  std::shared_ptr<const Eigen::LLT<Eigen::MatrixXd>> joint_llt_;
};

struct BlockModel {
  BlockKey key;
  std::vector<std::size_t> active_waps;    // T WAP indices, ascending
  std::vector<std::size_t> train_records;  // dataset indices used for fitting
  BoundingBox extent;                      // all block records, not just the subsample
  MogpModel gp;

  // Position of `wap_index` among the active outputs; throws ArgumentError
  // when the WAP is not modeled.
  std::size_t output_of(std::size_t wap_index) const;

  MogpPosterior predict(std::span<const Point> queries) const { return gp.predict(queries); }
};

// Fits one block. Blocks larger than max_points are reduced to a seeded
// uniform subsample of max_points records.
BlockModel fit_block_mogp(const FingerprintDataset& dataset, const Block& block,
                          std::vector<std::size_t> active_waps, CoregionalizationSpec coreg,
                          double noise_variance, std::size_t max_points, std::uint64_t seed,
                          MogpSolver solver = MogpSolver::Auto);

MogpPosterior predict_block(const BlockModel& model, std::span<const Point> queries);

}  // namespace fpforge
