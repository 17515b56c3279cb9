#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fpforge/geometry.hpp"
#include "fpforge/kernels.hpp"

namespace fpforge {

inline constexpr double kDefaultNoiseVariance = 1.0;  // dBm^2

// Jitter escalation: start at initial_factor * scale, multiply by `growth`
// after each failed Cholesky, give up beyond cap_factor * scale.
struct JitterPolicy {
  double initial_factor = 1e-8;
  double growth = 10.0;
  double cap_factor = 1e-2;

  void validate() const;
};

struct JitteredCholesky {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
  int escalations = 0;
};

// Cholesky of (matrix + jitter I). `scale` sets the jitter unit (typically
// the prior variance). `context` names the failing block in the error.
JitteredCholesky factorize_with_jitter(const Eigen::MatrixXd& matrix, double scale,
                                       const JitterPolicy& policy = {},
                                       const std::string& context = {});

struct Posterior {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

// Exact zero-mean GP regression on centered targets. The empirical target
// mean is removed before fitting and restored at prediction.
class SogpModel {
 public:
  static SogpModel fit(std::vector<Point> inputs, Eigen::VectorXd targets, Kernel kernel,
                       double noise_variance = kDefaultNoiseVariance,
                       const JitterPolicy& policy = {}, const std::string& context = {});

  Posterior predict(std::span<const Point> queries) const;
  Eigen::VectorXd predict_mean(std::span<const Point> queries) const;

  const std::vector<Point>& train_inputs() const { return inputs_; }
  const Eigen::VectorXd& train_targets() const { return targets_; }
  const Kernel& kernel() const { return kernel_; }
  double noise_variance() const { return noise_variance_; }
  double target_mean() const { return target_mean_; }
  double jitter() const { return jitter_; }
  int jitter_escalations() const { return escalations_; }
  // Lower-triangular factor of K + (noise + jitter) I.
  Eigen::MatrixXd cholesky_factor() const { return llt_.matrixL(); }
  const Eigen::VectorXd& alpha_weights() const { return alpha_; }

 private:
  SogpModel(Kernel kernel) : kernel_(std::move(kernel)) {}

  std::vector<Point> inputs_;
  Eigen::VectorXd targets_;
  Kernel kernel_;
  double noise_variance_ = kDefaultNoiseVariance;
  double target_mean_ = 0.0;
  double jitter_ = 0.0;
  int escalations_ = 0;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
};

SogpModel fit_sogp(std::vector<Point> inputs, Eigen::VectorXd targets, Kernel kernel,
                   double noise_variance = kDefaultNoiseVariance);
Posterior predict_sogp(const SogpModel& model, std::span<const Point> queries);

}  // namespace fpforge
