#include "fpforge/gp.hpp"

#include <cmath>
#include <sstream>

#include "fpforge/errors.hpp"

namespace fpforge {

void JitterPolicy::validate() const {
  if (!(initial_factor > 0.0) || !(growth > 1.0) || !(cap_factor >= initial_factor) ||
      !std::isfinite(cap_factor)) {
    throw ArgumentError("jitter policy needs initial > 0, growth > 1 and cap >= initial");
  }
}

JitteredCholesky factorize_with_jitter(const Eigen::MatrixXd& matrix, double scale,
                                       const JitterPolicy& policy, const std::string& context) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw ArgumentError("jitter scale must be positive");
  }
  policy.validate();
  JitteredCholesky out;
  const double cap = policy.cap_factor * scale;
  double jitter = policy.initial_factor * scale;
  while (true) {
    Eigen::MatrixXd shifted = matrix;
    shifted.diagonal().array() += jitter;
    out.llt.compute(shifted);
    if (out.llt.info() == Eigen::Success) {
      out.jitter = jitter;
      return out;
    }
    jitter *= policy.growth;
    // Allow for rounding in the repeated multiplication.
    if (jitter > cap * (1.0 + 1e-9)) {
      std::ostringstream msg;
      msg << "Cholesky factorization failed";
      if (!context.empty()) msg << " for " << context;
      msg << " at jitter cap " << cap;
      throw NumericalError(msg.str(), cap);
    }
    ++out.escalations;
  }
}

SogpModel SogpModel::fit(std::vector<Point> inputs, Eigen::VectorXd targets, Kernel kernel,
                         double noise_variance, const JitterPolicy& policy,
                         const std::string& context) {
  if (inputs.empty()) {
    throw ArgumentError("fit_sogp: need at least one training point");
  }
  if (static_cast<Eigen::Index>(inputs.size()) != targets.size()) {
    throw ArgumentError("fit_sogp: inputs and targets differ in length");
  }
  if (!std::isfinite(noise_variance) || noise_variance < 0.0) {
    throw ArgumentError("fit_sogp: noise variance must be nonnegative");
  }
  if (!targets.allFinite()) {
    throw ArgumentError("fit_sogp: non-finite target");
  }
  for (const Point& p : inputs) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw ArgumentError("fit_sogp: non-finite input point");
    }
  }

  SogpModel model(std::move(kernel));
  model.inputs_ = std::move(inputs);
  model.targets_ = std::move(targets);
  model.noise_variance_ = noise_variance;
  model.target_mean_ = model.targets_.mean();

  Eigen::MatrixXd k = kernel_matrix(model.kernel_, model.inputs_);
  k.diagonal().array() += noise_variance;
  auto chol = factorize_with_jitter(k, model.kernel_.prior_variance(), policy, context);
  model.llt_ = std::move(chol.llt);
  model.jitter_ = chol.jitter;
  model.escalations_ = chol.escalations;

  const Eigen::VectorXd centered = model.targets_.array() - model.target_mean_;
  model.alpha_ = model.llt_.solve(centered);
  return model;
}

Eigen::VectorXd SogpModel::predict_mean(std::span<const Point> queries) const {
  if (queries.empty()) return {};
  const Eigen::MatrixXd cross = kernel_matrix(kernel_, queries, inputs_);
  Eigen::VectorXd mean = cross * alpha_;
  mean.array() += target_mean_;
  return mean;
}

Posterior SogpModel::predict(std::span<const Point> queries) const {
  Posterior out;
  if (queries.empty()) return out;
  const Eigen::MatrixXd cross = kernel_matrix(kernel_, inputs_, queries);  // M x Q
  out.mean = cross.transpose() * alpha_;
  out.mean.array() += target_mean_;

  const Eigen::MatrixXd v = llt_.matrixL().solve(cross);
  const double prior = kernel_(0.0);
  out.variance = (prior - v.colwise().squaredNorm().array()).max(0.0).matrix().transpose();
  return out;
}

SogpModel fit_sogp(std::vector<Point> inputs, Eigen::VectorXd targets, Kernel kernel,
                   double noise_variance) {
  return SogpModel::fit(std::move(inputs), std::move(targets), std::move(kernel),
                        noise_variance);
}

Posterior predict_sogp(const SogpModel& model, std::span<const Point> queries) {
  return model.predict(queries);
}

}  // namespace fpforge
