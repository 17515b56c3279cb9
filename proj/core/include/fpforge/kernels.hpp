#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "fpforge/geometry.hpp"

namespace fpforge {

enum class KernelFamily { RBF, RQ, Matern32, Matern52, OU };

std::string_view family_name(KernelFamily family);
// Accepts the canonical names case-insensitively ("rbf", "rq", "matern32",
// "matern52", "ou").
KernelFamily parse_family(std::string_view name);

// One stationary covariance over planar distance d:
//   RBF       s2 * exp(-d^2 / (2 l^2))
//   RQ        s2 * (1 + d^2 / (2 alpha l^2))^-alpha
//   Matern32  s2 * (1 + sqrt3 d/l) exp(-sqrt3 d/l)
//   Matern52  s2 * (1 + sqrt5 d/l + 5 d^2 / (3 l^2)) exp(-sqrt5 d/l)
//   OU        s2 * exp(-d/l)
struct KernelSpec {
  KernelFamily family = KernelFamily::RBF;
  double variance = 1.0;      // dBm^2
  double length_scale = 1.0;  // meters
  std::optional<double> alpha;  // RQ only

  // Throws ArgumentError on a nonpositive hyperparameter or an alpha that is
  // present/absent for the wrong family.
  void validate() const;

  double operator()(double distance) const;
  double operator()(const Point& a, const Point& b) const {
    return (*this)(fpforge::distance(a, b));
  }

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

KernelSpec make_kernel(KernelFamily family, double variance, double length_scale,
                       std::optional<double> alpha = std::nullopt);

struct WeightedKernel {
  double weight = 1.0;
  KernelSpec kernel;

  friend bool operator==(const WeightedKernel&, const WeightedKernel&) = default;
};

// Nonnegative linear combination of kernels. A single KernelSpec converts to
// a one-term combination with weight 1.
class Kernel {
 public:
  Kernel(KernelSpec spec);  // NOLINT(google-explicit-constructor)
  explicit Kernel(std::vector<WeightedKernel> terms);

  double operator()(double distance) const;
  double operator()(const Point& a, const Point& b) const {
    return (*this)(fpforge::distance(a, b));
  }

  // Value at zero distance.
  double prior_variance() const;

  const std::vector<WeightedKernel>& terms() const { return terms_; }
  std::string describe() const;

  friend bool operator==(const Kernel&, const Kernel&) = default;

 private:
  std::vector<WeightedKernel> terms_;
};

double eval_kernel(const KernelSpec& spec, const Point& a, const Point& b);

Eigen::MatrixXd kernel_matrix(const Kernel& kernel, std::span<const Point> rows,
                              std::span<const Point> cols);
// Symmetric Gram matrix of one point set.
Eigen::MatrixXd kernel_matrix(const Kernel& kernel, std::span<const Point> points);

// Closed-form Matérn with nu = half_integer_order + 1/2, for orders 0, 1, 2.
// Order 0 is exp(-d/l), the Ornstein-Uhlenbeck covariance.
double matern_closed_form(int half_integer_order, double variance, double length_scale,
                          double distance);

struct RqLimit {
  double rq = 0.0;
  double rbf = 0.0;
  double gap = 0.0;  // |rq - rbf|
};

// Evaluates RQ and RBF at the same (variance, length scale, distance) to
// expose the large-alpha limit.
RqLimit rq_limit_check(double length_scale, double distance, double alpha,
                       double variance = 1.0);

}  // namespace fpforge
