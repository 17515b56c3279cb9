#include "fpforge/kernels.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "fpforge/errors.hpp"

namespace fpforge {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kSqrt5 = 2.23606797749979;

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

std::string_view family_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::RBF: return "RBF";
    case KernelFamily::RQ: return "RQ";
    case KernelFamily::Matern32: return "Matern32";
    case KernelFamily::Matern52: return "Matern52";
    case KernelFamily::OU: return "OU";
  }
  return "?";
}

KernelFamily parse_family(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "rbf") return KernelFamily::RBF;
  if (lower == "rq" || lower == "ratquad") return KernelFamily::RQ;
  if (lower == "matern32") return KernelFamily::Matern32;
  if (lower == "matern52") return KernelFamily::Matern52;
  if (lower == "ou") return KernelFamily::OU;
  throw ArgumentError("unknown kernel family '" + std::string(name) + "'");
}

void KernelSpec::validate() const {
  if (!positive_finite(variance)) {
    throw ArgumentError("kernel variance must be positive");
  }
  if (!positive_finite(length_scale)) {
    throw ArgumentError("kernel length_scale must be positive");
  }
  if (family == KernelFamily::RQ) {
    if (!alpha || !positive_finite(*alpha)) {
      throw ArgumentError("RQ kernel needs a positive alpha");
    }
  } else if (alpha) {
    throw ArgumentError("alpha is only meaningful for the RQ kernel");
  }
}

double KernelSpec::operator()(double d) const {
  const double r = d / length_scale;
  switch (family) {
    case KernelFamily::RBF:
      return variance * std::exp(-0.5 * r * r);
    case KernelFamily::RQ:
      return variance * std::pow(1.0 + r * r / (2.0 * *alpha), -*alpha);
    case KernelFamily::Matern32:
      return matern_closed_form(1, variance, length_scale, d);
    case KernelFamily::Matern52:
      return matern_closed_form(2, variance, length_scale, d);
    case KernelFamily::OU:
      return variance * std::exp(-r);
  }
  return 0.0;
}

KernelSpec make_kernel(KernelFamily family, double variance, double length_scale,
                       std::optional<double> alpha) {
  KernelSpec spec{family, variance, length_scale, alpha};
  spec.validate();
  return spec;
}

double eval_kernel(const KernelSpec& spec, const Point& a, const Point& b) {
  spec.validate();
  return spec(a, b);
}

double matern_closed_form(int half_integer_order, double variance, double length_scale,
                          double d) {
  switch (half_integer_order) {
    case 0:
      return variance * std::exp(-d / length_scale);
    case 1: {
      const double s = kSqrt3 * d / length_scale;
      return variance * (1.0 + s) * std::exp(-s);
    }
    case 2: {
      const double s = kSqrt5 * d / length_scale;
      return variance * (1.0 + s + s * s / 3.0) * std::exp(-s);
    }
    default:
      throw ArgumentError("closed-form Matern only for nu = 1/2, 3/2, 5/2");
  }
}

RqLimit rq_limit_check(double length_scale, double distance, double alpha, double variance) {
  const KernelSpec rq = make_kernel(KernelFamily::RQ, variance, length_scale, alpha);
  const KernelSpec rbf = make_kernel(KernelFamily::RBF, variance, length_scale);
  RqLimit out;
  out.rq = rq(distance);
  out.rbf = rbf(distance);
  out.gap = std::abs(out.rq - out.rbf);
  return out;
}

Kernel::Kernel(KernelSpec spec) : terms_{WeightedKernel{1.0, spec}} { spec.validate(); }

Kernel::Kernel(std::vector<WeightedKernel> terms) : terms_(std::move(terms)) {
  if (terms_.empty()) {
    throw ArgumentError("kernel combination needs at least one term");
  }
  bool any_positive = false;
  for (const auto& t : terms_) {
    if (!std::isfinite(t.weight) || t.weight < 0.0) {
      throw ArgumentError("kernel weights must be nonnegative");
    }
    any_positive = any_positive || t.weight > 0.0;
    t.kernel.validate();
  }
  if (!any_positive) {
    throw ArgumentError("kernel weights must not all be zero");
  }
}

double Kernel::operator()(double d) const {
  if (terms_.size() == 1) {
    return terms_.front().weight * terms_.front().kernel(d);
  }
  double sum = 0.0;
  for (const auto& t : terms_) {
    sum += t.weight * t.kernel(d);
  }
  return sum;
}

double Kernel::prior_variance() const {
  double sum = 0.0;
  for (const auto& t : terms_) {
    sum += t.weight * t.kernel.variance;
  }
  return sum;
}

std::string Kernel::describe() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const auto& t = terms_[i];
    if (i > 0) out << " + ";
    if (terms_.size() > 1 || t.weight != 1.0) out << t.weight << "*";
    out << family_name(t.kernel.family) << "(var=" << t.kernel.variance
        << ", l=" << t.kernel.length_scale;
    if (t.kernel.alpha) out << ", alpha=" << *t.kernel.alpha;
    out << ")";
  }
  return out.str();
}

Eigen::MatrixXd kernel_matrix(const Kernel& kernel, std::span<const Point> rows,
                              std::span<const Point> cols) {
  if (rows.empty() || cols.empty()) {
    throw ArgumentError("kernel_matrix: empty point list");
  }
  Eigen::MatrixXd k(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(cols.size()));
  for (Eigen::Index j = 0; j < k.cols(); ++j) {
    const Point& c = cols[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
      k(i, j) = kernel(rows[static_cast<std::size_t>(i)], c);
    }
  }
  return k;
}

Eigen::MatrixXd kernel_matrix(const Kernel& kernel, std::span<const Point> points) {
  if (points.empty()) {
    throw ArgumentError("kernel_matrix: empty point list");
  }
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd k(n, n);
  const double diag = kernel(0.0);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = diag;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = kernel(points[static_cast<std::size_t>(i)],
                              points[static_cast<std::size_t>(j)]);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

}  // namespace fpforge
