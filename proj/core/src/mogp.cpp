#include "fpforge/mogp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "fpforge/errors.hpp"

namespace fpforge {

Eigen::MatrixXd CoregionalizationSpec::coregionalization(std::size_t q) const {
  const Eigen::MatrixXd& a = mixing.at(q);
  Eigen::MatrixXd b = a * a.transpose();
  b.diagonal() += diag_boost;
  return b;
}

bool CoregionalizationSpec::shares_base_kernel() const {
  return std::all_of(base_kernels.begin(), base_kernels.end(),
                     [&](const Kernel& k) { return k == base_kernels.front(); });
}

void CoregionalizationSpec::validate() const {
  if (base_kernels.empty()) {
    throw ArgumentError("coregionalization needs Q >= 1 base kernels");
  }
  if (mixing.size() != base_kernels.size()) {
    throw ArgumentError("coregionalization needs one mixing matrix per base kernel");
  }
  if (diag_boost.size() == 0) {
    throw ArgumentError("coregionalization needs T >= 1 outputs");
  }
  if (!diag_boost.allFinite() || (diag_boost.array() < 0.0).any()) {
    throw ArgumentError("coregionalization diagonal boost must be nonnegative");
  }
  const Eigen::Index rank = mixing.front().cols();
  if (rank < 1) {
    throw ArgumentError("coregionalization latent rank must be >= 1");
  }
  for (const auto& a : mixing) {
    if (a.rows() != diag_boost.size() || a.cols() != rank) {
      throw ArgumentError("mixing matrices must all be T x R");
    }
    if (!a.allFinite()) {
      throw ArgumentError("mixing coefficients must be finite");
    }
  }
}

CoregionalizationSpec default_mixing(std::size_t outputs, std::size_t q, std::size_t rank,
                                     std::uint64_t seed, const Kernel& base_kernel) {
  if (outputs < 1 || q < 1 || rank < 1) {
    throw ArgumentError("default_mixing: T, Q and R must be >= 1");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(q * rank));

  CoregionalizationSpec spec;
  spec.base_kernels.assign(q, base_kernel);
  spec.mixing.reserve(q);
  for (std::size_t g = 0; g < q; ++g) {
    Eigen::MatrixXd a(static_cast<Eigen::Index>(outputs), static_cast<Eigen::Index>(rank));
    for (Eigen::Index t = 0; t < a.rows(); ++t) {
      for (Eigen::Index r = 0; r < a.cols(); ++r) {
        a(t, r) = scale * normal(rng);
      }
    }
    spec.mixing.push_back(std::move(a));
  }
  spec.diag_boost = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(outputs), kDefaultDiagBoost);
  return spec;
}

CoregionalizationSpec independent_outputs(std::size_t outputs, const Kernel& base_kernel) {
  if (outputs < 1) {
    throw ArgumentError("independent_outputs: T must be >= 1");
  }
  CoregionalizationSpec spec;
  spec.base_kernels = {base_kernel};
  spec.mixing = {Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(outputs), 1)};
  spec.diag_boost = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(outputs));
  return spec;
}

MogpModel MogpModel::fit(std::vector<Point> points, Eigen::MatrixXd targets,
                         CoregionalizationSpec coreg, double noise_variance, MogpSolver solver,
                         const JitterPolicy& policy, const std::string& context) {
  coreg.validate();
  policy.validate();
  if (points.empty()) {
    throw ArgumentError("MOGP fit needs at least one point");
  }
  if (targets.rows() != static_cast<Eigen::Index>(points.size())) {
    throw ArgumentError("MOGP targets must have one row per point");
  }
  if (targets.cols() == 0) {
    throw ArgumentError("MOGP fit needs at least one output");
  }
  if (targets.cols() != static_cast<Eigen::Index>(coreg.outputs())) {
    throw ArgumentError("coregionalization has " + std::to_string(coreg.outputs()) +
                        " outputs but targets have " + std::to_string(targets.cols()));
  }
  if (!targets.allFinite()) {
    throw ArgumentError("MOGP targets must be finite");
  }
  if (!std::isfinite(noise_variance) || noise_variance < 0.0) {
    throw ArgumentError("MOGP noise variance must be nonnegative");
  }

  MogpModel model;
  model.points_ = std::move(points);
  model.targets_ = std::move(targets);
  model.coreg_ = std::move(coreg);
  model.noise_variance_ = noise_variance;
  model.output_means_ = model.targets_.colwise().mean().transpose();

  if (solver == MogpSolver::Auto) {
    solver = model.coreg_.shares_base_kernel() ? MogpSolver::Kronecker : MogpSolver::Dense;
  }
  if (solver == MogpSolver::Kronecker && !model.coreg_.shares_base_kernel()) {
    throw ArgumentError("Kronecker solver requires every base kernel to be identical");
  }
  model.solver_ = solver;
  if (solver == MogpSolver::Kronecker) {
    model.fit_kronecker(policy, context);
  } else {
    model.fit_dense(policy, context);
  }
  return model;
}

double MogpModel::jitter_scale() const {
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(outputs()));
  for (std::size_t q = 0; q < coreg_.q_count(); ++q) {
    diag += coreg_.coregionalization(q).diagonal() * coreg_.base_kernels[q](0.0);
  }
  const double scale = diag.maxCoeff();
  return scale > 0.0 ? scale : 1.0;
}

void MogpModel::fit_kronecker(const JitterPolicy& policy, const std::string& context) {
  const auto t = static_cast<Eigen::Index>(outputs());

  b_total_ = Eigen::MatrixXd::Zero(t, t);
  for (std::size_t q = 0; q < coreg_.q_count(); ++q) {
    b_total_ += coreg_.coregionalization(q);
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> b_eig(b_total_);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> k_eig(
      kernel_matrix(coreg_.base_kernels.front(), points_));
  if (b_eig.info() != Eigen::Success || k_eig.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition failed" + (context.empty() ? "" : " for " + context),
                         0.0);
  }
  b_vectors_ = b_eig.eigenvectors();
  b_values_ = b_eig.eigenvalues();
  k_vectors_ = k_eig.eigenvectors();

  // Spectrum of B (x) K is every product l_k(c) l_b(a).
  const Eigen::MatrixXd products = k_eig.eigenvalues() * b_values_.transpose();  // M x T
  const double scale = jitter_scale();
  const double cap = policy.cap_factor * scale;
  double jitter = policy.initial_factor * scale;
  escalations_ = 0;
  while (true) {
    const Eigen::ArrayXXd spectrum = products.array() + (noise_variance_ + jitter);
    if (spectrum.minCoeff() > std::numeric_limits<double>::epsilon() * spectrum.maxCoeff()) {
      inv_spectrum_ = spectrum.inverse().matrix();
      break;
    }
    jitter *= policy.growth;
    if (jitter > cap * (1.0 + 1e-9)) {
      std::ostringstream msg;
      msg << "joint covariance not positive definite";
      if (!context.empty()) msg << " for " << context;
      msg << " at jitter cap " << cap;
      throw NumericalError(msg.str(), cap);
    }
    ++escalations_;
  }
  jitter_ = jitter;

  const Eigen::MatrixXd centered = targets_.rowwise() - output_means_.transpose();
  const Eigen::MatrixXd rotated = k_vectors_.transpose() * centered * b_vectors_;
  alpha_ = k_vectors_ * rotated.cwiseProduct(inv_spectrum_) * b_vectors_.transpose();
}

void MogpModel::fit_dense(const JitterPolicy& policy, const std::string& context) {
  const auto m = static_cast<Eigen::Index>(points());
  const auto t = static_cast<Eigen::Index>(outputs());
  const std::size_t n = points() * outputs();
  if (n > kMaxDenseJointSize) {
    throw ResourceError("dense joint covariance of size " + std::to_string(n) +
                        " exceeds the limit " + std::to_string(kMaxDenseJointSize) +
                        "; share one base kernel across groups or lower max_points" +
                        (context.empty() ? "" : " (" + context + ")"));
  }
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(m * t, m * t);
  for (std::size_t q = 0; q < coreg_.q_count(); ++q) {
    const Eigen::MatrixXd b = coreg_.coregionalization(q);
    const Eigen::MatrixXd k = kernel_matrix(coreg_.base_kernels[q], points_);
    for (Eigen::Index s = 0; s < t; ++s) {
      for (Eigen::Index r = 0; r < t; ++r) {
        sigma.block(r * m, s * m, m, m) += b(r, s) * k;
      }
    }
  }
  sigma.diagonal().array() += noise_variance_;
  auto chol = factorize_with_jitter(sigma, jitter_scale(), policy, context);
  jitter_ = chol.jitter;
  escalations_ = chol.escalations;

  const Eigen::MatrixXd centered = targets_.rowwise() - output_means_.transpose();
  const Eigen::VectorXd stacked = Eigen::Map<const Eigen::VectorXd>(centered.data(), m * t);
  const Eigen::VectorXd solved = chol.llt.solve(stacked);
  alpha_ = Eigen::Map<const Eigen::MatrixXd>(solved.data(), m, t);
  joint_llt_ = std::make_shared<const Eigen::LLT<Eigen::MatrixXd>>(std::move(chol.llt));
}

Eigen::MatrixXd MogpModel::predict_mean(std::span<const Point> queries) const {
  const auto t = static_cast<Eigen::Index>(outputs());
  if (queries.empty()) return Eigen::MatrixXd(0, t);
  Eigen::MatrixXd mean;
  if (solver_ == MogpSolver::Kronecker) {
    const Eigen::MatrixXd cross = kernel_matrix(coreg_.base_kernels.front(), queries, points_);
    mean = cross * (alpha_ * b_total_);
  } else {
    mean = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(queries.size()), t);
    for (std::size_t q = 0; q < coreg_.q_count(); ++q) {
      const Eigen::MatrixXd cross = kernel_matrix(coreg_.base_kernels[q], queries, points_);
      mean += cross * (alpha_ * coreg_.coregionalization(q));
    }
  }
  mean.rowwise() += output_means_.transpose();
  return mean;
}

MogpPosterior MogpModel::predict(std::span<const Point> queries) const {
  const auto t = static_cast<Eigen::Index>(outputs());
  const auto m = static_cast<Eigen::Index>(points());
  const auto nq = static_cast<Eigen::Index>(queries.size());
  MogpPosterior out;
  out.mean = predict_mean(queries);
  if (nq == 0) {
    out.variance = Eigen::MatrixXd(0, t);
    return out;
  }

  Eigen::VectorXd prior = Eigen::VectorXd::Zero(t);
  for (std::size_t q = 0; q < coreg_.q_count(); ++q) {
    prior += coreg_.coregionalization(q).diagonal() * coreg_.base_kernels[q](0.0);
  }

  Eigen::MatrixXd reduction(nq, t);
  if (solver_ == MogpSolver::Kronecker) {
    // k_* for output t is B[:, t] (x) k(X, x*); rotate both factors into the
    // eigenbases and weight by the inverse spectrum.
    const Eigen::MatrixXd cross = kernel_matrix(coreg_.base_kernels.front(), points_, queries);
    const Eigen::MatrixXd g = (k_vectors_.transpose() * cross).array().square().matrix();  // M x nq
    const Eigen::MatrixXd h =
        (b_vectors_ * b_values_.asDiagonal()).transpose().array().square().matrix();  // T x T
    reduction = g.transpose() * inv_spectrum_ * h;
  } else {
    std::vector<Eigen::MatrixXd> bs;
    std::vector<Eigen::MatrixXd> crosses;
    for (std::size_t q = 0; q < coreg_.q_count(); ++q) {
      bs.push_back(coreg_.coregionalization(q));
      crosses.push_back(kernel_matrix(coreg_.base_kernels[q], points_, queries));
    }
    Eigen::MatrixXd kstar(m * t, t);
    for (Eigen::Index j = 0; j < nq; ++j) {
      kstar.setZero();
      for (std::size_t q = 0; q < bs.size(); ++q) {
        for (Eigen::Index col = 0; col < t; ++col) {
          for (Eigen::Index s = 0; s < t; ++s) {
            kstar.block(s * m, col, m, 1) += bs[q](s, col) * crosses[q].col(j);
          }
        }
      }
      const Eigen::MatrixXd v = joint_llt_->matrixL().solve(kstar);
      reduction.row(j) = v.colwise().squaredNorm();
    }
  }
  out.variance = (-reduction).rowwise() + prior.transpose();
  out.variance = out.variance.cwiseMax(0.0);
  return out;
}

std::size_t BlockModel::output_of(std::size_t wap_index) const {
  const auto it = std::lower_bound(active_waps.begin(), active_waps.end(), wap_index);
  if (it == active_waps.end() || *it != wap_index) {
    throw ArgumentError("WAP index " + std::to_string(wap_index) + " is not active in " +
                        to_string(key));
  }
  return static_cast<std::size_t>(it - active_waps.begin());
}

BlockModel fit_block_mogp(const FingerprintDataset& dataset, const Block& block,
                          std::vector<std::size_t> active_waps, CoregionalizationSpec coreg,
                          double noise_variance, std::size_t max_points, std::uint64_t seed,
                          MogpSolver solver) {
  if (block.record_indices.empty()) {
    throw ArgumentError("fit_block_mogp: empty block");
  }
  if (active_waps.empty()) {
    throw ArgumentError("fit_block_mogp: no active WAPs in " + to_string(block.key));
  }
  if (max_points < 1) {
    throw ArgumentError("fit_block_mogp: max_points must be >= 1");
  }
  if (!std::is_sorted(active_waps.begin(), active_waps.end()) ||
      std::adjacent_find(active_waps.begin(), active_waps.end()) != active_waps.end()) {
    throw ArgumentError("fit_block_mogp: active WAPs must be strictly ascending");
  }
  if (active_waps.back() >= dataset.n_waps) {
    throw ArgumentError("fit_block_mogp: WAP index out of range");
  }

  std::vector<std::size_t> chosen = block.record_indices;
  if (chosen.size() > max_points) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < max_points; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, chosen.size() - 1);
      std::swap(chosen[i], chosen[pick(rng)]);
    }
    chosen.resize(max_points);
    std::sort(chosen.begin(), chosen.end());
  }

  std::vector<Point> points;
  points.reserve(chosen.size());
  Eigen::MatrixXd targets(static_cast<Eigen::Index>(chosen.size()),
                          static_cast<Eigen::Index>(active_waps.size()));
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    const FingerprintRecord& r = dataset.records[chosen[i]];
    points.push_back(r.location());
    for (std::size_t t = 0; t < active_waps.size(); ++t) {
      targets(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = r.rssi[active_waps[t]];
    }
  }

  const std::vector<Point> all = block_locations(dataset, block);
  BlockModel model{block.key, std::move(active_waps), std::move(chosen), bounding_box(all),
                   MogpModel::fit(std::move(points), std::move(targets), std::move(coreg),
                                  noise_variance, solver, JitterPolicy{}, to_string(block.key))};
  return model;
}

MogpPosterior predict_block(const BlockModel& model, std::span<const Point> queries) {
  return model.predict(queries);
}

}  // namespace fpforge
