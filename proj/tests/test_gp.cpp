#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "dense_oracles.hpp"
#include "fpforge/errors.hpp"
#include "fpforge/gp.hpp"

using namespace fpforge;

namespace {

struct Problem {
  std::vector<Point> x;
  Eigen::VectorXd y;
  std::vector<Point> queries;
};

Problem random_problem(std::mt19937_64& rng, std::size_t n, std::size_t nq) {
  std::uniform_real_distribution<double> coord(0.0, 40.0);
  std::uniform_real_distribution<double> level(-95.0, -40.0);
  Problem p;
  for (std::size_t i = 0; i < n; ++i) p.x.push_back({coord(rng), coord(rng)});
  p.y.resize(static_cast<Eigen::Index>(n));
  for (auto& v : p.y) v = level(rng);
  for (std::size_t i = 0; i < nq; ++i) p.queries.push_back({coord(rng), coord(rng)});
  p.queries.push_back(p.x.front());
  return p;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST(Sogp, MatchesDenseInversionOracle) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const KernelFamily families[] = {KernelFamily::RBF, KernelFamily::RQ, KernelFamily::Matern32,
                                   KernelFamily::Matern52, KernelFamily::OU};
  for (int trial = 0; trial < 40; ++trial) {
    const KernelFamily f = families[trial % 5];
    const double var = 0.5 + 10.0 * u(rng);
    const KernelSpec spec = make_kernel(f, var, 1.0 + 15.0 * u(rng),
                                        f == KernelFamily::RQ ? std::optional(0.3 + 3.0 * u(rng))
                                                              : std::nullopt);
    const double noise = var * (0.01 + u(rng));
    Problem p = random_problem(rng, 1 + trial % 25, 6);
    const SogpModel model = SogpModel::fit(p.x, p.y, spec, noise);
    const Posterior post = model.predict(p.queries);
    const auto oracle =
        fpforge::testing::sogp_oracle(spec, p.x, to_vector(p.y), noise + model.jitter(), p.queries);
    for (std::size_t i = 0; i < p.queries.size(); ++i) {
      const auto e = static_cast<Eigen::Index>(i);
      EXPECT_NEAR(post.mean[e], oracle.mean[i], 1e-8 * std::abs(oracle.mean[i]));
      EXPECT_NEAR(post.variance[e], oracle.variance[i], 1e-8 * var);
    }
    EXPECT_TRUE(model.predict_mean(p.queries).isApprox(post.mean, 1e-14));
  }
}

TEST(Sogp, CholeskyReconstructsJitteredCovariance) {
  std::mt19937_64 rng(2);
  Problem p = random_problem(rng, 20, 1);
  const KernelSpec spec = make_kernel(KernelFamily::Matern52, 2.0, 8.0);
  const SogpModel model = SogpModel::fit(p.x, p.y, spec, 0.5);
  Eigen::MatrixXd expected = kernel_matrix(spec, p.x);
  expected.diagonal().array() += 0.5 + model.jitter();
  const Eigen::MatrixXd l = model.cholesky_factor();
  EXPECT_TRUE(l.isLowerTriangular());
  EXPECT_LT((l * l.transpose() - expected).norm() / expected.norm(), 1e-6);
  EXPECT_GE(model.jitter(), 1e-8 * 2.0);
  EXPECT_LE(model.jitter(), 1e-2 * 2.0);
  const Eigen::VectorXd centered = p.y.array() - p.y.mean();
  EXPECT_LT((expected * model.alpha_weights() - centered).norm(), 1e-8 * centered.norm());
}

TEST(Sogp, NoiselessInterpolation) {
  std::mt19937_64 rng(3);
  Problem p = random_problem(rng, 15, 0);
  const SogpModel model = SogpModel::fit(p.x, p.y, make_kernel(KernelFamily::Matern52, 1.0, 5.0), 0.0);
  const Posterior post = model.predict(p.x);
  for (Eigen::Index i = 0; i < p.y.size(); ++i) {
    EXPECT_NEAR(post.mean[i], p.y[i], 1e-4);
    EXPECT_LE(post.variance[i], 1e-4);
  }
}

TEST(Sogp, DuplicateInputsWithoutNoiseStillFit) {
  const std::vector<Point> x{{0, 0}, {0, 0}, {3, 4}, {3, 4}, {10, 1}};
  Eigen::VectorXd y(5);
  y << -60, -62, -75, -71, -80;
  const SogpModel model = SogpModel::fit(x, y, make_kernel(KernelFamily::RBF, 1.0, 5.0), 0.0);
  EXPECT_GE(model.jitter(), 1e-8);
  const Posterior post = model.predict(x);
  EXPECT_TRUE(post.mean.allFinite());
  EXPECT_TRUE(post.variance.allFinite());
}

TEST(Sogp, JitterEscalatesOnIndefiniteMatrix) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(3, 3);
  m(2, 2) = -5e-7;
  const JitteredCholesky c = factorize_with_jitter(m, 1.0);
  EXPECT_EQ(c.escalations, 2);  // 1e-8, 1e-7 fail; 1e-6 succeeds
  EXPECT_NEAR(c.jitter, 1e-6, 1e-18);
}

TEST(Sogp, JitterCapRaisesNumericalError) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2, 2);
  m(1, 1) = -1.0;
  try {
    factorize_with_jitter(m, 4.0, {}, "building 1 floor 2");
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_DOUBLE_EQ(e.jitter_reached(), 4e-2);
    EXPECT_NE(std::string(e.what()).find("building 1 floor 2"), std::string::npos);
  }
}

TEST(Sogp, TrainingOrderDoesNotMatter) {
  std::mt19937_64 rng(4);
  Problem p = random_problem(rng, 18, 10);
  const KernelSpec spec = make_kernel(KernelFamily::Matern32, 3.0, 6.0);
  const Posterior a = SogpModel::fit(p.x, p.y, spec, 0.7).predict(p.queries);
  std::vector<std::size_t> perm(p.x.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Point> xp;
  Eigen::VectorXd yp(p.y.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    xp.push_back(p.x[perm[i]]);
    yp[static_cast<Eigen::Index>(i)] = p.y[static_cast<Eigen::Index>(perm[i])];
  }
  const Posterior b = SogpModel::fit(xp, yp, spec, 0.7).predict(p.queries);
  EXPECT_LT((a.mean - b.mean).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((a.variance - b.variance).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Sogp, MoreDataNeverIncreasesVariance) {
  std::mt19937_64 rng(5);
  Problem p = random_problem(rng, 16, 25);
  const KernelSpec spec = make_kernel(KernelFamily::RBF, 2.0, 7.0);
  std::vector<Point> fewer(p.x.begin(), p.x.end() - 1);
  Eigen::VectorXd yf = p.y.head(p.y.size() - 1);
  const Posterior small = SogpModel::fit(fewer, yf, spec, 0.3).predict(p.queries);
  const Posterior full = SogpModel::fit(p.x, p.y, spec, 0.3).predict(p.queries);
  for (Eigen::Index i = 0; i < full.variance.size(); ++i) {
    EXPECT_LE(full.variance[i], small.variance[i] + 1e-10);
  }
}

TEST(Sogp, VarianceBoundsAndFarFieldMean) {
  std::mt19937_64 rng(6);
  Problem p = random_problem(rng, 12, 30);
  const KernelSpec spec = make_kernel(KernelFamily::Matern52, 4.0, 5.0);
  const SogpModel model = SogpModel::fit(p.x, p.y, spec, 1.0);
  const Posterior post = model.predict(p.queries);
  EXPECT_GE(post.variance.minCoeff(), 0.0);
  EXPECT_LE(post.variance.maxCoeff(), 4.0 + 1e-12);
  const std::vector<Point> far{{1e5, 1e5}};
  const Posterior f = model.predict(far);
  EXPECT_NEAR(f.mean[0], p.y.mean(), 1e-9);
  EXPECT_NEAR(f.variance[0], 4.0, 1e-12);
  EXPECT_DOUBLE_EQ(model.target_mean(), p.y.mean());
}

TEST(Sogp, EmptyQueryGivesEmptyPosterior) {
  const SogpModel model =
      fit_sogp({{0, 0}}, Eigen::VectorXd::Constant(1, -50.0), make_kernel(KernelFamily::RBF, 1, 1));
  EXPECT_EQ(predict_sogp(model, {}).mean.size(), 0);
}

TEST(Sogp, FitValidation) {
  const KernelSpec spec = make_kernel(KernelFamily::RBF, 1, 1);
  EXPECT_THROW(SogpModel::fit({}, Eigen::VectorXd(), spec), ArgumentError);
  EXPECT_THROW(SogpModel::fit({{0, 0}}, Eigen::VectorXd::Zero(2), spec), ArgumentError);
  EXPECT_THROW(SogpModel::fit({{0, 0}}, Eigen::VectorXd::Zero(1), spec, -1.0), ArgumentError);
  EXPECT_THROW(SogpModel::fit({{0, NAN}}, Eigen::VectorXd::Zero(1), spec), ArgumentError);
  EXPECT_THROW(SogpModel::fit({{0, 0}}, Eigen::VectorXd::Constant(1, NAN), spec), ArgumentError);
}
