#include "ulearn/simgen.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace ulearn {

namespace {

std::vector<double> spaced_nonzero(int count) {
  if (count == 1) return {1.5};
  std::vector<double> out;
  const double step = 2.5 / (count - 1);
  for (int k = 0; k < count; ++k) out.push_back(-1.0 + k * step);
  bool hits_zero = false;
  for (double v : out) hits_zero = hits_zero || std::abs(v) < 1e-12;
  if (!hits_zero) return out;

  // Use one more grid point and drop the zero.
  out.clear();
  const double finer = 2.5 / count;
  for (int k = 0; k <= count; ++k) {
    const double v = -1.0 + k * finer;
    if (std::abs(v) > 1e-12) out.push_back(v);
  }
  out.resize(static_cast<std::size_t>(count));
  return out;
}

Matrix gaussian_design(int n, const Matrix& chol, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  const Index p = chol.rows();
  Matrix z(p, n);
  for (Index c = 0; c < n; ++c) {
    for (Index r = 0; r < p; ++r) z(r, c) = normal(rng);
  }
  return (chol.triangularView<Eigen::Lower>() * z).transpose();
}

Matrix uniform_design(int n, int p, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(lo, hi);
  Matrix x(n, p);
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < p; ++c) x(r, c) = unif(rng);
  }
  return x;
}

Vector add_noise(const Vector& truth, double sd, std::mt19937_64& rng) {
  Vector y = truth;
  if (sd > 0.0) {
    std::normal_distribution<double> noise(0.0, sd);
    for (Index i = 0; i < y.size(); ++i) y(i) += noise(rng);
  }
  return y;
}

}  // namespace

Matrix ar1_covariance(int p, double rho) {
  Matrix sigma(p, p);
  for (int j = 0; j < p; ++j) {
    for (int k = 0; k < p; ++k) sigma(j, k) = std::pow(rho, std::abs(j - k));
  }
  return sigma;
}

Matrix ar1_cholesky(int p, double rho) {
  if (p < 1) throw InvalidConfig("ar1_cholesky: p must be positive");
  if (!(std::abs(rho) < 1.0)) throw InvalidConfig("ar1_cholesky: |rho| must be below 1");
  Eigen::LLT<Matrix> llt(ar1_covariance(p, rho));
  if (llt.info() != Eigen::Success) throw FitFailure("ar1_cholesky: factorization failed");
  return llt.matrixL();
}

// ---------------------------------------------------------------- linear

LinearTruth LinearTruth::make(int p, int s0, double noise_sd, LinearDesign design, double rho,
                              double beta0) {
  if (s0 < 0 || s0 > p) throw InvalidConfig("LinearTruth: need 0 <= s0 <= p");
  LinearTruth t;
  t.p = p;
  t.s0 = s0;
  t.beta0 = beta0;
  t.noise_sd = noise_sd;
  t.design = design;
  t.rho = rho;
  t.beta = Vector::Zero(p);
  if (s0 > 0) {
    const auto values = spaced_nonzero(s0);
    for (int j = 0; j < s0; ++j) t.beta(j) = values[static_cast<std::size_t>(j)];
  }
  t.validate();
  return t;
}

void LinearTruth::validate() const {
  if (p < 1) throw InvalidConfig("LinearTruth: p must be positive");
  if (beta.size() != p) throw InvalidConfig("LinearTruth: beta length must equal p");
  int nonzero = 0;
  for (Index j = 0; j < beta.size(); ++j) {
    if (beta(j) != 0.0) {
      ++nonzero;
      if (beta(j) < -1.0 || beta(j) > 1.5) {
        throw InvalidConfig("LinearTruth: nonzero coefficients must lie in [-1, 1.5]");
      }
    }
  }
  if (nonzero != s0) throw InvalidConfig("LinearTruth: beta must have exactly s0 nonzeros");
  if (!(noise_sd >= 0.0)) throw InvalidConfig("LinearTruth: noise sd must be nonnegative");
}

std::vector<int> LinearTruth::support() const {
  std::vector<int> out;
  for (Index j = 0; j < beta.size(); ++j) {
    if (beta(j) != 0.0) out.push_back(static_cast<int>(j));
  }
  return out;
}

Vector LinearTruth::f0(const Matrix& x) const {
  if (x.cols() != p) throw InvalidConfig("LinearTruth::f0: feature count mismatch");
  return (x * beta).array() + beta0;
}

SimulatedData gen_linear(const LinearTruth& truth, int n, std::uint64_t seed) {
  truth.validate();
  if (n < 1) throw InvalidConfig("gen_linear: n must be positive");
  std::mt19937_64 rng(seed);
  Matrix x = truth.design == LinearDesign::iid_uniform
                 ? uniform_design(n, truth.p, -1.0, 1.0, rng)
                 : gaussian_design(n, ar1_cholesky(truth.p, truth.rho), rng);
  Vector f = truth.f0(x);
  Vector y = add_noise(f, truth.noise_sd, rng);
  return {Dataset(std::move(x), std::move(y)), std::move(f)};
}

// ---------------------------------------------------------------- nonlinear

void NonlinearTruth::validate() const {
  const int needed = scenario == Scenario::S1 ? 5 : 20;
  if (p < needed) {
    throw InvalidConfig("NonlinearTruth: scenario needs p >= " + std::to_string(needed));
  }
  if (!(noise_sd >= 0.0)) throw InvalidConfig("NonlinearTruth: noise sd must be nonnegative");
}

Vector NonlinearTruth::f0(const Matrix& x) const {
  validate();
  if (x.cols() != p) throw InvalidConfig("NonlinearTruth::f0: feature count mismatch");
  Vector f(x.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    // Columns are 0-based: x_k lives in column k - 1.
    if (scenario == Scenario::S1) {
      f(i) = -std::sin(std::numbers::pi * x(i, 0)) + 2.0 * std::pow(x(i, 1) - 0.5, 2) +
             1.5 * x(i, 2) * x(i, 3) - 5.0 / x(i, 4);
    } else {
      f(i) = 0.5 * x(i, 0) * x(i, 0) - 0.3 * x(i, 4) * x(i, 9) + std::exp(0.2 * x(i, 14)) +
             std::cos(x(i, 19));
    }
  }
  return f;
}

SimulatedData gen_scenario(const NonlinearTruth& truth, int n, std::uint64_t seed) {
  truth.validate();
  if (n < 1) throw InvalidConfig("gen_scenario: n must be positive");
  std::mt19937_64 rng(seed);
  Matrix x = truth.scenario == Scenario::S1
                 ? uniform_design(n, truth.p, 1.0, 2.0, rng)
                 : gaussian_design(n, ar1_cholesky(truth.p, truth.rho), rng);
  Vector f = truth.f0(x);
  Vector y = add_noise(f, truth.noise_sd, rng);
  return {Dataset(std::move(x), std::move(y)), std::move(f)};
}

}  // namespace ulearn
