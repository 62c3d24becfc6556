#pragma once

#include <cstdint>
#include <vector>

#include "ulearn/core_types.hpp"

namespace ulearn {

/// Generated data together with the noiseless truth f0 at every row.
struct SimulatedData {
  Dataset data;
  Vector truth;
};

enum class LinearDesign { iid_uniform, gaussian_ar1 };

/// Sparse linear truth y = beta0 + x beta + N(0, noise_sd^2).
struct LinearTruth {
  int p = 0;
  int s0 = 0;
  double beta0 = 0.0;
  Vector beta;
  double noise_sd = 1.0;
  LinearDesign design = LinearDesign::iid_uniform;
  double rho = 0.5;  // AR(1) parameter for the Gaussian design

  /// First s0 coefficients equally spaced on [-1, 1.5], skipping 0; features
  /// Uniform(-1, 1) unless the AR(1) Gaussian design is chosen.
  static LinearTruth make(int p, int s0, double noise_sd = 1.0,
                          LinearDesign design = LinearDesign::iid_uniform, double rho = 0.5,
                          double beta0 = 0.0);

  void validate() const;
  std::vector<int> support() const;
  Vector f0(const Matrix& x) const;
};

enum class Scenario { S1, S2 };

/// S1: -sin(pi x1) + 2(x2 - 0.5)^2 + 1.5 x3 x4 - 5/x5 with x_j ~ Unif(1, 2).
/// S2: 0.5 x1^2 - 0.3 x5 x10 + exp(0.2 x15) + cos(x20) with x ~ N(0, Sigma),
///     Sigma_jk = rho^|j-k|.
struct NonlinearTruth {
  Scenario scenario = Scenario::S1;
  int p = 100;
  double rho = 0.5;
  double noise_sd = 0.5;

  void validate() const;
  Vector f0(const Matrix& x) const;
};

/// Sigma_jk = rho^|j-k|.
Matrix ar1_covariance(int p, double rho);

/// Lower Cholesky factor of ar1_covariance.
Matrix ar1_cholesky(int p, double rho);

SimulatedData gen_linear(const LinearTruth& truth, int n, std::uint64_t seed);
SimulatedData gen_scenario(const NonlinearTruth& truth, int n, std::uint64_t seed);

}  // namespace ulearn
