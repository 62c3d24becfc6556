#include <cmath>
#include <numbers>

#include "doctest.h"
#include "helpers.hpp"
#include "ulearn/metrics.hpp"
#include "ulearn/simgen.hpp"

using namespace ulearn;

TEST_CASE("linear truth") {
  const LinearTruth t = LinearTruth::make(50, 25);
  int nonzero = 0;
  for (int j = 0; j < 50; ++j) {
    if (t.beta(j) != 0.0) {
      ++nonzero;
      CHECK(t.beta(j) >= -1.0);
      CHECK(t.beta(j) <= 1.5);
    }
  }
  CHECK(nonzero == 25);
  CHECK(t.support().size() == 25);
  CHECK(t.beta(0) == -1.0);
  CHECK(t.beta(24) == doctest::Approx(1.5));
  CHECK_THROWS_AS(LinearTruth::make(5, 6), InvalidConfig);
  CHECK_THROWS_AS(LinearTruth::make(5, 2, -1.0), InvalidConfig);

  SUBCASE("noiseless responses equal the truth") {
    const SimulatedData d = gen_linear(LinearTruth::make(10, 3, 0.0), 50, 1);
    CHECK(d.data.responses() == d.truth);
    CHECK(d.data.features().cwiseAbs().maxCoeff() <= 1.0);
  }
  SUBCASE("noise has mean zero") {
    const SimulatedData d = gen_linear(LinearTruth::make(2, 1), 100000, 2);
    const double m = (d.data.responses() - d.truth).mean();
    CHECK(std::abs(m) < 3.0 / std::sqrt(100000.0));
  }
  SUBCASE("deterministic under seed") {
    const LinearTruth g = LinearTruth::make(8, 3, 1.0, LinearDesign::gaussian_ar1);
    CHECK(gen_linear(g, 20, 5).data == gen_linear(g, 20, 5).data);
    CHECK_FALSE(gen_linear(g, 20, 5).data == gen_linear(g, 20, 6).data);
  }
}

TEST_CASE("nonlinear scenarios") {
  SUBCASE("S1 formula at all coordinates 1.5") {
    const NonlinearTruth s1{Scenario::S1, 5};
    const Matrix x = Matrix::Constant(1, 5, 1.5);
    const double expect = -std::sin(1.5 * std::numbers::pi) + 2.0 + 1.5 * 2.25 - 5.0 / 1.5;
    CHECK(s1.f0(x)(0) == doctest::Approx(expect).epsilon(1e-15));
    CHECK(s1.f0(x)(0) == doctest::Approx(3.0417).epsilon(1e-4));
  }
  SUBCASE("S1 features lie in (1, 2)") {
    const SimulatedData d = gen_scenario(NonlinearTruth{Scenario::S1, 10}, 2000, 3);
    CHECK(d.data.features().minCoeff() > 1.0);
    CHECK(d.data.features().maxCoeff() < 2.0);
    CHECK(d.truth == NonlinearTruth{Scenario::S1, 10}.f0(d.data.features()));
  }
  SUBCASE("S2 lag-one correlation") {
    const SimulatedData d = gen_scenario(NonlinearTruth{Scenario::S2, 20}, 100000, 4);
    const Matrix& x = d.data.features();
    const Vector a = x.col(7).array() - x.col(7).mean();
    const Vector b = x.col(8).array() - x.col(8).mean();
    const double corr = a.dot(b) / std::sqrt(a.squaredNorm() * b.squaredNorm());
    CHECK(std::abs(corr - 0.5) < 0.02);
  }
  SUBCASE("S2 formula") {
    Matrix x = Matrix::Zero(1, 20);
    x(0, 0) = 2.0;
    x(0, 4) = 1.0;
    x(0, 9) = 3.0;
    x(0, 14) = 5.0;
    x(0, 19) = 0.5;
    const double expect = 0.5 * 4.0 - 0.3 * 3.0 + std::exp(1.0) + std::cos(0.5);
    CHECK(NonlinearTruth{Scenario::S2, 20}.f0(x)(0) == doctest::Approx(expect).epsilon(1e-15));
  }
  SUBCASE("dimension checks") {
    CHECK_THROWS_AS(gen_scenario(NonlinearTruth{Scenario::S2, 19}, 5, 1), InvalidConfig);
    CHECK_THROWS_AS(gen_scenario(NonlinearTruth{Scenario::S1, 4}, 5, 1), InvalidConfig);
  }
}

TEST_CASE("AR(1) Cholesky factor") {
  for (int p : {1, 5, 50, 200}) {
    const Matrix L = ar1_cholesky(p, 0.5);
    CHECK((L * L.transpose() - ar1_covariance(p, 0.5)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("metrics") {
  const Vector zero = Vector::Zero(2);
  const Vector pm = (Vector(2) << 1, -1).finished();
  CHECK(mae(zero, zero) == 0.0);
  CHECK(mae(zero, pm) == 1.0);
  CHECK(bias(zero, pm) == 0.0);
  CHECK_THROWS_AS(mae(zero, Vector::Zero(3)), InvalidConfig);

  std::mt19937_64 rng(2);
  std::normal_distribution<double> z;
  Vector a(50), b(50);
  for (int i = 0; i < 50; ++i) a(i) = z(rng), b(i) = z(rng);
  double by_hand = 0.0;
  for (int i = 0; i < 50; ++i) by_hand += std::fabs(a(i) - b(i));
  CHECK(std::abs(mae(a, b) - by_hand / 50.0) < 1e-12);

  const Vector truth = (Vector(3) << 0, 5, 10).finished();
  CHECK(coverage(truth, {{-1, 1}, {0, 1}, {9, 11}}) == doctest::Approx(2.0 / 3.0));
  CHECK(coverage(truth, {{-1e300, 1e300}, {-1e300, 1e300}, {-1e300, 1e300}}) == 1.0);
  CHECK(coverage(truth, {{0, 0}, {5, 6}, {9, 10}}) == 1.0);
  CHECK_THROWS_AS(coverage(truth, {{1, 0}, {0, 1}, {0, 1}}), InvalidConfig);

  CHECK(ail({{2, 2}, {3, 3}}) == 0.0);
  CHECK(ail({{0, 2}, {1, 5}}) == 3.0);

  SUBCASE("emp_sd") {
    Matrix preds(3, 2);
    preds << 1, 0, 2, 0, 3, 0;
    CHECK(emp_sd(preds) == doctest::Approx(0.5));
    CHECK(emp_sd_per_point(preds)(0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(emp_sd(Matrix::Zero(1, 4)), InvalidConfig);
  }
  SUBCASE("aggregation is the mean of replicate values") {
    std::vector<ReplicateMetrics> reps;
    Matrix preds(4, 2);
    for (int k = 0; k < 4; ++k) {
      const Vector p = Vector::Random(2);
      preds.row(k) = p.transpose();
      const Vector se = Vector::Constant(2, 0.1 * (k + 1));
      std::vector<Interval> iv{{p(0) - 1, p(0) + 1}, {p(1) - 0.1, p(1) + 0.1}};
      reps.push_back(replicate_metrics(Vector::Zero(2), p, se, iv, k));
    }
    const ReplicateSummary s = aggregate(reps, preds);
    double cp = 0;
    for (const auto& r : reps) cp += r.cp;
    CHECK(s.cp == doctest::Approx(cp / 4));
    CHECK(s.mean_se == doctest::Approx(0.25));
    CHECK(s.runtime_seconds == doctest::Approx(1.5));
    CHECK(s.emp_sd == doctest::Approx(emp_sd(preds)));
    CHECK(s.ail == doctest::Approx(1.1));
  }
  SUBCASE("metrics are permutation invariant") {
    const Vector t = Vector::Random(5);
    const Vector p = Vector::Random(5);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(5);
    perm.indices() << 3, 0, 4, 1, 2;
    CHECK(mae(perm * t, perm * p) == doctest::Approx(mae(t, p)));
    CHECK(bias(perm * t, perm * p) == doctest::Approx(bias(t, p)));
  }
}
