#include <algorithm>
#include <numeric>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "ulearn/lasso.hpp"
#include "ulearn/normal.hpp"
#include "ulearn/parallel.hpp"

using namespace ulearn;
using testutil::ConstantLearner;
using testutil::MeanLearner;

namespace {

// IJ variance by a plain double loop.
double naive_ij(const SubsamplePlan& plan, const Vector& pred) {
  const int n = plan.n();
  const int B = plan.B();
  double mean = pred.sum() / B;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    double jbar = 0.0;
    for (int b = 0; b < B; ++b) jbar += plan.member(b, i);
    jbar /= B;
    double cov = 0.0;
    for (int b = 0; b < B; ++b) cov += (plan.member(b, i) - jbar) * (pred(b) - mean);
    cov /= B;
    total += cov * cov;
  }
  const double ratio = static_cast<double>(n) / (n - plan.r());
  return (n - 1.0) / n * ratio * ratio * total;
}

SubsamplePlan three_by_three() { return SubsamplePlan(3, {{0, 1}, {0, 2}, {1, 2}}); }

}  // namespace

TEST_CASE("derive_seed is deterministic and separates inputs") {
  const SeedSpec s{7, 0};
  CHECK(derive_seed(s, 0) == derive_seed(s, 0));
  CHECK(derive_seed(s, 0) != derive_seed(s, 1));
  CHECK(derive_seed(s, 0) != derive_seed(SeedSpec{7, 1}, 0));

  std::set<std::uint64_t> seen;
  for (std::uint64_t b = 0; b < 1000; ++b) seen.insert(derive_seed(SeedSpec{42, 0}, b));
  CHECK(seen.size() == 1000);
  CHECK(child_stream(s, 3) == child_stream(s, 3));
  CHECK_FALSE(child_stream(s, 3) == child_stream(s, 4));
}

TEST_CASE("Dataset validates its inputs") {
  CHECK_THROWS_AS(Dataset(Matrix::Zero(3, 2), Vector::Zero(2)), InvalidData);
  Matrix x = Matrix::Zero(2, 1);
  x(1, 0) = std::nan("");
  CHECK_THROWS_AS(Dataset(x, Vector::Zero(2)), InvalidData);
  CHECK_THROWS(Dataset(Matrix::Zero(2, 2), Vector::Zero(2), {"only_one"}));

  const Dataset d(Matrix::Identity(3, 3), Vector::LinSpaced(3, 0, 2));
  const std::vector<int> rows{2, 0};
  const Dataset s = d.subset(rows);
  CHECK(s.n() == 2);
  CHECK(s.responses()(0) == 2.0);
  CHECK(s.features()(1, 0) == 1.0);
}

TEST_CASE("SubsamplePlan rejects invalid index sets") {
  CHECK_THROWS_AS(SubsamplePlan(3, {{0, 1, 2}}), InvalidConfig);   // r == n
  CHECK_THROWS_AS(SubsamplePlan(3, {{0, 0}}), InvalidConfig);      // duplicate
  CHECK_THROWS_AS(SubsamplePlan(3, {{0, 3}}), InvalidConfig);      // out of range
  CHECK_THROWS_AS(SubsamplePlan(3, {{0, 1}, {2}}), InvalidConfig); // ragged
  CHECK_THROWS_AS(SubsamplePlan(3, {}), InvalidConfig);
}

TEST_CASE("compute_r follows floor(n^gamma)") {
  CHECK(compute_r(500, 0.9) == 268);
  CHECK(compute_r(500, 0.8) == 144);
  CHECK(compute_r(1000, 0.95) == 707);
  CHECK(compute_r(10, 1.0) == 9);
  CHECK(compute_r(2, 0.01) == 1);
  CHECK_THROWS_AS(compute_r(10, 0.0), InvalidConfig);
  CHECK_THROWS_AS(compute_r(1, 0.5), InvalidConfig);
}

TEST_CASE("UlearnConfig resolves r") {
  UlearnConfig c;
  c.gamma = 0.9;
  CHECK(c.resolve_r(500) == 268);
  c.r = 10;
  CHECK_THROWS_AS(c.resolve_r(500), InvalidConfig);
  c.gamma.reset();
  CHECK(c.resolve_r(500) == 10);
  c.r = 500;
  CHECK_THROWS_AS(c.resolve_r(500), InvalidConfig);
}

TEST_CASE("make_plan") {
  SUBCASE("row sums equal r") {
    const SubsamplePlan plan = make_plan(5, 4, 3, SeedSpec{1, 0});
    const Matrix J = plan.membership_matrix();
    for (int b = 0; b < 3; ++b) {
      CHECK(J.row(b).sum() == 4.0);
      CHECK(std::set<int>(plan.index_set(b).begin(), plan.index_set(b).end()).size() == 4);
    }
  }
  SUBCASE("inclusion frequency approximates r/n") {
    const SubsamplePlan plan = make_plan(10, 9, 10000, SeedSpec{2, 0});
    const Vector freq = plan.membership_matrix().colwise().mean();
    for (int i = 0; i < 10; ++i) CHECK(std::abs(freq(i) - 0.9) < 0.02);
  }
  SUBCASE("degenerate n=2, r=1") {
    const SubsamplePlan plan = make_plan(2, 1, 4, SeedSpec{3, 0});
    for (int b = 0; b < 4; ++b) {
      REQUIRE(plan.index_set(b).size() == 1);
      CHECK((plan.index_set(b)[0] == 0 || plan.index_set(b)[0] == 1));
    }
  }
  SUBCASE("membership and index sets agree") {
    for (int n = 2; n <= 30; ++n) {
      for (int r : {1, n / 2, n - 1}) {
        if (r < 1 || r >= n) continue;
        const SubsamplePlan plan = make_plan(n, r, 7, SeedSpec{static_cast<std::uint64_t>(n), 1});
        for (int b = 0; b < plan.B(); ++b) {
          std::vector<int> from_membership;
          for (int i = 0; i < n; ++i) {
            if (plan.member(b, i)) from_membership.push_back(i);
          }
          CHECK(from_membership == plan.index_set(b));
          std::vector<int> all = plan.complement(b);
          all.insert(all.end(), plan.index_set(b).begin(), plan.index_set(b).end());
          std::sort(all.begin(), all.end());
          std::vector<int> expect(static_cast<std::size_t>(n));
          std::iota(expect.begin(), expect.end(), 0);
          CHECK(all == expect);
        }
      }
    }
  }
  SUBCASE("errors and determinism") {
    CHECK_THROWS_AS(make_plan(5, 5, 3, SeedSpec{}), InvalidConfig);
    CHECK_THROWS_AS(make_plan(5, 2, 0, SeedSpec{}), InvalidConfig);
    CHECK(make_plan(20, 7, 30, SeedSpec{9, 2}) == make_plan(20, 7, 30, SeedSpec{9, 2}));
  }
}

TEST_CASE("ensemble_fit_predict") {
  const Dataset data(Matrix::Zero(4, 1), (Vector(4) << 1, 2, 3, 4).finished());
  const Matrix test = Matrix::Zero(2, 1);

  SUBCASE("constant learner gives constant predictions") {
    const auto res = ensemble_fit_predict(data, ConstantLearner(0.0), make_plan(4, 2, 5, SeedSpec{}),
                                          test, SeedSpec{});
    CHECK(res.predictions().isZero(0.0));
  }
  SUBCASE("mean learner on the enumerated plan") {
    const SubsamplePlan plan(4, {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}});
    const auto res = ensemble_fit_predict(data, MeanLearner(), plan, test, SeedSpec{});
    const double expect[4] = {2.0, 7.0 / 3.0, 8.0 / 3.0, 3.0};
    for (int b = 0; b < 4; ++b) CHECK(res.predictions()(b, 0) == doctest::Approx(expect[b]).epsilon(1e-15));
  }
  SUBCASE("fit failures carry the subsample index") {
    const SubsamplePlan plan(4, {{0, 1}, {1, 2}, {2, 3}});
    try {
      ensemble_fit_predict(data, testutil::FailingLearner(3.0), plan, test, SeedSpec{});
      FAIL("expected an exception");
    } catch (const FitFailure& e) {
      CHECK(std::string(e.what()).find("subsample 1") != std::string::npos);
    }
  }
  SUBCASE("shape checks") {
    CHECK_THROWS_AS(ensemble_fit_predict(data, MeanLearner(), make_plan(5, 2, 3, SeedSpec{}), test,
                                         SeedSpec{}),
                    InvalidConfig);
    CHECK_THROWS_AS(ensemble_fit_predict(data, MeanLearner(), make_plan(4, 2, 3, SeedSpec{}),
                                         Matrix::Zero(2, 3), SeedSpec{}),
                    InvalidConfig);
  }
}

TEST_CASE("Lasso ensemble is identical across runs and worker counts") {
  const Dataset data = testutil::random_dataset(60, 8, 11);
  const Matrix test = testutil::random_dataset(5, 8, 12).features();
  const SubsamplePlan plan = make_plan(60, 40, 24, SeedSpec{5, 0});
  const LassoLearner learner(2.0);
  const auto a = ensemble_fit_predict(data, learner, plan, test, SeedSpec{5, 1}, 1);
  const auto b = ensemble_fit_predict(data, learner, plan, test, SeedSpec{5, 1}, 1);
  const auto c = ensemble_fit_predict(data, learner, plan, test, SeedSpec{5, 1}, 4);
  CHECK(a.predictions() == b.predictions());
  CHECK(a.predictions() == c.predictions());
}

TEST_CASE("ensemble_mean") {
  Matrix p(3, 2);
  p << 1, 5, 2, 5, 3, 5;
  const EnsembleResult res(p, three_by_three());
  CHECK(ensemble_mean(res, 0) == 2.0);
  CHECK(ensemble_mean(res, 1) == 5.0);
  CHECK_THROWS_AS(ensemble_mean(res, 2), InvalidConfig);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  const SubsamplePlan big = make_plan(10, 5, 1000, SeedSpec{1, 1});
  Matrix col(1000, 1);
  for (int b = 0; b < 1000; ++b) col(b, 0) = u(rng);
  // Kahan-summed reference.
  double sum = 0.0, comp = 0.0;
  for (int b = 0; b < 1000; ++b) {
    const double y = col(b, 0) - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  const double mean = ensemble_mean(EnsembleResult(col, big), 0);
  CHECK(std::abs(mean - sum / 1000.0) <= 1e-12 * std::max(1.0, std::abs(mean)));
}

TEST_CASE("ij_variance") {
  SUBCASE("hand-computed 3x3 instance") {
    Matrix p(3, 1);
    p << 1, 2, 3;
    const EnsembleResult res(p, three_by_three());
    // Cov = (-1/3, 0, 1/3), scale (2/3)(3)^2 = 6.
    CHECK(ij_variance(res, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
    CHECK(ij_variance(res, 0) == doctest::Approx(naive_ij(three_by_three(), p.col(0))).epsilon(1e-15));
  }
  SUBCASE("zero for a constant column") {
    const EnsembleResult res(Matrix::Constant(3, 1, 2.5), three_by_three());
    CHECK(ij_variance(res, 0) == 0.0);
  }
  SUBCASE("quadratic homogeneity") {
    Matrix p(3, 1);
    p << 0.3, -1.2, 2.0;
    const double base = ij_variance(EnsembleResult(p, three_by_three()), 0);
    CHECK(ij_variance(EnsembleResult(-3.0 * p, three_by_three()), 0) ==
          doctest::Approx(9.0 * base).epsilon(1e-13));
  }
  SUBCASE("matches the naive loop on random instances") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
      const int n = std::uniform_int_distribution<int>(2, 12)(rng);
      const int r = std::uniform_int_distribution<int>(1, n - 1)(rng);
      const int B = std::uniform_int_distribution<int>(2, 50)(rng);
      const SubsamplePlan plan = make_plan(n, r, B, SeedSpec{rng(), 0});
      Matrix p = Matrix::Random(B, 3);
      const EnsembleResult res(p, plan);
      const Vector all = ij_variance_all(res);
      for (int t = 0; t < 3; ++t) {
        const double slow = naive_ij(plan, p.col(t));
        CHECK(std::abs(ij_variance(res, t) - slow) <= 1e-12 * std::max(slow, 1e-300));
        CHECK(all(t) == doctest::Approx(ij_variance(res, t)).epsilon(1e-13));
      }
    }
  }
  SUBCASE("B < 2 is rejected") {
    const EnsembleResult res(Matrix::Zero(1, 1), SubsamplePlan(3, {{0}}));
    CHECK_THROWS_AS(ij_variance(res, 0), InvalidConfig);
  }
  SUBCASE("Monte-Carlo correction lowers the estimate and is clamped at zero") {
    const SubsamplePlan plan = make_plan(12, 6, 40, SeedSpec{4, 4});
    const Matrix p = Matrix::Random(40, 1);
    const EnsembleResult res(p, plan);
    const double raw = ij_variance(res, 0);
    const double corrected = ij_variance(res, 0, IjOptions{true});
    CHECK(corrected <= raw);
    CHECK(corrected >= 0.0);
  }
}

TEST_CASE("normal quantile against a bisection oracle") {
  for (double p : {1e-10, 1e-6, 0.001, 0.025, 0.1, 0.3, 0.5, 0.7, 0.975, 0.999, 1 - 1e-9}) {
    // Bisect on the tail holding p so that the target is exact.
    const double tail = std::min(p, 1.0 - p);
    double lo = -40.0, hi = 0.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (normal_cdf(mid) < tail ? lo : hi) = mid;
    }
    const double oracle = p <= 0.5 ? 0.5 * (lo + hi) : -0.5 * (lo + hi);
    CAPTURE(p);
    CHECK(std::abs(normal_quantile(p) - oracle) < 1e-9);
  }
  CHECK(two_sided_z(0.05) == doctest::Approx(1.959964).epsilon(1e-7));
}

TEST_CASE("infer builds normal intervals") {
  SUBCASE("alpha 0.05 with sigma 1 around 0") {
    const auto inf = PredictionInference::make(0.0, 1.0, 0.05);
    CHECK(std::abs(inf.lower + 1.959964) < 1e-6);
    CHECK(std::abs(inf.upper - 1.959964) < 1e-6);
  }
  SUBCASE("zero sigma gives a point interval") {
    const EnsembleResult res(Matrix::Constant(3, 1, 4.0), three_by_three());
    const auto inf = infer(res, 0.05);
    CHECK(inf[0].lower == 4.0);
    CHECK(inf[0].upper == 4.0);
  }
  SUBCASE("narrower alpha nests and widths scale with z") {
    const SubsamplePlan plan = make_plan(10, 5, 30, SeedSpec{8, 0});
    const EnsembleResult res(Matrix::Random(30, 4), plan);
    const auto wide = infer(res, 0.05);
    const auto narrow = infer(res, 0.32);
    for (std::size_t t = 0; t < 4; ++t) {
      REQUIRE(wide[t].sigma_hat > 0.0);
      CHECK(narrow[t].lower > wide[t].lower);
      CHECK(narrow[t].upper < wide[t].upper);
      const double ratio = (narrow[t].upper - narrow[t].lower) / (wide[t].upper - wide[t].lower);
      CHECK(ratio == doctest::Approx(two_sided_z(0.32) / two_sided_z(0.05)).epsilon(1e-12));
      CHECK(wide[t].sigma_hat == doctest::Approx(std::sqrt(ij_variance(res, static_cast<Index>(t)))));
    }
  }
}

TEST_CASE("out-of-bag inference") {
  const Dataset data(Matrix::Zero(3, 1), (Vector(3) << 10, 20, 40).finished());

  SUBCASE("too few excluding subsamples is an error") {
    const SubsamplePlan plan = three_by_three();
    CHECK_THROWS_AS(oob_predict(data, MeanLearner(), plan, SeedSpec{}, 0.05), InvalidConfig);
  }
  SUBCASE("singletons twice: four rows exclude index 0") {
    const SubsamplePlan plan(3, {{0}, {0}, {1}, {1}, {2}, {2}});
    const auto inf = oob_predict(data, MeanLearner(), plan, SeedSpec{}, 0.05);
    REQUIRE(inf.size() == 3);
    CHECK(inf[0].y_hat == doctest::Approx((20.0 + 20.0 + 40.0 + 40.0) / 4.0));
    CHECK(inf[1].y_hat == doctest::Approx((10.0 + 10.0 + 40.0 + 40.0) / 4.0));
  }
  SUBCASE("restricted rows feed the same IJ formula") {
    const SubsamplePlan plan = make_plan(8, 3, 20, SeedSpec{6, 0});
    const Matrix preds = Matrix::Random(20, 8);
    const auto inf = oob_infer(plan, preds, 0.1);
    for (int i = 0; i < 8; ++i) {
      std::vector<std::vector<int>> sets;
      std::vector<double> col;
      for (int b = 0; b < 20; ++b) {
        if (plan.member(b, i)) continue;
        sets.push_back(plan.index_set(b));
        col.push_back(preds(b, i));
      }
      const SubsamplePlan restricted(8, sets);
      const Vector c = Eigen::Map<const Vector>(col.data(), static_cast<Index>(col.size()));
      CHECK(inf[static_cast<std::size_t>(i)].y_hat == doctest::Approx(c.mean()));
      CHECK(inf[static_cast<std::size_t>(i)].sigma_hat ==
            doctest::Approx(std::sqrt(naive_ij(restricted, c))).epsilon(1e-12));
    }
  }
  SUBCASE("constant learner") {
    const SubsamplePlan plan(3, {{0}, {0}, {1}, {1}, {2}, {2}});
    for (const auto& x : oob_predict(data, ConstantLearner(1.5), plan, SeedSpec{}, 0.05)) {
      CHECK(x.y_hat == 1.5);
      CHECK(x.sigma_hat == 0.0);
    }
  }
}

TEST_CASE("parallel_for reports the lowest failing index") {
  std::vector<int> out(50, 0);
  parallel_for(50, 4, [&](std::size_t i) { out[i] = static_cast<int>(i) * 2; });
  for (int i = 0; i < 50; ++i) CHECK(out[static_cast<std::size_t>(i)] == 2 * i);
  try {
    parallel_for(50, 4, [&](std::size_t i) {
      if (i == 13 || i == 40) throw std::runtime_error("boom");
    });
    FAIL("expected TaskFailure");
  } catch (const TaskFailure& f) {
    CHECK(f.index() == 13);
  }
}
