#include "ulearn/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <string>

namespace ulearn {

Vector project_l1(const Vector& v, double K) {
  if (!(K > 0.0)) throw InvalidConfig("project_l1: K must be positive");
  const double norm = v.lpNorm<1>();
  if (norm <= K) return v;

  std::vector<double> u(static_cast<std::size_t>(v.size()));
  for (Index j = 0; j < v.size(); ++j) u[static_cast<std::size_t>(j)] = std::abs(v(j));
  std::sort(u.begin(), u.end(), std::greater<>());

  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double candidate = (cumulative - K) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) theta = candidate;
  }

  Vector out(v.size());
  for (Index j = 0; j < v.size(); ++j) {
    const double shrunk = std::max(std::abs(v(j)) - theta, 0.0);
    out(j) = v(j) < 0.0 ? -shrunk : shrunk;
  }
  return out;
}

namespace {

// Centered least-squares problem f(beta) = ||yc - Xc beta||^2 / (2m).
// When p <= m the Gram matrix is cached and "aux" is G beta; otherwise aux is
// Xc beta and the design is applied directly.
class CenteredLeastSquares {
 public:
  CenteredLeastSquares(const Matrix& X, const Vector& y)
      : m_(static_cast<double>(X.rows())),
        x_mean_(X.colwise().mean().transpose()),
        y_mean_(y.mean()),
        use_gram_(X.cols() <= X.rows()) {
    Matrix xc = X.rowwise() - x_mean_.transpose();
    Vector yc = y.array() - y_mean_;
    if (use_gram_) {
      gram_ = (xc.transpose() * xc) / m_;
      xty_ = (xc.transpose() * yc) / m_;
      yy_ = yc.squaredNorm() / (2.0 * m_);
    } else {
      xc_ = std::move(xc);
      yc_ = std::move(yc);
    }
  }

  Index dim() const { return x_mean_.size(); }
  const Vector& x_mean() const { return x_mean_; }
  double y_mean() const { return y_mean_; }
  double rows() const { return m_; }

  Vector aux(const Vector& beta) const {
    return use_gram_ ? Vector(gram_ * beta) : Vector(xc_ * beta);
  }

  double value(const Vector& beta, const Vector& aux) const {
    if (use_gram_) return std::max(0.5 * beta.dot(aux) - xty_.dot(beta) + yy_, 0.0);
    return (aux - yc_).squaredNorm() / (2.0 * m_);
  }

  Vector gradient(const Vector& aux) const {
    if (use_gram_) return aux - xty_;
    return xc_.transpose() * (aux - yc_) / m_;
  }

  // d^T H d with H = Xc^T Xc / m, given aux differences for d.
  double curvature(const Vector& d, const Vector& aux_diff) const {
    if (use_gram_) return d.dot(aux_diff);
    return aux_diff.squaredNorm() / m_;
  }

  // Largest eigenvalue of Xc^T Xc / m by 20 power iterations.
  double lipschitz() const {
    Vector v = Vector::Ones(dim()) / std::sqrt(static_cast<double>(std::max<Index>(dim(), 1)));
    double lambda = 0.0;
    for (int it = 0; it < 20; ++it) {
      Vector w = use_gram_ ? Vector(gram_ * v) : Vector(xc_.transpose() * (xc_ * v) / m_);
      const double norm = w.norm();
      if (norm == 0.0) return 0.0;
      lambda = v.dot(w);
      v = w / norm;
    }
    return lambda;
  }

 private:
  double m_;
  Vector x_mean_;
  double y_mean_;
  bool use_gram_;
  Matrix gram_;
  Vector xty_;
  double yy_ = 0.0;
  Matrix xc_;
  Vector yc_;
};

void validate_lasso_inputs(const Matrix& X, const Vector& y, double K, double tol) {
  if (X.rows() < 1) throw InvalidConfig("lasso_fit: need at least one row");
  if (X.rows() != y.size()) throw InvalidConfig("lasso_fit: X rows and y length differ");
  if (!(K > 0.0)) throw InvalidConfig("lasso_fit: K must be positive");
  if (!(tol > 0.0)) throw InvalidConfig("lasso_fit: tol must be positive");
  require_finite(X, "lasso_fit X");
  require_finite(y, "lasso_fit y");
}

struct Certificate {
  double gap = 0.0;       // Frank-Wolfe duality gap on the scaled problem
  double residual = 0.0;  // projected-gradient fixed-point residual
};

Certificate certify(const Vector& beta, const Vector& grad, double K, double step) {
  Certificate c;
  c.gap = std::max(grad.dot(beta) + K * grad.lpNorm<Eigen::Infinity>(), 0.0);
  c.residual = (beta - project_l1(beta - step * grad, K)).lpNorm<Eigen::Infinity>();
  return c;
}

}  // namespace

double lasso_objective(const Matrix& X, const Vector& y, double intercept, const Vector& beta) {
  return ((y - X * beta).array() - intercept).matrix().squaredNorm();
}

double lasso_fixed_point_residual(const Matrix& X, const Vector& y, const Vector& beta,
                                  double K, double step) {
  const CenteredLeastSquares problem(X, y);
  const Vector grad = problem.gradient(problem.aux(beta));
  return (beta - project_l1(beta - step * grad, K)).lpNorm<Eigen::Infinity>();
}

LassoFit lasso_fit(const Matrix& X, const Vector& y, double K, double tol, int max_iter,
                   const Vector& warm_start) {
  validate_lasso_inputs(X, y, K, tol);
  const CenteredLeastSquares problem(X, y);
  const Index p = problem.dim();

  double lipschitz = problem.lipschitz();
  if (!(lipschitz > 0.0)) lipschitz = 1.0;  // zero design: any step is exact

  Vector beta = Vector::Zero(p);
  if (warm_start.size() == p) beta = project_l1(warm_start, K);
  Vector beta_aux = problem.aux(beta);
  Vector prev = beta;
  Vector prev_aux = beta_aux;
  double t = 1.0;

  constexpr int kCheckEvery = 10;
  Certificate last;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    if (iter % kCheckEvery == 0) {
      const double f = problem.value(beta, beta_aux);
      last = certify(beta, problem.gradient(beta_aux), K, 1.0 / lipschitz);
      // Gap is in f units; tol is relative to 1 + ||.||^2 = 1 + 2 m f.
      const double gap_tol = tol * (1.0 / (2.0 * problem.rows()) + f);
      if (last.gap <= gap_tol && last.residual <= tol) break;
    }

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double momentum = (t - 1.0) / t_next;
    const Vector z = beta + momentum * (beta - prev);
    const Vector z_aux = beta_aux + momentum * (beta_aux - prev_aux);
    const Vector grad = problem.gradient(z_aux);

    Vector candidate;
    Vector candidate_aux;
    for (;;) {
      candidate = project_l1(z - grad / lipschitz, K);
      candidate_aux = problem.aux(candidate);
      const Vector d = candidate - z;
      const double curvature = problem.curvature(d, candidate_aux - z_aux);
      if (curvature <= lipschitz * d.squaredNorm() * (1.0 + 1e-10)) break;
      lipschitz *= 2.0;
    }

    // Gradient-based adaptive restart.
    const bool restart = (z - candidate).dot(candidate - beta) > 0.0;
    prev = std::move(beta);
    prev_aux = std::move(beta_aux);
    beta = std::move(candidate);
    beta_aux = std::move(candidate_aux);
    t = restart ? 1.0 : t_next;
    if (restart) {
      prev = beta;
      prev_aux = beta_aux;
    }
  }
  if (iter >= max_iter) {
    throw FitFailure("lasso_fit: no convergence after " + std::to_string(max_iter) +
                     " iterations (gap " + std::to_string(last.gap) + ", residual " +
                     std::to_string(last.residual) + ")");
  }

  LassoFit fit;
  fit.coefficients = beta;
  fit.intercept = problem.y_mean() - problem.x_mean().dot(beta);
  fit.K = K;
  fit.train_rows = static_cast<int>(X.rows());
  fit.objective = 2.0 * problem.rows() * problem.value(beta, beta_aux);
  fit.step = 1.0 / lipschitz;
  fit.iterations = iter;
  return fit;
}

std::vector<double> default_K_grid(const Dataset& data, int points) {
  if (points < 1) throw InvalidConfig("default_K_grid: need at least one point");
  const Matrix xc = data.features().rowwise() - data.features().colwise().mean();
  const Vector yc = data.responses().array() - data.responses().mean();
  const double ridge = 1e-6 * std::max(xc.squaredNorm() / std::max<Index>(xc.cols(), 1), 1e-12);

  Vector beta;
  if (xc.cols() <= xc.rows()) {
    Matrix a = xc.transpose() * xc;
    a.diagonal().array() += ridge;
    beta = a.ldlt().solve(xc.transpose() * yc);
  } else {
    Matrix a = xc * xc.transpose();
    a.diagonal().array() += ridge;
    beta = xc.transpose() * a.ldlt().solve(yc);
  }
  double proxy = beta.lpNorm<1>();
  if (!(proxy > 0.0) || !std::isfinite(proxy)) proxy = 1.0;

  std::vector<double> grid(static_cast<std::size_t>(points));
  const double lo = std::log(0.01 * proxy);
  const double hi = std::log(10.0 * proxy);
  for (int k = 0; k < points; ++k) {
    const double frac = points == 1 ? 1.0 : static_cast<double>(k) / (points - 1);
    grid[static_cast<std::size_t>(k)] = std::exp(lo + frac * (hi - lo));
  }
  return grid;
}

double select_K_cv(const Dataset& data, int folds, std::vector<double> grid,
                   const SeedSpec& seed, double tol, int max_iter) {
  if (folds < 2) throw InvalidConfig("select_K_cv: need at least 2 folds");
  if (grid.empty()) throw InvalidConfig("select_K_cv: empty K grid");
  for (double k : grid) {
    if (!(k > 0.0)) throw InvalidConfig("select_K_cv: grid values must be positive");
  }
  if (data.n() / folds < 2) {
    throw InvalidConfig("select_K_cv: folds would hold fewer than 2 rows");
  }
  std::sort(grid.begin(), grid.end());
  if (grid.size() == 1) return grid.front();

  std::vector<int> order(static_cast<std::size_t>(data.n()));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(seed, 0));
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<double> total_error(grid.size(), 0.0);
  for (int f = 0; f < folds; ++f) {
    std::vector<int> train_rows;
    std::vector<int> test_rows;
    for (std::size_t k = 0; k < order.size(); ++k) {
      (static_cast<int>(k % static_cast<std::size_t>(folds)) == f ? test_rows : train_rows)
          .push_back(order[k]);
    }
    const Dataset train = data.subset(train_rows);
    const Dataset test = data.subset(test_rows);
    Vector warm;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const LassoFit fit =
          lasso_fit(train.features(), train.responses(), grid[g], tol, max_iter, warm);
      warm = fit.coefficients;
      const Vector resid =
          (test.responses() - test.features() * fit.coefficients).array() - fit.intercept;
      total_error[g] += resid.squaredNorm() / static_cast<double>(resid.size());
    }
  }
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (total_error[g] < total_error[best]) best = g;
  }
  return grid[best];
}

// ---------------------------------------------------------------- learner

namespace {

class LinearPredictor final : public FittedPredictor {
 public:
  LinearPredictor(double intercept, Vector coefficients)
      : intercept_(intercept), coefficients_(std::move(coefficients)) {}

  Vector predict(const Matrix& rows) const override {
    if (rows.cols() != coefficients_.size()) {
      throw InvalidConfig("LinearPredictor: feature count mismatch");
    }
    return (rows * coefficients_).array() + intercept_;
  }

 private:
  double intercept_;
  Vector coefficients_;
};

}  // namespace

LassoLearner::LassoLearner(double K, LassoOptions options, Vector warm_start)
    : K_(K), options_(options), warm_start_(std::move(warm_start)) {
  if (!(K_ > 0.0)) throw InvalidConfig("LassoLearner: K must be positive");
}

LassoFit LassoLearner::fit_coefficients(const Dataset& train) const {
  if (!options_.standardize) {
    return lasso_fit(train.features(), train.responses(), K_, options_.tol, options_.max_iter,
                     warm_start_);
  }
  const Vector mean = train.features().colwise().mean().transpose();
  Vector sd = ((train.features().rowwise() - mean.transpose()).colwise().squaredNorm() /
               static_cast<double>(train.n()))
                  .cwiseSqrt()
                  .transpose();
  for (Index j = 0; j < sd.size(); ++j) {
    if (!(sd(j) > 0.0)) sd(j) = 1.0;
  }
  const Matrix scaled =
      (train.features().rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array();
  LassoFit fit =
      lasso_fit(scaled, train.responses(), K_, options_.tol, options_.max_iter, warm_start_);
  fit.coefficients = fit.coefficients.cwiseQuotient(sd);
  fit.intercept -= mean.dot(fit.coefficients);
  return fit;
}

std::unique_ptr<FittedPredictor> LassoLearner::fit(const Dataset& train, const Dataset&,
                                                   std::uint64_t) const {
  LassoFit fit = fit_coefficients(train);
  return std::make_unique<LinearPredictor>(fit.intercept, std::move(fit.coefficients));
}

}  // namespace ulearn
