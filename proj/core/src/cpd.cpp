#include "decom/cpd.hpp"

#include "decom/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace decom {

namespace {

constexpr double kRidgeScale = 1e-10;
constexpr double kPivotFloor = 1e-14;
constexpr int kColdHalsSweeps = 1000;

// Solves F * gram = mttkrp for F. Adds ridge jitter when the Gram matrix is
// numerically singular; an all-zero Gram yields a zero factor.
BlockSolve least_squares_block(const Matrix& mttkrp, const Matrix& gram) {
  const double trace = gram.trace();
  const auto k = gram.rows();
  if (!(trace > 0.0)) return {Matrix::Zero(mttkrp.rows(), mttkrp.cols()), true};

  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  const auto d = ldlt.vectorD().cwiseAbs();
  const bool degenerate = ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
                          d.minCoeff() <= kPivotFloor * d.maxCoeff();
  if (!degenerate) {
    Matrix f = ldlt.solve(mttkrp.transpose()).transpose();
    return {std::move(f), false};
  }
  Eigen::MatrixXd ridged = gram;
  ridged.diagonal().array() += kRidgeScale * trace / static_cast<double>(k);
  Eigen::LDLT<Eigen::MatrixXd> ridge_ldlt(ridged);
  Matrix f = ridge_ldlt.solve(mttkrp.transpose()).transpose();
  return {std::move(f), true};
}

// One HALS pass over the columns of f (in place).
void hals_sweep(Matrix& f, const Matrix& mttkrp, const Matrix& gram) {
  for (Eigen::Index k = 0; k < f.cols(); ++k) {
    const double gkk = gram(k, k);
    if (!(gkk > 0.0)) continue;
    Vector col = f.col(k) + (mttkrp.col(k) - f * gram.col(k)) / gkk;
    f.col(k) = col.cwiseMax(0.0);
  }
}

// ||U - kr F^T||^2 up to the constant ||U||^2, from Gram quantities.
double block_objective(const Matrix& f, const Matrix& mttkrp, const Matrix& gram) {
  return (f.transpose() * f).cwiseProduct(gram).sum() - 2.0 * f.cwiseProduct(mttkrp).sum();
}

void check_block_shapes(const Matrix& unfolding, const Matrix& kr) {
  if (kr.rows() != unfolding.rows()) {
    throw ContractViolation("factor_update: khatri-rao rows (" + std::to_string(kr.rows()) +
                            ") must equal unfolding rows (" + std::to_string(unfolding.rows()) + ")");
  }
  if (kr.cols() < 1) throw ContractViolation("factor_update: rank must be at least 1");
}

Matrix random_factor(std::size_t rows, std::size_t rank, bool nonnegative, std::mt19937_64& rng) {
  Matrix f(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(rank));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < f.rows(); ++i)
    for (Eigen::Index k = 0; k < f.cols(); ++k) f(i, k) = nonnegative ? uniform(rng) : normal(rng);
  return f;
}

// Moves all scale into C: A and B get unit-norm columns.
void normalize_into_c(FactorSet& f) {
  for (Eigen::Index k = 0; k < f.a.cols(); ++k) {
    const double na = f.a.col(k).norm();
    const double nb = f.b.col(k).norm();
    if (na > 0.0 && nb > 0.0) {
      f.a.col(k) /= na;
      f.b.col(k) /= nb;
      f.c.col(k) *= na * nb;
    }
  }
}

double squared_residual(const Tensor3& x, const FactorSet& f) {
  const Tensor3 xhat = reconstruct(f);
  double sum = 0.0;
  const auto xv = x.values();
  const auto hv = xhat.values();
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double d = xv[i] - hv[i];
    sum += d * d;
  }
  return sum;
}

}  // namespace

void CpdConfig::validate() const {
  if (rank < 1) throw ConfigError("cpd rank must be at least 1");
  if (max_iters < 1) throw ConfigError("cpd max_iters must be at least 1");
  if (!(rel_tol > 0.0)) throw ConfigError("cpd rel_tol must be positive");
}

BlockSolve factor_update(const Matrix& unfolding, const Matrix& kr, bool nonnegative) {
  check_block_shapes(unfolding, kr);
  const Matrix gram = kr.transpose() * kr;
  const Matrix mttkrp = unfolding.transpose() * kr;
  BlockSolve ls = least_squares_block(mttkrp, gram);
  if (!nonnegative || (ls.factor.array() >= 0.0).all()) return ls;

  Matrix f = ls.factor.cwiseMax(0.0);
  const Matrix zero = Matrix::Zero(f.rows(), f.cols());
  if (block_objective(f, mttkrp, gram) > block_objective(zero, mttkrp, gram)) f = zero;
  double prev = block_objective(f, mttkrp, gram);
  for (int sweep = 0; sweep < kColdHalsSweeps; ++sweep) {
    hals_sweep(f, mttkrp, gram);
    const double obj = block_objective(f, mttkrp, gram);
    const double scale = std::max(1.0, std::abs(prev));
    if (prev - obj <= 1e-15 * scale) break;
    prev = obj;
  }
  return {std::move(f), ls.ridge_applied};
}

BlockSolve factor_update(const Matrix& unfolding, const Matrix& kr, bool nonnegative,
                         const Matrix& current, int hals_sweeps) {
  check_block_shapes(unfolding, kr);
  const Matrix gram = kr.transpose() * kr;
  const Matrix mttkrp = unfolding.transpose() * kr;
  if (!nonnegative) return least_squares_block(mttkrp, gram);
  if (current.rows() != unfolding.cols() || current.cols() != kr.cols()) {
    throw ContractViolation("factor_update: warm start has the wrong shape");
  }
  Matrix f = current;
  for (int s = 0; s < hals_sweeps; ++s) hals_sweep(f, mttkrp, gram);
  return {std::move(f), false};
}

CpdResult cpd_fit(const Tensor3& x, const CpdConfig& cfg) {
  cfg.validate();
  if (x.empty()) throw PreconditionError("cpd_fit: empty tensor");
  if (cfg.nonnegative) {
    for (double v : x.values()) {
      if (v < 0.0 || std::isnan(v)) {
        throw PreconditionError("cpd_fit: nonnegative fit requires a nonnegative tensor");
      }
    }
  }
  const auto [L, M, T] = x.dims();
  const auto K = static_cast<Eigen::Index>(cfg.rank);
  CpdResult result;
  const double norm_x = frobenius_norm(x);
  if (norm_x == 0.0) {
    result.factors = {Matrix::Zero(static_cast<Eigen::Index>(L), K),
                      Matrix::Zero(static_cast<Eigen::Index>(M), K),
                      Matrix::Zero(static_cast<Eigen::Index>(T), K)};
    result.fit = 1.0;
    result.converged = true;
    result.objective_trace.push_back(0.0);
    return result;
  }

  std::mt19937_64 rng(cfg.seed);
  FactorSet& f = result.factors;
  f.a = random_factor(L, cfg.rank, cfg.nonnegative, rng);
  f.b = random_factor(M, cfg.rank, cfg.nonnegative, rng);
  f.c = random_factor(T, cfg.rank, cfg.nonnegative, rng);

  const Matrix x1 = unfold(x, 1);
  const Matrix x2 = unfold(x, 2);
  const Matrix x3 = unfold(x, 3);

  double prev_fit = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
    BlockSolve sa = factor_update(x1, khatri_rao(f.c, f.b), cfg.nonnegative, f.a);
    f.a = std::move(sa.factor);
    BlockSolve sb = factor_update(x2, khatri_rao(f.c, f.a), cfg.nonnegative, f.b);
    f.b = std::move(sb.factor);
    BlockSolve sc = factor_update(x3, khatri_rao(f.b, f.a), cfg.nonnegative, f.c);
    f.c = std::move(sc.factor);
    result.ridge_events += static_cast<std::size_t>(sa.ridge_applied) +
                           static_cast<std::size_t>(sb.ridge_applied) +
                           static_cast<std::size_t>(sc.ridge_applied);
    normalize_into_c(f);

    const double obj = squared_residual(x, f);
    result.objective_trace.push_back(obj);
    result.fit = 1.0 - std::sqrt(obj) / norm_x;
    result.iters_run = iter + 1;
    if (!std::isnan(prev_fit) && std::abs(result.fit - prev_fit) < cfg.rel_tol) {
      result.converged = true;
      break;
    }
    prev_fit = result.fit;
  }
  return result;
}

}  // namespace decom
