#pragma once

#include "decom/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace decom {

struct CpdConfig {
  std::size_t rank = 1;
  bool nonnegative = true;
  std::size_t max_iters = 500;
  double rel_tol = 1e-8;  // stop when |fit change| drops below this
  std::uint64_t seed = 0;

  void validate() const;
};

struct CpdResult {
  FactorSet factors;
  double fit = 1.0;  // 1 - ||X - Xhat||_F / ||X||_F, or 1 for a zero tensor
  std::size_t iters_run = 0;
  bool converged = false;
  // Squared residual ||X - Xhat||_F^2 after each full sweep.
  std::vector<double> objective_trace;
  // Number of block solves that needed ridge jitter on the Gram matrix.
  std::size_t ridge_events = 0;
};

struct BlockSolve {
  Matrix factor;
  bool ridge_applied = false;
};

// One ALS block: the K-column F minimizing ||unfolding - kr * F^T||_F,
// optionally subject to F >= 0. The nonnegative variant runs HALS column
// sweeps until they stop improving, starting from whichever of the clipped
// least-squares solution or zero is better.
BlockSolve factor_update(const Matrix& unfolding, const Matrix& kr, bool nonnegative);

// Warm-started variant used inside cpd_fit: for nonnegative blocks performs
// `hals_sweeps` column sweeps from `current`; unconstrained blocks ignore it.
BlockSolve factor_update(const Matrix& unfolding, const Matrix& kr, bool nonnegative,
                         const Matrix& current, int hals_sweeps = 1);

// Block-coordinate ALS over A, B, C. Throws PreconditionError when a
// nonnegative fit is requested on a tensor with negative entries.
CpdResult cpd_fit(const Tensor3& x, const CpdConfig& cfg);

}  // namespace decom
