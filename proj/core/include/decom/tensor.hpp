#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace decom {

// Dense row-major matrix. Factor matrices, unfoldings and forecaster
// windows all use this type.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

struct Dims {
  std::size_t locations = 0;
  std::size_t features = 0;
  std::size_t times = 0;

  std::size_t size() const { return locations * features * times; }
  friend bool operator==(const Dims&, const Dims&) = default;
};

// Dense location x feature x time array stored as one contiguous block,
// location-major, then feature, then time. A default-constructed tensor is
// empty and only serves as a placeholder.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t locations, std::size_t features, std::size_t times, double fill = 0.0);
  Tensor3(Dims dims, std::vector<double> values);

  const Dims& dims() const { return dims_; }
  std::size_t locations() const { return dims_.locations; }
  std::size_t features() const { return dims_.features; }
  std::size_t times() const { return dims_.times; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t l, std::size_t m, std::size_t t) {
    return values_[(l * dims_.features + m) * dims_.times + t];
  }
  double operator()(std::size_t l, std::size_t m, std::size_t t) const {
    return values_[(l * dims_.features + m) * dims_.times + t];
  }

  // Bounds-checked access; throws ContractViolation.
  double at(std::size_t l, std::size_t m, std::size_t t) const;

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  // Copy of the time range [begin, end).
  Tensor3 time_slice(std::size_t begin, std::size_t end) const;
  // Copy restricted to the listed feature indices, in the given order.
  Tensor3 select_features(std::span<const std::size_t> features) const;

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  Dims dims_{};
  std::vector<double> values_;
};

// Rank-K CP model: A (L x K), B (M x K), C (T x K).
struct FactorSet {
  Matrix a;
  Matrix b;
  Matrix c;

  std::size_t rank() const { return static_cast<std::size_t>(a.cols()); }
  Dims dims() const;
  // Throws ContractViolation when column counts disagree.
  void validate() const;
  bool nonnegative() const;
};

// Mode-n unfolding following X(1) = (C kr B) A^T, X(2) = (C kr A) B^T and
// X(3) = (B kr A) C^T: the mode index runs along columns.
//   mode 1: (M*T) x L, row t*M + m
//   mode 2: (L*T) x M, row t*L + l
//   mode 3: (L*M) x T, row m*L + l
Matrix unfold(const Tensor3& x, int mode);
Tensor3 fold(const Matrix& unfolded, int mode, Dims dims);

// Column-wise Kronecker product; row i*b.rows() + j holds a(i,k)*b(j,k).
Matrix khatri_rao(const Matrix& a, const Matrix& b);

Tensor3 reconstruct(const FactorSet& f);

double frobenius_norm(const Tensor3& x);
double frobenius_norm(const Matrix& x);

}  // namespace decom
