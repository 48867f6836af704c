#include "decom/tensor.hpp"

#include "decom/error.hpp"

#include <cmath>
#include <string>

namespace decom {

namespace {

void check_mode(int mode) {
  if (mode < 1 || mode > 3) {
    throw ContractViolation("unfold: mode must be 1, 2 or 3, got " + std::to_string(mode));
  }
}

void check_dims(const Dims& d) {
  if (d.locations == 0 || d.features == 0 || d.times == 0) {
    throw ContractViolation("tensor dimensions must all be at least 1");
  }
}

}  // namespace

Tensor3::Tensor3(std::size_t locations, std::size_t features, std::size_t times, double fill)
    : dims_{locations, features, times} {
  check_dims(dims_);
  values_.assign(dims_.size(), fill);
}

Tensor3::Tensor3(Dims dims, std::vector<double> values) : dims_(dims), values_(std::move(values)) {
  check_dims(dims_);
  if (values_.size() != dims_.size()) {
    throw ContractViolation("tensor value count " + std::to_string(values_.size()) +
                            " does not match dimensions");
  }
}

double Tensor3::at(std::size_t l, std::size_t m, std::size_t t) const {
  if (l >= dims_.locations || m >= dims_.features || t >= dims_.times) {
    throw ContractViolation("tensor index out of range");
  }
  return (*this)(l, m, t);
}

Tensor3 Tensor3::time_slice(std::size_t begin, std::size_t end) const {
  if (begin >= end || end > dims_.times) {
    throw ContractViolation("time_slice: invalid range [" + std::to_string(begin) + ", " +
                            std::to_string(end) + ")");
  }
  Tensor3 out(dims_.locations, dims_.features, end - begin);
  for (std::size_t l = 0; l < dims_.locations; ++l)
    for (std::size_t m = 0; m < dims_.features; ++m)
      for (std::size_t t = begin; t < end; ++t) out(l, m, t - begin) = (*this)(l, m, t);
  return out;
}

Tensor3 Tensor3::select_features(std::span<const std::size_t> features) const {
  if (features.empty()) throw ContractViolation("select_features: empty feature list");
  Tensor3 out(dims_.locations, features.size(), dims_.times);
  for (std::size_t l = 0; l < dims_.locations; ++l) {
    for (std::size_t j = 0; j < features.size(); ++j) {
      if (features[j] >= dims_.features) throw ContractViolation("select_features: index out of range");
      for (std::size_t t = 0; t < dims_.times; ++t) out(l, j, t) = (*this)(l, features[j], t);
    }
  }
  return out;
}

Dims FactorSet::dims() const {
  return {static_cast<std::size_t>(a.rows()), static_cast<std::size_t>(b.rows()),
          static_cast<std::size_t>(c.rows())};
}

void FactorSet::validate() const {
  if (a.cols() < 1 || b.cols() != a.cols() || c.cols() != a.cols()) {
    throw ContractViolation("factor matrices must share a positive column count");
  }
  if (a.rows() < 1 || b.rows() < 1 || c.rows() < 1) {
    throw ContractViolation("factor matrices must have at least one row");
  }
}

bool FactorSet::nonnegative() const {
  return (a.array() >= 0.0).all() && (b.array() >= 0.0).all() && (c.array() >= 0.0).all();
}

Matrix unfold(const Tensor3& x, int mode) {
  check_mode(mode);
  const auto [L, M, T] = x.dims();
  Matrix out;
  switch (mode) {
    case 1:
      out.resize(static_cast<Eigen::Index>(M * T), static_cast<Eigen::Index>(L));
      for (std::size_t l = 0; l < L; ++l)
        for (std::size_t m = 0; m < M; ++m)
          for (std::size_t t = 0; t < T; ++t) out(t * M + m, l) = x(l, m, t);
      break;
    case 2:
      out.resize(static_cast<Eigen::Index>(L * T), static_cast<Eigen::Index>(M));
      for (std::size_t l = 0; l < L; ++l)
        for (std::size_t m = 0; m < M; ++m)
          for (std::size_t t = 0; t < T; ++t) out(t * L + l, m) = x(l, m, t);
      break;
    default:
      out.resize(static_cast<Eigen::Index>(L * M), static_cast<Eigen::Index>(T));
      for (std::size_t l = 0; l < L; ++l)
        for (std::size_t m = 0; m < M; ++m)
          for (std::size_t t = 0; t < T; ++t) out(m * L + l, t) = x(l, m, t);
      break;
  }
  return out;
}

Tensor3 fold(const Matrix& unfolded, int mode, Dims dims) {
  check_mode(mode);
  check_dims(dims);
  const auto [L, M, T] = dims;
  const auto rows = static_cast<std::size_t>(unfolded.rows());
  const auto cols = static_cast<std::size_t>(unfolded.cols());
  const bool ok = (mode == 1 && rows == M * T && cols == L) ||
                  (mode == 2 && rows == L * T && cols == M) ||
                  (mode == 3 && rows == L * M && cols == T);
  if (!ok) throw ContractViolation("fold: matrix shape does not match dimensions for mode " +
                                   std::to_string(mode));
  Tensor3 x(L, M, T);
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t t = 0; t < T; ++t) {
        switch (mode) {
          case 1: x(l, m, t) = unfolded(t * M + m, l); break;
          case 2: x(l, m, t) = unfolded(t * L + l, m); break;
          default: x(l, m, t) = unfolded(m * L + l, t); break;
        }
      }
  return x;
}

Matrix khatri_rao(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ContractViolation("khatri_rao: column counts differ (" + std::to_string(a.cols()) +
                            " vs " + std::to_string(b.cols()) + ")");
  }
  Matrix out(a.rows() * b.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    out.middleRows(i * b.rows(), b.rows()) = b.array().rowwise() * a.row(i).array();
  }
  return out;
}

Tensor3 reconstruct(const FactorSet& f) {
  f.validate();
  const Matrix unfolded = khatri_rao(f.c, f.b) * f.a.transpose();
  return fold(unfolded, 1, f.dims());
}

double frobenius_norm(const Tensor3& x) {
  double sum = 0.0;
  for (double v : x.values()) sum += v * v;
  return std::sqrt(sum);
}

double frobenius_norm(const Matrix& x) { return x.norm(); }

}  // namespace decom
