#include "norad/tensor.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdlib>
#include <numeric>
#include <sstream>

#include "norad/errors.hpp"

namespace norad {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive");
    n *= d;
  }
  return n;
}

int g_threads = 1;

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_product(shape_)) {
    throw DimensionError("data length does not match shape " + shape_str());
  }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
  Tensor t(std::move(shape));
  t.fill(value);
  return t;
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::row(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << ", ";
    os << shape_[i];
  }
  os << ')';
  return os.str();
}

std::size_t Tensor::rows() const {
  if (shape_.size() == 1) return 1;
  if (shape_.size() == 2) return shape_[0];
  throw DimensionError("rows() requires a 1-D or 2-D tensor, got " + shape_str());
}

std::size_t Tensor::cols() const {
  if (shape_.size() == 1) return shape_[0];
  if (shape_.size() == 2) return shape_[1];
  throw DimensionError("cols() requires a 1-D or 2-D tensor, got " + shape_str());
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double Tensor::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const EMat>;
using MMap = Eigen::Map<EMat>;

void gemm(const Tensor& a, bool transpose_a, const Tensor& b, bool transpose_b,
          Tensor& out, bool accumulate) {
  const std::size_t am = transpose_a ? a.cols() : a.rows();
  const std::size_t ak = transpose_a ? a.rows() : a.cols();
  const std::size_t bk = transpose_b ? b.cols() : b.rows();
  const std::size_t bn = transpose_b ? b.rows() : b.cols();
  if (ak != bk) {
    throw DimensionError("matmul inner dimensions disagree: " + a.shape_str() + " x " +
                         b.shape_str());
  }
  if (out.rows() != am || out.cols() != bn) {
    throw DimensionError("matmul output shape mismatch: " + out.shape_str());
  }
  CMap ma(a.data(), a.rows(), a.cols());
  CMap mb(b.data(), b.rows(), b.cols());
  MMap mo(out.data(), am, bn);
  if (!transpose_a && !transpose_b) {
    if (accumulate) mo.noalias() += ma * mb; else mo.noalias() = ma * mb;
  } else if (transpose_a && !transpose_b) {
    if (accumulate) mo.noalias() += ma.transpose() * mb; else mo.noalias() = ma.transpose() * mb;
  } else if (!transpose_a && transpose_b) {
    if (accumulate) mo.noalias() += ma * mb.transpose(); else mo.noalias() = ma * mb.transpose();
  } else {
    if (accumulate) mo.noalias() += ma.transpose() * mb.transpose();
    else mo.noalias() = ma.transpose() * mb.transpose();
  }
}

void set_num_threads(int n) {
  g_threads = n < 1 ? 1 : n;
  Eigen::setNbThreads(g_threads);
}

int num_threads() { return g_threads; }

void configure_threads_from_env() {
  const char* env = std::getenv("NORAD_THREADS");
  int n = 1;
  if (env != nullptr) {
    n = std::atoi(env);
    if (n < 1) n = 1;
  }
  set_num_threads(n);
}

}  // namespace norad
