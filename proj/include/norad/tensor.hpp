#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace norad {

/// Dense row-major tensor of 64-bit floats.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor full(std::vector<std::size_t> shape, double value);
  static Tensor scalar(double value);
  static Tensor row(std::initializer_list<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::initializer_list<double> values);
  static Tensor identity(std::size_t n);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t ndim() const { return shape_.size(); }
  std::size_t numel() const { return data_.size(); }
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  std::string shape_str() const;

  // 2-D accessors; a 1-D tensor behaves as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  double& operator()(std::size_t i) { return data_[i]; }
  double operator()(std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols() + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols() + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  void fill(double value);
  bool all_finite() const;
  double max_abs() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

/// out (+)= op_a(a) * op_b(b), dense double GEMM.
void gemm(const Tensor& a, bool transpose_a, const Tensor& b, bool transpose_b,
          Tensor& out, bool accumulate);

/// Thread count for parallel kernels; 1 selects sequential arithmetic.
void set_num_threads(int n);
int num_threads();

/// Reads NORAD_THREADS (default 1) and applies it.
void configure_threads_from_env();

}  // namespace norad
