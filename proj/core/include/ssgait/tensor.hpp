#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ssgait {

// Dense row-major double tensor, rank 1..4. All model math runs in 64-bit.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::initializer_list<int> shape);

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

  int ndim() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  const std::vector<int>& shape() const { return shape_; }
  std::int64_t size() const { return static_cast<std::int64_t>(v_.size()); }
  bool empty() const { return v_.empty(); }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }

  // Pointer to the start of slice `i` along the first axis.
  double* row(int i) { return v_.data() + static_cast<std::int64_t>(i) * stride_[0]; }
  const double* row(int i) const {
    return v_.data() + static_cast<std::int64_t>(i) * stride_[0];
  }

  double& operator[](std::int64_t i) { return v_[static_cast<size_t>(i)]; }
  double operator[](std::int64_t i) const { return v_[static_cast<size_t>(i)]; }

  double& operator()(int i) { return v_[static_cast<size_t>(i)]; }
  double operator()(int i) const { return v_[static_cast<size_t>(i)]; }
  double& operator()(int i, int j) { return v_[static_cast<size_t>(i * stride_[0] + j)]; }
  double operator()(int i, int j) const { return v_[static_cast<size_t>(i * stride_[0] + j)]; }
  double& operator()(int i, int j, int k) {
    return v_[static_cast<size_t>(i * stride_[0] + j * stride_[1] + k)];
  }
  double operator()(int i, int j, int k) const {
    return v_[static_cast<size_t>(i * stride_[0] + j * stride_[1] + k)];
  }
  double& operator()(int i, int j, int k, int l) {
    return v_[static_cast<size_t>(i * stride_[0] + j * stride_[1] + k * stride_[2] + l)];
  }
  double operator()(int i, int j, int k, int l) const {
    return v_[static_cast<size_t>(i * stride_[0] + j * stride_[1] + k * stride_[2] + l)];
  }

  void zero();
  void fill(double x);
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool all_finite() const;

  std::string shape_str() const;

 private:
  std::vector<int> shape_;
  std::vector<std::int64_t> stride_;  // strides for dims 0..ndim-2; last dim stride 1
  std::vector<double> v_;
};

// Named learnable block. Gradients accumulate into `grad` until the optimizer
// consumes them. Non-learnable blocks (BN running stats) keep grad unused.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
  bool learnable = true;

  Param() = default;
  Param(std::string n, std::vector<int> shape, bool learn = true)
      : name(std::move(n)), value(shape), grad(std::move(shape)), learnable(learn) {}

  void zero_grad() { grad.zero(); }
};

void require_same_shape(const Tensor& a, const Tensor& b, const char* ctx);

}  // namespace ssgait
