#include "ssgait/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

#include "ssgait/errors.hpp"

namespace ssgait {

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
  if (shape_.empty() || shape_.size() > 4) {
    throw std::invalid_argument("Tensor rank must be 1..4");
  }
  std::int64_t total = 1;
  for (int d : shape_) {
    if (d <= 0) throw std::invalid_argument("Tensor dims must be positive");
    total *= d;
  }
  stride_.assign(shape_.size() > 1 ? shape_.size() - 1 : 0, 1);
  std::int64_t s = 1;
  for (int i = static_cast<int>(shape_.size()) - 1; i >= 1; --i) {
    s *= shape_[static_cast<size_t>(i)];
    stride_[static_cast<size_t>(i - 1)] = s;
  }
  v_.assign(static_cast<size_t>(total), 0.0);
}

Tensor::Tensor(std::initializer_list<int> shape) : Tensor(std::vector<int>(shape)) {}

void Tensor::zero() { std::memset(v_.data(), 0, v_.size() * sizeof(double)); }

void Tensor::fill(double x) {
  for (auto& e : v_) e = x;
}

bool Tensor::all_finite() const {
  for (double e : v_) {
    if (!std::isfinite(e)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << "x";
    os << shape_[i];
  }
  os << "]";
  return os.str();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* ctx) {
  if (!a.same_shape(b)) {
    throw ShapeMismatch(std::string(ctx) + ": shape " + a.shape_str() + " vs " + b.shape_str());
  }
}

}  // namespace ssgait
