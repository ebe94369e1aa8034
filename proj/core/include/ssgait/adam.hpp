#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "ssgait/tensor.hpp"

namespace ssgait {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moment slots are keyed by parameter name and
// created on first use; one shared step counter drives the correction terms.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(const std::vector<Param*>& params);

  void set_lr(double lr) { cfg_.lr = lr; }
  double lr() const { return cfg_.lr; }
  std::uint64_t steps() const { return t_; }

 private:
  struct Slot {
    Tensor m, v;
  };

  AdamConfig cfg_;
  std::uint64_t t_ = 0;
  std::unordered_map<std::string, Slot> slots_;
};

}  // namespace ssgait
