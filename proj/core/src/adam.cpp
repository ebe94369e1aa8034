#include "ssgait/adam.hpp"

#include <cmath>

#include "ssgait/errors.hpp"

namespace ssgait {

void Adam::step(const std::vector<Param*>& params) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (Param* p : params) {
    if (!p->learnable) continue;
    Slot& s = slots_[p->name];
    if (s.m.empty()) {
      s.m = Tensor(p->value.shape());
      s.v = Tensor(p->value.shape());
    } else {
      require_same_shape(s.m, p->value, "adam slot");
    }
    double* val = p->value.data();
    const double* g = p->grad.data();
    double* m = s.m.data();
    double* v = s.v.data();
    const std::int64_t n = p->value.size();
    for (std::int64_t i = 0; i < n; ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      val[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace ssgait
