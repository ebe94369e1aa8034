#include "ssgait/triplet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "ssgait/errors.hpp"

namespace ssgait {

double stripe_distance(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "stripe distance");
  const int n = a.dim(0), d = a.dim(1);
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    double q = 0.0;
    for (int j = 0; j < d; ++j) {
      const double diff = a(i, j) - b(i, j);
      q += diff * diff;
    }
    s += std::sqrt(q);
  }
  return s / n;
}

namespace {

void check_batch(const std::vector<Tensor>& embeddings, const std::vector<int>& labels) {
  if (embeddings.size() != labels.size()) {
    throw ShapeMismatch("embedding/label count mismatch");
  }
  std::map<int, int> counts;
  for (int l : labels) ++counts[l];
  if (counts.size() < 2) {
    throw DegenerateBatch("triplet batch needs >= 2 identities, got " +
                          std::to_string(counts.size()));
  }
  for (const auto& [l, c] : counts) {
    if (c < 2) {
      throw DegenerateBatch("identity " + std::to_string(l) + " has " +
                            std::to_string(c) + " embeddings, need >= 2");
    }
  }
}

struct Enumerated {
  TripletStats stats;
  // coef[a][b]: accumulated d(loss)/d(D_ab) over active triples, filled only
  // when grads are wanted. D is symmetric but coefficients are kept per
  // ordered pair as enumerated.
  std::vector<std::vector<double>> coef;
};

Enumerated enumerate(const std::vector<Tensor>& embeddings, const std::vector<int>& labels,
                     double margin, bool want_coef) {
  check_batch(embeddings, labels);
  const int B = static_cast<int>(embeddings.size());

  std::vector<std::vector<double>> dist(static_cast<size_t>(B),
                                        std::vector<double>(static_cast<size_t>(B), 0.0));
  for (int i = 0; i < B; ++i) {
    for (int j = i + 1; j < B; ++j) {
      dist[static_cast<size_t>(i)][static_cast<size_t>(j)] =
          stripe_distance(embeddings[static_cast<size_t>(i)], embeddings[static_cast<size_t>(j)]);
      dist[static_cast<size_t>(j)][static_cast<size_t>(i)] =
          dist[static_cast<size_t>(i)][static_cast<size_t>(j)];
    }
  }

  Enumerated out;
  if (want_coef) {
    out.coef.assign(static_cast<size_t>(B), std::vector<double>(static_cast<size_t>(B), 0.0));
  }
  double sum = 0.0;
  // First pass counts, second pass spreads 1/active into the coefficients.
  for (int pass = 0; pass < (want_coef ? 2 : 1); ++pass) {
    if (pass == 1 && out.stats.active == 0) break;
    const double inv_active = pass == 1 ? 1.0 / static_cast<double>(out.stats.active) : 0.0;
    for (int a = 0; a < B; ++a) {
      for (int p = 0; p < B; ++p) {
        if (p == a || labels[static_cast<size_t>(p)] != labels[static_cast<size_t>(a)]) continue;
        for (int g = 0; g < B; ++g) {
          if (labels[static_cast<size_t>(g)] == labels[static_cast<size_t>(a)]) continue;
          const double term = margin + dist[static_cast<size_t>(a)][static_cast<size_t>(p)] -
                              dist[static_cast<size_t>(a)][static_cast<size_t>(g)];
          if (pass == 0) {
            ++out.stats.total;
            if (term > 0.0) {
              ++out.stats.active;
              sum += term;
            }
          } else if (term > 0.0) {
            out.coef[static_cast<size_t>(a)][static_cast<size_t>(p)] += inv_active;
            out.coef[static_cast<size_t>(a)][static_cast<size_t>(g)] -= inv_active;
          }
        }
      }
    }
  }
  out.stats.loss = out.stats.active > 0 ? sum / static_cast<double>(out.stats.active) : 0.0;
  return out;
}

}  // namespace

TripletStats triplet_loss_ba(const std::vector<Tensor>& embeddings,
                             const std::vector<int>& labels, double margin) {
  return enumerate(embeddings, labels, margin, false).stats;
}

TripletStats triplet_loss_ba_backward(const std::vector<Tensor>& embeddings,
                                      const std::vector<int>& labels, double margin,
                                      std::vector<Tensor>& grads) {
  Enumerated e = enumerate(embeddings, labels, margin, true);
  if (e.stats.active == 0) return e.stats;
  const int B = static_cast<int>(embeddings.size());
  const int n = embeddings[0].dim(0), d = embeddings[0].dim(1);
  for (int a = 0; a < B; ++a) {
    for (int b = 0; b < B; ++b) {
      const double c = e.coef[static_cast<size_t>(a)][static_cast<size_t>(b)];
      if (c == 0.0) continue;
      const Tensor& ea = embeddings[static_cast<size_t>(a)];
      const Tensor& eb = embeddings[static_cast<size_t>(b)];
      for (int i = 0; i < n; ++i) {
        double q = 0.0;
        for (int j = 0; j < d; ++j) {
          const double diff = ea(i, j) - eb(i, j);
          q += diff * diff;
        }
        const double nrm = std::sqrt(q);
        if (nrm <= 0.0) continue;  // kink of the norm: subgradient 0
        const double f = c / (n * nrm);
        for (int j = 0; j < d; ++j) {
          const double diff = ea(i, j) - eb(i, j);
          grads[static_cast<size_t>(a)](i, j) += f * diff;
          grads[static_cast<size_t>(b)](i, j) -= f * diff;
        }
      }
    }
  }
  return e.stats;
}

}  // namespace ssgait
