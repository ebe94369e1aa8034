#pragma once

#include <cstdint>
#include <vector>

#include "ssgait/tensor.hpp"

namespace ssgait {

// Mean per-stripe Euclidean distance between two [n,d] embeddings.
double stripe_distance(const Tensor& a, const Tensor& b);

struct TripletStats {
  double loss = 0.0;
  std::int64_t total = 0;   // enumerated (anchor, positive, negative) triples
  std::int64_t active = 0;  // triples with a nonzero hinge term
};

// Batch-all triplet loss: every (anchor, same-identity positive,
// other-identity negative) triple contributes ReLU(margin + D_ap - D_an);
// the loss is the mean over ACTIVE (nonzero) terms, or 0 when none are.
// Requires >= 2 identities and >= 2 embeddings per identity.
TripletStats triplet_loss_ba(const std::vector<Tensor>& embeddings,
                             const std::vector<int>& labels, double margin);

// Same, accumulating d(loss)/d(embedding) into grads (pre-sized like
// embeddings, zeroed by the caller).
TripletStats triplet_loss_ba_backward(const std::vector<Tensor>& embeddings,
                                      const std::vector<int>& labels, double margin,
                                      std::vector<Tensor>& grads);

}  // namespace ssgait
