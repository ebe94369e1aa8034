#include <cmath>
#include <vector>

#include "doctest.h"
#include "ssgait/errors.hpp"
#include "ssgait/rng.hpp"
#include "ssgait/triplet.hpp"

using namespace ssgait;

namespace {

Tensor rows(std::vector<double> vals, int n, int d) {
  Tensor t({n, d});
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = vals[static_cast<size_t>(i)];
  return t;
}

Tensor random_rows(int n, int d, Rng& rng) {
  Tensor t({n, d});
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
  return t;
}

// P identities x K embeddings, random.
void random_batch(int P, int K, int n, int d, Rng& rng, std::vector<Tensor>& emb,
                  std::vector<int>& labels) {
  emb.clear();
  labels.clear();
  for (int p = 0; p < P; ++p) {
    for (int k = 0; k < K; ++k) {
      emb.push_back(random_rows(n, d, rng));
      labels.push_back(p + 1);
    }
  }
}

std::int64_t expected_total(std::int64_t P, std::int64_t K) {
  return P * K * (K - 1) * (P - 1) * K;
}

}  // namespace

TEST_CASE("stripe distance averages per-row euclidean norms") {
  Tensor a = rows({0, 0, 3, 4}, 2, 2);
  Tensor b = rows({1, 0, 0, 0}, 2, 2);
  // Row norms: 1 and 5 -> mean 3.
  CHECK(stripe_distance(a, b) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(stripe_distance(a, a) == 0.0);
  CHECK_THROWS_AS(stripe_distance(a, Tensor({3, 2})), ShapeMismatch);
}

TEST_CASE("every admissible triple is enumerated") {
  Rng rng(1);
  for (int P = 2; P <= 6; ++P) {
    for (int K = 2; K <= 4; ++K) {
      std::vector<Tensor> emb;
      std::vector<int> labels;
      random_batch(P, K, 2, 3, rng, emb, labels);
      TripletStats st = triplet_loss_ba(emb, labels, 0.2);
      CHECK(st.total == expected_total(P, K));
      CHECK(st.active <= st.total);
    }
  }
  // The reference batch shape: 8 identities x 2 sequences.
  std::vector<Tensor> emb;
  std::vector<int> labels;
  random_batch(8, 2, 2, 3, rng, emb, labels);
  CHECK(triplet_loss_ba(emb, labels, 0.2).total == 224);
}

TEST_CASE("well-separated identities cost nothing") {
  // Two tight clusters 100 apart; margin 0.2 can't be violated.
  std::vector<Tensor> emb = {
      rows({0.0, 0.1}, 1, 2), rows({0.1, 0.0}, 1, 2),
      rows({100.0, 0.1}, 1, 2), rows({100.1, 0.0}, 1, 2)};
  std::vector<int> labels = {1, 1, 2, 2};
  TripletStats st = triplet_loss_ba(emb, labels, 0.2);
  CHECK(st.loss == 0.0);
  CHECK(st.active == 0);
  CHECK(st.total == expected_total(2, 2));

  // Backward in the zero-active regime leaves the gradients at zero.
  std::vector<Tensor> grads(emb.size(), Tensor({1, 2}));
  TripletStats back = triplet_loss_ba_backward(emb, labels, 0.2, grads);
  CHECK(back.loss == 0.0);
  for (const Tensor& g : grads) {
    for (std::int64_t i = 0; i < g.size(); ++i) CHECK(g[i] == 0.0);
  }
}

TEST_CASE("identical embeddings cost exactly the margin") {
  // All distances are zero, so every term is ReLU(margin) = margin.
  std::vector<Tensor> emb(4, rows({0.3, -0.7}, 1, 2));
  std::vector<int> labels = {1, 1, 2, 2};
  TripletStats st = triplet_loss_ba(emb, labels, 0.25);
  CHECK(st.active == st.total);
  CHECK(st.loss == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("the mean runs over active terms only") {
  // Identity 1 at 0 and 1; identity 2 at 10 and 13.
  // D(0,1)=1, D(0,10)=10, D(0,13)=13, D(1,10)=9, D(1,13)=12, D(10,13)=3.
  std::vector<Tensor> emb = {rows({0}, 1, 1), rows({1}, 1, 1), rows({10}, 1, 1),
                             rows({13}, 1, 1)};
  std::vector<int> labels = {1, 1, 2, 2};
  // With margin 2.5: triples of identity 2 anchors have D_ap=3 and
  // D_an in {9,10,12,13}: terms 2.5+3-9 .. all negative. Identity 1 anchors:
  // D_ap=1, D_an in {9,10,12,13}: all negative. No active.
  CHECK(triplet_loss_ba(emb, labels, 2.5).active == 0);
  // With margin 6.5: only (a=1,p=0,n=2) gives 6.5+1-9 = -1.5 ... still < 0;
  // (a=10,p=13,n=1): 6.5+3-9 = 0.5 active; (a=10,p=13,n=0): 6.5+3-10=-0.5;
  // (a=13,p=10,n=1): 6.5+3-12 < 0; (a=13,p=10,n=0): < 0;
  // (a=1,p=0,n=2): -1.5; (a=1,p=0,n=3): 6.5+1-12<0; (a=0,...) even farther.
  TripletStats st = triplet_loss_ba(emb, labels, 6.5);
  CHECK(st.active == 1);
  CHECK(st.loss == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("gradients match finite differences away from the hinge kinks") {
  Rng rng(5);
  std::vector<Tensor> emb;
  std::vector<int> labels;
  random_batch(3, 2, 2, 3, rng, emb, labels);
  const double margin = 0.4;

  std::vector<Tensor> grads(emb.size(), Tensor({2, 3}));
  TripletStats st = triplet_loss_ba_backward(emb, labels, margin, grads);
  REQUIRE(st.active > 0);  // random small embeddings violate a 0.4 margin

  const double h = 1e-6;
  for (size_t e = 0; e < emb.size(); ++e) {
    for (std::int64_t i = 0; i < emb[e].size(); ++i) {
      const double keep = emb[e][i];
      emb[e][i] = keep + h;
      const TripletStats up = triplet_loss_ba(emb, labels, margin);
      emb[e][i] = keep - h;
      const TripletStats dn = triplet_loss_ba(emb, labels, margin);
      emb[e][i] = keep;
      // Skip probes whose bump flips a hinge (active-set change).
      if (up.active != st.active || dn.active != st.active) continue;
      const double fd = (up.loss - dn.loss) / (2.0 * h);
      const double an = grads[e][i];
      CHECK(std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-3}) < 1e-5);
    }
  }
}

TEST_CASE("degenerate batches are rejected") {
  Tensor e = rows({1, 2}, 1, 2);
  std::vector<Tensor> one_id = {e, e, e};
  CHECK_THROWS_AS(triplet_loss_ba(one_id, {1, 1, 1}, 0.2), DegenerateBatch);

  std::vector<Tensor> lonely = {e, e, e};
  CHECK_THROWS_AS(triplet_loss_ba(lonely, {1, 1, 2}, 0.2), DegenerateBatch);

  CHECK_THROWS_AS(triplet_loss_ba({e, e}, {1, 1, 2}, 0.2), ShapeMismatch);
}
