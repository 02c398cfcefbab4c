#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vimm/error.hpp"
#include "vimm/interaction_matrix.hpp"
#include "vimm/model.hpp"
#include "vimm/rng.hpp"

namespace vimm {

struct Triplet {
  std::uint32_t user;
  std::uint32_t pos;
  std::uint32_t neg;
};

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log σ(x) without overflow on large |x|
inline double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

// Uniform (u, i+) over stored positive pairs; i− uniform over the items
// that are not positives of u. Rejection sampling with a bounded number
// of attempts, then an exact uniform draw over the complement so the
// sampler terminates even for near-saturated users.
class TripletSampler {
 public:
  TripletSampler(const InteractionMatrix& positives, std::uint64_t seed)
      : positives_(&positives), rng_(Rng::substream(seed, 91, 0)) {
    require(positives.nnz() > 0, "TripletSampler: no positive pairs");
    pairs_.reserve(positives.nnz());
    for (std::uint32_t u = 0; u < positives.user_count(); ++u)
      for (std::size_t e = positives.row_begin(u); e < positives.row_end(u); ++e)
        pairs_.emplace_back(u, positives.entry_item(e));
  }

  Triplet sample_one() {
    const auto [user, pos] = pairs_[rng_.uniform_index(pairs_.size())];
    return {user, pos, sample_negative(user)};
  }

  std::vector<Triplet> sample(std::size_t batch_size) {
    require(batch_size >= 1, "TripletSampler: batch size must be >= 1");
    std::vector<Triplet> batch;
    batch.reserve(batch_size);
    for (std::size_t t = 0; t < batch_size; ++t) batch.push_back(sample_one());
    return batch;
  }

  std::uint32_t sample_negative(std::uint32_t user) {
    const InteractionMatrix& p = *positives_;
    const std::size_t items = p.item_count();
    const std::size_t degree = p.row_end(user) - p.row_begin(user);
    require(degree < items, "user " + std::to_string(user) +
                                " has every item as a positive; cannot sample a negative");
    for (int attempt = 0; attempt < 256; ++attempt) {
      const auto j = static_cast<std::uint32_t>(rng_.uniform_index(items));
      if (!p.contains(user, j)) return j;
    }
    // uniform index into the sorted complement, resolved by walking the
    // positive row
    std::uint64_t pick = rng_.uniform_u64(items - degree);
    std::size_t e = p.row_begin(user);
    for (std::uint32_t j = 0; j < items; ++j) {
      if (e < p.row_end(user) && p.entry_item(e) == j) {
        ++e;
        continue;
      }
      if (pick == 0) return j;
      --pick;
    }
    throw error("negative sampling fallback exhausted for user " + std::to_string(user));
  }

 private:
  const InteractionMatrix* positives_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs_;
  Rng rng_;
};

struct BprResult {
  double loss = 0.0;            // summed over the batch, reg included
  std::size_t triplet_count = 0;
  std::vector<Matrix> grad_user0;  // aligned with model.tables()
  std::vector<Matrix> grad_item0;  // gradients of the summed loss
};

// Loss only (model must have aggregates from forward()); used by the
// finite-difference harness and for reporting.
//   L = Σ_t −log σ(ŷ(u,i+) − ŷ(u,i−))
//     + reg · Σ_t Σ_m (‖e⁰_u‖² + ‖e⁰_{i+}‖² + ‖e⁰_{i−}‖²)
inline double bpr_batch_loss(const EmbeddingModel& model, const std::vector<Triplet>& batch,
                             double reg) {
  double loss = 0.0;
  for (const Triplet& t : batch) {
    const double delta = model.score(t.user, t.pos) - model.score(t.user, t.neg);
    loss += -log_sigmoid(delta);
    if (reg != 0.0) {
      for (const auto& tab : model.tables()) {
        const double* ru = tab.user0.row(t.user);
        const double* rp = tab.item0.row(t.pos);
        const double* rn = tab.item0.row(t.neg);
        double sq = 0.0;
        for (std::size_t x = 0; x < model.dim(); ++x)
          sq += ru[x] * ru[x] + rp[x] * rp[x] + rn[x] * rn[x];
        loss += reg * sq;
      }
    }
  }
  return loss;
}

// Loss and exact gradients with respect to the layer-0 tables. The
// chain through propagation uses that the propagation operator is
// symmetric for both normalizations, so
//   dL/dX⁰ = Σ_{l=0..L} Pˡ G,  G = dL/d(aggregated tables),
// which is the forward propagation applied to G. G itself accumulates
// sequentially in triplet order, so results do not depend on workers.
inline BprResult bpr_loss_and_grad(const EmbeddingModel& model, const PropagationGraph& graph,
                                   const std::vector<Triplet>& batch, double reg,
                                   unsigned workers = 1) {
  const std::size_t m_count = model.tables().size();
  const std::size_t d = model.dim();
  BprResult out;
  out.triplet_count = batch.size();

  std::vector<Matrix> gu(m_count), gi(m_count);
  for (std::size_t mi = 0; mi < m_count; ++mi) {
    gu[mi] = Matrix(model.user_count(), d);
    gi[mi] = Matrix(model.item_count(), d);
  }

  for (const Triplet& t : batch) {
    require(t.pos != t.neg, "triplet with identical positive and negative item");
    const double delta = model.score(t.user, t.pos) - model.score(t.user, t.neg);
    out.loss += -log_sigmoid(delta);
    const double g = sigmoid(delta) - 1.0;  // d(−log σ(Δ))/dΔ
    for (std::size_t mi = 0; mi < m_count; ++mi) {
      const auto& tab = model.tables()[mi];
      const double* eu = tab.user_agg.row(t.user);
      const double* ep = tab.item_agg.row(t.pos);
      const double* en = tab.item_agg.row(t.neg);
      double* du = gu[mi].row(t.user);
      double* dp = gi[mi].row(t.pos);
      double* dn = gi[mi].row(t.neg);
      for (std::size_t x = 0; x < d; ++x) {
        du[x] += g * (ep[x] - en[x]);
        dp[x] += g * eu[x];
        dn[x] -= g * eu[x];
      }
    }
  }

  out.grad_user0 = gu;  // the l = 0 term
  out.grad_item0 = gi;
  Matrix next_u, next_i;
  for (std::size_t mi = 0; mi < m_count; ++mi) {
    Matrix cur_u = std::move(gu[mi]);
    Matrix cur_i = std::move(gi[mi]);
    for (std::size_t l = 1; l <= model.layer_count(); ++l) {
      graph.propagate_users(cur_i, next_u, workers);
      graph.propagate_items(cur_u, next_i, workers);
      out.grad_user0[mi].add_inplace(next_u);
      out.grad_item0[mi].add_inplace(next_i);
      std::swap(cur_u, next_u);
      std::swap(cur_i, next_i);
    }
  }

  if (reg != 0.0) {
    for (const Triplet& t : batch) {
      for (std::size_t mi = 0; mi < m_count; ++mi) {
        const auto& tab = model.tables()[mi];
        const double* ru = tab.user0.row(t.user);
        const double* rp = tab.item0.row(t.pos);
        const double* rn = tab.item0.row(t.neg);
        double sq = 0.0;
        double* du = out.grad_user0[mi].row(t.user);
        double* dp = out.grad_item0[mi].row(t.pos);
        double* dn = out.grad_item0[mi].row(t.neg);
        for (std::size_t x = 0; x < d; ++x) {
          sq += ru[x] * ru[x] + rp[x] * rp[x] + rn[x] * rn[x];
          du[x] += 2.0 * reg * ru[x];
          dp[x] += 2.0 * reg * rp[x];
          dn[x] += 2.0 * reg * rn[x];
        }
        out.loss += reg * sq;
      }
    }
  }
  return out;
}

}  // namespace vimm
