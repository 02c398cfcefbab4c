// Acceptance gate. Runs twelve independent criteria and prints exactly
// one PASS/FAIL line per criterion with the measured values; exits 0
// only when every criterion passes. Tolerances and the full experiment
// protocol (dataset shape, seeds, hyper-parameters) are pinned below so
// a regression in any numeric path flips a line to FAIL.
//
// argv[1]: path to the command-line binary (used by the determinism
// criterion, which re-runs every subcommand and compares artifacts).

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "support/oracles.hpp"
#include "vimm/vimm.hpp"

namespace fs = std::filesystem;

namespace {

// ---- pinned protocol ----

namespace pin {

// Shared synthetic dataset for the hypothesis, end-to-end, cold-start
// and robustness criteria.
constexpr std::size_t kUsers = 300;
constexpr std::size_t kItems = 500;
constexpr std::size_t kClusters = 8;
constexpr std::size_t kPerUser = 10;
constexpr double kAffinityNoise = 0.2;
constexpr std::uint64_t kDatasetSeed = 0;

// Augmentation operating point.
constexpr std::size_t kNeighbors = 10;
constexpr double kLambda = 1e-2;

// Training protocol for the comparison criteria.
constexpr std::uint64_t kSplitSeed = 11;
constexpr std::size_t kDim = 32;
constexpr std::size_t kLayers = 2;
constexpr std::size_t kEpochs = 30;
constexpr std::size_t kPatience = 30;
constexpr std::size_t kBatch = 2048;
constexpr double kLr = 5e-3;
constexpr double kReg = 1e-4;
constexpr std::size_t kEvalK = 10;
constexpr std::uint64_t kSeeds[] = {1, 2, 3, 4, 5};
constexpr unsigned kWorkers = 4;

// Cold-start protocol.
constexpr std::uint64_t kColdSeed = 11;
constexpr double kColdHoldout = 0.1;
constexpr double kBprThreshold = 0.02;

// Tolerances.
constexpr double kMcRelTol = 0.05;       // Monte-Carlo vs exact coverage
constexpr double kAugTol = 1e-6;         // augmentation vs dense oracle
constexpr double kPropTol = 1e-6;        // propagation vs dense oracle
constexpr double kGradRelTol = 1e-4;     // finite differences, relative
constexpr double kGradAbsTol = 1e-6;     // finite differences, floor
constexpr double kSynergyGap = 0.02;     // allowed shortfall of O_syn
constexpr double kJaccardMin = 0.9;      // noisy vs clean neighbor sets

}  // namespace pin

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

const vimm::Dataset& pinned_dataset() {
  static const vimm::Dataset ds = [] {
    vimm::SyntheticConfig cfg;
    cfg.user_count = pin::kUsers;
    cfg.item_count = pin::kItems;
    cfg.cluster_count = pin::kClusters;
    cfg.interactions_per_user = pin::kPerUser;
    cfg.modality_dims = {{"v", 16}, {"t", 24}, {"a", 20}};
    cfg.affinity_noise = pin::kAffinityNoise;
    cfg.seed = pin::kDatasetSeed;
    return vimm::generate_synthetic(cfg);
  }();
  return ds;
}

vimm::TrainConfig pinned_train_config(std::uint64_t seed) {
  vimm::TrainConfig t;
  t.learning_rate = pin::kLr;
  t.epochs = pin::kEpochs;
  t.batch_size = pin::kBatch;
  t.layers = pin::kLayers;
  t.dim = pin::kDim;
  t.seed = seed;
  t.reg = pin::kReg;
  t.patience = pin::kPatience;
  t.norm = vimm::NormMode::paper;
  t.eval_k = pin::kEvalK;
  t.workers = pin::kWorkers;
  return t;
}

vimm::PipelineConfig pinned_pipeline_config() {
  vimm::PipelineConfig p;
  p.strategy = vimm::AugmentStrategy::overlay;
  p.k = pin::kNeighbors;
  p.lambda = pin::kLambda;
  p.workers = pin::kWorkers;
  return p;
}

// ---- C1: blocked top-k equals the quadratic brute force ----

Outcome c1_topk_oracle() {
  vimm::Rng rng = vimm::Rng::substream(2026, 1);
  std::size_t tie_reps = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t items = rep == 0 ? 500 : 30 + rng.uniform_index(221);
    const std::size_t mod_count = 1 + rng.uniform_index(3);
    const std::size_t k = rep == 1 ? items + 10 : 1 + rng.uniform_index(25);
    const unsigned workers = rep % 2 ? 4 : 1;
    const std::size_t block = rep % 3 == 0 ? 1 : (rep % 3 == 1 ? 33 : 128);
    const bool force_ties = rep % 3 == 0;
    if (force_ties) ++tie_reps;

    std::map<std::string, vimm::ModalityEmbeddings> mods;
    for (std::size_t m = 0; m < mod_count; ++m) {
      const std::size_t dim =
          rep == 2 ? 64 : (force_ties ? 1 + rng.uniform_index(2) : 1 + rng.uniform_index(64));
      const std::string name(1, static_cast<char>('p' + m));
      vimm::ModalityEmbeddings emb = oracle::random_embeddings(
          name, items, dim, 9000 + static_cast<std::uint64_t>(rep) * 8 + m);
      if (force_ties)  // duplicated rows give exact score ties
        for (std::size_t i = 0; i + 1 < items && i < 12; i += 2)
          std::copy(emb.row(i), emb.row(i) + dim, emb.row(i + 1));
      mods.emplace(name, std::move(emb));
    }

    for (const auto& [name, emb] : mods) {
      const vimm::NeighborTable fast = vimm::topk_modality(emb, k, workers, block);
      const vimm::NeighborTable ref = vimm::topk_modality_bruteforce(emb, k);
      if (!(fast == ref))
        return {false, fmt("rep %d modality '%s': blocked table differs from brute force", rep,
                           name.c_str())};
    }
    const vimm::NeighborTable fast = vimm::topk_synergistic(mods, k, workers, block);
    const vimm::NeighborTable ref = vimm::topk_synergistic_bruteforce(mods, k);
    if (!(fast == ref))
      return {false, fmt("rep %d: blocked synergistic table differs from brute force", rep)};
  }
  return {true, fmt("blocked == brute force on 50/50 datasets (|I|<=500, d<=64, "
                    "score ties forced in %zu)",
                    tie_reps)};
}

// ---- C2: virtual construction equals the triple loop ----

Outcome c2_virtual_oracle() {
  vimm::Rng rng = vimm::Rng::substream(2026, 2);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t users = 3 + rng.uniform_index(38);
    const std::size_t items = 4 + rng.uniform_index(57);
    const double density = 0.02 + 0.18 * rng.uniform_real();
    const std::size_t k = 1 + rng.uniform_index(8);
    const unsigned workers = rep % 2 ? 5 : 1;
    const vimm::InteractionMatrix real =
        oracle::random_interactions(users, items, density, 4100 + rep);
    const vimm::ModalityEmbeddings emb =
        oracle::random_embeddings("v", items, 1 + rng.uniform_index(16), 4300 + rep);
    const vimm::NeighborTable table =
        rep % 4 == 0 ? vimm::topk_synergistic({{"v", emb}}, k, workers)
                     : vimm::topk_modality(emb, k, workers);

    const vimm::InteractionMatrix mine = vimm::build_virtual(real, table, workers);
    const vimm::InteractionMatrix ref = oracle::build_virtual_bruteforce(real, table);
    if (oracle::to_map(mine) != oracle::to_map(ref) || mine.kind() != ref.kind())
      return {false, fmt("rep %d: build_virtual differs from the triple loop", rep)};
    if (mine.nnz() > k * real.nnz())
      return {false, fmt("rep %d: |virtual| = %zu exceeds k|real| = %zu", rep, mine.nnz(),
                         k * real.nnz())};
  }
  return {true, "build_virtual == triple loop on 50/50 instances; |virtual| <= k|real| throughout"};
}

// ---- C3: Monte-Carlo coverage vs the exact probability ----

Outcome c3_coverage() {
  constexpr std::size_t users = 100, items = 200, nnz = 800, k = 5;
  std::set<std::pair<std::uint32_t, std::uint32_t>> cells;
  vimm::Rng rng = vimm::Rng::substream(4242, 1);
  while (cells.size() < nnz)
    cells.insert({static_cast<std::uint32_t>(rng.uniform_index(users)),
                  static_cast<std::uint32_t>(rng.uniform_index(items))});
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs(cells.begin(), cells.end());
  const vimm::InteractionMatrix real = vimm::InteractionMatrix::from_pairs(users, items, pairs);

  const double cell_count = static_cast<double>(users) * static_cast<double>(items);
  const double exact =
      1.0 - std::pow(1.0 - 1.0 / cell_count, static_cast<double>(k) * static_cast<double>(nnz));
  const double mc = vimm::o_avg_montecarlo(users, items, real, k, 10000, 7, 4);
  const double rel = std::abs(mc - exact) / exact;
  const double analytic = vimm::o_avg_analytic(users, items, nnz, k);

  const bool ok = rel <= pin::kMcRelTol && analytic == 0.2;
  return {ok, fmt("mc=%.6f exact=%.6f rel=%.2f%% (tol 5%%); analytic=%.17g (== 0.2 %s)", mc, exact,
                  100.0 * rel, analytic, analytic == 0.2 ? "exactly" : "FAILED")};
}

// ---- C4: augmentation invariants and the dense oracle ----

Outcome c4_augment_oracle() {
  vimm::Rng rng = vimm::Rng::substream(2026, 4);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t users = 3 + rng.uniform_index(28);
    const std::size_t items = 4 + rng.uniform_index(37);
    const vimm::InteractionMatrix real =
        oracle::random_interactions(users, items, 0.03 + 0.2 * rng.uniform_real(), 5100 + rep);
    const std::size_t mod_count = 1 + rng.uniform_index(3);
    const std::size_t k = 1 + rng.uniform_index(5);
    const double lambda = rep % 10 == 0 ? 0.0 : 1.5 * rng.uniform_real();
    const unsigned workers = rep % 2 ? 3 : 1;

    std::map<std::string, vimm::InteractionMatrix> virtuals;
    std::map<std::string, double> weights;
    std::vector<std::pair<const vimm::InteractionMatrix*, double>> weighted;
    for (std::size_t m = 0; m < mod_count; ++m) {
      const std::string name(1, static_cast<char>('p' + m));
      const vimm::ModalityEmbeddings emb = oracle::random_embeddings(
          name, items, 1 + rng.uniform_index(12), 5400 + rep * 8 + static_cast<int>(m));
      virtuals.emplace(name,
                       vimm::build_virtual(real, vimm::topk_modality(emb, k, workers), workers));
      weights[name] = 0.1 + 2.4 * rng.uniform_real();
    }
    for (const auto& [name, virt] : virtuals) weighted.emplace_back(&virt, weights.at(name));

    const bool synergistic_path = rep % 4 == 3;
    vimm::InteractionMatrix aug;
    oracle::DenseMap ref;
    if (synergistic_path) {
      const auto& [name, virt] = *virtuals.begin();
      aug = vimm::synergistic_augment(real, virt, weights.at(name), lambda, true, workers);
      ref = oracle::augment_bruteforce(real, {{&virt, weights.at(name)}}, lambda, true,
                                       vimm::kAugmentStorageEpsilon);
    } else {
      aug = vimm::overlay_augment(real, virtuals, weights, lambda, true, workers);
      ref = oracle::augment_bruteforce(real, weighted, lambda, true,
                                       vimm::kAugmentStorageEpsilon);
    }

    if (aug.user_count() != real.user_count() || aug.item_count() != real.item_count())
      return {false, fmt("rep %d: augmented shape differs from the real matrix", rep)};

    std::set<std::pair<std::uint32_t, std::uint32_t>> support;
    const auto add_support = [&](const vimm::InteractionMatrix& m) {
      for (std::uint32_t u = 0; u < m.user_count(); ++u)
        for (std::size_t e = m.row_begin(u); e < m.row_end(u); ++e)
          support.insert({u, m.entry_item(e)});
    };
    add_support(real);
    if (synergistic_path)
      add_support(virtuals.begin()->second);
    else
      for (const auto& [_, virt] : virtuals) add_support(virt);

    const oracle::DenseMap mine = oracle::to_map(aug);
    for (std::uint32_t u = 0; u < aug.user_count(); ++u)
      for (std::size_t e = aug.row_begin(u); e < aug.row_end(u); ++e) {
        const double w = aug.entry_weight(e);
        if (w < 0.0 || w > 1.0)
          return {false, fmt("rep %d: weight %.17g outside [0,1]", rep, w)};
        if (!support.count({u, aug.entry_item(e)}))
          return {false, fmt("rep %d: entry outside the real+virtual support", rep)};
      }
    for (std::uint32_t u = 0; u < real.user_count(); ++u)
      for (std::size_t e = real.row_begin(u); e < real.row_end(u); ++e) {
        const auto it = mine.find({u, real.entry_item(e)});
        if (it == mine.end() || it->second != 1.0)
          return {false, fmt("rep %d: real entry no longer weighs exactly 1", rep)};
      }
    if (lambda == 0.0 && mine != oracle::to_map(real))
      return {false, fmt("rep %d: lambda=0 is not the identity", rep)};
    if (mine.size() != ref.size())
      return {false, fmt("rep %d: support size %zu vs oracle %zu", rep, mine.size(), ref.size())};
    for (const auto& [cell, w] : ref) {
      const auto it = mine.find(cell);
      if (it == mine.end()) return {false, fmt("rep %d: oracle entry missing", rep)};
      worst = std::max(worst, std::abs(it->second - w));
    }
    if (worst > pin::kAugTol)
      return {false, fmt("rep %d: |augmented - oracle| = %.3g exceeds 1e-6", rep, worst)};
  }
  return {true, fmt("100/100 instances hold all invariants; max |augmented - oracle| = %.2e "
                    "(tol 1e-6)",
                    worst)};
}

// ---- C5: propagation equals the dense normalized multiply ----

Outcome c5_propagation_oracle() {
  vimm::Rng rng = vimm::Rng::substream(2026, 5);
  double worst = 0.0;
  int configs = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t users = 3 + rng.uniform_index(48);
    const std::size_t items = 3 + rng.uniform_index(std::min<std::size_t>(48, 100 - users - 2));
    const std::size_t dim = 1 + rng.uniform_index(8);
    std::vector<vimm::InteractionMatrix::Entry> entries;
    for (std::uint32_t u = 0; u < users; ++u)
      for (std::uint32_t i = 0; i < items; ++i)
        if (rng.uniform_real() < 0.25)
          entries.push_back({u, i, 0.05 + 0.95 * rng.uniform_real()});
    if (entries.empty()) entries.push_back({0, 0, 1.0});
    const vimm::InteractionMatrix adj = vimm::InteractionMatrix::from_entries(
        users, items, std::move(entries), vimm::MatrixKind::augmented);

    vimm::Matrix user_table(users, dim), item_table(items, dim);
    for (double& x : user_table.v) x = 2.0 * rng.uniform_real() - 1.0;
    for (double& x : item_table.v) x = 2.0 * rng.uniform_real() - 1.0;

    for (const vimm::NormMode mode : {vimm::NormMode::paper, vimm::NormMode::sqrt_degree}) {
      ++configs;
      const vimm::PropagationGraph graph(adj, mode);
      vimm::Matrix out_users, out_items;
      graph.propagate_users(item_table, out_users, rep % 2 ? 4 : 1);
      graph.propagate_items(user_table, out_items, rep % 2 ? 4 : 1);
      const oracle::DensePropagation ref =
          oracle::propagate_bruteforce(adj, user_table, item_table, mode);
      for (std::size_t u = 0; u < users; ++u)
        for (std::size_t x = 0; x < dim; ++x)
          worst = std::max(worst, std::abs(out_users.row(u)[x] - ref.users[u][x]));
      for (std::size_t i = 0; i < items; ++i)
        for (std::size_t x = 0; x < dim; ++x)
          worst = std::max(worst, std::abs(out_items.row(i)[x] - ref.items[i][x]));
    }
  }
  const bool ok = worst <= pin::kPropTol;
  return {ok, fmt("%d weighted graphs (<=100 nodes, both normalizations); max abs error = %.2e "
                  "(tol 1e-6)",
                  configs, worst)};
}

// ---- C6: BPR gradients vs central finite differences ----

Outcome c6_gradcheck() {
  double worst_rel = 0.0;
  std::size_t params_checked = 0;
  for (const std::size_t layers : {std::size_t{1}, std::size_t{2}}) {
    const vimm::NormMode mode = layers == 1 ? vimm::NormMode::paper : vimm::NormMode::sqrt_degree;
    constexpr std::size_t users = 6, items = 8, dim = 3;
    vimm::Rng rng = vimm::Rng::substream(2026, 6, layers);

    std::vector<vimm::InteractionMatrix::Entry> entries;
    for (std::uint32_t u = 0; u < users; ++u) {
      std::set<std::uint32_t> row;
      const std::size_t degree = 2 + rng.uniform_index(4);
      while (row.size() < degree) row.insert(static_cast<std::uint32_t>(rng.uniform_index(items)));
      for (const std::uint32_t i : row) entries.push_back({u, i, 0.2 + 0.8 * rng.uniform_real()});
    }
    const vimm::InteractionMatrix adj = vimm::InteractionMatrix::from_entries(
        users, items, std::move(entries), vimm::MatrixKind::augmented);
    const vimm::PropagationGraph graph(adj, mode);

    vimm::EmbeddingModel model(users, items, dim, layers, mode, {"t", "v"});
    model.init_random(17 + layers);
    vimm::TripletSampler sampler(adj, 23 + layers);
    const std::vector<vimm::Triplet> batch = sampler.sample(8);
    constexpr double reg = 0.01;

    model.forward(graph, 1);
    const vimm::BprResult res = vimm::bpr_loss_and_grad(model, graph, batch, reg, 1);

    const auto check_table = [&](vimm::Matrix& table, const vimm::Matrix& grad,
                                 const char* label) -> Outcome {
      for (std::size_t p = 0; p < table.v.size(); ++p) {
        const double x0 = table.v[p];
        const double h = 1e-6 * std::max(1.0, std::abs(x0));
        table.v[p] = x0 + h;
        model.forward(graph, 1);
        const double up = vimm::bpr_batch_loss(model, batch, reg);
        table.v[p] = x0 - h;
        model.forward(graph, 1);
        const double down = vimm::bpr_batch_loss(model, batch, reg);
        table.v[p] = x0;
        const double fd = (up - down) / (2.0 * h);
        const double an = grad.v[p];
        const double err = std::abs(fd - an);
        const double scale = std::max(std::abs(fd), std::abs(an));
        ++params_checked;
        if (scale > 1e-3) worst_rel = std::max(worst_rel, err / scale);
        if (err > pin::kGradRelTol * scale + pin::kGradAbsTol)
          return {false, fmt("L=%zu %s[%zu]: analytic %.9g vs fd %.9g", layers, label, p, an, fd)};
      }
      return {true, ""};
    };

    for (std::size_t mi = 0; mi < model.tables().size(); ++mi) {
      Outcome o = check_table(model.tables()[mi].user0, res.grad_user0[mi], "user0");
      if (!o.ok) return o;
      o = check_table(model.tables()[mi].item0, res.grad_item0[mi], "item0");
      if (!o.ok) return o;
    }
    model.forward(graph, 1);
  }
  return {true, fmt("%zu parameters across L=1 (paper) and L=2 (sqrt); max relative error = %.2e "
                    "(tol 1e-4)",
                    params_checked, worst_rel)};
}

// ---- C7: ranking metric hand values and tail-permutation invariance ----

Outcome c7_metrics() {
  const std::vector<std::uint32_t> ranked = {7, 2, 9, 0, 4, 1, 5, 3, 8, 6};
  if (vimm::recall_at_k(ranked, {7}, 1) != 1.0) return {false, "recall hand value 1.0"};
  if (vimm::recall_at_k(ranked, {0, 5, 6, 7}, 1) != 0.25) return {false, "recall hand value 0.25"};
  if (vimm::recall_at_k(ranked, {1, 3}, 2) != 0.0) return {false, "recall hand value 0.0"};
  const double ndcg2 = vimm::ndcg_at_k(ranked, {2}, 5);
  const double expected = 1.0 / std::log2(3.0);
  if (std::abs(ndcg2 - expected) > 1e-12)
    return {false, fmt("ndcg hand value: %.9f vs 1/log2(3) = %.9f", ndcg2, expected)};
  if (vimm::ndcg_at_k(ranked, {7}, 3) != 1.0) return {false, "ndcg hand value 1.0"};
  if (vimm::ndcg_at_k(ranked, {1, 3}, 2) != 0.0) return {false, "ndcg hand value 0.0"};

  vimm::Rng rng = vimm::Rng::substream(2026, 7);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = 10 + rng.uniform_index(51);
    std::vector<std::uint32_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
    rng.shuffle(order);
    std::set<std::uint32_t> rel_set;
    const std::size_t rel_count = 1 + rng.uniform_index(8);
    while (rel_set.size() < rel_count)
      rel_set.insert(static_cast<std::uint32_t>(rng.uniform_index(n)));
    const std::vector<std::uint32_t> relevant(rel_set.begin(), rel_set.end());
    const std::size_t k = 1 + rng.uniform_index(20);

    const double r0 = vimm::recall_at_k(order, relevant, k);
    const double n0 = vimm::ndcg_at_k(order, relevant, k);
    if (k < n) {
      std::vector<std::uint32_t> tail(order.begin() + static_cast<std::ptrdiff_t>(k), order.end());
      rng.shuffle(tail);
      std::copy(tail.begin(), tail.end(), order.begin() + static_cast<std::ptrdiff_t>(k));
    }
    if (vimm::recall_at_k(order, relevant, k) != r0 || vimm::ndcg_at_k(order, relevant, k) != n0)
      return {false, fmt("rep %d: metrics changed under a below-cutoff permutation", rep)};
  }
  return {true, "hand values exact (1.0, 0.25, 1/log2(3), 0.0); 1000/1000 tail permutations "
                "leave recall/ndcg bitwise unchanged"};
}

// ---- C8: overlap hypothesis on the clustered dataset ----

Outcome c8_hypothesis() {
  const vimm::Dataset& ds = pinned_dataset();
  const vimm::InteractionMatrix full =
      vimm::InteractionMatrix::from_pairs(ds.user_count, ds.item_count, ds.interactions);
  const std::vector<vimm::OverlapReport> reports =
      vimm::investigate(ds.modalities, full, {pin::kNeighbors}, vimm::OverlapDenominator::real,
                        pin::kWorkers);
  const vimm::OverlapReport& r = reports.front();

  double min_w = 1e300, max_o = 0.0;
  std::string ws;
  for (const auto& [name, w] : r.weights) {
    min_w = std::min(min_w, w);
    ws += fmt("w[%s]=%.3f ", name.c_str(), w);
  }
  for (const auto& [_, o] : r.o_real) max_o = std::max(max_o, o);
  const double gap = r.o_synergistic_real - max_o;

  const bool ok = min_w > 1.0 && r.weight_synergistic > 1.0 && gap >= -pin::kSynergyGap;
  return {ok, fmt("%sw[syn]=%.3f (all > 1); O_syn=%.4f vs max modality %.4f, gap %+.4f "
                  "(>= -0.02)",
                  ws.c_str(), r.weight_synergistic, r.o_synergistic_real, max_o, gap)};
}

// ---- C9: augmentation beats the baseline; ablations do not ----

Outcome c9_end_to_end() {
  const vimm::Dataset& ds = pinned_dataset();
  std::vector<double> base, full, no_refine, no_confine;
  for (const std::uint64_t seed : pin::kSeeds) {
    vimm::ExperimentConfig cfg;
    cfg.aug = pinned_pipeline_config();
    cfg.train = pinned_train_config(seed);
    cfg.split_seed = pin::kSplitSeed;

    cfg.augment = false;
    base.push_back(vimm::run_experiment(ds, cfg).test_metrics.recall);
    cfg.augment = true;
    full.push_back(vimm::run_experiment(ds, cfg).test_metrics.recall);
    cfg.aug.ablation = vimm::Ablation::no_refine;
    no_refine.push_back(vimm::run_experiment(ds, cfg).test_metrics.recall);
    cfg.aug.ablation = vimm::Ablation::no_confine;
    no_confine.push_back(vimm::run_experiment(ds, cfg).test_metrics.recall);
  }
  const double mb = median(base), mf = median(full);
  const double mr = median(no_refine), mc = median(no_confine);
  const bool ok = mf > mb && mr <= mf && mc <= mf;
  return {ok, fmt("median test recall@10 over 5 seeds: baseline=%.4f full=%.4f (full > base); "
                  "no-refine=%.4f no-confine=%.4f (both <= full)",
                  mb, mf, mr, mc)};
}

// ---- C10: cold-start structure and improvement ----

Outcome c10_cold_start() {
  const vimm::Dataset& ds = pinned_dataset();
  const vimm::SplitRatios ratios{};

  // Structural half: held-out items have no incident training edges, so
  // one propagation step writes exactly zero into their rows.
  const vimm::ColdStartSplit cs =
      vimm::make_cold_start_split(ds, pin::kColdHoldout, ratios, pin::kColdSeed);
  {
    const vimm::PropagationGraph graph(cs.train, vimm::NormMode::paper);
    vimm::Matrix ones(ds.user_count, 1), prop;
    for (double& x : ones.v) x = 1.0;
    graph.propagate_items(ones, prop, pin::kWorkers);
    for (const std::uint32_t i : cs.held_items)
      if (prop.row(i)[0] != 0.0)
        return {false, fmt("held item %u receives propagation on the baseline graph", i)};
    std::size_t touched = 0;
    for (std::size_t i = 0; i < ds.item_count; ++i)
      if (prop.row(i)[0] != 0.0) ++touched;
    if (touched == 0) return {false, "no item receives propagation at all"};
  }

  const auto run_cold = [&](std::uint64_t seed, bool augmented) {
    const auto train_fn = [&](const vimm::ColdStartSplit& split) {
      vimm::TrainConfig tcfg = pinned_train_config(seed);
      std::vector<std::string> names;
      for (const auto& [name, _] : ds.modalities) names.push_back(name);
      vimm::EmbeddingModel model(ds.user_count, ds.item_count, tcfg.dim, tcfg.layers, tcfg.norm,
                                 names);
      model.init_from_features(ds.modalities, tcfg.seed);

      vimm::SplitBundle bundle;
      bundle.train = split.train;
      bundle.validation = split.validation;

      vimm::InteractionMatrix adjacency = split.train;
      vimm::InteractionMatrix positives;
      const vimm::InteractionMatrix* positives_ptr = nullptr;
      if (augmented) {
        adjacency = vimm::build_augmentation(ds, split.train, pinned_pipeline_config()).augmented;
        std::vector<vimm::InteractionMatrix::Entry> kept;
        for (std::uint32_t u = 0; u < adjacency.user_count(); ++u)
          for (std::size_t e = adjacency.row_begin(u); e < adjacency.row_end(u); ++e)
            if (adjacency.entry_weight(e) >= pin::kBprThreshold)
              kept.push_back({u, adjacency.entry_item(e), adjacency.entry_weight(e)});
        positives = vimm::InteractionMatrix::from_entries(
            adjacency.user_count(), adjacency.item_count(), std::move(kept), adjacency.kind());
        positives_ptr = &positives;
      }
      return vimm::train(bundle, adjacency, std::move(model), tcfg, positives_ptr).model;
    };
    return vimm::cold_start_eval(ds, pin::kColdHoldout, ratios, pin::kColdSeed, pin::kEvalK,
                                 pin::kWorkers, train_fn);
  };

  std::vector<double> base, aug;
  for (const std::uint64_t seed : pin::kSeeds) {
    base.push_back(run_cold(seed, false).recall);
    aug.push_back(run_cold(seed, true).recall);
  }
  const double mb = median(base), ma = median(aug);
  const bool ok = ma > mb;
  return {ok, fmt("held items get zero baseline propagation; cold recall@10 median over 5 seeds: "
                  "baseline=%.4f augmented=%.4f (augmented > baseline)",
                  mb, ma)};
}

// ---- C11: robustness to representation noise and information error ----

Outcome c11_robustness() {
  const vimm::Dataset& ds = pinned_dataset();

  std::string js;
  double min_jaccard = 1e300;
  for (const auto& [name, emb] : ds.modalities) {
    const vimm::NeighborTable clean = vimm::topk_modality(emb, pin::kNeighbors, pin::kWorkers);
    const vimm::ModalityEmbeddings noisy_emb =
        vimm::inject_representation_noise(emb, vimm::noise_level_variance(1), 123);
    const vimm::NeighborTable noisy =
        vimm::topk_modality(noisy_emb, pin::kNeighbors, pin::kWorkers);
    double total = 0.0;
    for (std::size_t i = 0; i < clean.item_count; ++i) {
      std::set<std::uint32_t> a, b, both;
      for (const auto& e : clean.row(i)) a.insert(e.neighbor);
      for (const auto& e : noisy.row(i)) b.insert(e.neighbor);
      std::size_t inter = 0;
      for (const std::uint32_t x : a) inter += b.count(x);
      total += static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
    }
    const double mean = total / static_cast<double>(clean.item_count);
    min_jaccard = std::min(min_jaccard, mean);
    js += fmt("%s=%.3f ", name.c_str(), mean);
  }
  if (min_jaccard < pin::kJaccardMin)
    return {false, fmt("mean neighbor Jaccard under level-1 noise dropped to %.3f (< 0.9): %s",
                       min_jaccard, js.c_str())};

  // The pipeline must complete (finite metrics, no exception) at every
  // perturbation level.
  vimm::ExperimentConfig cfg;
  cfg.aug = pinned_pipeline_config();
  cfg.train = pinned_train_config(1);
  cfg.train.epochs = 2;
  cfg.train.patience = 2;
  cfg.train.dim = 16;
  cfg.split_seed = pin::kSplitSeed;
  for (int level = 1; level <= 3; ++level) {
    vimm::Dataset noisy = ds;
    for (auto& [name, emb] : noisy.modalities)
      emb = vimm::inject_representation_noise(emb, vimm::noise_level_variance(level), 77);
    const vimm::ExperimentResult rn = vimm::run_experiment(noisy, cfg);
    if (!std::isfinite(rn.test_metrics.recall))
      return {false, fmt("noise level %d: non-finite test recall", level)};

    const vimm::Dataset degraded =
        vimm::inject_information_error(ds, vimm::error_level_probability(level), 77);
    const vimm::ExperimentResult re = vimm::run_experiment(degraded, cfg);
    if (!std::isfinite(re.test_metrics.recall))
      return {false, fmt("error level %d: non-finite test recall", level)};
  }
  return {true, fmt("mean neighbor Jaccard under level-1 noise: %s(all >= 0.9); pipeline "
                    "completes at noise levels 1-3 and information error 1%%-5%%",
                    js.c_str())};
}

// ---- C12: byte-identical artifacts across reruns and worker counts ----

std::string g_cli;
fs::path g_scratch;

int run_cli(const std::string& args) {
  const std::string cmd = "cd '" + g_scratch.string() + "' && '" + g_cli + "' " + args +
                          " > /dev/null 2> '" + (g_scratch / "stderr.log").string() + "'";
  const int rc = std::system(cmd.c_str());
  if (rc == -1 || !WIFEXITED(rc)) return -1;
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& rel) {
  std::ifstream is(g_scratch / rel, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Outcome c12_determinism() {
  g_scratch = fs::temp_directory_path() / ("vimm-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(g_scratch);
  fs::create_directories(g_scratch);

  struct Command {
    std::string name;
    std::string args;  // without --out/--workers
    std::vector<std::string> artifacts;
  };
  const std::string train_common =
      " --epochs 2 --dim 8 --batch-size 512 --topk 5 --seed 3";
  const std::vector<Command> commands = {
      {"synth",
       "synth --users 60 --items 80 --clusters 4 --per-user 6 --modality-dims v:6,t:8 "
       "--noise 0.2 --seed 3",
       {"interactions.tsv", "v.emb", "t.emb"}},
      {"investigate", "investigate --data synth-w1-r1 --k 3,5 --seed 3", {"investigation.tsv"}},
      {"augment", "augment --data synth-w1-r1 --k 3 --lambda 0.01 --seed 3",
       {"augmented.bin", "investigation.tsv"}},
      {"train",
       "train --data synth-w1-r1 --augment --k 3 --lambda 0.01" + train_common,
       {"metrics.csv", "model.bin", "investigation.tsv"}},
      {"eval",
       "eval --data synth-w1-r1 --model train-w1-r1/model.bin --sparsity --boundaries 3,6 "
       "--topk 5 --seed 3",
       {"eval.csv", "sparsity.csv"}},
      {"sweep",
       "sweep --data synth-w1-r1 --lambda 0.01 --k 2" + train_common,
       {"sweep.csv"}},
  };

  std::size_t artifacts_compared = 0;
  for (const auto& cmd : commands) {
    std::vector<std::string> dirs;
    for (const unsigned workers : {1u, 4u})
      for (int run = 1; run <= 2; ++run) {
        const std::string dir =
            cmd.name + "-w" + std::to_string(workers) + "-r" + std::to_string(run);
        const int rc = run_cli(cmd.args + " --workers " + std::to_string(workers) + " --out " + dir);
        if (rc != 0)
          return {false, fmt("%s (workers %u, run %d) exited %d: %s", cmd.name.c_str(), workers,
                             run, rc, slurp("stderr.log").c_str())};
        dirs.push_back(dir);
      }
    for (const std::string& artifact : cmd.artifacts) {
      const std::string first = slurp(fs::path(dirs[0]) / artifact);
      if (first.empty())
        return {false, fmt("%s: artifact %s is empty or missing", cmd.name.c_str(),
                           artifact.c_str())};
      for (std::size_t d = 1; d < dirs.size(); ++d)
        if (slurp(fs::path(dirs[d]) / artifact) != first)
          return {false, fmt("%s: %s differs between %s and %s", cmd.name.c_str(),
                             artifact.c_str(), dirs[0].c_str(), dirs[d].c_str())};
      ++artifacts_compared;
    }
  }
  fs::remove_all(g_scratch);
  return {true, fmt("6 subcommands x 2 runs x workers {1,4}: %zu artifacts byte-identical "
                    "across all runs",
                    artifacts_compared)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <vimm-binary>\n", argv[0]);
    return 2;
  }
  g_cli = fs::absolute(argv[1]).string();

  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"top-k tables match the quadratic brute force", c1_topk_oracle},
      {"virtual construction matches the triple loop", c2_virtual_oracle},
      {"random-coverage estimate matches the exact probability", c3_coverage},
      {"augmentation invariants and dense-oracle equality", c4_augment_oracle},
      {"propagation matches the dense normalized multiply", c5_propagation_oracle},
      {"BPR gradients match central finite differences", c6_gradcheck},
      {"ranking metrics: hand values and cutoff invariance", c7_metrics},
      {"clustered data: all modality weights exceed 1", c8_hypothesis},
      {"augmentation beats baseline; ablations do not", c9_end_to_end},
      {"cold start: structural zeros and augmented gain", c10_cold_start},
      {"noise robustness of neighbor tables and pipeline", c11_robustness},
      {"byte-identical reruns at worker counts 1 and 4", c12_determinism},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].run();
    } catch (const std::exception& ex) {
      out = {false, std::string("exception: ") + ex.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!out.ok) ++failures;
    std::printf("C%02zu %s  %s -- %s (%.1fs)\n", i + 1, out.ok ? "PASS" : "FAIL",
                criteria[i].name, out.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failures),
              criteria.size());
  return failures == 0 ? 0 : 1;
}
