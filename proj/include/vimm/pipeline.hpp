#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vimm/augment.hpp"
#include "vimm/dataset.hpp"
#include "vimm/error.hpp"
#include "vimm/evaluate.hpp"
#include "vimm/interaction_matrix.hpp"
#include "vimm/simgraph.hpp"
#include "vimm/split.hpp"
#include "vimm/stats.hpp"
#include "vimm/train.hpp"
#include "vimm/virtual_interactions.hpp"

namespace vimm {

enum class Ablation { none, no_refine, no_confine };

inline const char* to_string(Ablation a) {
  switch (a) {
    case Ablation::no_refine:
      return "no-refine";
    case Ablation::no_confine:
      return "no-confine";
    default:
      return "none";
  }
}

struct PipelineConfig {
  AugmentStrategy strategy = AugmentStrategy::overlay;
  std::size_t k = 10;
  double lambda = 1e-2;
  Ablation ablation = Ablation::none;
  OverlapDenominator denominator = OverlapDenominator::real;
  bool stats_on_full_data = false;  // default: statistics from the training split
  unsigned workers = 1;
};

// Neighbor tables and the virtual matrices they induce over one base
// matrix and one k.
struct VirtualBundle {
  std::size_t k = 0;
  std::map<std::string, NeighborTable> modality_tables;
  NeighborTable synergistic_table;
  std::map<std::string, InteractionMatrix> modality_virtuals;
  InteractionMatrix synergistic_virtual;
};

inline VirtualBundle build_virtual_bundle(
    const std::map<std::string, ModalityEmbeddings>& modalities, const InteractionMatrix& base,
    std::size_t k, unsigned workers = 1) {
  require(!modalities.empty(), "build_virtual_bundle: no modalities");
  VirtualBundle out;
  out.k = k;
  for (const auto& [name, emb] : modalities) {
    require(emb.item_count == base.item_count(),
            "build_virtual_bundle: item count mismatch for '" + name + "'");
    NeighborTable t = topk_modality(emb, k, workers);
    out.modality_virtuals.emplace(name, build_virtual(base, t, workers));
    out.modality_tables.emplace(name, std::move(t));
  }
  out.synergistic_table = topk_synergistic(modalities, k, workers);
  out.synergistic_virtual = build_virtual(base, out.synergistic_table, workers);
  return out;
}

// One investigation row per k over a fixed statistics base.
inline std::vector<OverlapReport> investigate(
    const std::map<std::string, ModalityEmbeddings>& modalities, const InteractionMatrix& base,
    const std::vector<std::size_t>& ks, OverlapDenominator denom, unsigned workers = 1) {
  require(!ks.empty(), "investigate: no k values");
  std::vector<OverlapReport> reports;
  for (const std::size_t k : ks) {
    const VirtualBundle vb = build_virtual_bundle(modalities, base, k, workers);
    reports.push_back(compute_overlap_report(base, vb.modality_virtuals, vb.synergistic_virtual,
                                             k, denom));
  }
  return reports;
}

struct AugmentationResult {
  VirtualBundle bundle;  // built on the training matrix
  OverlapReport report;  // statistics per the configured scope
  std::map<std::string, double> applied_weights;  // after ablation
  double applied_weight_synergistic = 1.0;
  InteractionMatrix augmented;
};

// Full augmentation path: virtual construction, overlap statistics,
// weighting (unless the refine ablation is active) and the confined
// combination (unless the confine ablation is active).
inline AugmentationResult build_augmentation(const Dataset& ds, const InteractionMatrix& train,
                                             const PipelineConfig& cfg) {
  AugmentationResult out;
  out.bundle = build_virtual_bundle(ds.modalities, train, cfg.k, cfg.workers);
  if (cfg.stats_on_full_data) {
    const InteractionMatrix full =
        InteractionMatrix::from_pairs(ds.user_count, ds.item_count, ds.interactions);
    const VirtualBundle stats_vb = build_virtual_bundle(ds.modalities, full, cfg.k, cfg.workers);
    out.report = compute_overlap_report(full, stats_vb.modality_virtuals,
                                        stats_vb.synergistic_virtual, cfg.k, cfg.denominator);
  } else {
    out.report = compute_overlap_report(train, out.bundle.modality_virtuals,
                                        out.bundle.synergistic_virtual, cfg.k, cfg.denominator);
  }

  out.applied_weights = out.report.weights;
  out.applied_weight_synergistic = out.report.weight_synergistic;
  if (cfg.ablation == Ablation::no_refine) {
    for (auto& [name, w] : out.applied_weights) w = 1.0;
    out.applied_weight_synergistic = 1.0;
  }
  const bool apply_confine = cfg.ablation != Ablation::no_confine;
  out.augmented =
      cfg.strategy == AugmentStrategy::overlay
          ? overlay_augment(train, out.bundle.modality_virtuals, out.applied_weights, cfg.lambda,
                            apply_confine, cfg.workers)
          : synergistic_augment(train, out.bundle.synergistic_virtual,
                                out.applied_weight_synergistic, cfg.lambda, apply_confine,
                                cfg.workers);
  return out;
}

struct ExperimentConfig {
  PipelineConfig aug;
  bool augment = true;  // false: train on the plain split (baseline)
  TrainConfig train;
  SplitRatios ratios{};
  std::uint64_t split_seed = 0;
};

struct ExperimentResult {
  SplitBundle split;
  TrainResult train;
  RankingMetrics test_metrics;
  OverlapReport report;  // meaningful only when the config augments
};

// Split, optionally augment, train from feature-projected item tables,
// score the test slice.
inline ExperimentResult run_experiment(const Dataset& ds, const ExperimentConfig& cfg) {
  ExperimentResult out;
  out.split = split_dataset(ds, cfg.ratios, cfg.split_seed);
  InteractionMatrix adjacency = out.split.train;
  if (cfg.augment) {
    AugmentationResult aug = build_augmentation(ds, out.split.train, cfg.aug);
    out.report = std::move(aug.report);
    adjacency = std::move(aug.augmented);
  }
  std::vector<std::string> names;
  for (const auto& [name, _] : ds.modalities) names.push_back(name);
  EmbeddingModel model(ds.user_count, ds.item_count, cfg.train.dim, cfg.train.layers,
                       cfg.train.norm, names);
  model.init_from_features(ds.modalities, cfg.train.seed);
  out.train = train(out.split, adjacency, std::move(model), cfg.train);
  out.test_metrics = evaluate(out.train.model, out.split.train, out.split.test, cfg.train.eval_k,
                              cfg.train.workers);
  return out;
}

// --- Hyper-parameter sweep: one experiment per (λ, k) cell.

struct SweepCell {
  double lambda = 0.0;
  std::size_t k = 0;
  double recall = 0.0;
  double ndcg = 0.0;
  std::string status = "ok";  // cell failures carry the error text
};

inline std::uint64_t sweep_cell_seed(std::uint64_t base, double lambda, std::size_t k) {
  std::uint64_t s = base ^ 0x9e3779b97f4a7c15ull;
  splitmix64(s);
  s ^= std::bit_cast<std::uint64_t>(lambda);
  splitmix64(s);
  s ^= static_cast<std::uint64_t>(k);
  return splitmix64(s);
}

inline std::vector<SweepCell> sweep(const Dataset& ds, const ExperimentConfig& base,
                                    std::vector<double> lambdas, std::vector<std::size_t> ks) {
  require(!lambdas.empty() && !ks.empty(), "sweep: empty grid");
  std::sort(lambdas.begin(), lambdas.end());
  lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

  std::vector<SweepCell> cells;
  for (const double lambda : lambdas) {
    for (const std::size_t k : ks) {
      SweepCell cell;
      cell.lambda = lambda;
      cell.k = k;
      ExperimentConfig cfg = base;
      cfg.augment = true;
      cfg.aug.lambda = lambda;
      cfg.aug.k = k;
      cfg.train.seed = sweep_cell_seed(base.train.seed, lambda, k);
      try {
        const ExperimentResult res = run_experiment(ds, cfg);
        cell.recall = res.test_metrics.recall;
        cell.ndcg = res.test_metrics.ndcg;
      } catch (const std::exception& ex) {
        cell.status = ex.what();
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

inline std::string format_sweep_csv(const std::vector<SweepCell>& cells) {
  std::string out = "lambda,k,recall10,ndcg10,status\n";
  char line[512];
  for (const auto& c : cells) {
    std::string status = c.status;
    for (char& ch : status)
      if (ch == ',' || ch == '\n') ch = ';';
    std::snprintf(line, sizeof(line), "%.9g,%zu,%.9g,%.9g,%s\n", c.lambda, c.k, c.recall, c.ndcg,
                  status.c_str());
    out += line;
  }
  return out;
}

}  // namespace vimm
