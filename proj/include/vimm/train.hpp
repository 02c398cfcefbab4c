#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "vimm/adam.hpp"
#include "vimm/bpr.hpp"
#include "vimm/error.hpp"
#include "vimm/evaluate.hpp"
#include "vimm/interaction_matrix.hpp"
#include "vimm/model.hpp"
#include "vimm/split.hpp"

namespace vimm {

struct TrainConfig {
  double learning_rate = 5e-3;
  std::size_t epochs = 60;
  std::size_t batch_size = 2048;
  std::size_t layers = 2;
  std::size_t dim = 64;
  std::uint64_t seed = 0;
  double reg = 1e-4;
  std::size_t patience = 10;  // epochs without validation improvement before stopping
  NormMode norm = NormMode::paper;
  std::size_t eval_k = 10;
  unsigned workers = 1;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // mean per-triplet loss over the epoch
  double val_recall = 0.0;
  double val_ndcg = 0.0;
};

struct TrainResult {
  EmbeddingModel model;  // best-validation snapshot, aggregates computed
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;
  double best_recall = 0.0;
};

inline std::string format_metrics_csv(const std::vector<EpochStats>& history) {
  std::string out = "epoch,loss,val_recall10,val_ndcg10\n";
  char line[160];
  for (const auto& s : history) {
    std::snprintf(line, sizeof(line), "%zu,%.9g,%.9g,%.9g\n", s.epoch, s.loss, s.val_recall,
                  s.val_ndcg);
    out += line;
  }
  return out;
}

inline void save_metrics_csv(const std::vector<EpochStats>& history,
                             const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "cannot open for writing: " + path.string());
  os << format_metrics_csv(history);
  os.flush();
  require(os.good(), "write failed: " + path.string());
}

// BPR training over the given adjacency (R or an augmented R̄) with
// early stopping on validation Recall@K. Triplets always come from
// `bpr_positives` (the original training positives unless overridden).
// Gradients are averaged over the batch before the optimizer step.
// Deterministic for a fixed seed at any worker count.
inline TrainResult train(const SplitBundle& split, const InteractionMatrix& adjacency,
                         EmbeddingModel model, const TrainConfig& cfg,
                         const InteractionMatrix* bpr_positives = nullptr) {
  require(adjacency.user_count() == split.train.user_count() &&
              adjacency.item_count() == split.train.item_count(),
          "train: adjacency shape does not match split");
  require(model.user_count() == adjacency.user_count() &&
              model.item_count() == adjacency.item_count(),
          "train: model shape does not match adjacency");
  require(cfg.batch_size >= 1, "train: batch size must be >= 1");
  require(cfg.epochs >= 1, "train: epochs must be >= 1");
  require(model.layer_count() == cfg.layers, "train: model layer count disagrees with config");

  const InteractionMatrix& positives = bpr_positives ? *bpr_positives : split.train;
  require(positives.user_count() == adjacency.user_count() &&
              positives.item_count() == adjacency.item_count(),
          "train: positive source shape mismatch");

  const PropagationGraph graph(adjacency, cfg.norm);
  TripletSampler sampler(positives, cfg.seed);
  AdamOptimizer opt(cfg.learning_rate);
  std::vector<std::pair<std::size_t, std::size_t>> slots;  // (user slot, item slot) per modality
  for (const auto& t : model.tables())
    slots.emplace_back(opt.register_table(t.user0.v.size()), opt.register_table(t.item0.v.size()));

  const std::size_t batches_per_epoch =
      std::max<std::size_t>(1, (positives.nnz() + cfg.batch_size - 1) / cfg.batch_size);

  TrainResult out;
  EmbeddingModel best = model;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::size_t epoch_triplets = 0;
    for (std::size_t b = 0; b < batches_per_epoch; ++b) {
      const auto batch = sampler.sample(cfg.batch_size);
      model.forward(graph, cfg.workers);
      BprResult res = bpr_loss_and_grad(model, graph, batch, cfg.reg, cfg.workers);
      if (!std::isfinite(res.loss))
        throw error("train: non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                    std::to_string(b) + " (lr=" + std::to_string(cfg.learning_rate) + ")");
      epoch_loss += res.loss;
      epoch_triplets += res.triplet_count;
      const double inv = 1.0 / static_cast<double>(res.triplet_count);
      opt.begin_step();
      for (std::size_t mi = 0; mi < model.tables().size(); ++mi) {
        for (double& g : res.grad_user0[mi].v) g *= inv;
        for (double& g : res.grad_item0[mi].v) g *= inv;
        opt.update(slots[mi].first, model.tables()[mi].user0, res.grad_user0[mi]);
        opt.update(slots[mi].second, model.tables()[mi].item0, res.grad_item0[mi]);
      }
    }
    if (!model.all_finite())
      throw error("train: non-finite parameter after epoch " + std::to_string(epoch));

    model.forward(graph, cfg.workers);
    RankingMetrics val;
    if (!split.validation.empty())
      val = evaluate(model, split.train, split.validation, cfg.eval_k, cfg.workers);
    out.history.push_back({epoch, epoch_loss / static_cast<double>(epoch_triplets), val.recall,
                           val.ndcg});

    if (out.best_epoch == 0 || val.recall > out.best_recall) {
      out.best_recall = val.recall;
      out.best_epoch = epoch;
      best = model;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }

  best.forward(graph, cfg.workers);
  out.model = std::move(best);
  return out;
}

}  // namespace vimm
