// Command-line front end: synth, investigate, augment, train, eval,
// sweep. Every run writes its resolved configuration next to its
// outputs; outputs are byte-stable for a fixed config, seed and any
// worker count.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vimm/vimm.hpp"

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  vimm::require(os.good(), "cannot open for writing: " + path.string());
  os << text;
  os.flush();
  vimm::require(os.good(), "write failed: " + path.string());
}

std::string timestamp_utc() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm);
  return buf;
}

// --out wins; otherwise runs/<cmd>-<config hash>-<timestamp>.
fs::path resolve_run_dir(const std::string& out, const std::string& cmd,
                         const std::string& resolved_config) {
  if (!out.empty()) {
    fs::create_directories(out);
    return out;
  }
  char hash[24];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(vimm::detail::fnv1a(resolved_config)));
  const std::string stem = cmd + "-" + hash + "-" + timestamp_utc();
  fs::path dir = fs::path("runs") / stem;
  for (int n = 1; fs::exists(dir); ++n) dir = fs::path("runs") / (stem + "-" + std::to_string(n));
  fs::create_directories(dir);
  return dir;
}

vimm::AugmentStrategy parse_strategy(const std::string& s) {
  return s == "synergistic" ? vimm::AugmentStrategy::synergistic
                            : vimm::AugmentStrategy::overlay;
}

vimm::Ablation parse_ablation(const std::string& s) {
  if (s == "no-refine") return vimm::Ablation::no_refine;
  if (s == "no-confine") return vimm::Ablation::no_confine;
  return vimm::Ablation::none;
}

vimm::OverlapDenominator parse_denominator(const std::string& s) {
  return s == "virtual" ? vimm::OverlapDenominator::virtual_size
                        : vimm::OverlapDenominator::real;
}

vimm::NormMode parse_norm(const std::string& s) {
  return s == "sqrt" ? vimm::NormMode::sqrt_degree : vimm::NormMode::paper;
}

// "real" or "threshold:<x>"
bool parse_bpr_source(const std::string& s, double& threshold, bool& use_threshold) {
  if (s == "real") {
    use_threshold = false;
    return true;
  }
  if (s.rfind("threshold:", 0) == 0) {
    try {
      std::size_t pos = 0;
      threshold = std::stod(s.substr(10), &pos);
      if (pos != s.size() - 10) return false;
    } catch (...) {
      return false;
    }
    use_threshold = true;
    return true;
  }
  return false;
}

const CLI::Validator BprSourceValidator(
    [](std::string& s) -> std::string {
      double x;
      bool t;
      return parse_bpr_source(s, x, t) ? std::string{}
                                       : "expected 'real' or 'threshold:<x>', got '" + s + "'";
    },
    "BPRSOURCE");

std::map<std::string, std::size_t> parse_modality_dims(const std::string& spec) {
  std::map<std::string, std::size_t> dims;
  std::size_t start = 0;
  while (start <= spec.size()) {
    const std::size_t comma = spec.find(',', start);
    const std::string part =
        spec.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    const std::size_t colon = part.find(':');
    vimm::require(colon != std::string::npos && colon > 0 && colon + 1 < part.size(),
                  "bad modality spec '" + part + "', expected <name>:<dim>");
    const std::string name = part.substr(0, colon);
    std::uint32_t dim = 0;
    vimm::require(vimm::detail::parse_u32(part.substr(colon + 1), dim) && dim > 0,
                  "bad modality dimension in '" + part + "'");
    vimm::require(!dims.count(name), "duplicate modality '" + name + "'");
    dims[name] = dim;
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  vimm::require(!dims.empty(), "no modalities given");
  return dims;
}

vimm::Dataset load_and_perturb(const std::string& data_dir, int noise_level, int error_level,
                               std::uint64_t seed) {
  vimm::Dataset ds = vimm::load_dataset_dir(data_dir);
  if (error_level != 0)
    ds = vimm::inject_information_error(ds, vimm::error_level_probability(error_level), seed);
  if (noise_level != 0) {
    const double variance = vimm::noise_level_variance(noise_level);
    for (auto& [name, emb] : ds.modalities)
      emb = vimm::inject_representation_noise(emb, variance, seed);
  }
  return ds;
}

fs::path neighbor_cache_file(const fs::path& dir, std::size_t k, const std::string& modality) {
  return dir / ("k" + std::to_string(k) + "-" + (modality.empty() ? "synergistic" : modality) +
                ".tsv");
}

vimm::VirtualBundle cached_virtual_bundle(const fs::path& cache_dir,
                                          const std::map<std::string, vimm::ModalityEmbeddings>& mods,
                                          const vimm::InteractionMatrix& base, std::size_t k,
                                          unsigned workers) {
  fs::create_directories(cache_dir);
  vimm::VirtualBundle out;
  out.k = k;
  const std::size_t stride = std::min(k, base.item_count() - 1);
  const auto load_or = [&](vimm::NeighborSource source, const std::string& name,
                           auto&& compute) -> vimm::NeighborTable {
    const fs::path file = neighbor_cache_file(cache_dir, k, name);
    if (fs::exists(file)) {
      vimm::NeighborTable t = vimm::load_neighbor_table(file, source, name);
      vimm::require(t.item_count == base.item_count() && t.stride == stride,
                    file.string() + ": cached table shape does not match this dataset/k");
      t.k = k;
      return t;
    }
    vimm::NeighborTable t = compute();
    vimm::save_neighbor_table(file, t);
    return t;
  };
  for (const auto& [name, emb] : mods) {
    vimm::NeighborTable t = load_or(vimm::NeighborSource::modality, name,
                                    [&] { return vimm::topk_modality(emb, k, workers); });
    out.modality_virtuals.emplace(name, vimm::build_virtual(base, t, workers));
    out.modality_tables.emplace(name, std::move(t));
  }
  out.synergistic_table = load_or(vimm::NeighborSource::synergistic, "",
                                  [&] { return vimm::topk_synergistic(mods, k, workers); });
  out.synergistic_virtual = vimm::build_virtual(base, out.synergistic_table, workers);
  return out;
}

std::string format_eval_csv(const vimm::RankingMetrics& m) {
  char buf[128];
  std::string out = "metric,value\n";
  std::snprintf(buf, sizeof(buf), "recall@%zu,%.9g\n", m.k, m.recall);
  out += buf;
  std::snprintf(buf, sizeof(buf), "ndcg@%zu,%.9g\n", m.k, m.ndcg);
  out += buf;
  std::snprintf(buf, sizeof(buf), "users,%zu\n", m.users.size());
  out += buf;
  return out;
}

// ---- subcommand option bags ----

struct CommonOpts {
  std::string out;
  unsigned workers = 1;
  std::uint64_t seed = 0;
  std::string config;
};

void add_common(CLI::App* sub, CommonOpts& c) {
  sub->add_option("--out", c.out, "run directory (default: runs/<cmd>-<hash>-<timestamp>)");
  sub->add_option("--workers", c.workers, "worker threads; output is identical for any value")
      ->check(CLI::Range(1u, 256u))
      ->capture_default_str();
  sub->add_option("--seed", c.seed, "master seed")->capture_default_str();
  sub->add_option("--config", c.config, "flat key=value config file; command-line flags win");
}

std::string strip_spaces(const std::string& s) {
  const std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

// CLI11 only auto-loads config files attached to the root command, so
// the per-subcommand file is applied by hand: each key fills the
// matching option unless the command line already set it. Values pass
// through the option's normal validators.
void apply_config_file(CLI::App* sub, const std::string& path) {
  if (path.empty()) return;
  std::ifstream is(path);
  if (!is.good()) throw CLI::ValidationError("--config: cannot open '" + path + "'");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    line = strip_spaces(line);
    if (line.empty() || line[0] == '#') continue;
    const std::string at = path + ":" + std::to_string(lineno);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos || eq == 0)
      throw CLI::ValidationError("--config: " + at + ": expected key=value");
    const std::string key = strip_spaces(line.substr(0, eq));
    std::string value = strip_spaces(line.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
        value.back() == value.front())
      value = value.substr(1, value.size() - 2);
    if (key == "config")
      throw CLI::ValidationError("--config: " + at + ": config files cannot nest");
    CLI::Option* op = sub->get_option_no_throw("--" + key);
    if (op == nullptr)
      throw CLI::ValidationError("--config: " + at + ": unknown option '" + key + "'");
    if (op->count() > 0) continue;  // explicit flags win
    op->add_result(value);
    op->run_callback();
  }
}

struct AugOpts {
  std::string strategy = "overlay";
  std::size_t k = 10;
  double lambda = 1e-2;
  std::string ablation = "none";
  std::string denominator = "real";
  bool full_data_stats = false;
  int noise_level = 0;
  int error_level = 0;
};

void add_augmentation(CLI::App* sub, AugOpts& a, bool with_lambda_k = true) {
  sub->add_option("--strategy", a.strategy)
      ->check(CLI::IsMember({"overlay", "synergistic"}))
      ->capture_default_str();
  if (with_lambda_k) {
    sub->add_option("--k", a.k, "neighbors per item")->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--lambda", a.lambda, "virtual interaction scale")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
  }
  sub->add_option("--ablation", a.ablation)
      ->check(CLI::IsMember({"none", "no-refine", "no-confine"}))
      ->capture_default_str();
  sub->add_option("--overlap-denominator", a.denominator)
      ->check(CLI::IsMember({"real", "virtual"}))
      ->capture_default_str();
  sub->add_flag("--full-data-stats", a.full_data_stats,
                "overlap statistics from the full dataset instead of the training split");
  sub->add_option("--noise-level", a.noise_level, "representation noise level")
      ->check(CLI::Range(0, 3))
      ->capture_default_str();
  sub->add_option("--error-level", a.error_level, "information error level")
      ->check(CLI::Range(0, 3))
      ->capture_default_str();
}

vimm::PipelineConfig to_pipeline_config(const AugOpts& a, const CommonOpts& c) {
  vimm::PipelineConfig p;
  p.strategy = parse_strategy(a.strategy);
  p.k = a.k;
  p.lambda = a.lambda;
  p.ablation = parse_ablation(a.ablation);
  p.denominator = parse_denominator(a.denominator);
  p.stats_on_full_data = a.full_data_stats;
  p.workers = c.workers;
  return p;
}

struct TrainOpts {
  std::size_t layers = 2;
  std::size_t dim = 64;
  std::size_t epochs = 60;
  std::size_t batch_size = 2048;
  double lr = 5e-3;
  double reg = 1e-4;
  std::size_t patience = 10;
  std::string norm = "paper";
  std::string bpr_source = "real";
  std::size_t topk = 10;
};

void add_training(CLI::App* sub, TrainOpts& t) {
  sub->add_option("--layers", t.layers)->check(CLI::Range(0, 16))->capture_default_str();
  sub->add_option("--dim", t.dim)->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--epochs", t.epochs)->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--batch-size", t.batch_size)->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--lr", t.lr, "learning rate")->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--reg", t.reg, "L2 coefficient on layer-0 rows")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sub->add_option("--patience", t.patience, "epochs without validation gain before stopping")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--norm", t.norm, "propagation normalization")
      ->check(CLI::IsMember({"paper", "sqrt"}))
      ->capture_default_str();
  sub->add_option("--bpr-source", t.bpr_source, "triplet positives: real or threshold:<x>")
      ->check(BprSourceValidator)
      ->capture_default_str();
  sub->add_option("--topk", t.topk, "ranking cutoff for validation/test metrics")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

vimm::TrainConfig to_train_config(const TrainOpts& t, const CommonOpts& c) {
  vimm::TrainConfig cfg;
  cfg.learning_rate = t.lr;
  cfg.epochs = t.epochs;
  cfg.batch_size = t.batch_size;
  cfg.layers = t.layers;
  cfg.dim = t.dim;
  cfg.seed = c.seed;
  cfg.reg = t.reg;
  cfg.patience = t.patience;
  cfg.norm = parse_norm(t.norm);
  cfg.eval_k = t.topk;
  cfg.workers = c.workers;
  return cfg;
}

constexpr vimm::SplitRatios kRatios{};  // 8:1:1

// ---- subcommands ----

int cmd_synth(const CommonOpts& common, const fs::path& run_dir, std::size_t users,
              std::size_t items, std::size_t clusters, std::size_t per_user,
              const std::string& dims_spec, double noise) {
  vimm::SyntheticConfig cfg;
  cfg.user_count = users;
  cfg.item_count = items;
  cfg.cluster_count = clusters;
  cfg.interactions_per_user = per_user;
  cfg.modality_dims = parse_modality_dims(dims_spec);
  cfg.affinity_noise = noise;
  cfg.seed = common.seed;
  const vimm::Dataset ds = vimm::generate_synthetic(cfg);
  vimm::save_dataset_dir(run_dir, ds);
  std::printf("dataset: %zu users, %zu items, %zu interactions, %zu modalities -> %s\n",
              ds.user_count, ds.item_count, ds.interactions.size(), ds.modalities.size(),
              run_dir.string().c_str());
  return 0;
}

int cmd_investigate(const CommonOpts& common, const fs::path& run_dir, const std::string& data,
                    std::vector<std::size_t> ks, const AugOpts& aug,
                    const std::string& neighbors_cache) {
  vimm::require(!ks.empty(), "investigate: --k list is empty");
  const vimm::Dataset ds = load_and_perturb(data, aug.noise_level, aug.error_level, common.seed);
  vimm::InteractionMatrix base;
  if (aug.full_data_stats) {
    base = vimm::InteractionMatrix::from_pairs(ds.user_count, ds.item_count, ds.interactions);
  } else {
    base = vimm::split_dataset(ds, kRatios, common.seed).train;
  }
  const vimm::OverlapDenominator denom = parse_denominator(aug.denominator);
  std::vector<vimm::OverlapReport> reports;
  for (const std::size_t k : ks) {
    const vimm::VirtualBundle vb =
        neighbors_cache.empty()
            ? vimm::build_virtual_bundle(ds.modalities, base, k, common.workers)
            : cached_virtual_bundle(neighbors_cache, ds.modalities, base, k, common.workers);
    reports.push_back(vimm::compute_overlap_report(base, vb.modality_virtuals,
                                                   vb.synergistic_virtual, k, denom));
  }
  const std::string table = vimm::format_investigation_table(reports);
  write_text(run_dir / "investigation.tsv", table);
  std::fputs(table.c_str(), stdout);
  return 0;
}

int cmd_augment(const CommonOpts& common, const fs::path& run_dir, const std::string& data,
                const AugOpts& aug) {
  const vimm::Dataset ds = load_and_perturb(data, aug.noise_level, aug.error_level, common.seed);
  const vimm::SplitBundle split = vimm::split_dataset(ds, kRatios, common.seed);
  const vimm::PipelineConfig pcfg = to_pipeline_config(aug, common);
  const vimm::AugmentationResult res = vimm::build_augmentation(ds, split.train, pcfg);
  vimm::save_augmented(res.augmented, run_dir / "augmented.bin");
  write_text(run_dir / "investigation.tsv", vimm::format_investigation_table({res.report}));
  std::printf("strategy=%s k=%zu lambda=%.9g ablation=%s\n", vimm::to_string(pcfg.strategy),
              pcfg.k, pcfg.lambda, vimm::to_string(pcfg.ablation));
  std::printf("before: nnz=%zu density=%.6g\n", split.train.nnz(), split.train.density());
  std::printf("after:  nnz=%zu density=%.6g\n", res.augmented.nnz(), res.augmented.density());
  std::printf("augmented matrix -> %s\n", (run_dir / "augmented.bin").string().c_str());
  return 0;
}

int cmd_train(const CommonOpts& common, const fs::path& run_dir, const std::string& data,
              const std::string& adjacency_path, bool augment_in_process, const AugOpts& aug,
              const TrainOpts& topts, std::size_t adjacency_modalities) {
  vimm::TrainConfig tcfg = to_train_config(topts, common);
  vimm::SplitBundle split;
  vimm::InteractionMatrix adjacency;
  vimm::EmbeddingModel model;

  if (!adjacency_path.empty()) {
    // precomputed matrix: modality embeddings are never read
    const vimm::Dataset ds = vimm::load_dataset_dir_interactions_only(data);
    split = vimm::split_dataset(ds, kRatios, common.seed);
    adjacency = vimm::load_augmented(adjacency_path);
    vimm::require(adjacency.user_count() == ds.user_count &&
                      adjacency.item_count() == ds.item_count,
                  "train: adjacency file shape does not match the dataset");
    std::vector<std::string> names;
    for (std::size_t m = 0; m < adjacency_modalities; ++m) names.push_back("m" + std::to_string(m));
    model = vimm::EmbeddingModel(ds.user_count, ds.item_count, tcfg.dim, tcfg.layers, tcfg.norm,
                                 names);
    model.init_random(tcfg.seed);
  } else {
    const vimm::Dataset ds = load_and_perturb(data, aug.noise_level, aug.error_level, common.seed);
    split = vimm::split_dataset(ds, kRatios, common.seed);
    if (augment_in_process) {
      vimm::AugmentationResult res =
          vimm::build_augmentation(ds, split.train, to_pipeline_config(aug, common));
      adjacency = std::move(res.augmented);
      write_text(run_dir / "investigation.tsv",
                 vimm::format_investigation_table({res.report}));
    } else {
      adjacency = split.train;
    }
    std::vector<std::string> names;
    for (const auto& [name, _] : ds.modalities) names.push_back(name);
    model = vimm::EmbeddingModel(ds.user_count, ds.item_count, tcfg.dim, tcfg.layers, tcfg.norm,
                                 names);
    model.init_from_features(ds.modalities, tcfg.seed);
  }

  double threshold = 0.0;
  bool use_threshold = false;
  vimm::require(parse_bpr_source(topts.bpr_source, threshold, use_threshold),
                "bad --bpr-source value");
  vimm::InteractionMatrix threshold_positives;
  if (use_threshold) {
    std::vector<vimm::InteractionMatrix::Entry> kept;
    for (std::uint32_t u = 0; u < adjacency.user_count(); ++u)
      for (std::size_t e = adjacency.row_begin(u); e < adjacency.row_end(u); ++e)
        if (adjacency.entry_weight(e) >= threshold)
          kept.push_back({u, adjacency.entry_item(e), adjacency.entry_weight(e)});
    threshold_positives = vimm::InteractionMatrix::from_entries(
        adjacency.user_count(), adjacency.item_count(), std::move(kept), adjacency.kind());
  }

  const auto t0 = std::chrono::steady_clock::now();
  const vimm::TrainResult res = vimm::train(split, adjacency, std::move(model), tcfg,
                                            use_threshold ? &threshold_positives : nullptr);
  const double total_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  vimm::save_model(res.model, run_dir / "model.bin");
  vimm::save_metrics_csv(res.history, run_dir / "metrics.csv");
  std::printf("epochs run: %zu (best %zu, val recall@%zu %.9g)\n", res.history.size(),
              res.best_epoch, tcfg.eval_k, res.best_recall);
  std::printf("mean epoch wall-clock: %.3f s (diagnostic)\n",
              total_s / static_cast<double>(res.history.size()));
  std::printf("checkpoint -> %s\n", (run_dir / "model.bin").string().c_str());
  return 0;
}

int cmd_eval(const CommonOpts& common, const fs::path& run_dir, const std::string& data,
             const std::string& model_path, const std::string& adjacency_path,
             const TrainOpts& topts, const std::string& which, bool sparsity,
             std::vector<std::size_t> boundaries) {
  const vimm::Dataset ds = vimm::load_dataset_dir_interactions_only(data);
  const vimm::SplitBundle split = vimm::split_dataset(ds, kRatios, common.seed);
  vimm::EmbeddingModel model = vimm::load_model(model_path);
  vimm::require(model.user_count() == ds.user_count && model.item_count() == ds.item_count,
                "eval: checkpoint shape does not match the dataset");
  vimm::InteractionMatrix adjacency =
      adjacency_path.empty() ? split.train : vimm::load_augmented(adjacency_path);
  const vimm::PropagationGraph graph(adjacency, model.norm());
  model.forward(graph, common.workers);

  const auto& heldout = which == "validation" ? split.validation : split.test;
  const vimm::RankingMetrics metrics =
      vimm::evaluate(model, split.train, heldout, topts.topk, common.workers);
  const std::string csv = format_eval_csv(metrics);
  write_text(run_dir / "eval.csv", csv);
  std::fputs(csv.c_str(), stdout);

  if (sparsity) {
    const auto groups =
        vimm::sparsity_group_eval(model, split, boundaries, topts.topk, common.workers);
    std::string table = "group,users,recall@" + std::to_string(topts.topk) + ",ndcg@" +
                        std::to_string(topts.topk) + "\n";
    char line[160];
    for (const auto& g : groups) {
      std::snprintf(line, sizeof(line), "%s,%zu,%.9g,%.9g\n", g.label.c_str(),
                    g.metrics.users.size(), g.metrics.recall, g.metrics.ndcg);
      table += line;
    }
    write_text(run_dir / "sparsity.csv", table);
    std::fputs(table.c_str(), stdout);
  }
  return 0;
}

int cmd_sweep(const CommonOpts& common, const fs::path& run_dir, const std::string& data,
              std::vector<double> lambdas, std::vector<std::size_t> ks, const AugOpts& aug,
              const TrainOpts& topts) {
  const vimm::Dataset ds = load_and_perturb(data, aug.noise_level, aug.error_level, common.seed);
  vimm::ExperimentConfig base;
  base.aug = to_pipeline_config(aug, common);
  base.train = to_train_config(topts, common);
  base.split_seed = common.seed;
  const std::vector<vimm::SweepCell> cells = vimm::sweep(ds, base, lambdas, ks);
  const std::string csv = vimm::format_sweep_csv(cells);
  write_text(run_dir / "sweep.csv", csv);
  std::fputs(csv.c_str(), stdout);

  const vimm::SweepCell* best = nullptr;
  for (const auto& c : cells)
    if (c.status == "ok" && (!best || c.recall > best->recall)) best = &c;
  if (best)
    std::printf("best: lambda=%.9g k=%zu recall@%zu=%.9g\n", best->lambda, best->k, topts.topk,
                best->recall);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"similarity-aware virtual interaction augmentation for multimodal recommenders"};
  app.require_subcommand(1);

  std::function<int(const fs::path&)> runner;
  CLI::App* selected = nullptr;

  // synth
  auto* synth = app.add_subcommand("synth", "generate a clustered synthetic dataset");
  CommonOpts synth_common;
  static std::size_t users = 300, items = 500, clusters = 8, per_user = 10;
  static std::string dims_spec = "v:16,t:24";
  static double synth_noise = 0.1;
  add_common(synth, synth_common);
  synth->add_option("--users", users)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--items", items)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--clusters", clusters)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--per-user", per_user, "interactions per user")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth->add_option("--modality-dims", dims_spec, "comma list of <name>:<dim>")
      ->capture_default_str();
  synth->add_option("--noise", synth_noise, "affinity noise of the generator")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  synth->callback([&] {
    selected = synth;
    runner = [&](const fs::path& dir) {
      return cmd_synth(synth_common, dir, users, items, clusters, per_user, dims_spec,
                       synth_noise);
    };
  });

  // investigate
  auto* inv = app.add_subcommand("investigate", "overlap statistics and modality weights");
  CommonOpts inv_common;
  AugOpts inv_aug;
  static std::string inv_data;
  static std::vector<std::size_t> inv_ks = {5, 10, 20};
  static std::string inv_cache;
  add_common(inv, inv_common);
  inv->add_option("--data", inv_data, "dataset directory")->required();
  inv->add_option("--k", inv_ks, "comma list of neighbor counts")
      ->delimiter(',')
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  inv->add_option("--neighbors-cache", inv_cache,
                  "directory of reusable neighbor tables (load if present, else write)");
  add_augmentation(inv, inv_aug, false);
  inv->callback([&] {
    selected = inv;
    runner = [&](const fs::path& dir) {
      return cmd_investigate(inv_common, dir, inv_data, inv_ks, inv_aug, inv_cache);
    };
  });

  // augment
  auto* augc = app.add_subcommand("augment", "build and store the augmented matrix");
  CommonOpts aug_common;
  AugOpts aug_aug;
  static std::string aug_data;
  add_common(augc, aug_common);
  augc->add_option("--data", aug_data, "dataset directory")->required();
  add_augmentation(augc, aug_aug);
  augc->callback([&] {
    selected = augc;
    runner = [&](const fs::path& dir) { return cmd_augment(aug_common, dir, aug_data, aug_aug); };
  });

  // train
  auto* trainc = app.add_subcommand("train", "BPR training over R or an augmented matrix");
  CommonOpts train_common;
  AugOpts train_aug;
  TrainOpts train_topts;
  static std::string train_data, train_adj;
  static bool train_augment = false;
  static std::size_t train_adj_modalities = 1;
  add_common(trainc, train_common);
  trainc->add_option("--data", train_data, "dataset directory")->required();
  trainc->add_option("--adjacency", train_adj,
                     "precomputed augmented matrix file; embeddings are not read");
  trainc->add_flag("--augment", train_augment, "build the augmented matrix in-process");
  trainc->add_option("--modalities", train_adj_modalities,
                     "embedding table count when --adjacency is used")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_augmentation(trainc, train_aug);
  add_training(trainc, train_topts);
  trainc->callback([&] {
    selected = trainc;
    runner = [&](const fs::path& dir) {
      return cmd_train(train_common, dir, train_data, train_adj, train_augment, train_aug,
                       train_topts, train_adj_modalities);
    };
  });

  // eval
  auto* evalc = app.add_subcommand("eval", "rank and score a trained checkpoint");
  CommonOpts eval_common;
  TrainOpts eval_topts;
  static std::string eval_data, eval_model, eval_adj, eval_split = "test";
  static bool eval_sparsity = false;
  static std::vector<std::size_t> eval_boundaries = {5, 10, 20};
  add_common(evalc, eval_common);
  evalc->add_option("--data", eval_data, "dataset directory")->required();
  evalc->add_option("--model", eval_model, "checkpoint file")->required();
  evalc->add_option("--adjacency", eval_adj, "matrix used for propagation (default: train split)");
  evalc->add_option("--split", eval_split, "slice to score")
      ->check(CLI::IsMember({"test", "validation"}))
      ->capture_default_str();
  evalc->add_flag("--sparsity", eval_sparsity, "also report sparsity-group metrics");
  evalc->add_option("--boundaries", eval_boundaries, "sparsity bucket upper bounds")
      ->delimiter(',')
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  evalc->add_option("--topk", eval_topts.topk, "ranking cutoff")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  evalc->callback([&] {
    selected = evalc;
    runner = [&](const fs::path& dir) {
      return cmd_eval(eval_common, dir, eval_data, eval_model, eval_adj, eval_topts, eval_split,
                      eval_sparsity, eval_boundaries);
    };
  });

  // sweep
  auto* sweepc = app.add_subcommand("sweep", "grid search over lambda and k");
  CommonOpts sweep_common;
  AugOpts sweep_aug;
  TrainOpts sweep_topts;
  static std::string sweep_data;
  static std::vector<double> sweep_lambdas = {1e-3, 5e-3, 1e-2, 5e-2};
  static std::vector<std::size_t> sweep_ks = {5, 10, 20};
  add_common(sweepc, sweep_common);
  sweepc->add_option("--data", sweep_data, "dataset directory")->required();
  sweepc->add_option("--lambda", sweep_lambdas, "comma list of lambda values")
      ->delimiter(',')
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sweepc->add_option("--k", sweep_ks, "comma list of neighbor counts")
      ->delimiter(',')
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_augmentation(sweepc, sweep_aug, false);
  add_training(sweepc, sweep_topts);
  sweepc->callback([&] {
    selected = sweepc;
    runner = [&](const fs::path& dir) {
      return cmd_sweep(sweep_common, dir, sweep_data, sweep_lambdas, sweep_ks, sweep_aug,
                       sweep_topts);
    };
  });

  try {
    app.parse(argc, argv);
    apply_config_file(selected, selected->get_option("--config")->as<std::string>());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help is a success; anything else is a usage error
  }

  try {
    const std::string resolved = selected->config_to_str(true, false);
    const std::string* out = nullptr;
    if (selected == synth) out = &synth_common.out;
    if (selected == inv) out = &inv_common.out;
    if (selected == augc) out = &aug_common.out;
    if (selected == trainc) out = &train_common.out;
    if (selected == evalc) out = &eval_common.out;
    if (selected == sweepc) out = &sweep_common.out;
    const fs::path run_dir = resolve_run_dir(*out, selected->get_name(), resolved);
    write_text(run_dir / "config.resolved", resolved);
    return runner(run_dir);
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
}
