#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "vimm/dataset.hpp"
#include "vimm/error.hpp"
#include "vimm/interaction_matrix.hpp"
#include "vimm/io.hpp"
#include "vimm/parallel.hpp"
#include "vimm/rng.hpp"

namespace vimm {

// Dense row-major table of doubles. Training state lives in 64-bit;
// checkpoints round to 32-bit at the file boundary.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> v;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}

  double* row(std::size_t r) { return v.data() + r * cols; }
  const double* row(std::size_t r) const { return v.data() + r * cols; }
  double& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
  void zero() { std::fill(v.begin(), v.end(), 0.0); }

  void add_inplace(const Matrix& other) {
    require(rows == other.rows && cols == other.cols, "Matrix::add_inplace: shape mismatch");
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += other.v[i];
  }

  bool all_finite() const {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

// Elementwise sum of layer tables, accumulated in layer order so the
// result is bit-identical to an incremental += during forward.
inline Matrix aggregate(const std::vector<Matrix>& layers) {
  require(!layers.empty(), "aggregate: no layers");
  Matrix out = layers[0];
  for (std::size_t l = 1; l < layers.size(); ++l) out.add_inplace(layers[l]);
  return out;
}

enum class NormMode { paper, sqrt_degree };

inline const char* to_string(NormMode m) { return m == NormMode::paper ? "paper" : "sqrt"; }

// One propagation step over the weighted bipartite graph:
//   e_u <- sum_j c(u,j) e_j,  e_i <- sum_u c(u,i) e_u
// with c(u,j) = w_uj / (d_u d_j) under `paper` normalization and
// w_uj / sqrt(d_u d_j) under `sqrt_degree`. Degrees are sums of edge
// weights; zero-degree nodes have no incident edges and propagate the
// zero vector. Both coefficient choices are symmetric in (u, j), which
// the gradient path relies on.
class PropagationGraph {
 public:
  PropagationGraph(const InteractionMatrix& adj, NormMode mode)
      : users_(adj.user_count()), items_(adj.item_count()), mode_(mode) {
    const std::vector<double> du = adj.user_degrees();
    const std::vector<double> di = adj.item_degrees();
    u_ptr_.assign(users_ + 1, 0);
    i_ptr_.assign(items_ + 1, 0);
    for (std::uint32_t u = 0; u < users_; ++u) {
      u_ptr_[u + 1] = u_ptr_[u] + (adj.row_end(u) - adj.row_begin(u));
      for (std::size_t e = adj.row_begin(u); e < adj.row_end(u); ++e)
        ++i_ptr_[adj.entry_item(e) + 1];
    }
    for (std::size_t i = 0; i < items_; ++i) i_ptr_[i + 1] += i_ptr_[i];

    const std::size_t nnz = u_ptr_[users_];
    u_cols_.resize(nnz);
    u_coef_.resize(nnz);
    i_cols_.resize(nnz);
    i_coef_.resize(nnz);
    std::vector<std::size_t> cursor(i_ptr_.begin(), i_ptr_.end() - 1);
    for (std::uint32_t u = 0; u < users_; ++u) {
      std::size_t out = u_ptr_[u];
      for (std::size_t e = adj.row_begin(u); e < adj.row_end(u); ++e, ++out) {
        const std::uint32_t j = adj.entry_item(e);
        const double w = adj.entry_weight(e);
        const double denom = du[u] * di[j];
        const double c = mode_ == NormMode::paper ? w / denom : w / std::sqrt(denom);
        require(std::isfinite(c), "propagation coefficient not finite");
        u_cols_[out] = j;
        u_coef_[out] = c;
        const std::size_t slot = cursor[j]++;
        i_cols_[slot] = u;
        i_coef_[slot] = c;
      }
    }
  }

  std::size_t user_count() const { return users_; }
  std::size_t item_count() const { return items_; }
  NormMode mode() const { return mode_; }

  // next user table from the item table at the previous layer
  void propagate_users(const Matrix& item_table, Matrix& out, unsigned workers = 1) const {
    require(item_table.rows == items_, "propagate_users: item table row mismatch");
    step(u_ptr_, u_cols_, u_coef_, users_, item_table, out, workers);
  }

  void propagate_items(const Matrix& user_table, Matrix& out, unsigned workers = 1) const {
    require(user_table.rows == users_, "propagate_items: user table row mismatch");
    step(i_ptr_, i_cols_, i_coef_, items_, user_table, out, workers);
  }

 private:
  static void step(const std::vector<std::size_t>& ptr, const std::vector<std::uint32_t>& cols,
                   const std::vector<double>& coef, std::size_t out_rows, const Matrix& in,
                   Matrix& out, unsigned workers) {
    const std::size_t d = in.cols;
    out.rows = out_rows;
    out.cols = d;
    out.v.assign(out_rows * d, 0.0);
    // disjoint output rows per worker, neighbors accumulated in stored
    // (ascending) order: identical result for any worker count
    parallel_for(out_rows, workers, [&](std::size_t begin, std::size_t end) {
      for (std::size_t r = begin; r < end; ++r) {
        double* dst = out.row(r);
        for (std::size_t e = ptr[r]; e < ptr[r + 1]; ++e) {
          const double c = coef[e];
          const double* src = in.row(cols[e]);
          for (std::size_t x = 0; x < d; ++x) dst[x] += c * src[x];
        }
      }
    });
  }

  std::size_t users_;
  std::size_t items_;
  NormMode mode_;
  std::vector<std::size_t> u_ptr_, i_ptr_;
  std::vector<std::uint32_t> u_cols_, i_cols_;
  std::vector<double> u_coef_, i_coef_;
};

struct ModalityTables {
  std::string name;
  Matrix user0;  // trainable layer-0 user table, |U| x d
  Matrix item0;  // trainable layer-0 item table, |I| x d
  Matrix user_agg;
  Matrix item_agg;
};

// Per-modality embedding tables with propagation state. Scoring sums
// per-modality dot products of the aggregated tables.
class EmbeddingModel {
 public:
  EmbeddingModel() = default;
  EmbeddingModel(std::size_t users, std::size_t items, std::size_t dim, std::size_t layers,
                 NormMode norm, std::vector<std::string> modality_names)
      : users_(users), items_(items), dim_(dim), layers_(layers), norm_(norm) {
    require(users > 0 && items > 0 && dim > 0, "EmbeddingModel: zero dimension");
    require(!modality_names.empty(), "EmbeddingModel: no modalities");
    std::sort(modality_names.begin(), modality_names.end());
    for (auto& name : modality_names) {
      ModalityTables t;
      t.name = std::move(name);
      t.user0 = Matrix(users, dim);
      t.item0 = Matrix(items, dim);
      tables_.push_back(std::move(t));
    }
  }

  std::size_t user_count() const { return users_; }
  std::size_t item_count() const { return items_; }
  std::size_t dim() const { return dim_; }
  std::size_t layer_count() const { return layers_; }
  NormMode norm() const { return norm_; }
  std::size_t modality_count() const { return tables_.size(); }
  std::vector<ModalityTables>& tables() { return tables_; }
  const std::vector<ModalityTables>& tables() const { return tables_; }

  // Scaled uniform init with a per-table fan-based limit.
  void init_random(std::uint64_t seed) {
    for (std::size_t mi = 0; mi < tables_.size(); ++mi) {
      fill_scaled_uniform(tables_[mi].user0, Rng::substream(seed, 81, mi, 0));
      fill_scaled_uniform(tables_[mi].item0, Rng::substream(seed, 81, mi, 1));
    }
  }

  // User tables random; item tables start from the modality features
  // passed through a seeded random orthonormal rotation of feature
  // space, truncated (or zero-padded) to the training dimension.
  void init_from_features(const std::map<std::string, ModalityEmbeddings>& features,
                          std::uint64_t seed) {
    for (std::size_t mi = 0; mi < tables_.size(); ++mi) {
      auto& t = tables_[mi];
      const auto it = features.find(t.name);
      require(it != features.end(), "init_from_features: missing modality '" + t.name + "'");
      const ModalityEmbeddings& emb = it->second;
      require(emb.item_count == items_, "init_from_features: item count mismatch for '" +
                                            t.name + "'");
      fill_scaled_uniform(t.user0, Rng::substream(seed, 81, mi, 0));
      project_features(emb, t.item0, Rng::substream(seed, 82, mi, 0));
    }
  }

  // Builds aggregated tables: agg = sum_{l=0..L} e^(l), computed by
  // incremental accumulation in layer order.
  void forward(const PropagationGraph& graph, unsigned workers = 1) {
    require(graph.user_count() == users_ && graph.item_count() == items_,
            "forward: graph shape mismatch");
    Matrix cur_u, cur_i, next_u, next_i;
    for (auto& t : tables_) {
      t.user_agg = t.user0;
      t.item_agg = t.item0;
      cur_u = t.user0;
      cur_i = t.item0;
      for (std::size_t l = 1; l <= layers_; ++l) {
        graph.propagate_users(cur_i, next_u, workers);
        graph.propagate_items(cur_u, next_i, workers);
        t.user_agg.add_inplace(next_u);
        t.item_agg.add_inplace(next_i);
        std::swap(cur_u, next_u);
        std::swap(cur_i, next_i);
      }
    }
  }

  double score(std::uint32_t user, std::uint32_t item) const {
    require(user < users_ && item < items_, "score: index out of range");
    double total = 0.0;
    for (const auto& t : tables_) {
      const double* eu = t.user_agg.row(user);
      const double* ei = t.item_agg.row(item);
      double dot = 0.0;
      for (std::size_t x = 0; x < dim_; ++x) dot += eu[x] * ei[x];
      total += dot;
    }
    return total;
  }

  // scores[i] = score(user, i) for all items; one pass per modality
  void score_user(std::uint32_t user, std::vector<double>& scores) const {
    require(user < users_, "score_user: user out of range");
    scores.assign(items_, 0.0);
    for (const auto& t : tables_) {
      const double* eu = t.user_agg.row(user);
      for (std::size_t i = 0; i < items_; ++i) {
        const double* ei = t.item_agg.row(i);
        double dot = 0.0;
        for (std::size_t x = 0; x < dim_; ++x) dot += eu[x] * ei[x];
        scores[i] += dot;
      }
    }
  }

  bool all_finite() const {
    for (const auto& t : tables_)
      if (!t.user0.all_finite() || !t.item0.all_finite()) return false;
    return true;
  }

  std::size_t trainable_parameter_count() const {
    return tables_.size() * (users_ + items_) * dim_;
  }

 private:
  static void fill_scaled_uniform(Matrix& m, Rng rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(m.rows + m.cols));
    for (double& x : m.v) x = (2.0 * rng.uniform_real() - 1.0) * limit;
  }

  // Random rotation of feature space via modified Gram-Schmidt on a
  // gaussian matrix, then keep the first min(d, feat_dim) coordinates.
  // Columns beyond the feature rank (d > feat_dim) get scaled uniform
  // noise so no training dimension starts dead.
  void project_features(const ModalityEmbeddings& emb, Matrix& item0, Rng rng) {
    const std::size_t f = emb.dim;
    const std::size_t keep = std::min(dim_, f);
    std::vector<double> q(f * keep);  // column-major columns of the rotation
    for (std::size_t c = 0; c < keep; ++c) {
      double* col = q.data() + c * f;
      while (true) {
        for (std::size_t r = 0; r < f; ++r) col[r] = rng.normal();
        for (std::size_t p = 0; p < c; ++p) {
          const double* prev = q.data() + p * f;
          double dot = 0.0;
          for (std::size_t r = 0; r < f; ++r) dot += col[r] * prev[r];
          for (std::size_t r = 0; r < f; ++r) col[r] -= dot * prev[r];
        }
        double norm = 0.0;
        for (std::size_t r = 0; r < f; ++r) norm += col[r] * col[r];
        norm = std::sqrt(norm);
        if (norm > 1e-8) {
          for (std::size_t r = 0; r < f; ++r) col[r] /= norm;
          break;
        }
        // degenerate draw, redo this column
      }
    }
    const double pad_limit = std::sqrt(6.0 / static_cast<double>(item0.rows + item0.cols));
    for (std::size_t i = 0; i < items_; ++i) {
      const auto feat = emb.row(i);
      double* dst = item0.row(i);
      for (std::size_t c = 0; c < keep; ++c) {
        const double* col = q.data() + c * f;
        double dot = 0.0;
        for (std::size_t r = 0; r < f; ++r) dot += static_cast<double>(feat[r]) * col[r];
        dst[c] = dot;
      }
      for (std::size_t c = keep; c < dim_; ++c)
        dst[c] = (2.0 * rng.uniform_real() - 1.0) * pad_limit;
    }
  }

  std::size_t users_ = 0;
  std::size_t items_ = 0;
  std::size_t dim_ = 0;
  std::size_t layers_ = 0;
  NormMode norm_ = NormMode::paper;
  std::vector<ModalityTables> tables_;
};

// --- Checkpoint: magic "VIMMMDL1", header, then per modality the
// layer-0 user and item tables with their dims, row-major f32 LE.

inline constexpr char kModelMagic[] = "VIMMMDL1";

inline void save_model(const EmbeddingModel& model, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "cannot open for writing: " + path.string());
  os.write(kModelMagic, 8);
  detail::write_u32_le(os, static_cast<std::uint32_t>(model.modality_count()));
  detail::write_u32_le(os, static_cast<std::uint32_t>(model.dim()));
  detail::write_u32_le(os, static_cast<std::uint32_t>(model.layer_count()));
  const std::uint8_t norm_tag = model.norm() == NormMode::paper ? 0 : 1;
  os.write(reinterpret_cast<const char*>(&norm_tag), 1);
  for (const auto& t : model.tables()) {
    detail::write_u32_le(os, static_cast<std::uint32_t>(t.name.size()));
    os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    const auto write_table = [&](const Matrix& m) {
      detail::write_u32_le(os, static_cast<std::uint32_t>(m.rows));
      detail::write_u32_le(os, static_cast<std::uint32_t>(m.cols));
      for (double x : m.v) detail::write_f32_le(os, static_cast<float>(x));
    };
    write_table(t.user0);
    write_table(t.item0);
  }
  os.flush();
  require(os.good(), "write failed: " + path.string());
}

inline EmbeddingModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "cannot open: " + path.string());
  const std::string where = path.string();
  char magic[8];
  require(static_cast<bool>(is.read(magic, 8)) && std::memcmp(magic, kModelMagic, 8) == 0,
          where + ": bad magic, expected " + std::string(kModelMagic));
  std::uint32_t modalities = 0, dim = 0, layers = 0;
  std::uint8_t norm_tag = 2;
  require(detail::read_u32_le(is, modalities) && detail::read_u32_le(is, dim) &&
              detail::read_u32_le(is, layers) &&
              static_cast<bool>(is.read(reinterpret_cast<char*>(&norm_tag), 1)),
          where + ": truncated header");
  require(modalities > 0, where + ": zero modalities");
  require(norm_tag <= 1, where + ": unknown norm tag");

  std::vector<std::string> names;
  struct Loaded {
    Matrix user0, item0;
  };
  std::vector<Loaded> loaded;
  std::uint32_t users = 0, items = 0;
  for (std::uint32_t mi = 0; mi < modalities; ++mi) {
    std::uint32_t name_len = 0;
    require(detail::read_u32_le(is, name_len) && name_len > 0 && name_len < 4096,
            where + ": bad modality name length");
    std::string name(name_len, '\0');
    require(static_cast<bool>(is.read(name.data(), name_len)), where + ": truncated name");
    const auto read_table = [&](Matrix& m, const char* label) {
      std::uint32_t r = 0, c = 0;
      require(detail::read_u32_le(is, r) && detail::read_u32_le(is, c),
              where + ": truncated " + label + " dims");
      require(r > 0 && c == dim, where + ": inconsistent " + label + " dims");
      m = Matrix(r, c);
      for (double& x : m.v) {
        float fx = 0.0f;
        require(detail::read_f32_le(is, fx), where + ": truncated " + label + " data");
        require(std::isfinite(fx), where + ": non-finite value in " + label);
        x = static_cast<double>(fx);
      }
    };
    Loaded t;
    read_table(t.user0, "user table");
    read_table(t.item0, "item table");
    if (mi == 0) {
      users = static_cast<std::uint32_t>(t.user0.rows);
      items = static_cast<std::uint32_t>(t.item0.rows);
    } else {
      require(t.user0.rows == users && t.item0.rows == items,
              where + ": modality table shapes disagree");
    }
    names.push_back(name);
    loaded.push_back(std::move(t));
  }
  char extra;
  require(!is.read(&extra, 1), where + ": trailing bytes after tables");

  auto sorted = names;
  std::sort(sorted.begin(), sorted.end());
  require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
          where + ": duplicate modality name");
  EmbeddingModel model(users, items, dim, layers,
                       norm_tag == 0 ? NormMode::paper : NormMode::sqrt_degree, names);
  for (auto& t : model.tables()) {
    const auto idx = static_cast<std::size_t>(
        std::find(names.begin(), names.end(), t.name) - names.begin());
    t.user0 = std::move(loaded[idx].user0);
    t.item0 = std::move(loaded[idx].item0);
  }
  return model;
}

}  // namespace vimm
