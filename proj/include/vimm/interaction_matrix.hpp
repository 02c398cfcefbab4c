#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vimm/error.hpp"

namespace vimm {

enum class MatrixKind : std::uint8_t {
  real = 0,
  virtual_modality = 1,
  virtual_synergistic = 2,
  augmented = 3,
};

inline const char* to_string(MatrixKind k) {
  switch (k) {
    case MatrixKind::real: return "real";
    case MatrixKind::virtual_modality: return "virtual_modality";
    case MatrixKind::virtual_synergistic: return "virtual_synergistic";
    case MatrixKind::augmented: return "augmented";
  }
  return "?";
}

// Sparse user-item matrix in CSR layout over users; entries within a row
// are sorted by item. Weights are kept in 64-bit floats; zero-weight
// entries are never stored.
class InteractionMatrix {
 public:
  struct Entry {
    std::uint32_t user;
    std::uint32_t item;
    double weight;
  };

  InteractionMatrix() = default;
  InteractionMatrix(std::size_t users, std::size_t items, MatrixKind kind,
                    std::string modality = "")
      : user_count_(users),
        item_count_(items),
        kind_(kind),
        modality_(std::move(modality)),
        row_ptr_(users + 1, 0) {}

  static InteractionMatrix from_pairs(
      std::size_t users, std::size_t items,
      const std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs,
      MatrixKind kind = MatrixKind::real, std::string modality = "") {
    std::vector<Entry> entries;
    entries.reserve(pairs.size());
    for (const auto& [u, i] : pairs) entries.push_back({u, i, 1.0});
    return from_entries(users, items, std::move(entries), kind, std::move(modality));
  }

  static InteractionMatrix from_entries(std::size_t users, std::size_t items,
                                        std::vector<Entry> entries,
                                        MatrixKind kind = MatrixKind::real,
                                        std::string modality = "") {
    InteractionMatrix m(users, items, kind, std::move(modality));
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      return a.user != b.user ? a.user < b.user : a.item < b.item;
    });
    m.items_.reserve(entries.size());
    m.weights_.reserve(entries.size());
    std::uint32_t prev_u = 0;
    std::uint32_t prev_i = 0;
    bool first = true;
    for (const Entry& e : entries) {
      require(e.user < users, "interaction matrix: user index out of range");
      require(e.item < items, "interaction matrix: item index out of range");
      require(first || e.user != prev_u || e.item != prev_i,
              "interaction matrix: duplicate entry (" + std::to_string(e.user) + ", " +
                  std::to_string(e.item) + ")");
      require(std::isfinite(e.weight), "interaction matrix: non-finite weight");
      first = false;
      prev_u = e.user;
      prev_i = e.item;
      if (e.weight == 0.0) continue;  // zero entries are not stored
      m.row_ptr_[e.user + 1]++;
      m.items_.push_back(e.item);
      m.weights_.push_back(e.weight);
    }
    for (std::size_t u = 0; u < users; ++u) m.row_ptr_[u + 1] += m.row_ptr_[u];
    return m;
  }

  std::size_t user_count() const { return user_count_; }
  std::size_t item_count() const { return item_count_; }
  std::size_t nnz() const { return items_.size(); }
  MatrixKind kind() const { return kind_; }
  const std::string& modality() const { return modality_; }
  double density() const {
    const double cells = static_cast<double>(user_count_) * static_cast<double>(item_count_);
    return cells > 0.0 ? static_cast<double>(nnz()) / cells : 0.0;
  }

  std::size_t row_begin(std::uint32_t user) const { return row_ptr_[user]; }
  std::size_t row_end(std::uint32_t user) const { return row_ptr_[user + 1]; }
  std::uint32_t entry_item(std::size_t idx) const { return items_[idx]; }
  double entry_weight(std::size_t idx) const { return weights_[idx]; }

  bool contains(std::uint32_t user, std::uint32_t item) const {
    const auto begin = items_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[user]);
    const auto end = items_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[user + 1]);
    return std::binary_search(begin, end, item);
  }

  // 0 when the entry is absent.
  double weight_at(std::uint32_t user, std::uint32_t item) const {
    const auto begin = items_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[user]);
    const auto end = items_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[user + 1]);
    const auto it = std::lower_bound(begin, end, item);
    if (it == end || *it != item) return 0.0;
    return weights_[static_cast<std::size_t>(it - items_.begin())];
  }

  // Entries in canonical (user, item) order.
  std::vector<Entry> entries() const {
    std::vector<Entry> out;
    out.reserve(nnz());
    for (std::uint32_t u = 0; u < user_count_; ++u)
      for (std::size_t e = row_ptr_[u]; e < row_ptr_[u + 1]; ++e)
        out.push_back({u, items_[e], weights_[e]});
    return out;
  }

  std::vector<double> user_degrees() const {
    std::vector<double> deg(user_count_, 0.0);
    for (std::uint32_t u = 0; u < user_count_; ++u)
      for (std::size_t e = row_ptr_[u]; e < row_ptr_[u + 1]; ++e) deg[u] += weights_[e];
    return deg;
  }

  std::vector<double> item_degrees() const {
    std::vector<double> deg(item_count_, 0.0);
    for (std::uint32_t u = 0; u < user_count_; ++u)
      for (std::size_t e = row_ptr_[u]; e < row_ptr_[u + 1]; ++e) deg[items_[e]] += weights_[e];
    return deg;
  }

  // Number of training interactions per user (row lengths).
  std::vector<std::size_t> row_sizes() const {
    std::vector<std::size_t> n(user_count_);
    for (std::uint32_t u = 0; u < user_count_; ++u) n[u] = row_ptr_[u + 1] - row_ptr_[u];
    return n;
  }

  bool same_shape(const InteractionMatrix& other) const {
    return user_count_ == other.user_count_ && item_count_ == other.item_count_;
  }

  bool operator==(const InteractionMatrix& other) const {
    return user_count_ == other.user_count_ && item_count_ == other.item_count_ &&
           kind_ == other.kind_ && row_ptr_ == other.row_ptr_ && items_ == other.items_ &&
           weights_ == other.weights_;
  }

 private:
  std::size_t user_count_ = 0;
  std::size_t item_count_ = 0;
  MatrixKind kind_ = MatrixKind::real;
  std::string modality_;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::uint32_t> items_;
  std::vector<double> weights_;
};

}  // namespace vimm
