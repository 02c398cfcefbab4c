#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "vimm/error.hpp"
#include "vimm/interaction_matrix.hpp"
#include "vimm/parallel.hpp"
#include "vimm/rng.hpp"

namespace vimm {

// Which count normalizes the real-overlap rate. The printed formula
// divides by the real interaction count; the alternative divides by the
// virtual matrix size and is kept behind a switch.
enum class OverlapDenominator { real, virtual_size };

inline std::size_t intersection_size(const InteractionMatrix& a, const InteractionMatrix& b) {
  require(a.same_shape(b), "overlap: matrix shapes differ");
  std::size_t count = 0;
  for (std::uint32_t u = 0; u < a.user_count(); ++u) {
    std::size_t ea = a.row_begin(u);
    std::size_t eb = b.row_begin(u);
    const std::size_t enda = a.row_end(u);
    const std::size_t endb = b.row_end(u);
    while (ea < enda && eb < endb) {
      const std::uint32_t ia = a.entry_item(ea);
      const std::uint32_t ib = b.entry_item(eb);
      if (ia == ib) {
        ++count;
        ++ea;
        ++eb;
      } else if (ia < ib) {
        ++ea;
      } else {
        ++eb;
      }
    }
  }
  return count;
}

// Overlap rate |virtual ∩ real| over the chosen denominator.
inline double overlap_real(const InteractionMatrix& virt, const InteractionMatrix& real,
                           OverlapDenominator denom = OverlapDenominator::real) {
  require(real.nnz() > 0, "overlap_real: empty real matrix");
  const std::size_t inter = intersection_size(virt, real);
  if (denom == OverlapDenominator::real)
    return static_cast<double>(inter) / static_cast<double>(real.nnz());
  require(virt.nnz() > 0, "overlap_real: empty virtual matrix");
  return static_cast<double>(inter) / static_cast<double>(virt.nnz());
}

// Redundancy of virtual proposals: k|real| / |virtual|, >= 1 because the
// virtual matrix collapses duplicates.
inline double overlap_self(const InteractionMatrix& virt, const InteractionMatrix& real,
                           std::size_t k) {
  require(virt.nnz() > 0, "overlap_self: empty virtual matrix");
  return static_cast<double>(k) * static_cast<double>(real.nnz()) /
         static_cast<double>(virt.nnz());
}

// Expected coverage of real interactions by k|R+| uniformly random
// placements, first-order approximation, capped at 1.
inline double o_avg_analytic(std::size_t user_count, std::size_t item_count,
                             std::size_t real_count, std::size_t k) {
  require(user_count > 0 && item_count > 0 && real_count > 0 && k > 0,
          "o_avg_analytic: all arguments must be positive");
  const double cells = static_cast<double>(user_count) * static_cast<double>(item_count);
  const double v = static_cast<double>(k) * static_cast<double>(real_count) / cells;
  return std::min(1.0, v);
}

// Monte-Carlo estimate of the same coverage probability: per trial,
// k|real| cells are drawn uniformly with replacement and the covered
// fraction of the real entries is measured. Trials use independent
// (seed, trial) substreams and the mean is accumulated in trial order,
// so the result does not depend on the worker count.
inline double o_avg_montecarlo(std::size_t user_count, std::size_t item_count,
                               const InteractionMatrix& real, std::size_t k,
                               std::size_t trials, std::uint64_t seed, unsigned workers = 1) {
  require(trials >= 1, "o_avg_montecarlo: trials must be >= 1");
  require(real.nnz() > 0, "o_avg_montecarlo: empty real matrix");
  require(real.user_count() == user_count && real.item_count() == item_count,
          "o_avg_montecarlo: matrix shape mismatch");

  const std::size_t cells = user_count * item_count;
  const std::size_t real_count = real.nnz();
  const std::size_t placements = k * real_count;

  // cell -> ordinal of the real entry living there, or -1.
  std::vector<std::int32_t> cell_to_real(cells, -1);
  {
    std::int32_t ordinal = 0;
    for (std::uint32_t u = 0; u < real.user_count(); ++u)
      for (std::size_t e = real.row_begin(u); e < real.row_end(u); ++e)
        cell_to_real[static_cast<std::size_t>(u) * item_count + real.entry_item(e)] = ordinal++;
  }

  std::vector<double> per_trial(trials);
  parallel_for(trials, workers, [&](std::size_t begin, std::size_t end) {
    std::vector<std::uint32_t> stamp(real_count, 0);
    std::uint32_t current = 0;
    for (std::size_t t = begin; t < end; ++t) {
      Rng rng = Rng::substream(seed, 71, t);
      ++current;
      if (current == 0) {  // stamp wrap
        std::fill(stamp.begin(), stamp.end(), 0);
        current = 1;
      }
      std::size_t covered = 0;
      for (std::size_t p = 0; p < placements; ++p) {
        const std::size_t cell = rng.uniform_index(cells);
        const std::int32_t ord = cell_to_real[cell];
        if (ord >= 0 && stamp[static_cast<std::size_t>(ord)] != current) {
          stamp[static_cast<std::size_t>(ord)] = current;
          ++covered;
        }
      }
      per_trial[t] = static_cast<double>(covered) / static_cast<double>(real_count);
    }
  });

  double sum = 0.0;
  for (std::size_t t = 0; t < trials; ++t) sum += per_trial[t];
  return sum / static_cast<double>(trials);
}

// Investigation summary for one dataset and one k.
struct OverlapReport {
  std::size_t k = 0;
  std::map<std::string, double> o_real;       // per modality
  double o_synergistic_real = 0.0;
  std::map<std::string, double> o_self;       // per modality
  double o_avg = 0.0;
  std::map<std::string, double> weights;      // w^m = O^m_real / O_avg
  double weight_synergistic = 0.0;            // w^s = O^s_real / O_avg
};

// Fills w^m and w^s from the overlap rates already present.
inline void modality_weights(OverlapReport& report) {
  require(report.o_avg > 0.0, "modality_weights: O_avg must be positive");
  report.weights.clear();
  for (const auto& [name, o] : report.o_real) report.weights[name] = o / report.o_avg;
  report.weight_synergistic = report.o_synergistic_real / report.o_avg;
}

// Computes the full report for one k from the real matrix and the
// already-built virtual matrices.
inline OverlapReport compute_overlap_report(
    const InteractionMatrix& real, const std::map<std::string, InteractionMatrix>& virtuals,
    const InteractionMatrix& synergistic_virtual, std::size_t k,
    OverlapDenominator denom = OverlapDenominator::real) {
  OverlapReport report;
  report.k = k;
  for (const auto& [name, virt] : virtuals) {
    report.o_real[name] = overlap_real(virt, real, denom);
    report.o_self[name] = overlap_self(virt, real, k);
  }
  report.o_synergistic_real = overlap_real(synergistic_virtual, real, denom);
  report.o_avg = o_avg_analytic(real.user_count(), real.item_count(), real.nnz(), k);
  modality_weights(report);
  return report;
}

// Tab-separated table, one row per k. Column order: the per-modality
// real overlaps, the synergistic overlap, the per-modality self
// overlaps, O_avg, the per-modality weights, the synergistic weight.
inline std::string format_investigation_table(const std::vector<OverlapReport>& reports) {
  require(!reports.empty(), "format_investigation_table: no reports");
  std::string out = "k";
  const auto& first = reports.front();
  for (const auto& [name, _] : first.o_real) out += "\tO_real[" + name + "]";
  out += "\tO_real[syn]";
  for (const auto& [name, _] : first.o_self) out += "\tO_self[" + name + "]";
  out += "\tO_avg";
  for (const auto& [name, _] : first.weights) out += "\tw[" + name + "]";
  out += "\tw[syn]\n";
  char buf[64];
  auto append = [&](double v) {
    std::snprintf(buf, sizeof(buf), "\t%.6f", v);
    out += buf;
  };
  for (const auto& r : reports) {
    out += std::to_string(r.k);
    for (const auto& [_, v] : r.o_real) append(v);
    append(r.o_synergistic_real);
    for (const auto& [_, v] : r.o_self) append(v);
    append(r.o_avg);
    for (const auto& [_, v] : r.weights) append(v);
    append(r.weight_synergistic);
    out += "\n";
  }
  return out;
}

}  // namespace vimm
