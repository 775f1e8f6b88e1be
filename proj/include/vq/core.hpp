#pragma once

// Sequential LBG codebook design. This path is the reference the parallel
// engine must reproduce bit for bit.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "vq/errors.hpp"
#include "vq/exact_sum.hpp"
#include "vq/types.hpp"

namespace vq {

namespace detail {

inline void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw UsageError(std::string(what) + ": dimension mismatch (" + std::to_string(a) + " vs " +
                     std::to_string(b) + ")");
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

inline double apply_metric(double squared, Metric metric) noexcept {
  return metric == Metric::euclidean ? std::sqrt(squared) : squared;
}

}  // namespace detail

inline double distance(std::span<const double> a, std::span<const double> b,
                       Metric metric = Metric::squared_euclidean) {
  detail::require_same_dim(a.size(), b.size(), "distance");
  return detail::apply_metric(detail::squared_distance(a, b), metric);
}

/// Componentwise mean of a non-empty set of vectors.
inline std::vector<double> centroid(const VectorSet& vectors) {
  if (vectors.empty()) throw DomainError("centroid of an empty set of vectors");
  std::vector<double> sum(vectors.dim(), 0.0);
  for (std::size_t j = 0; j < vectors.size(); ++j) {
    const auto row = vectors.row(j);
    for (std::size_t d = 0; d < sum.size(); ++d) sum[d] += row[d];
  }
  const auto count = static_cast<double>(vectors.size());
  for (auto& s : sum) s /= count;
  return sum;
}

struct Nearest {
  CellIndex index = 0;
  double distance = 0.0;

  friend bool operator==(const Nearest&, const Nearest&) = default;
};

/// Closest codevector to `x`. Selection is by squared distance under either
/// metric; ties go to the lowest index.
inline Nearest nearest_codevector(std::span<const double> x, const Codebook& cb,
                                  Metric metric = Metric::squared_euclidean) {
  detail::require_same_dim(x.size(), cb.dim(), "nearest_codevector");
  Nearest best{0, detail::squared_distance(x, cb[0])};
  for (std::size_t i = 1; i < cb.size(); ++i) {
    const double d = detail::squared_distance(x, cb[i]);
    if (d < best.distance) best = {static_cast<CellIndex>(i), d};
  }
  best.distance = detail::apply_metric(best.distance, metric);
  return best;
}

/// Doubles the codebook: row i becomes rows 2i (+delta) and 2i+1 (-delta).
inline Codebook split_codebook(const Codebook& cb, double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ConfigError("split offset must be > 0");
  VectorSet out(cb.size() * 2, cb.dim());
  for (std::size_t i = 0; i < cb.size(); ++i) {
    const auto src = cb[i];
    auto plus = out.row(2 * i);
    auto minus = out.row(2 * i + 1);
    for (std::size_t d = 0; d < src.size(); ++d) {
      plus[d] = src[d] + delta;
      minus[d] = src[d] - delta;
    }
  }
  return Codebook(std::move(out));
}

/// Cell allocation for one contiguous chunk of vectors.
struct ChunkAllocation {
  PartialCellTable table;
  ExactSum distortion;  // D_rho, held exactly

  double total() const noexcept { return distortion.value(); }
};

/// Allocates rows [begin, end) of `data` to their nearest codevectors.
inline ChunkAllocation assign_cells(const VectorSet& data, std::size_t begin, std::size_t end,
                                    const Codebook& cb, Metric metric = Metric::squared_euclidean) {
  detail::require_same_dim(data.dim(), cb.dim(), "assign_cells");
  if (begin > end || end > data.size()) throw UsageError("assign_cells: chunk out of range");
  ChunkAllocation out;
  out.table.offset = begin;
  out.table.cells.resize(end - begin);
  for (std::size_t z = begin; z < end; ++z) {
    const Nearest n = nearest_codevector(data.row(z), cb, metric);
    out.table.cells[z - begin] = n.index;
    out.distortion += n.distance;
  }
  return out;
}

inline ChunkAllocation assign_cells(const TrainingSet& ts, const Codebook& cb,
                                    Metric metric = Metric::squared_euclidean) {
  return assign_cells(ts.vectors(), 0, ts.size(), cb, metric);
}

inline std::size_t count_empty_cells(std::span<const CellIndex> table, std::size_t codebook_size) {
  std::vector<bool> used(codebook_size, false);
  for (auto c : table) used[c] = true;
  std::size_t empty = 0;
  for (bool u : used) empty += u ? 0 : 1;
  return empty;
}

struct CodebookUpdate {
  Codebook codebook;
  std::size_t empty_cells = 0;
};

/// Replaces each codevector by the centroid of its cell. Codevectors with an
/// empty cell are kept as they are.
inline CodebookUpdate update_codebook(const TrainingSet& ts, std::span<const CellIndex> table,
                                      const Codebook& cb) {
  detail::require_same_dim(ts.dim(), cb.dim(), "update_codebook");
  if (table.size() != ts.size())
    throw UsageError("update_codebook: cell table has " + std::to_string(table.size()) +
                     " entries for " + std::to_string(ts.size()) + " training vectors");
  const std::size_t k = cb.dim();
  std::vector<double> sums(cb.size() * k, 0.0);
  std::vector<std::size_t> counts(cb.size(), 0);
  for (std::size_t j = 0; j < ts.size(); ++j) {
    const CellIndex c = table[j];
    if (c >= cb.size()) throw UsageError("update_codebook: cell index out of range");
    const auto row = ts[j];
    for (std::size_t d = 0; d < k; ++d) sums[c * k + d] += row[d];
    ++counts[c];
  }
  VectorSet next(cb.size(), k);
  std::size_t empty = 0;
  for (std::size_t c = 0; c < cb.size(); ++c) {
    auto dst = next.row(c);
    if (counts[c] == 0) {
      ++empty;
      const auto prev = cb[c];
      std::copy(prev.begin(), prev.end(), dst.begin());
      continue;
    }
    const auto n = static_cast<double>(counts[c]);
    for (std::size_t d = 0; d < k; ++d) dst[d] = sums[c * k + d] / n;
  }
  return {Codebook(std::move(next)), empty};
}

/// Relative-improvement stopping test: (prev - cur) / prev <= epsilon.
/// `prev` may be +inf before the first allocation of a level.
inline bool convergence_check(double td_prev, double td_cur, double epsilon) {
  if (td_prev < 0.0 || td_cur < 0.0 || std::isnan(td_prev) || std::isnan(td_cur))
    throw DomainError("distortion values must be non-negative");
  if (std::isinf(td_prev)) return false;
  if (td_prev == 0.0) return true;
  return (td_prev - td_cur) / td_prev <= epsilon;
}

namespace detail {

inline double elapsed_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

inline std::string guard_warning(std::size_t level_size, std::size_t iterations) {
  return "codebook size " + std::to_string(level_size) + ": stopped after " +
         std::to_string(iterations) + " iterations without reaching the threshold";
}

}  // namespace detail

/// Sequential LBG training to `cfg.target_size` codevectors.
///
/// Starts from the centroid of the training set, which is allocated once and
/// recorded as level 1. Each further level splits the codebook and then
/// alternates allocation and centroid update until the relative drop in total
/// distortion is at most epsilon (or the per-level iteration guard trips). The
/// codebook kept for a level is the one whose allocation passed the test.
inline TrainResult lbg_train(const TrainingSet& ts, const LbgConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::size_t m = ts.size();

  DistortionStats stats;
  auto record = [&](const Codebook& cb, std::size_t iteration, const ChunkAllocation& alloc) {
    const double td = alloc.total();
    stats.history.push_back({cb.size(), iteration, td, count_empty_cells(alloc.table.cells, cb.size()),
                             detail::elapsed_since(start)});
    stats.per_worker = {td};
    stats.total = td;
    return td;
  };

  Codebook cb(VectorSet(centroid(ts.vectors()), ts.dim()));
  record(cb, 1, assign_cells(ts.vectors(), 0, m, cb, cfg.metric));

  while (cb.size() < cfg.target_size) {
    cb = split_codebook(cb, cfg.delta);
    double td_prev = std::numeric_limits<double>::infinity();
    for (std::size_t it = 1;; ++it) {
      const ChunkAllocation alloc = assign_cells(ts.vectors(), 0, m, cb, cfg.metric);
      const double td = record(cb, it, alloc);
      if (convergence_check(td_prev, td, cfg.epsilon)) break;
      if (it == cfg.max_iterations_per_level) {
        stats.warnings.push_back(detail::guard_warning(cb.size(), it));
        break;
      }
      cb = update_codebook(ts, alloc.table.cells, cb).codebook;
      td_prev = td;
    }
  }
  return {std::move(cb), std::move(stats)};
}

}  // namespace vq
