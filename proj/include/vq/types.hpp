#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vq/errors.hpp"

namespace vq {

enum class Metric : std::uint8_t { squared_euclidean = 0, euclidean = 1 };

inline std::string_view to_string(Metric m) {
  return m == Metric::euclidean ? "euclidean" : "squared_euclidean";
}

inline Metric parse_metric(std::string_view name) {
  if (name == "squared_euclidean" || name == "squared") return Metric::squared_euclidean;
  if (name == "euclidean") return Metric::euclidean;
  throw UsageError("unknown metric '" + std::string(name) +
                   "' (expected squared_euclidean or euclidean)");
}

using CellIndex = std::uint32_t;

/// Row-major block of `size()` vectors, each of dimension `dim()`. May be empty.
class VectorSet {
 public:
  VectorSet() = default;

  VectorSet(std::size_t rows, std::size_t dim) : dim_(dim), values_(rows * dim, 0.0) {
    if (dim == 0) throw UsageError("vector dimension must be at least 1");
  }

  VectorSet(std::vector<double> values, std::size_t dim) : dim_(dim), values_(std::move(values)) {
    if (dim == 0) throw UsageError("vector dimension must be at least 1");
    if (values_.size() % dim != 0)
      throw UsageError("value count " + std::to_string(values_.size()) +
                       " is not a multiple of dimension " + std::to_string(dim));
  }

  VectorSet(std::initializer_list<std::initializer_list<double>> rows) {
    if (rows.size() == 0) return;
    dim_ = rows.begin()->size();
    if (dim_ == 0) throw UsageError("vector dimension must be at least 1");
    values_.reserve(rows.size() * dim_);
    for (const auto& r : rows) {
      if (r.size() != dim_) throw UsageError("ragged rows in vector literal");
      values_.insert(values_.end(), r.begin(), r.end());
    }
  }

  std::size_t size() const noexcept { return dim_ == 0 ? 0 : values_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return values_.empty(); }

  std::span<const double> row(std::size_t i) const noexcept {
    return {values_.data() + i * dim_, dim_};
  }
  std::span<double> row(std::size_t i) noexcept { return {values_.data() + i * dim_, dim_}; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  bool all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  /// Bitwise comparison, so that -0.0 != 0.0 and identical NaN payloads compare equal.
  friend bool bit_identical(const VectorSet& a, const VectorSet& b) noexcept {
    if (a.dim_ != b.dim_ || a.values_.size() != b.values_.size()) return false;
    return std::equal(a.values_.begin(), a.values_.end(), b.values_.begin(), [](double x, double y) {
      return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y);
    });
  }

  friend bool operator==(const VectorSet&, const VectorSet&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

namespace detail {

inline void require_finite(const VectorSet& v, const char* what) {
  const auto values = v.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]))
      throw DomainError(std::string(what) + " row " + std::to_string(i / v.dim() + 1) +
                        " column " + std::to_string(i % v.dim() + 1) + " is not finite");
  }
}

}  // namespace detail

/// M >= 1 finite training vectors of dimension k >= 1.
class TrainingSet {
 public:
  explicit TrainingSet(VectorSet vectors) : vectors_(std::move(vectors)) {
    if (vectors_.empty()) throw DomainError("training set must contain at least one vector");
    detail::require_finite(vectors_, "training vector");
  }
  TrainingSet(std::initializer_list<std::initializer_list<double>> rows)
      : TrainingSet(VectorSet(rows)) {}

  std::size_t size() const noexcept { return vectors_.size(); }
  std::size_t dim() const noexcept { return vectors_.dim(); }
  std::span<const double> operator[](std::size_t i) const noexcept { return vectors_.row(i); }
  const VectorSet& vectors() const noexcept { return vectors_; }

 private:
  VectorSet vectors_;
};

/// S >= 1 finite codevectors of dimension k >= 1.
class Codebook {
 public:
  explicit Codebook(VectorSet codevectors) : rows_(std::move(codevectors)) {
    if (rows_.empty()) throw DomainError("codebook must contain at least one codevector");
    if (rows_.size() > std::numeric_limits<CellIndex>::max())
      throw DomainError("codebook too large for 32-bit indices");
    detail::require_finite(rows_, "codevector");
  }
  Codebook(std::initializer_list<std::initializer_list<double>> rows) : Codebook(VectorSet(rows)) {}

  std::size_t size() const noexcept { return rows_.size(); }
  std::size_t dim() const noexcept { return rows_.dim(); }
  std::span<const double> operator[](std::size_t i) const noexcept { return rows_.row(i); }
  const VectorSet& vectors() const noexcept { return rows_; }

  friend bool bit_identical(const Codebook& a, const Codebook& b) noexcept {
    return bit_identical(a.rows_, b.rows_);
  }
  friend bool operator==(const Codebook&, const Codebook&) = default;

 private:
  VectorSet rows_;
};

/// Nearest-codevector index for each training vector.
using CellTable = std::vector<CellIndex>;

/// One worker's slice of the cell table, starting at training index `offset`.
struct PartialCellTable {
  std::size_t offset = 0;
  std::vector<CellIndex> cells;

  friend bool operator==(const PartialCellTable&, const PartialCellTable&) = default;
};

struct LbgConfig {
  std::size_t target_size = 1;
  double epsilon = 0.001;
  double delta = 0.01;
  std::size_t workers = 1;
  std::size_t max_iterations_per_level = 100;
  Metric metric = Metric::squared_euclidean;

  void validate() const {
    if (target_size == 0 || !std::has_single_bit(target_size))
      throw ConfigError("codebook size " + std::to_string(target_size) +
                        " must be a power of two");
    if (target_size > (std::size_t{1} << 31)) throw ConfigError("codebook size too large");
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
      throw ConfigError("epsilon must be a finite value >= 0");
    if (!(delta > 0.0) || !std::isfinite(delta))
      throw ConfigError("delta must be a finite value > 0");
    if (workers == 0) throw ConfigError("worker count must be at least 1");
    if (max_iterations_per_level == 0)
      throw ConfigError("max iterations per level must be at least 1");
  }
};

/// One cell-allocation round of training.
struct HistoryEntry {
  std::size_t level_size = 0;
  std::size_t iteration = 0;  // 1-based within the level
  double td = 0.0;
  std::size_t empty_cells = 0;
  double seconds = 0.0;  // elapsed since training started; excluded from equality

  friend bool operator==(const HistoryEntry& a, const HistoryEntry& b) noexcept {
    return a.level_size == b.level_size && a.iteration == b.iteration &&
           std::bit_cast<std::uint64_t>(a.td) == std::bit_cast<std::uint64_t>(b.td) &&
           a.empty_cells == b.empty_cells;
  }
};

struct DistortionStats {
  std::vector<double> per_worker;  // D_rho of the final allocation
  double total = 0.0;              // TD of the final allocation
  std::vector<HistoryEntry> history;
  std::vector<std::string> warnings;

  /// Allocation rounds spent at each codebook size, in level order.
  std::vector<std::size_t> iterations_per_level() const {
    std::vector<std::size_t> out;
    std::size_t level = 0;
    for (const auto& h : history) {
      if (out.empty() || h.level_size != level) {
        out.push_back(0);
        level = h.level_size;
      }
      ++out.back();
    }
    return out;
  }

  double mean(std::size_t training_size) const {
    return training_size == 0 ? 0.0 : total / static_cast<double>(training_size);
  }
};

struct TrainResult {
  Codebook codebook;
  DistortionStats stats;
};

}  // namespace vq
