#pragma once

// Shared-memory data-parallel LBG: the training set is split into contiguous
// chunks, one per worker; each worker allocates its chunk against a read-only
// codebook; the control thread integrates partial tables and distortions in
// worker order; codevectors are then updated round-robin (c mod P).
//
// Every parallel result is bit-identical to the sequential path in core.hpp.

#include <algorithm>
#include <chrono>
#include <concepts>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "vq/core.hpp"
#include "vq/errors.hpp"
#include "vq/exact_sum.hpp"
#include "vq/types.hpp"

namespace vq {

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool empty() const noexcept { return begin == end; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// Contiguous per-worker ranges; worker rho owns ranges[rho].
struct ChunkPlan {
  std::vector<IndexRange> ranges;

  std::size_t workers() const noexcept { return ranges.size(); }
  std::size_t total() const noexcept { return ranges.empty() ? 0 : ranges.back().end; }
};

/// Splits [0, m) into p ranges whose sizes differ by at most one; the first
/// m mod p ranges take the extra element. Surplus workers get empty ranges.
inline ChunkPlan partition_training(std::size_t m, std::size_t p) {
  if (m == 0) throw UsageError("cannot partition an empty training set");
  if (p == 0) throw UsageError("worker count must be at least 1");
  ChunkPlan plan;
  plan.ranges.reserve(p);
  const std::size_t base = m / p;
  const std::size_t extra = m % p;
  std::size_t begin = 0;
  for (std::size_t rho = 0; rho < p; ++rho) {
    const std::size_t len = base + (rho < extra ? 1 : 0);
    plan.ranges.push_back({begin, begin + len});
    begin += len;
  }
  return plan;
}

/// Round-robin ownership of codevectors for the update phase.
struct UpdateAssignment {
  std::size_t workers = 1;

  std::size_t owner(std::size_t codevector) const noexcept { return codevector % workers; }

  std::vector<std::size_t> rows_for(std::size_t worker, std::size_t codebook_size) const {
    std::vector<std::size_t> rows;
    for (std::size_t c = worker; c < codebook_size; c += workers) rows.push_back(c);
    return rows;
  }
};

/// Runs `fn(rank)` for every rank in [0, workers()) and returns once all have
/// finished. Returning is the barrier between phases.
template <class E>
concept Executor = requires(E& e, const std::function<void(std::size_t)>& fn) {
  { e.workers() } -> std::convertible_to<std::size_t>;
  e.run(fn);
};

/// Runs ranks one after another on the calling thread.
class SerialExecutor {
 public:
  explicit SerialExecutor(std::size_t workers = 1) : workers_(workers == 0 ? 1 : workers) {}

  std::size_t workers() const noexcept { return workers_; }

  void run(const std::function<void(std::size_t)>& fn) {
    for (std::size_t r = 0; r < workers_; ++r) fn(r);
  }

 private:
  std::size_t workers_;
};

/// Persistent team of threads. The calling thread acts as rank 0, so a team of
/// P workers owns P - 1 helper threads. The first exception thrown by any rank
/// is rethrown from run() after all ranks have finished.
class WorkerTeam {
 public:
  explicit WorkerTeam(std::size_t workers) : workers_(workers == 0 ? 1 : workers) {
    helpers_.reserve(workers_ - 1);
    for (std::size_t r = 1; r < workers_; ++r) helpers_.emplace_back([this, r] { loop(r); });
  }

  WorkerTeam(const WorkerTeam&) = delete;
  WorkerTeam& operator=(const WorkerTeam&) = delete;

  ~WorkerTeam() {
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
    }
    start_.notify_all();
    for (auto& t : helpers_) t.join();
  }

  std::size_t workers() const noexcept { return workers_; }

  void run(const std::function<void(std::size_t)>& fn) {
    {
      std::lock_guard lock(mutex_);
      task_ = &fn;
      pending_ = workers_ - 1;
      error_ = nullptr;
      ++generation_;
    }
    start_.notify_all();
    execute(fn, 0);
    std::unique_lock lock(mutex_);
    done_.wait(lock, [this] { return pending_ == 0; });
    task_ = nullptr;
    if (error_) std::rethrow_exception(std::exchange(error_, nullptr));
  }

 private:
  void execute(const std::function<void(std::size_t)>& fn, std::size_t rank) {
    try {
      fn(rank);
    } catch (...) {
      std::lock_guard lock(mutex_);
      if (!error_) error_ = std::current_exception();
    }
  }

  void loop(std::size_t rank) {
    std::size_t seen = 0;
    for (;;) {
      const std::function<void(std::size_t)>* task = nullptr;
      {
        std::unique_lock lock(mutex_);
        start_.wait(lock, [&] { return stopping_ || generation_ != seen; });
        if (stopping_) return;
        seen = generation_;
        task = task_;
      }
      execute(*task, rank);
      {
        std::lock_guard lock(mutex_);
        if (--pending_ == 0) done_.notify_one();
      }
    }
  }

  std::size_t workers_;
  std::vector<std::thread> helpers_;
  std::mutex mutex_;
  std::condition_variable start_;
  std::condition_variable done_;
  const std::function<void(std::size_t)>* task_ = nullptr;
  std::size_t generation_ = 0;
  std::size_t pending_ = 0;
  bool stopping_ = false;
  std::exception_ptr error_;
};

static_assert(Executor<SerialExecutor>);
static_assert(Executor<WorkerTeam>);

/// Per-worker allocation results, indexed by worker.
using WorkerAllocations = std::vector<ChunkAllocation>;

/// Cell allocation with one task per chunk of `plan` over arbitrary vectors.
template <Executor E>
WorkerAllocations parallel_assign(const VectorSet& data, const Codebook& cb, const ChunkPlan& plan,
                                  E& executor, Metric metric = Metric::squared_euclidean) {
  detail::require_same_dim(data.dim(), cb.dim(), "parallel_assign");
  if (plan.total() != data.size())
    throw InternalError("chunk plan covers " + std::to_string(plan.total()) + " rows, data has " +
                        std::to_string(data.size()));
  WorkerAllocations out(plan.workers());
  const std::size_t tasks = plan.workers();
  const std::size_t team = executor.workers();
  // Ranks take chunks rho, rho + team, ...; with team == plan.workers() each rank owns one chunk.
  executor.run([&](std::size_t rank) {
    for (std::size_t rho = rank; rho < tasks; rho += team) {
      const IndexRange r = plan.ranges[rho];
      if (r.empty()) {
        out[rho].table.offset = r.begin;
        continue;
      }
      out[rho] = assign_cells(data, r.begin, r.end, cb, metric);
    }
  });
  return out;
}

template <Executor E>
WorkerAllocations parallel_assign(const TrainingSet& ts, const Codebook& cb, const ChunkPlan& plan,
                                  E& executor, Metric metric = Metric::squared_euclidean) {
  return parallel_assign(ts.vectors(), cb, plan, executor, metric);
}

/// Master-side integration of a level-iteration's allocation.
struct IntegratedAllocation {
  CellTable table;
  ExactSum exact_total;
  double td = 0.0;
  std::vector<double> per_worker;
};

namespace detail {

inline void check_coverage(std::span<const PartialCellTable> partials, std::size_t m) {
  std::size_t expected = 0;
  for (std::size_t rho = 0; rho < partials.size(); ++rho) {
    const auto& p = partials[rho];
    if (p.cells.empty()) {
      if (p.offset != expected && p.offset != m)
        throw InternalError("empty partial table " + std::to_string(rho) + " misplaced");
      continue;
    }
    if (p.offset < expected)
      throw InternalError("partial table " + std::to_string(rho) + " overlaps its predecessor");
    if (p.offset > expected)
      throw InternalError("gap before partial table " + std::to_string(rho));
    expected += p.cells.size();
  }
  if (expected != m)
    throw InternalError("partial tables cover " + std::to_string(expected) + " of " +
                        std::to_string(m) + " rows");
}

}  // namespace detail

/// Concatenates partial tables in worker order and sums the exact per-worker
/// distortions in ascending worker index.
inline IntegratedAllocation integrate(std::span<const PartialCellTable> partials,
                                      std::span<const ExactSum> distortions, std::size_t m) {
  if (partials.size() != distortions.size())
    throw InternalError("partial table and distortion counts differ");
  detail::check_coverage(partials, m);
  IntegratedAllocation out;
  out.table.reserve(m);
  out.per_worker.reserve(distortions.size());
  for (std::size_t rho = 0; rho < partials.size(); ++rho) {
    out.table.insert(out.table.end(), partials[rho].cells.begin(), partials[rho].cells.end());
    out.exact_total += distortions[rho];
    out.per_worker.push_back(distortions[rho].value());
  }
  out.td = out.exact_total.value();
  return out;
}

inline IntegratedAllocation integrate(std::span<const PartialCellTable> partials,
                                      std::span<const double> distortions, std::size_t m) {
  std::vector<ExactSum> exact;
  exact.reserve(distortions.size());
  for (double d : distortions) exact.emplace_back(d);
  return integrate(partials, exact, m);
}

inline IntegratedAllocation integrate(const WorkerAllocations& allocations, std::size_t m) {
  std::vector<PartialCellTable> partials;
  std::vector<ExactSum> distortions;
  partials.reserve(allocations.size());
  distortions.reserve(allocations.size());
  for (const auto& a : allocations) {
    partials.push_back(a.table);
    distortions.push_back(a.distortion);
  }
  return integrate(partials, distortions, m);
}

/// Update-phase work of one worker: recomputes every codevector it owns and
/// writes those rows (and only those) into `out`. Returns how many of its
/// cells were empty; such rows keep the previous codevector.
inline std::size_t update_rows_for_worker(const TrainingSet& ts, std::span<const CellIndex> table,
                                          const Codebook& cb, const UpdateAssignment& assignment,
                                          std::size_t worker, VectorSet& out) {
  const std::size_t p = assignment.workers;
  const std::size_t s = cb.size();
  const std::size_t k = cb.dim();
  if (worker >= s) return 0;
  // Owned codevectors are worker, worker + p, ...; slot = c / p.
  const std::size_t owned = (s - worker + p - 1) / p;
  std::vector<double> sums(owned * k, 0.0);
  std::vector<std::size_t> counts(owned, 0);
  for (std::size_t j = 0; j < table.size(); ++j) {
    const CellIndex c = table[j];
    if (assignment.owner(c) != worker) continue;
    const std::size_t slot = c / p;
    const auto row = ts[j];
    for (std::size_t d = 0; d < k; ++d) sums[slot * k + d] += row[d];
    ++counts[slot];
  }
  std::size_t empty = 0;
  for (std::size_t slot = 0; slot < owned; ++slot) {
    const std::size_t c = worker + slot * p;
    auto dst = out.row(c);
    if (counts[slot] == 0) {
      ++empty;
      const auto prev = cb[c];
      std::copy(prev.begin(), prev.end(), dst.begin());
      continue;
    }
    const auto n = static_cast<double>(counts[slot]);
    for (std::size_t d = 0; d < k; ++d) dst[d] = sums[slot * k + d] / n;
  }
  return empty;
}

/// Round-robin codebook update: worker phi recomputes codevectors c with
/// c mod P == phi, where P = executor.workers().
template <Executor E>
CodebookUpdate parallel_update(const TrainingSet& ts, std::span<const CellIndex> table,
                               const Codebook& cb, E& executor) {
  detail::require_same_dim(ts.dim(), cb.dim(), "parallel_update");
  if (table.size() != ts.size())
    throw UsageError("parallel_update: cell table has " + std::to_string(table.size()) +
                     " entries for " + std::to_string(ts.size()) + " training vectors");
  for (CellIndex c : table)
    if (c >= cb.size()) throw UsageError("parallel_update: cell index out of range");

  const UpdateAssignment assignment{executor.workers()};
  VectorSet next(cb.size(), cb.dim());
  std::vector<std::size_t> empty(assignment.workers, 0);
  executor.run([&](std::size_t phi) {
    empty[phi] = update_rows_for_worker(ts, table, cb, assignment, phi, next);
  });
  std::size_t total_empty = 0;
  for (auto e : empty) total_empty += e;
  return {Codebook(std::move(next)), total_empty};
}

/// LBG training with allocation and update run on `executor`. The number of
/// workers is executor.workers(); cfg.workers is not consulted.
template <Executor E>
TrainResult parallel_lbg_train(const TrainingSet& ts, const LbgConfig& cfg, E& executor) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::size_t m = ts.size();
  const ChunkPlan plan = partition_training(m, executor.workers());

  DistortionStats stats;
  auto allocate = [&](const Codebook& cb, std::size_t iteration) {
    IntegratedAllocation a = integrate(parallel_assign(ts, cb, plan, executor, cfg.metric), m);
    stats.history.push_back({cb.size(), iteration, a.td, count_empty_cells(a.table, cb.size()),
                             detail::elapsed_since(start)});
    stats.per_worker = a.per_worker;
    stats.total = a.td;
    return a;
  };

  // Initialization: the master computes the centroid.
  Codebook cb(VectorSet(centroid(ts.vectors()), ts.dim()));
  allocate(cb, 1);

  while (cb.size() < cfg.target_size) {
    cb = split_codebook(cb, cfg.delta);
    double td_prev = std::numeric_limits<double>::infinity();
    for (std::size_t it = 1;; ++it) {
      const IntegratedAllocation a = allocate(cb, it);
      if (convergence_check(td_prev, a.td, cfg.epsilon)) break;
      if (it == cfg.max_iterations_per_level) {
        stats.warnings.push_back(detail::guard_warning(cb.size(), it));
        break;
      }
      cb = parallel_update(ts, a.table, cb, executor).codebook;
      td_prev = a.td;
    }
  }
  return {std::move(cb), std::move(stats)};
}

inline TrainResult parallel_lbg_train(const TrainingSet& ts, const LbgConfig& cfg) {
  cfg.validate();
  WorkerTeam team(cfg.workers);
  return parallel_lbg_train(ts, cfg, team);
}

}  // namespace vq
