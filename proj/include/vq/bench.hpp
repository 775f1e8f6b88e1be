#pragma once

// Speedup model and the training-time benchmark sweep.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <sched.h>

#include "vq/errors.hpp"
#include "vq/io.hpp"
#include "vq/parallel.hpp"
#include "vq/types.hpp"

namespace vq {

struct AmdahlParams {
  double serial_fraction = 0.0;  // S in [0, 1]
  double processors = 1.0;       // n >= 1
};

/// Amdahl's law: 1 / (S + (1 - S) / n).
inline double amdahl_speedup(const AmdahlParams& p) {
  if (!(p.serial_fraction >= 0.0 && p.serial_fraction <= 1.0))
    throw UsageError("serial fraction must lie in [0, 1]");
  if (!(p.processors >= 1.0) || !std::isfinite(p.processors))
    throw UsageError("processor count must be at least 1");
  return 1.0 / (p.serial_fraction + (1.0 - p.serial_fraction) / p.processors);
}

/// M vectors uniform in [0, 1)^k. Uses the raw 64-bit engine output so the data
/// is the same on every standard library.
inline TrainingSet synthetic_uniform(std::size_t m, std::size_t k, std::uint64_t seed) {
  if (m == 0 || k == 0) throw UsageError("synthetic data needs M >= 1 and k >= 1");
  std::mt19937_64 rng(seed);
  std::vector<double> values(m * k);
  for (auto& v : values) v = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return TrainingSet(VectorSet(std::move(values), k));
}

/// Distinct physical cores available to this process (falls back to logical CPUs).
inline std::size_t physical_core_count() {
  std::size_t logical = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  cpu_set_t set;
  CPU_ZERO(&set);
  if (sched_getaffinity(0, sizeof set, &set) == 0)
    logical = std::max<std::size_t>(1, static_cast<std::size_t>(CPU_COUNT(&set)));

  std::ifstream info("/proc/cpuinfo");
  std::set<std::pair<std::string, std::string>> cores;
  std::string line;
  std::string physical_id;
  while (std::getline(info, line)) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string key = line.substr(0, line.find_last_not_of(" \t", colon - 1) + 1);
    const std::string value = colon + 2 <= line.size() ? line.substr(colon + 2) : "";
    if (key == "physical id") physical_id = value;
    if (key == "core id") cores.emplace(physical_id, value);
  }
  if (cores.empty()) return logical;
  return std::min(cores.size(), logical);
}

/// VQ_THREADS if set to a positive integer, else the physical core count.
inline std::size_t default_worker_count() {
  if (const char* env = std::getenv("VQ_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return physical_core_count();
}

struct BenchOptions {
  std::vector<std::size_t> sizes{8, 16, 32, 64, 128};
  std::vector<std::size_t> threads{1, 2, 4};
  std::size_t repeats = 3;
  double epsilon = 0.001;
  double delta = 0.01;
  std::size_t max_iterations_per_level = 100;
  Metric metric = Metric::squared_euclidean;
};

struct BenchRecord {
  std::size_t codebook_size = 0;
  std::size_t workers = 0;
  std::size_t vectors = 0;
  std::size_t dim = 0;
  double seconds = 0.0;  // minimum over repeats
  double td = 0.0;
  std::vector<std::size_t> iterations_per_level;
};

/// One timed training run: wall clock around training only.
inline std::pair<double, TrainResult> timed_train(const TrainingSet& ts, const LbgConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  TrainResult result = parallel_lbg_train(ts, cfg);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::max(secs, std::numeric_limits<double>::min()), std::move(result)};
}

/// One record per (N, P), N outer and P inner, in the order given. Repeats run serially.
inline std::vector<BenchRecord> run_bench(const TrainingSet& ts, const BenchOptions& opt) {
  if (opt.sizes.empty() || opt.threads.empty()) throw UsageError("empty benchmark sweep");
  if (opt.repeats == 0) throw UsageError("repeats must be at least 1");
  std::vector<BenchRecord> records;
  for (std::size_t n : opt.sizes) {
    for (std::size_t p : opt.threads) {
      LbgConfig cfg{n, opt.epsilon, opt.delta, p, opt.max_iterations_per_level, opt.metric};
      cfg.validate();
      BenchRecord rec{n, p, ts.size(), ts.dim(), std::numeric_limits<double>::infinity(), 0.0, {}};
      for (std::size_t r = 0; r < opt.repeats; ++r) {
        auto [secs, result] = timed_train(ts, cfg);
        rec.seconds = std::min(rec.seconds, secs);
        rec.td = result.stats.total;
        rec.iterations_per_level = result.stats.iterations_per_level();
      }
      records.push_back(std::move(rec));
    }
  }
  return records;
}

inline constexpr const char* kBenchCsvHeader = "n,p,m,k,seconds,td,iterations";

/// Iterations are written per level, separated by ':' (e.g. "1:3:4").
inline void write_bench_csv(std::ostream& out, const std::vector<BenchRecord>& records,
                            const std::string& metadata = {}) {
  if (!metadata.empty()) out << "# " << metadata << '\n';
  out << kBenchCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.codebook_size << ',' << r.workers << ',' << r.vectors << ',' << r.dim << ','
        << format_number(r.seconds) << ',' << format_number(r.td) << ',';
    for (std::size_t i = 0; i < r.iterations_per_level.size(); ++i)
      out << (i ? ":" : "") << r.iterations_per_level[i];
    out << '\n';
  }
}

/// Measured speedup of each record against the P = 1 record for the same N,
/// or against the smallest P measured for that N when P = 1 is absent.
inline std::vector<double> measured_speedups(const std::vector<BenchRecord>& records) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const BenchRecord* base = nullptr;
    for (const auto& c : records)
      if (c.codebook_size == r.codebook_size && (!base || c.workers < base->workers)) base = &c;
    out.push_back(base->seconds / r.seconds);
  }
  return out;
}

}  // namespace vq
