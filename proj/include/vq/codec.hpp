#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "vq/core.hpp"
#include "vq/errors.hpp"
#include "vq/parallel.hpp"
#include "vq/types.hpp"

namespace vq {

/// Index-per-vector representation of quantized data.
struct EncodedStream {
  std::uint32_t codebook_size = 0;
  std::uint32_t dimension = 0;
  std::vector<CellIndex> indices;

  friend bool operator==(const EncodedStream&, const EncodedStream&) = default;
};

inline EncodedStream encode(const VectorSet& data, const Codebook& cb) {
  if (!data.empty()) detail::require_same_dim(data.dim(), cb.dim(), "encode");
  EncodedStream es{static_cast<std::uint32_t>(cb.size()), static_cast<std::uint32_t>(cb.dim()), {}};
  es.indices.reserve(data.size());
  for (std::size_t j = 0; j < data.size(); ++j)
    es.indices.push_back(nearest_codevector(data.row(j), cb).index);
  return es;
}

/// Encodes in parallel using the same chunking as training. Output equals encode(data, cb).
template <Executor E>
EncodedStream encode(const VectorSet& data, const Codebook& cb, E& executor) {
  if (data.empty() || executor.workers() <= 1) return encode(data, cb);
  detail::require_same_dim(data.dim(), cb.dim(), "encode");
  const ChunkPlan plan = partition_training(data.size(), executor.workers());
  const WorkerAllocations parts = parallel_assign(data, cb, plan, executor);
  EncodedStream es{static_cast<std::uint32_t>(cb.size()), static_cast<std::uint32_t>(cb.dim()), {}};
  es.indices.reserve(data.size());
  for (const auto& p : parts)
    es.indices.insert(es.indices.end(), p.table.cells.begin(), p.table.cells.end());
  return es;
}

inline VectorSet decode(const EncodedStream& es, const Codebook& cb) {
  if (es.codebook_size != cb.size())
    throw UsageError("stream was encoded with " + std::to_string(es.codebook_size) +
                     " codevectors, codebook has " + std::to_string(cb.size()));
  if (es.dimension != cb.dim())
    throw UsageError("stream dimension " + std::to_string(es.dimension) +
                     " does not match codebook dimension " + std::to_string(cb.dim()));
  VectorSet out(es.indices.size(), cb.dim());
  for (std::size_t j = 0; j < es.indices.size(); ++j) {
    const CellIndex c = es.indices[j];
    if (c >= cb.size())
      throw CorruptStreamError("index " + std::to_string(c) + " at position " + std::to_string(j) +
                               " exceeds codebook size " + std::to_string(cb.size()));
    const auto src = cb[c];
    std::copy(src.begin(), src.end(), out.row(j).begin());
  }
  return out;
}

struct RateReport {
  double bits_per_vector = 0.0;
  double bits_per_sample = 0.0;
  /// Raw 64-bit samples versus index bits; +inf for a single-codevector codebook.
  double compression_ratio = 0.0;
};

/// Rate of an L-dimensional quantizer with N codevectors: log2(N) / L bits per sample.
inline RateReport rate(std::size_t codebook_size, std::size_t dimension) {
  if (codebook_size == 0 || !std::has_single_bit(codebook_size))
    throw ConfigError("codebook size " + std::to_string(codebook_size) +
                      " must be a power of two");
  if (dimension == 0) throw UsageError("dimension must be at least 1");
  RateReport r;
  r.bits_per_vector = static_cast<double>(std::countr_zero(codebook_size));
  r.bits_per_sample = r.bits_per_vector / static_cast<double>(dimension);
  r.compression_ratio = r.bits_per_vector == 0.0
                            ? std::numeric_limits<double>::infinity()
                            : 64.0 * static_cast<double>(dimension) / r.bits_per_vector;
  return r;
}

struct ReconstructionDistortion {
  double total = 0.0;
  double mean = 0.0;
};

inline ReconstructionDistortion reconstruction_distortion(const VectorSet& data,
                                                          const VectorSet& reconstructed,
                                                          Metric metric = Metric::squared_euclidean) {
  if (data.size() != reconstructed.size())
    throw UsageError("reconstruction has " + std::to_string(reconstructed.size()) + " rows, data has " +
                     std::to_string(data.size()));
  if (data.empty()) return {};
  detail::require_same_dim(data.dim(), reconstructed.dim(), "reconstruction_distortion");
  ExactSum total;
  for (std::size_t j = 0; j < data.size(); ++j)
    total += distance(data.row(j), reconstructed.row(j), metric);
  const double t = total.value();
  return {t, t / static_cast<double>(data.size())};
}

}  // namespace vq
