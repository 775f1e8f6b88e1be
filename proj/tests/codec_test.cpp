#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"
#include "vq/codec.hpp"

namespace vq {
namespace {

using testing::worked_trace_set;

const Codebook& trace_codebook() {
  static const Codebook cb{{4, 0.5}, {0, 0.5}};
  return cb;
}

TEST(Encode, CodebookRowsMapToTheirIndices) {
  std::mt19937_64 rng(31);
  const Codebook cb(testing::random_vectors(rng, 16, 5));
  const EncodedStream es = encode(cb.vectors(), cb);
  ASSERT_EQ(es.indices.size(), 16u);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(es.indices[i], i);
  EXPECT_EQ(es.codebook_size, 16u);
  EXPECT_EQ(es.dimension, 5u);
}

TEST(Encode, WorkedTrace) {
  EXPECT_EQ(encode(worked_trace_set().vectors(), trace_codebook()).indices,
            (std::vector<CellIndex>{1, 1, 0, 0}));
}

TEST(Encode, ParallelMatchesSequential) {
  std::mt19937_64 rng(32);
  for (int t = 0; t < 20; ++t) {
    const VectorSet data = testing::random_lattice(rng, testing::uniform_size(rng, 1, 300), 3, 2);
    const Codebook cb(testing::random_lattice(rng, testing::uniform_size(rng, 1, 32), 3, 2));
    const EncodedStream seq = encode(data, cb);
    for (auto c : seq.indices) ASSERT_LT(c, cb.size());
    for (std::size_t p : {2u, 3u, 8u}) {
      WorkerTeam team(p);
      ASSERT_EQ(encode(data, cb, team), seq);
    }
  }
}

TEST(Encode, DimensionMismatch) {
  EXPECT_THROW((void)encode(VectorSet{{1, 2, 3}}, trace_codebook()), UsageError);
}

TEST(Decode, WorkedTraceAndFixedPoints) {
  const EncodedStream es{2, 2, {1, 1, 0, 0}};
  EXPECT_EQ(decode(es, trace_codebook()), (VectorSet{{0, 0.5}, {0, 0.5}, {4, 0.5}, {4, 0.5}}));
  EXPECT_EQ(decode(encode(trace_codebook().vectors(), trace_codebook()), trace_codebook()),
            trace_codebook().vectors());
  EXPECT_TRUE(decode(EncodedStream{2, 2, {}}, trace_codebook()).empty());
}

TEST(Decode, Errors) {
  EXPECT_THROW((void)decode(EncodedStream{2, 2, {0, 2}}, trace_codebook()), CorruptStreamError);
  EXPECT_THROW((void)decode(EncodedStream{4, 2, {0}}, trace_codebook()), UsageError);
  EXPECT_THROW((void)decode(EncodedStream{2, 3, {0}}, trace_codebook()), UsageError);
}

TEST(Rate, Examples) {
  const RateReport a = rate(2, 1);
  EXPECT_EQ(a.bits_per_vector, 1.0);
  EXPECT_EQ(a.bits_per_sample, 1.0);
  EXPECT_EQ(a.compression_ratio, 64.0);
  EXPECT_EQ(rate(256, 16).bits_per_sample, 0.5);
  EXPECT_EQ(rate(128, 10).bits_per_sample, 0.7);
  EXPECT_EQ(rate(128, 10).bits_per_vector, 7.0);
  EXPECT_TRUE(std::isinf(rate(1, 4).compression_ratio));
  EXPECT_THROW((void)rate(3, 1), ConfigError);
  EXPECT_THROW((void)rate(0, 1), ConfigError);
  EXPECT_THROW((void)rate(4, 0), UsageError);
}

TEST(Rate, BitsPerSampleTimesDimensionIsLog2N) {
  for (std::size_t bits = 0; bits < 20; ++bits)
    for (std::size_t l = 1; l <= 32; ++l) {
      const RateReport r = rate(std::size_t{1} << bits, l);
      EXPECT_NEAR(r.bits_per_sample * static_cast<double>(l), static_cast<double>(bits), 1e-12);
      EXPECT_EQ(r.bits_per_vector, static_cast<double>(bits));
    }
}

TEST(ReconstructionDistortion, Examples) {
  const auto zero = reconstruction_distortion(worked_trace_set().vectors(), worked_trace_set().vectors());
  EXPECT_EQ(zero.total, 0.0);
  EXPECT_EQ(zero.mean, 0.0);

  const VectorSet recon = decode(encode(worked_trace_set().vectors(), trace_codebook()), trace_codebook());
  const auto d = reconstruction_distortion(worked_trace_set().vectors(), recon);
  EXPECT_EQ(d.total, 1.0);
  EXPECT_EQ(d.mean, 0.25);

  EXPECT_EQ(reconstruction_distortion(VectorSet{{0, 0}}, VectorSet{{3, 4}}, Metric::euclidean).total, 5.0);
  EXPECT_THROW((void)reconstruction_distortion(VectorSet{{0, 0}}, VectorSet{{0, 0}, {1, 1}}), UsageError);
}

// Property: nearest-codevector decoding beats every other row assignment (brute force on small cases).
TEST(Codec, NearestAssignmentIsOptimal) {
  std::mt19937_64 rng(33);
  for (int t = 0; t < 30; ++t) {
    const std::size_t s = testing::uniform_size(rng, 1, 4);
    const std::size_t rows = testing::uniform_size(rng, 1, 4);
    const VectorSet data = testing::random_vectors(rng, rows, 2);
    const Codebook cb(testing::random_vectors(rng, s, 2));
    const double best = reconstruction_distortion(data, decode(encode(data, cb), cb)).total;
    std::size_t combos = 1;
    for (std::size_t i = 0; i < rows; ++i) combos *= s;
    for (std::size_t code = 0; code < combos; ++code) {
      EncodedStream es{static_cast<std::uint32_t>(s), 2, {}};
      std::size_t c = code;
      for (std::size_t i = 0; i < rows; ++i, c /= s) es.indices.push_back(static_cast<CellIndex>(c % s));
      ASSERT_LE(best, reconstruction_distortion(data, decode(es, cb)).total);
    }
  }
}

// Property: a second encode of the reconstruction reproduces the first encoding.
TEST(Codec, EncodeIsStableThroughRoundtrip) {
  std::mt19937_64 rng(34);
  for (int t = 0; t < 30; ++t) {
    const VectorSet data = testing::random_vectors(rng, 100, 4);
    const Codebook cb(testing::random_vectors(rng, testing::uniform_size(rng, 1, 32), 4));
    const EncodedStream first = encode(data, cb);
    EXPECT_EQ(encode(decode(first, cb), cb), first);
  }
}

}  // namespace
}  // namespace vq
