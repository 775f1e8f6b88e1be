#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "test_support.hpp"
#include "vq/core.hpp"

namespace vq {
namespace {

using testing::worked_trace_set;

std::vector<double> row_of(const Codebook& cb, std::size_t i) {
  const auto r = cb[i];
  return {r.begin(), r.end()};
}

// --- distance --------------------------------------------------------------

TEST(Distance, ThreeFourFive) {
  const std::vector<double> a{0, 0}, b{3, 4};
  EXPECT_EQ(distance(a, b, Metric::euclidean), 5.0);
  EXPECT_EQ(distance(a, b, Metric::squared_euclidean), 25.0);
  EXPECT_EQ(distance(a, b), 25.0);
}

TEST(Distance, IdentityAndSymmetry) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 100; ++t) {
    const auto v = testing::random_vectors(rng, 2, 7);
    EXPECT_EQ(distance(v.row(0), v.row(0)), 0.0);
    EXPECT_EQ(distance(v.row(0), v.row(1)), distance(v.row(1), v.row(0)));
    EXPECT_GT(distance(v.row(0), v.row(1), Metric::euclidean), 0.0);
  }
}

TEST(Distance, DimensionMismatchNamesBoth) {
  const std::vector<double> a{1, 2}, b{1, 2, 3};
  try {
    (void)distance(a, b);
    FAIL() << "expected UsageError";
  } catch (const UsageError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find('2'), std::string::npos);
    EXPECT_NE(msg.find('3'), std::string::npos);
  }
}

// --- centroid --------------------------------------------------------------

TEST(Centroid, Examples) {
  EXPECT_EQ(centroid(VectorSet{{0, 0}, {2, 2}}), (std::vector<double>{1, 1}));
  EXPECT_EQ(centroid(VectorSet{{1.25, -3.5, 7}}), (std::vector<double>{1.25, -3.5, 7}));
  EXPECT_EQ(centroid(worked_trace_set().vectors()), (std::vector<double>{2, 0.5}));
}

TEST(Centroid, EmptyIsDomainError) {
  EXPECT_THROW((void)centroid(VectorSet{}), DomainError);
}

TEST(Centroid, PermutationInvariantAndScaleEquivariant) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 50; ++t) {
    // Integer data keeps every sum exact, so reordering cannot change bits.
    VectorSet v = testing::random_lattice(rng, testing::uniform_size(rng, 1, 20), 4, 50);
    const auto c = centroid(v);

    std::vector<std::size_t> order(v.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    VectorSet shuffled(v.size(), v.dim());
    for (std::size_t i = 0; i < order.size(); ++i)
      std::copy(v.row(order[i]).begin(), v.row(order[i]).end(), shuffled.row(i).begin());
    EXPECT_EQ(centroid(shuffled), c);

    VectorSet scaled = v;
    for (auto& x : scaled.values()) x *= 4.0;  // power of two: exact
    const auto cs = centroid(scaled);
    for (std::size_t d = 0; d < c.size(); ++d) EXPECT_EQ(cs[d], 4.0 * c[d]);
  }
}

// --- nearest_codevector ----------------------------------------------------

TEST(Nearest, Examples) {
  const Codebook cb{{0, 0}, {5, 5}};
  const std::vector<double> x{1, 1};
  EXPECT_EQ(nearest_codevector(x, cb), (Nearest{0, 2.0}));

  const Codebook four{{9, 9}, {1, 0}, {-1, 0}, {3, 3}};
  const std::vector<double> exact{3, 3};
  EXPECT_EQ(nearest_codevector(exact, four), (Nearest{3, 0.0}));

  const Codebook tie{{9, 9}, {1, 0}, {-1, 0}};
  const std::vector<double> origin{0, 0};
  EXPECT_EQ(nearest_codevector(origin, tie), (Nearest{1, 1.0}));
}

TEST(Nearest, EuclideanReportsRootDistance) {
  const Codebook cb{{3, 4}, {10, 10}};
  const std::vector<double> x{0, 0};
  EXPECT_EQ(nearest_codevector(x, cb, Metric::euclidean), (Nearest{0, 5.0}));
}

TEST(Nearest, MatchesExhaustiveScan) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 300; ++t) {
    const std::size_t k = testing::uniform_size(rng, 1, 10);
    const std::size_t s = testing::uniform_size(rng, 1, 64);
    const bool lattice = t % 2 == 0;
    const VectorSet rows = lattice ? testing::random_lattice(rng, s, k, 2) : testing::random_vectors(rng, s, k);
    const Codebook cb(rows);
    const VectorSet queries = lattice ? testing::random_lattice(rng, 8, k, 2) : testing::random_vectors(rng, 8, k);
    for (std::size_t q = 0; q < queries.size(); ++q) {
      const auto got = nearest_codevector(queries.row(q), cb);
      const auto want = testing::brute_force_nearest(queries.row(q), rows);
      ASSERT_EQ(got.index, want);
      ASSERT_EQ(got.distance, testing::brute_squared(queries.row(q), rows.row(want)));
    }
  }
}

// --- split_codebook --------------------------------------------------------

TEST(Split, Examples) {
  const Codebook one{{2, 0.5}};
  const Codebook split = split_codebook(one, 0.5);
  ASSERT_EQ(split.size(), 2u);
  EXPECT_EQ(row_of(split, 0), (std::vector<double>{2.5, 1.0}));
  EXPECT_EQ(row_of(split, 1), (std::vector<double>{1.5, 0.0}));

  const Codebook two{{0, 0}, {4, 4}};
  const Codebook four = split_codebook(two, 0.01);
  ASSERT_EQ(four.size(), 4u);
  EXPECT_EQ(row_of(four, 0), (std::vector<double>{0.01, 0.01}));
  EXPECT_EQ(row_of(four, 1), (std::vector<double>{-0.01, -0.01}));
  EXPECT_EQ(row_of(four, 2), (std::vector<double>{4.01, 4.01}));
  EXPECT_EQ(row_of(four, 3), (std::vector<double>{3.99, 3.99}));
}

TEST(Split, DoublesSizeAndRejectsBadDelta) {
  std::mt19937_64 rng(4);
  for (std::size_t s = 1; s <= 32; s *= 2) {
    const Codebook cb(testing::random_vectors(rng, s, 3));
    EXPECT_EQ(split_codebook(cb, 0.1).size(), 2 * s);
  }
  const Codebook cb{{1}};
  EXPECT_THROW((void)split_codebook(cb, 0.0), ConfigError);
  EXPECT_THROW((void)split_codebook(cb, -1.0), ConfigError);
}

// --- assign_cells ----------------------------------------------------------

TEST(AssignCells, WorkedTrace) {
  const Codebook cb{{2.5, 1.0}, {1.5, 0.0}};
  const ChunkAllocation a = assign_cells(worked_trace_set(), cb);
  EXPECT_EQ(a.table.cells, (CellTable{1, 1, 0, 0}));
  EXPECT_EQ(a.total(), 11.0);
}

TEST(AssignCells, AllOnCodevectorZero) {
  const TrainingSet ts{{1, 2}, {1, 2}, {1, 2}};
  const Codebook cb{{1, 2}, {1, 2}, {5, 5}};
  const ChunkAllocation a = assign_cells(ts, cb);
  EXPECT_EQ(a.table.cells, (CellTable{0, 0, 0}));
  EXPECT_EQ(a.total(), 0.0);
}

TEST(AssignCells, SingleVectorChunk) {
  const Codebook cb{{2.5, 1.0}, {1.5, 0.0}};
  const ChunkAllocation a = assign_cells(worked_trace_set().vectors(), 2, 3, cb);
  EXPECT_EQ(a.table.offset, 2u);
  EXPECT_EQ(a.table.cells, (CellTable{0}));
  EXPECT_EQ(a.total(), 3.25);
}

TEST(AssignCells, EntriesInRange) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    const std::size_t s = testing::uniform_size(rng, 1, 40);
    const TrainingSet ts(testing::random_vectors(rng, 100, 5));
    const Codebook cb(testing::random_vectors(rng, s, 5));
    for (auto c : assign_cells(ts, cb).table.cells) ASSERT_LT(c, s);
  }
}

// --- update_codebook -------------------------------------------------------

TEST(UpdateCodebook, WorkedTrace) {
  const Codebook cb{{2.5, 1.0}, {1.5, 0.0}};
  const CellTable ct{1, 1, 0, 0};
  const CodebookUpdate u = update_codebook(worked_trace_set(), ct, cb);
  EXPECT_EQ(u.codebook, (Codebook{{4, 0.5}, {0, 0.5}}));
  EXPECT_EQ(u.empty_cells, 0u);
}

TEST(UpdateCodebook, EmptyCellsRetained) {
  const Codebook cb{{9, 9}, {7, 7}, {-3, 2}};
  const CellTable ct{0, 0, 0, 0};
  const CodebookUpdate u = update_codebook(worked_trace_set(), ct, cb);
  EXPECT_EQ(u.codebook, (Codebook{{2, 0.5}, {7, 7}, {-3, 2}}));
  EXPECT_EQ(u.empty_cells, 2u);
}

TEST(UpdateCodebook, SingletonCell) {
  const Codebook cb{{0, 0}, {0, 0}};
  const CellTable ct{0, 0, 1, 0};
  const CodebookUpdate u = update_codebook(worked_trace_set(), ct, cb);
  EXPECT_EQ(row_of(u.codebook, 1), (std::vector<double>{4, 0}));
}

TEST(UpdateCodebook, RejectsBadTable) {
  const Codebook cb{{0, 0}, {1, 1}};
  EXPECT_THROW((void)update_codebook(worked_trace_set(), CellTable{0, 1}, cb), UsageError);
  EXPECT_THROW((void)update_codebook(worked_trace_set(), CellTable{0, 1, 2, 0}, cb), UsageError);
}

// --- convergence_check -----------------------------------------------------

TEST(Convergence, Examples) {
  EXPECT_TRUE(convergence_check(100.0, 99.99, 0.001));
  EXPECT_FALSE(convergence_check(std::numeric_limits<double>::infinity(), 5.0, 0.001));
  EXPECT_FALSE(convergence_check(std::numeric_limits<double>::infinity(), 0.0, 1e9));
  EXPECT_FALSE(convergence_check(11.0, 1.0, 0.001));
  EXPECT_TRUE(convergence_check(0.0, 0.0, 0.0));
  EXPECT_TRUE(convergence_check(1.0, 1.0, 0.0));
  // An increase gives a negative relative change, which passes any epsilon >= 0.
  EXPECT_TRUE(convergence_check(1.0, 2.0, 0.0));
}

TEST(Convergence, NegativeInputsRejected) {
  EXPECT_THROW((void)convergence_check(-1.0, 0.0, 0.1), DomainError);
  EXPECT_THROW((void)convergence_check(1.0, -0.5, 0.1), DomainError);
}

// --- lbg_train -------------------------------------------------------------

TEST(LbgTrain, WorkedTrace) {
  LbgConfig cfg;
  cfg.target_size = 2;
  cfg.delta = 0.5;
  cfg.epsilon = 0.001;
  const TrainResult r = lbg_train(worked_trace_set(), cfg);
  EXPECT_EQ(r.codebook, (Codebook{{4, 0.5}, {0, 0.5}}));
  EXPECT_EQ(r.stats.total, 1.0);
  EXPECT_EQ(r.stats.per_worker, (std::vector<double>{1.0}));

  // Level 1 (centroid): every vector at squared distance 4.25.
  const std::vector<HistoryEntry> want{
      {1, 1, 17.0, 0, 0}, {2, 1, 11.0, 0, 0}, {2, 2, 1.0, 0, 0}, {2, 3, 1.0, 0, 0}};
  EXPECT_EQ(r.stats.history, want);
  EXPECT_EQ(r.stats.iterations_per_level(), (std::vector<std::size_t>{1, 3}));
  EXPECT_TRUE(r.stats.warnings.empty());
}

TEST(LbgTrain, IdenticalVectorsUseTieBreakAndEmptyCell) {
  const TrainingSet ts{{1, -2, 3}, {1, -2, 3}, {1, -2, 3}, {1, -2, 3}, {1, -2, 3}};
  LbgConfig cfg;
  cfg.target_size = 2;
  cfg.delta = 0.25;
  const TrainResult r = lbg_train(ts, cfg);
  EXPECT_EQ(r.codebook, (Codebook{{1, -2, 3}, {0.75, -2.25, 2.75}}));
  EXPECT_EQ(r.stats.total, 0.0);
  ASSERT_FALSE(r.stats.history.empty());
  EXPECT_EQ(r.stats.history.back().empty_cells, 1u);
}

TEST(LbgTrain, SizeOneIsCentroid) {
  LbgConfig cfg;
  cfg.target_size = 1;
  const TrainResult r = lbg_train(worked_trace_set(), cfg);
  EXPECT_EQ(r.codebook, (Codebook{{2, 0.5}}));
  EXPECT_EQ(r.stats.total, 17.0);
  EXPECT_EQ(r.stats.history.size(), 1u);
}

TEST(LbgTrain, RejectsNonPowerOfTwo) {
  LbgConfig cfg;
  cfg.target_size = 3;
  EXPECT_THROW((void)lbg_train(worked_trace_set(), cfg), ConfigError);
  cfg.target_size = 0;
  EXPECT_THROW((void)lbg_train(worked_trace_set(), cfg), ConfigError);
}

TEST(LbgTrain, IterationGuardWarnsButFinishes) {
  std::mt19937_64 rng(6);
  const TrainingSet ts(testing::random_vectors(rng, 300, 3));
  LbgConfig cfg;
  cfg.target_size = 8;
  cfg.epsilon = 0.0;
  cfg.max_iterations_per_level = 2;
  const TrainResult r = lbg_train(ts, cfg);
  EXPECT_EQ(r.codebook.size(), 8u);
  EXPECT_FALSE(r.stats.warnings.empty());
  for (std::size_t n : r.stats.iterations_per_level()) EXPECT_LE(n, 2u);
}

TEST(LbgTrain, EuclideanMetricOption) {
  LbgConfig cfg;
  cfg.target_size = 2;
  cfg.delta = 0.5;
  cfg.metric = Metric::euclidean;
  const TrainResult r = lbg_train(worked_trace_set(), cfg);
  EXPECT_EQ(r.codebook, (Codebook{{4, 0.5}, {0, 0.5}}));
  EXPECT_EQ(r.stats.total, 2.0);  // four vectors at distance 0.5
}

TEST(LbgTrain, Deterministic) {
  std::mt19937_64 rng(7);
  const TrainingSet ts(testing::random_vectors(rng, 400, 6));
  LbgConfig cfg;
  cfg.target_size = 16;
  const TrainResult a = lbg_train(ts, cfg);
  const TrainResult b = lbg_train(ts, cfg);
  EXPECT_TRUE(bit_identical(a.codebook, b.codebook));
  EXPECT_EQ(a.stats.history, b.stats.history);
}

// Property: levels are exactly 1, 2, 4, ..., N and TD never rises within a level.
TEST(LbgTrain, LevelSizesAndMonotoneDistortion) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    const std::size_t m = testing::uniform_size(rng, 1, 300);
    const std::size_t k = testing::uniform_size(rng, 1, 8);
    const TrainingSet ts(testing::random_vectors(rng, m, k));
    LbgConfig cfg;
    cfg.target_size = std::size_t{1} << testing::uniform_size(rng, 0, 5);
    cfg.epsilon = t % 3 == 0 ? 0.0 : 0.001;
    const TrainResult r = lbg_train(ts, cfg);
    ASSERT_EQ(r.codebook.size(), cfg.target_size);

    std::vector<std::size_t> levels;
    for (const auto& h : r.stats.history)
      if (levels.empty() || levels.back() != h.level_size) levels.push_back(h.level_size);
    std::vector<std::size_t> want;
    for (std::size_t s = 1; s <= cfg.target_size; s *= 2) want.push_back(s);
    EXPECT_EQ(levels, want);

    for (std::size_t i = 1; i < r.stats.history.size(); ++i) {
      const auto& prev = r.stats.history[i - 1];
      const auto& cur = r.stats.history[i];
      if (prev.level_size != cur.level_size) continue;
      EXPECT_LE(cur.td, prev.td + 1e-9 * prev.td);
    }
  }
}

// Property: scaling data and codebook by a positive constant leaves allocation unchanged.
TEST(AssignCells, ScaleInvariant) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 50; ++t) {
    VectorSet data = testing::random_vectors(rng, 60, 4);
    VectorSet rows = testing::random_vectors(rng, 12, 4);
    const CellTable base = assign_cells(data, 0, data.size(), Codebook(rows)).table.cells;
    const double c = std::ldexp(1.0, static_cast<int>(testing::uniform_size(rng, 0, 6)) - 3);
    for (auto& v : data.values()) v *= c;
    for (auto& v : rows.values()) v *= c;
    EXPECT_EQ(assign_cells(data, 0, data.size(), Codebook(rows), Metric::euclidean).table.cells, base);
  }
}

TEST(Types, InvariantsEnforced) {
  EXPECT_THROW(TrainingSet(VectorSet{}), DomainError);
  EXPECT_THROW((TrainingSet{{1, std::nan("")}}), DomainError);
  EXPECT_THROW((Codebook{{std::numeric_limits<double>::infinity()}}), DomainError);
  EXPECT_THROW((VectorSet{{1, 2}, {3}}), UsageError);
  LbgConfig cfg;
  cfg.delta = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.epsilon = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.workers = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

}  // namespace
}  // namespace vq
