#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "locolab/errors.h"
#include "locolab/terrain/terrain.h"

namespace locolab::terrain {
namespace {

constexpr TerrainKind kAllKinds[] = {
    TerrainKind::kPlane, TerrainKind::kUniformNoise,
    TerrainKind::kDiscreteObstacles, TerrainKind::kStairs};

TEST(TerrainTest, PlaneIsFlat) {
  for (int d = 0; d <= kMaxDifficulty; ++d) {
    const Terrain t = Terrain::Generate(TerrainKind::kPlane, d, 17);
    for (double x = -1.0; x < 11.0; x += 0.037) EXPECT_EQ(t.HeightAt(x), 0.0);
  }
  EXPECT_EQ(Terrain().HeightAt(3.2), 0.0);
}

TEST(TerrainTest, InvalidDifficultyThrows) {
  EXPECT_THROW(Terrain::Generate(TerrainKind::kStairs, -1, 0),
               InvalidDifficulty);
  EXPECT_THROW(Terrain::Generate(TerrainKind::kPlane, 10, 0),
               InvalidDifficulty);
}

TEST(TerrainTest, HardestStairsMatchEvaluationGeometry) {
  const Terrain t = Terrain::Generate(TerrainKind::kStairs, 9, 0);
  // Edges on the ascending half, found by scanning the grid.
  std::vector<double> edges;
  std::vector<double> rises;
  const auto& h = t.heights();
  for (int i = 1; i < kNumCells / 2; ++i) {
    if (h[i] != h[i - 1]) {
      edges.push_back(Terrain::CellLeft(i));
      rises.push_back(h[i] - h[i - 1]);
    }
  }
  ASSERT_GE(edges.size(), 5u);
  for (std::size_t k = 1; k < edges.size(); ++k)
    EXPECT_NEAR(edges[k] - edges[k - 1], 0.31, 1e-9);
  for (double r : rises) EXPECT_NEAR(r, 0.14, 1e-12);
  EXPECT_NEAR(t.HeightAt(edges[0] + 1e-6), 0.14, 1e-12);
  EXPECT_EQ(t.HeightAt(edges[0] - 1e-6), 0.0);
}

TEST(TerrainTest, StairsAreSymmetricPyramid) {
  const Terrain t = Terrain::Generate(TerrainKind::kStairs, 4, 0);
  const auto& h = t.heights();
  for (int i = 0; i < kNumCells; ++i) EXPECT_EQ(h[i], h[kNumCells - 1 - i]);
  EXPECT_EQ(t.HeightAt(0.5), 0.0);
  EXPECT_GT(t.HeightAt(kBlockCenter - 0.01), 0.5);
}

TEST(TerrainTest, ObstaclesAreBoxesAndPitsOfLevelHeight) {
  const Terrain t = Terrain::Generate(TerrainKind::kDiscreteObstacles, 9, 5);
  bool box = false, pit = false;
  for (double h : t.heights()) {
    const bool on_level = std::abs(std::abs(h) - 0.15) < 1e-12;
    EXPECT_TRUE(h == 0.0 || on_level) << h;
    box |= h > 0.0;
    pit |= h < 0.0;
  }
  EXPECT_TRUE(box);
  EXPECT_TRUE(pit);
  EXPECT_EQ(t.HeightAt(0.5), 0.0);
  EXPECT_EQ(t.HeightAt(9.5), 0.0);
}

TEST(TerrainTest, UniformNoiseWithinAmplitude) {
  for (int d : {0, 4, 9}) {
    const Terrain t = Terrain::Generate(TerrainKind::kUniformNoise, d, 2);
    for (double h : t.heights())
      EXPECT_LE(std::abs(h), 0.5 * 0.025 * (d + 1) + 1e-15);
  }
}

TEST(TerrainTest, GenerationIsDeterministicInSeed) {
  for (auto kind : kAllKinds) {
    EXPECT_EQ(Terrain::Generate(kind, 6, 123), Terrain::Generate(kind, 6, 123));
  }
  EXPECT_NE(Terrain::Generate(TerrainKind::kUniformNoise, 6, 1).heights(),
            Terrain::Generate(TerrainKind::kUniformNoise, 6, 2).heights());
}

TEST(TerrainTest, DifficultyIsMonotone) {
  for (auto kind : kAllKinds) {
    for (std::uint64_t seed : {0u, 7u, 99u}) {
      double previous = -1.0;
      for (int d = 0; d <= kMaxDifficulty; ++d) {
        const double m = Terrain::Generate(kind, d, seed).MaxAbsHeight();
        EXPECT_GE(m, previous);
        previous = m;
      }
    }
  }
}

TEST(TerrainTest, HeightAtClampsOutsideBlock) {
  const Terrain t = Terrain::Generate(TerrainKind::kUniformNoise, 9, 3);
  EXPECT_EQ(t.HeightAt(-5.0), t.heights().front());
  EXPECT_EQ(t.HeightAt(25.0), t.heights().back());
  EXPECT_EQ(t.HeightAt(std::nan("")), t.heights().front());
}

TEST(TerrainTest, HeightAtAgreesWithGridEverywhere) {
  const Terrain t = Terrain::Generate(TerrainKind::kDiscreteObstacles, 7, 1);
  for (int i = 0; i < kNumCells; ++i) {
    const double left = Terrain::CellLeft(i);
    EXPECT_EQ(t.HeightAt(left), t.heights()[i]);
    EXPECT_EQ(t.HeightAt(left + 0.005), t.heights()[i]);
  }
}

TEST(TerrainTest, ExportGridHasOneLinePerCell) {
  const Terrain t = Terrain::Generate(TerrainKind::kStairs, 9, 0);
  std::stringstream out;
  t.ExportGrid(out);
  std::string line;
  int rows = 0;
  double x = 0.0, h = 0.0;
  while (std::getline(out, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    fields >> x >> h;
    EXPECT_EQ(h, t.HeightAt(x + 0.001));
    ++rows;
  }
  EXPECT_EQ(rows, kNumCells);
}

TEST(TerrainTest, KindNamesRoundTrip) {
  for (auto kind : kAllKinds)
    EXPECT_EQ(TerrainKindFromString(ToString(kind)), kind);
  EXPECT_THROW(TerrainKindFromString("lava"), ConfigError);
}

CurriculumRecord Success() { return {true, 0.95, 8.0, 8.0}; }
CurriculumRecord Failure() { return {false, 0.1, 0.5, 8.0}; }

TEST(CurriculumTest, PromotesOnCrossingWithGoodTracking) {
  EXPECT_EQ(CurriculumUpdate(3, {true, 0.81, 6.0, 8.0}), 4);
}

TEST(CurriculumTest, DemotesWhenShortOfHalfDistance) {
  EXPECT_EQ(CurriculumUpdate(3, {false, 0.5, 1.0, 4.0}), 2);
}

TEST(CurriculumTest, CapsAndFloors) {
  EXPECT_EQ(CurriculumUpdate(9, {true, 0.95, 9.0, 8.0}), 9);
  EXPECT_EQ(CurriculumUpdate(0, Failure()), 0);
}

TEST(CurriculumTest, BoundaryCasesStay) {
  EXPECT_EQ(CurriculumUpdate(5, {true, 0.8, 5.0, 8.0}), 5);
  EXPECT_EQ(CurriculumUpdate(5, {false, 0.99, 4.0, 8.0}), 5);
  EXPECT_EQ(CurriculumUpdate(5, {false, 0.99, 6.0, 8.0}), 5);
}

TEST(CurriculumTest, PromotionWinsTies) {
  EXPECT_EQ(CurriculumUpdate(5, {true, 0.9, 1.0, 8.0}), 6);
}

TEST(CurriculumTest, IteratedRecordsReachBounds) {
  for (int start = 0; start <= kMaxDifficulty; ++start) {
    int level = start;
    int steps = 0;
    while (level != kMaxDifficulty) {
      level = CurriculumUpdate(level, Success());
      ++steps;
    }
    EXPECT_EQ(steps, kMaxDifficulty - start);
    level = start;
    steps = 0;
    while (level != 0) {
      level = CurriculumUpdate(level, Failure());
      ++steps;
    }
    EXPECT_EQ(steps, start);
  }
}

TEST(CommandTest, DrawsWithinRanges) {
  const CommandRanges ranges = DefaultCommandRanges();
  Rng rng(8);
  for (auto kind : kAllKinds) {
    const CommandRange r = ranges[static_cast<int>(kind)];
    for (int i = 0; i < 10000; ++i) {
      const double c = SampleCommand(kind, 5, ranges, rng);
      ASSERT_GE(c, r.lo);
      ASSERT_LE(c, r.hi);
    }
  }
}

TEST(CommandTest, StairsAndObstaclesNeverExceedTwo) {
  const CommandRanges ranges = DefaultCommandRanges();
  EXPECT_EQ(ranges[static_cast<int>(TerrainKind::kStairs)].hi, 2.0);
  EXPECT_EQ(ranges[static_cast<int>(TerrainKind::kDiscreteObstacles)].hi, 2.0);
  EXPECT_EQ(ranges[static_cast<int>(TerrainKind::kPlane)].hi, 2.5);
  EXPECT_EQ(ranges[static_cast<int>(TerrainKind::kPlane)].lo, -1.0);
  Rng rng(2);
  for (int i = 0; i < 10000; ++i)
    ASSERT_LE(SampleCommand(TerrainKind::kStairs, 9, ranges, rng), 2.0);
}

TEST(CommandTest, ReproducibleAndValidated) {
  const CommandRanges ranges = DefaultCommandRanges();
  Rng a(3), b(3);
  EXPECT_EQ(SampleCommand(TerrainKind::kPlane, 0, ranges, a),
            SampleCommand(TerrainKind::kPlane, 0, ranges, b));
  CommandRanges bad = ranges;
  bad[0] = {1.0, -1.0};
  EXPECT_THROW(SampleCommand(TerrainKind::kPlane, 0, bad, a), InvalidRange);
}

}  // namespace
}  // namespace locolab::terrain
