#ifndef LOCOLAB_TERRAIN_TERRAIN_H_
#define LOCOLAB_TERRAIN_TERRAIN_H_

#include <array>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "locolab/rng.h"

namespace locolab::terrain {

enum class TerrainKind { kPlane, kUniformNoise, kDiscreteObstacles, kStairs };
inline constexpr int kNumTerrainKinds = 4;

std::string ToString(TerrainKind kind);
// Throws ConfigError for unknown names.
TerrainKind TerrainKindFromString(const std::string& name);

inline constexpr int kMaxDifficulty = 9;
inline constexpr double kBlockLength = 10.0;       // m
inline constexpr double kBlockCenter = 5.0;        // m
inline constexpr int kCellsPerMeter = 100;         // 0.01 m grid
inline constexpr int kNumCells = 1000;
inline constexpr int kNoiseCellWidth = 5;          // 0.05 m noise patches
inline constexpr int kStairStepCells = 31;         // 0.31 m treads
inline constexpr int kLandingCells = 150;          // 1.5 m flat start

// Level-dependent geometry. Level 9 matches the evaluation terrains.
double NoiseAmplitude(int difficulty);     // peak-to-peak, m
double StairRise(int difficulty);          // m
double ObstacleHeight(int difficulty);     // m, boxes up / pits down

// Immutable height profile over one block [0, kBlockLength).
class Terrain {
 public:
  Terrain() : Terrain(Generate(TerrainKind::kPlane, 0, 0)) {}

  // Throws InvalidDifficulty for levels outside 0..9.
  static Terrain Generate(TerrainKind kind, int difficulty, std::uint64_t seed);

  // Piecewise-constant lookup; x outside the block clamps to the edge cell.
  double HeightAt(double x) const;
  static int CellIndex(double x);
  static double CellLeft(int cell) {
    return static_cast<double>(cell) / kCellsPerMeter;
  }

  TerrainKind kind() const { return kind_; }
  int difficulty() const { return difficulty_; }
  std::uint64_t seed() const { return seed_; }
  double block_center_x() const { return kBlockCenter; }
  const std::vector<double>& heights() const { return heights_; }
  double MaxAbsHeight() const;

  // "x height" pairs, one per cell (left edge), for plotting.
  void ExportGrid(std::ostream& out) const;

  friend bool operator==(const Terrain&, const Terrain&) = default;

 private:
  Terrain(TerrainKind kind, int difficulty, std::uint64_t seed,
          std::vector<double> heights)
      : kind_(kind),
        difficulty_(difficulty),
        seed_(seed),
        heights_(std::move(heights)) {}

  TerrainKind kind_;
  int difficulty_;
  std::uint64_t seed_;
  std::vector<double> heights_;
};

struct CurriculumRecord {
  bool crossed_center = false;
  double tracking_reward_ratio = 0.0;  // of the maximum achievable, 0..1
  double distance_traveled = 0.0;      // m
  double commanded_distance = 0.0;     // m
};

// Promote when the block center was crossed and tracking exceeded 80% of the
// maximum; demote when less than half the commanded distance was covered.
// Promotion is checked first.
int CurriculumUpdate(int level, const CurriculumRecord& record);

struct CommandRange {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const CommandRange&, const CommandRange&) = default;
};

// Forward-velocity command ranges per terrain kind, indexed by TerrainKind.
using CommandRanges = std::array<CommandRange, kNumTerrainKinds>;
CommandRanges DefaultCommandRanges();

// Uniform draw from the range for `kind`. Throws InvalidRange when lo > hi.
double SampleCommand(TerrainKind kind, int difficulty,
                     const CommandRanges& ranges, Rng& rng);

}  // namespace locolab::terrain

#endif  // LOCOLAB_TERRAIN_TERRAIN_H_
