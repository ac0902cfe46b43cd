#include "locolab/terrain/terrain.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "locolab/errors.h"

namespace locolab::terrain {

std::string ToString(TerrainKind kind) {
  switch (kind) {
    case TerrainKind::kPlane:
      return "plane";
    case TerrainKind::kUniformNoise:
      return "uniform_noise";
    case TerrainKind::kDiscreteObstacles:
      return "discrete_obstacles";
    case TerrainKind::kStairs:
      return "stairs";
  }
  return "unknown";
}

TerrainKind TerrainKindFromString(const std::string& name) {
  for (int k = 0; k < kNumTerrainKinds; ++k) {
    const auto kind = static_cast<TerrainKind>(k);
    if (ToString(kind) == name) return kind;
  }
  throw ConfigError("unknown terrain kind '" + name + "'");
}

double NoiseAmplitude(int difficulty) { return 0.025 * (difficulty + 1); }
double StairRise(int difficulty) { return 0.014 * (difficulty + 1); }
double ObstacleHeight(int difficulty) { return 0.015 * (difficulty + 1); }

namespace {

std::vector<double> UniformNoise(int difficulty, std::uint64_t seed) {
  Rng rng(MixSeed(seed, 1));
  const double amplitude = NoiseAmplitude(difficulty);
  std::vector<double> h(kNumCells);
  for (int start = 0; start < kNumCells; start += kNoiseCellWidth) {
    const double value = amplitude * (rng.Uniform01() - 0.5);
    for (int i = start; i < std::min(start + kNoiseCellWidth, kNumCells); ++i)
      h[i] = value;
  }
  return h;
}

// Pyramid: flat landing, ascending treads up to the block center, mirrored
// descent on the far side.
std::vector<double> Stairs(int difficulty) {
  const double rise = StairRise(difficulty);
  std::vector<double> h(kNumCells, 0.0);
  const int half = kNumCells / 2;
  for (int i = kLandingCells; i < half; ++i) {
    const int step = 1 + (i - kLandingCells) / kStairStepCells;
    h[i] = rise * step;
    h[kNumCells - 1 - i] = h[i];
  }
  return h;
}

// Alternating flat gaps and boxes/pits between two flat landings. The layout
// depends only on the seed; the difficulty scales the heights.
std::vector<double> DiscreteObstacles(int difficulty, std::uint64_t seed) {
  Rng rng(MixSeed(seed, 2));
  const double height = ObstacleHeight(difficulty);
  std::vector<double> h(kNumCells, 0.0);
  int cursor = kLandingCells;
  const int end = kNumCells - kLandingCells;
  while (cursor < end) {
    cursor += 30 + static_cast<int>(rng.Index(51));  // 0.30..0.80 m gap
    const int width = 20 + static_cast<int>(rng.Index(31));  // 0.20..0.50 m
    const double sign = rng.Uniform01() < 0.5 ? -1.0 : 1.0;
    for (int i = cursor; i < std::min(cursor + width, end); ++i)
      h[i] = sign * height;
    cursor += width;
  }
  return h;
}

}  // namespace

Terrain Terrain::Generate(TerrainKind kind, int difficulty,
                          std::uint64_t seed) {
  if (difficulty < 0 || difficulty > kMaxDifficulty) {
    throw InvalidDifficulty("terrain difficulty " + std::to_string(difficulty) +
                            " is outside 0.." + std::to_string(kMaxDifficulty));
  }
  std::vector<double> heights;
  switch (kind) {
    case TerrainKind::kPlane:
      heights.assign(kNumCells, 0.0);
      break;
    case TerrainKind::kUniformNoise:
      heights = UniformNoise(difficulty, seed);
      break;
    case TerrainKind::kDiscreteObstacles:
      heights = DiscreteObstacles(difficulty, seed);
      break;
    case TerrainKind::kStairs:
      heights = Stairs(difficulty);
      break;
  }
  return Terrain(kind, difficulty, seed, std::move(heights));
}

int Terrain::CellIndex(double x) {
  // The tiny bias keeps decimal edges such as 0.29 m in the cell they start.
  const double scaled = std::floor(x * kCellsPerMeter + 1e-9);
  if (!(scaled >= 0.0)) return 0;  // also catches NaN
  if (scaled >= kNumCells - 1) return kNumCells - 1;
  return static_cast<int>(scaled);
}

double Terrain::HeightAt(double x) const { return heights_[CellIndex(x)]; }

double Terrain::MaxAbsHeight() const {
  double m = 0.0;
  for (double h : heights_) m = std::max(m, std::abs(h));
  return m;
}

void Terrain::ExportGrid(std::ostream& out) const {
  out << "# kind " << ToString(kind_) << " difficulty " << difficulty_
      << " seed " << seed_ << "\n# x_m height_m\n";
  char line[64];
  for (int i = 0; i < kNumCells; ++i) {
    std::snprintf(line, sizeof(line), "%.2f %.17g\n", CellLeft(i), heights_[i]);
    out << line;
  }
}

int CurriculumUpdate(int level, const CurriculumRecord& record) {
  if (record.crossed_center && record.tracking_reward_ratio > 0.8)
    return std::min(level + 1, kMaxDifficulty);
  if (record.distance_traveled < 0.5 * record.commanded_distance)
    return std::max(level - 1, 0);
  return level;
}

CommandRanges DefaultCommandRanges() {
  CommandRanges ranges;
  ranges[static_cast<int>(TerrainKind::kPlane)] = {-1.0, 2.5};
  ranges[static_cast<int>(TerrainKind::kUniformNoise)] = {-1.0, 2.5};
  ranges[static_cast<int>(TerrainKind::kDiscreteObstacles)] = {-0.5, 2.0};
  ranges[static_cast<int>(TerrainKind::kStairs)] = {-0.5, 2.0};
  return ranges;
}

double SampleCommand(TerrainKind kind, int /*difficulty*/,
                     const CommandRanges& ranges, Rng& rng) {
  const CommandRange& r = ranges[static_cast<int>(kind)];
  if (r.lo > r.hi) {
    throw InvalidRange("command range for " + ToString(kind) +
                       " has lo > hi");
  }
  return rng.Uniform(r.lo, r.hi);
}

}  // namespace locolab::terrain
