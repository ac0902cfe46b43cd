#include "locolab/rng.h"

#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>

#include "locolab/errors.h"

namespace locolab {

std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng Rng::Fork(std::uint64_t stream) const {
  std::mt19937_64 copy = engine_;
  return Rng(MixSeed(copy(), stream));
}

double Rng::Uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::Index(std::uint64_t n) {
  if (n == 0) return 0;
  // Rejection sampling to avoid modulo bias.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::Normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = Uniform01();
  } while (u1 <= 0.0);
  const double u2 = Uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::string Rng::Serialize() const {
  std::ostringstream out;
  out << engine_ << ' ' << (has_spare_ ? 1 : 0) << ' ';
  std::uint64_t bits;
  std::memcpy(&bits, &spare_, sizeof(bits));
  out << bits;
  return out.str();
}

void Rng::Deserialize(const std::string& text) {
  std::istringstream in(text);
  int spare_flag = 0;
  std::uint64_t bits = 0;
  in >> engine_ >> spare_flag >> bits;
  if (!in) throw IoError("corrupt RNG state");
  has_spare_ = spare_flag != 0;
  std::memcpy(&spare_, &bits, sizeof(bits));
}

}  // namespace locolab
