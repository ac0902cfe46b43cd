#ifndef LOCOLAB_RNG_H_
#define LOCOLAB_RNG_H_

#include <cstdint>
#include <random>
#include <string>

namespace locolab {

// SplitMix64 finalizer, used to derive independent stream seeds.
std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t stream);

// Portable random stream. Draws are computed from raw mt19937_64 output so
// sequences are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  // Independent child stream; does not advance this stream.
  Rng Fork(std::uint64_t stream) const;
  static Rng Stream(std::uint64_t master_seed, std::uint64_t stream) {
    return Rng(MixSeed(master_seed, stream));
  }

  std::uint64_t NextU64() { return engine_(); }
  // Uniform in [0, 1).
  double Uniform01();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform01(); }
  // Uniform integer in [0, n).
  std::uint64_t Index(std::uint64_t n);
  double Normal();

  // Full engine state, for checkpoints.
  std::string Serialize() const;
  void Deserialize(const std::string& text);

  friend bool operator==(const Rng& a, const Rng& b) {
    return a.engine_ == b.engine_ && a.has_spare_ == b.has_spare_ &&
           (!a.has_spare_ || a.spare_ == b.spare_);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace locolab

#endif  // LOCOLAB_RNG_H_
