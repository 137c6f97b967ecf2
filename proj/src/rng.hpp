#ifndef RPT_RNG_HPP_
#define RPT_RNG_HPP_

#include <cstdint>
#include <random>
#include <string>

namespace rpt {

// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                          std::uint64_t b = 0, std::uint64_t c = 0);

// Seeded 64-bit engine. Draws are built directly from engine output rather
// than std:: distributions so sequences are identical across standard
// libraries and the full state round-trips through text.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_int(std::uint64_t n);

  std::string save() const;
  void load(const std::string& state);

  friend bool operator==(const Rng& a, const Rng& b) {
    return a.engine_ == b.engine_;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace rpt

#endif  // RPT_RNG_HPP_
