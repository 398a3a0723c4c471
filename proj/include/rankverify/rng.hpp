#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace rankverify {

// Counter-based seed derivation: every consumer of randomness gets its own
// stream keyed by (master seed, trial index, purpose tag), so the schedule
// of parallel workers can never change what a trial sees.

inline std::uint64_t splitmix64_step(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

enum class Purpose : std::uint64_t {
  data = 1,        // drawing the observation itself
  tie_break = 2,   // resolving observed ties into a recorded order
  atom_split = 3,  // the uniform used by randomized p-values
  scratch = 4,
};

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial, Purpose purpose) {
  std::uint64_t s = master;
  std::uint64_t h = splitmix64_step(s);
  s = h ^ (0xA0761D6478BD642Full * (trial + 1));
  h = splitmix64_step(s);
  s = h ^ (0xE7037ED1A0B428DBull * (static_cast<std::uint64_t>(purpose) + 1));
  return splitmix64_step(s);
}

// Hand-rolled draws on top of mt19937_64 (whose output sequence is pinned by
// the standard). std::*_distribution is implementation-defined, so none of it
// is used here; results are byte-stable across platforms.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : eng_(seed) {}

  double uniform() {  // in [0, 1) with 53 random bits
    return double(eng_() >> 11) * 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::uint64_t bounded(std::uint64_t k) {  // uniform on {0, ..., k-1}, unbiased
    if (k == 0) throw std::invalid_argument("bounded: k must be positive");
    std::uint64_t threshold = (~k + 1) % k;  // 2^64 mod k
    for (;;) {
      std::uint64_t r = eng_();
      if (r >= threshold) return r % k;
    }
  }

  long binomial(long m, double p) {
    long c = 0;
    for (long i = 0; i < m; ++i)
      if (uniform() < p) ++c;
    return c;
  }

  // m independent categorical draws
  std::vector<long> multinomial(long m, const std::vector<double>& probs) {
    std::vector<double> cum(probs.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      cum[i] = acc;
    }
    std::vector<long> counts(probs.size(), 0);
    for (long i = 0; i < m; ++i) {
      double u = uniform() * acc;
      std::size_t lo = 0, hi = probs.size() - 1;
      while (lo < hi) {
        std::size_t mid = (lo + hi) / 2;
        if (u < cum[mid])
          hi = mid;
        else
          lo = mid + 1;
      }
      ++counts[lo];
    }
    return counts;
  }

  // Fisher-Yates on a span of indices
  template <typename It>
  void shuffle(It first, It last) {
    auto n = last - first;
    for (decltype(n) i = n - 1; i > 0; --i) {
      auto j = static_cast<decltype(n)>(bounded(static_cast<std::uint64_t>(i) + 1));
      std::swap(first[i], first[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rankverify
