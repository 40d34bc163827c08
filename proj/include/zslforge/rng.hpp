#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "zslforge/errors.hpp"

namespace zslforge {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Matd = Mat<double>;
using Vecd = Eigen::VectorXd;

/// Seeded random stream: a 64-bit Mersenne Twister (whose output sequence is
/// fixed by the C++ standard) combined with explicit scalar transforms, so
/// identical seeds give identical draws independent of the platform's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random mantissa bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via the Marsaglia polar method; the second draw of each
  // accepted pair is cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw InvalidArgument("Rng::below: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// n x dim matrix of i.i.d. standard normal draws, filled row by row.
inline Matd sample_gaussian(Eigen::Index n, Eigen::Index dim, Rng& rng) {
  if (n < 1 || dim < 1)
    throw InvalidArgument("sample_gaussian: n and dim must be >= 1");
  Matd out(n, dim);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) out(i, j) = rng.gaussian();
  return out;
}

/// n values uniform in [0, 1).
inline Vecd sample_uniform01(Eigen::Index n, Rng& rng) {
  if (n < 1) throw InvalidArgument("sample_uniform01: n must be >= 1");
  Vecd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = rng.uniform01();
  return out;
}

/// Fisher-Yates permutation of 0..n-1.
inline std::vector<int> sample_permutation(int n, Rng& rng) {
  std::vector<int> idx(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
  }
  return idx;
}

/// First m entries of a fresh permutation of 0..n-1.
inline std::vector<int> sample_indices(int n, int m, Rng& rng) {
  auto perm = sample_permutation(n, rng);
  perm.resize(static_cast<size_t>(std::min(n, m)));
  return perm;
}

namespace detail {
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}
}  // namespace detail

/// Independent sub-stream seed for a named phase of a run.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
  return detail::splitmix64(seed ^ detail::fnv1a64(tag));
}

}  // namespace zslforge
