#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <thread>
#include <vector>

namespace bpds {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Library version, embedded in result summaries.
inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Deterministic RNG streams.
//
// All randomness flows from a single config seed. Independent streams are
// derived by mixing the seed with stream tags (model index, day index, ...)
// so that runs are reproducible and per-model draws do not depend on the
// order in which other models are sampled.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(seed ^ (a * 0x9e3779b97f4a7c15ULL)) ^ b);
}

inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return std::mt19937_64(mix_seed(seed, a, b));
}

// ---------------------------------------------------------------------------
// Small numeric helpers shared across modules.
// ---------------------------------------------------------------------------

/// log(sum(exp(v))) with max-shift stabilization.
template <typename Derived>
double log_sum_exp(const Eigen::MatrixBase<Derived>& v) {
  const double shift = v.maxCoeff();
  if (!std::isfinite(shift)) return shift;  // all -inf (empty support) or inf
  return shift + std::log((v.array() - shift).exp().sum());
}

/// Average a square matrix with its transpose.
template <typename Derived>
Matrix symmetrized(const Eigen::MatrixBase<Derived>& m) {
  return 0.5 * (m + m.transpose());
}

/// Standard normal draw (Box-Muller on the given engine).
inline double draw_normal(std::mt19937_64& rng) {
  static thread_local std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

/// n x q matrix of iid standard normals, drawn row-major.
inline Matrix draw_normal_matrix(int n, int q, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix z(n, q);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < q; ++j) z(i, j) = dist(rng);
  return z;
}

/// Run fn(i) for i in [0, n), split across `threads` workers. Results must be
/// written to preallocated slots; iteration order within a worker is
/// ascending, so output is deterministic regardless of thread count.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (int i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace bpds
