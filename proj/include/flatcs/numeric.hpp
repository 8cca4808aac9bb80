#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace flatcs {

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kTwoPi = 2.0 * kPi;

class error : public std::runtime_error {
public:
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// Neumaier-compensated accumulator. Accumulation order is part of the
/// contract: callers feed terms in a fixed order and results are bit-stable.
struct NeumaierSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }

  double value() const { return sum + comp; }
};

/// Runs fn(slab) for slab in [0, n_slabs). The slab decomposition is fixed by
/// the caller, so any per-slab partials can be reduced in slab order and the
/// result does not depend on the thread count.
template <class Fn>
void for_slabs(int n_slabs, int threads, Fn&& fn) {
  if (threads <= 1 || n_slabs <= 1) {
    for (int s = 0; s < n_slabs; ++s) fn(s);
    return;
  }
  threads = std::min(threads, n_slabs);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([=, &fn] {
      for (int s = t; s < n_slabs; s += threads) fn(s);
    });
  }
  for (auto& th : pool) th.join();
}

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Gauss-Legendre nodes/weights on [-1, 1], Newton iteration on P_n.
inline void gauss_legendre(int n, std::vector<double>& nodes,
                           std::vector<double>& weights) {
  nodes.assign(static_cast<size_t>(n), 0.0);
  weights.assign(static_cast<size_t>(n), 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[static_cast<size_t>(i)] = -x;
    nodes[static_cast<size_t>(n - 1 - i)] = x;
    weights[static_cast<size_t>(i)] = 2.0 / ((1.0 - x * x) * pp * pp);
    weights[static_cast<size_t>(n - 1 - i)] = weights[static_cast<size_t>(i)];
  }
}

/// Deterministic uniform draws. Raw mt19937 output only; the standard pins
/// its sequence, while distribution objects do not.
class Rng {
public:
  explicit Rng(std::uint32_t seed) : eng_(seed) {}

  double u01() {
    const std::uint64_t a = eng_() >> 5;  // 27 bits
    const std::uint64_t b = eng_() >> 6;  // 26 bits
    return static_cast<double>((a << 26) | b) * (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  int index(int n) { return static_cast<int>(eng_() % static_cast<std::uint32_t>(n)); }

private:
  std::mt19937 eng_;
};

inline double distance_to_integer(double x) { return std::abs(x - std::round(x)); }

}  // namespace flatcs
