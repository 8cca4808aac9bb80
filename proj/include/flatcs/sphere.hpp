#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "flatcs/lie.hpp"
#include "flatcs/numeric.hpp"

namespace flatcs {

// Integration over the unit 3-sphere of quaternions through the spherical
// chart q = (cos a, sin a sin b cos c, sin a sin b sin c, sin a cos b),
// a, b in (0, pi), c in [0, 2pi). Jacobian sin^2(a) sin(b). Gauss-Legendre in
// a and b, rectangle rule in c; all sums in fixed order.

struct SphereQuadrature {
  std::vector<double> na, wa;  // nodes/weights in a, mapped to (0, pi)
  std::vector<double> nb, wb;
  int nc = 64;

  explicit SphereQuadrature(int n = 64) : nc(n) {
    std::vector<double> x, w;
    gauss_legendre(n, x, w);
    na.resize(x.size());
    wa.resize(x.size());
    nb.resize(x.size());
    wb.resize(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
      na[i] = 0.5 * kPi * (x[i] + 1.0);
      wa[i] = 0.5 * kPi * w[i];
      nb[i] = na[i];
      wb[i] = wa[i];
    }
  }
};

/// Integral of f over S^3 with the round (unsigned) volume element.
inline double haar_integral(const std::function<double(const std::array<double, 4>&)>& f,
                            int n = 64) {
  const SphereQuadrature sq(n);
  NeumaierSum total;
  for (size_t ia = 0; ia < sq.na.size(); ++ia) {
    const double a = sq.na[ia];
    const double sa = std::sin(a), ca = std::cos(a);
    for (size_t ib = 0; ib < sq.nb.size(); ++ib) {
      const double b = sq.nb[ib];
      const double sb = std::sin(b), cb = std::cos(b);
      NeumaierSum ring;
      for (int ic = 0; ic < sq.nc; ++ic) {
        const double c = kTwoPi * ic / sq.nc;
        const std::array<double, 4> q{ca, sa * sb * std::cos(c), sa * sb * std::sin(c),
                                      sa * cb};
        ring.add(f(q));
      }
      total.add(ring.value() * sq.wa[ia] * sq.wb[ib] * (kTwoPi / sq.nc) * sa * sa * sb);
    }
  }
  return total.value();
}

namespace detail {

inline std::array<double, 4> qmul4(const std::array<double, 4>& a,
                                   const std::array<double, 4>& b) {
  std::array<double, 4> r;
  quat_mul(a.data(), b.data(), r.data());
  return r;
}

/// Canonical 3-form at q on tangent quaternions t1,t2,t3 (scale lambda):
/// -lambda <q^-1 t1, [q^-1 t2, q^-1 t3]> = -2 lambda det of the pure parts.
inline double theta_on_tangents(const std::array<double, 4>& q,
                                const std::array<double, 4>& t1,
                                const std::array<double, 4>& t2,
                                const std::array<double, 4>& t3, double lambda) {
  const std::array<double, 4> qi{q[0], -q[1], -q[2], -q[3]};
  const std::array<double, 4> x = qmul4(qi, t1);
  const std::array<double, 4> y = qmul4(qi, t2);
  const std::array<double, 4> z = qmul4(qi, t3);
  const double det = x[1] * (y[2] * z[3] - y[3] * z[2]) - x[2] * (y[1] * z[3] - y[3] * z[1]) +
                     x[3] * (y[1] * z[2] - y[2] * z[1]);
  return -2.0 * lambda * det;
}

}  // namespace detail

/// Signed chart integral of the canonical 3-form over SU(2) at scale lambda.
/// Tangent frame = chart partials; the chart above is positively oriented
/// for the standard (i, j, k) orientation at the identity.
inline double theta_three_form_integral(double lambda, int n = 64) {
  const SphereQuadrature sq(n);
  NeumaierSum total;
  for (size_t ia = 0; ia < sq.na.size(); ++ia) {
    const double a = sq.na[ia];
    const double sa = std::sin(a), ca = std::cos(a);
    for (size_t ib = 0; ib < sq.nb.size(); ++ib) {
      const double b = sq.nb[ib];
      const double sb = std::sin(b), cb = std::cos(b);
      NeumaierSum ring;
      for (int ic = 0; ic < sq.nc; ++ic) {
        const double c = kTwoPi * ic / sq.nc;
        const double sc = std::sin(c), cc = std::cos(c);
        const std::array<double, 4> q{ca, sa * sb * cc, sa * sb * sc, sa * cb};
        const std::array<double, 4> ta{-sa, ca * sb * cc, ca * sb * sc, ca * cb};
        const std::array<double, 4> tb{0, sa * cb * cc, sa * cb * sc, -sa * sb};
        const std::array<double, 4> tc{0, -sa * sb * sc, sa * sb * cc, 0};
        ring.add(detail::theta_on_tangents(q, ta, tb, tc, lambda));
      }
      total.add(ring.value() * sq.wa[ia] * sq.wb[ib] * (kTwoPi / sq.nc));
    }
  }
  return total.value();
}

/// Residual of bi-invariance of the canonical 3-form: both translates are
/// compared against the value at the identity on random frames.
inline double theta_bi_invariance_residual(int samples, std::uint32_t seed) {
  Rng rng(seed);
  auto rand_quat = [&](double amp) {
    std::array<double, 4> v{rng.uniform(-amp, amp), rng.uniform(-amp, amp),
                            rng.uniform(-amp, amp), rng.uniform(-amp, amp)};
    double norm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3]);
    for (double& x : v) x /= norm;
    return v;
  };
  double worst = 0.0;
  for (int t = 0; t < samples; ++t) {
    const std::array<double, 4> g = rand_quat(1.0);
    std::array<double, 4> x{0, rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    std::array<double, 4> y{0, rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    std::array<double, 4> z{0, rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const std::array<double, 4> id{1, 0, 0, 0};
    const double at_e = detail::theta_on_tangents(id, x, y, z, 1.0);
    // left translates g.x at g, right translates x.g at g
    const double left = detail::theta_on_tangents(g, detail::qmul4(g, x), detail::qmul4(g, y),
                                                  detail::qmul4(g, z), 1.0);
    const double right = detail::theta_on_tangents(g, detail::qmul4(x, g), detail::qmul4(y, g),
                                                   detail::qmul4(z, g), 1.0);
    worst = std::max(worst, std::abs(left - at_e));
    worst = std::max(worst, std::abs(right - at_e));
  }
  return worst;
}

/// Normalization data for one su(2) factor, derived from quadrature.
struct NormalizationData {
  double volume;          // haar_integral(1)
  double theta_integral;  // signed integral of the 3-form at unit scale
  double lambda_star;     // scale making the integral -1
};

inline NormalizationData derive_su2_normalization(int n = 64) {
  NormalizationData d{};
  d.volume = haar_integral([](const std::array<double, 4>&) { return 1.0; }, n);
  d.theta_integral = theta_three_form_integral(1.0, n);
  d.lambda_star = -1.0 / d.theta_integral;
  return d;
}

/// Per-factor normalization scales: lambda* for su(2) factors, none for u(1).
inline std::vector<std::optional<double>> normalization_constants(
    const LieAlgebraSpec& spec, int n = 64) {
  std::vector<std::optional<double>> out;
  std::optional<NormalizationData> derived;
  for (Factor f : spec.factors) {
    if (f == Factor::Su2) {
      if (!derived) derived = derive_su2_normalization(n);
      out.emplace_back(derived->lambda_star);
    } else {
      out.emplace_back(std::nullopt);
    }
  }
  return out;
}

}  // namespace flatcs
