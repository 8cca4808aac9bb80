#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <utility>
#include <vector>

#include "flatcs/flat_bundle.hpp"
#include "flatcs/forms.hpp"
#include "flatcs/numeric.hpp"

namespace flatcs {

// Truncated Fourier representation of twisted gauge fields on T^3 and a
// curvature-residual minimizer over the coefficients. Channels follow the
// complexified splitting of each algebra block:
//   su(2): X = a i + Re(w) j + Im(w) k  ->  toral channel a (real field,
//          Hermitian coefficients, shift 0) and off-torus channel w (free
//          complex coefficients, frequency shift theta from the holonomy)
//   u(1):  one real channel, shift 0
// Brackets become convolutions: [P,Q].a = -i conj(Pw) Qw + i Pw conj(Qw),
// [P,Q].w = 2i (Pa Qw - Qa Pw).

using Cplx = std::complex<double>;

struct ModeCube {
  int B = 4;
  std::array<double, 3> shift{0, 0, 0};
  std::vector<Cplx> c;

  ModeCube() = default;
  ModeCube(int bandwidth, std::array<double, 3> sh)
      : B(bandwidth), shift(sh), c(static_cast<size_t>(side() * side() * side()), Cplx(0)) {}

  int side() const { return 2 * B + 1; }

  size_t index(int m1, int m2, int m3) const {
    const int s = side();
    return static_cast<size_t>(((m1 + B) * s + (m2 + B)) * s + (m3 + B));
  }

  Cplx at(int m1, int m2, int m3) const { return c[index(m1, m2, m3)]; }
  Cplx& at(int m1, int m2, int m3) { return c[index(m1, m2, m3)]; }

  std::array<double, 3> wave(int m1, int m2, int m3) const {
    return {m1 + shift[0], m2 + shift[1], m3 + shift[2]};
  }

  double norm2() const {
    double s = 0.0;
    for (const Cplx& z : c) s += std::norm(z);
    return s;
  }
};

namespace spectral {

inline ModeCube scaled(const ModeCube& a, Cplx s) {
  ModeCube r = a;
  for (Cplx& z : r.c) z *= s;
  return r;
}

inline void axpy(ModeCube& out, const ModeCube& a, Cplx s) {
  for (size_t i = 0; i < out.c.size(); ++i) out.c[i] += s * a.c[i];
}

/// d_axis in mode space: multiply each coefficient by i * wave(axis).
inline ModeCube derivative(const ModeCube& a, int axis) {
  ModeCube r = a;
  for (int m1 = -a.B; m1 <= a.B; ++m1)
    for (int m2 = -a.B; m2 <= a.B; ++m2)
      for (int m3 = -a.B; m3 <= a.B; ++m3) {
        const auto k = a.wave(m1, m2, m3);
        r.at(m1, m2, m3) *= Cplx(0.0, k[static_cast<size_t>(axis)]);
      }
  return r;
}

/// Coefficients of the complex conjugate field: shift flips sign,
/// c[m] -> conj(c[-m]).
inline ModeCube flip_conj(const ModeCube& a) {
  ModeCube r(a.B, {-a.shift[0], -a.shift[1], -a.shift[2]});
  for (int m1 = -a.B; m1 <= a.B; ++m1)
    for (int m2 = -a.B; m2 <= a.B; ++m2)
      for (int m3 = -a.B; m3 <= a.B; ++m3)
        r.at(m1, m2, m3) = std::conj(a.at(-m1, -m2, -m3));
  return r;
}

/// out += s * (a * b) as pointwise fields, i.e. mode convolution. Only the
/// modes of `out` are accumulated, which both truncates projections and
/// keeps the cost at |out| * |a|.
inline void conv_accumulate(ModeCube& out, const ModeCube& a, const ModeCube& b, Cplx s) {
  for (int m1 = -out.B; m1 <= out.B; ++m1)
    for (int m2 = -out.B; m2 <= out.B; ++m2)
      for (int m3 = -out.B; m3 <= out.B; ++m3) {
        Cplx acc(0);
        const int lo1 = std::max(-a.B, m1 - b.B), hi1 = std::min(a.B, m1 + b.B);
        const int lo2 = std::max(-a.B, m2 - b.B), hi2 = std::min(a.B, m2 + b.B);
        const int lo3 = std::max(-a.B, m3 - b.B), hi3 = std::min(a.B, m3 + b.B);
        for (int p1 = lo1; p1 <= hi1; ++p1)
          for (int p2 = lo2; p2 <= hi2; ++p2)
            for (int p3 = lo3; p3 <= hi3; ++p3)
              acc += a.at(p1, p2, p3) * b.at(m1 - p1, m2 - p2, m3 - p3);
        out.at(m1, m2, m3) += s * acc;
      }
}

inline void make_hermitian(ModeCube& a) {
  for (int m1 = -a.B; m1 <= a.B; ++m1)
    for (int m2 = -a.B; m2 <= a.B; ++m2)
      for (int m3 = -a.B; m3 <= a.B; ++m3) {
        const Cplx z = 0.5 * (a.at(m1, m2, m3) + std::conj(a.at(-m1, -m2, -m3)));
        a.at(m1, m2, m3) = z;
        a.at(-m1, -m2, -m3) = std::conj(z);
      }
}

}  // namespace spectral

/// One algebra block of a spectral 1-form: toral and (for su(2)) off-torus
/// channel cubes per coordinate axis.
struct SpectralBlock {
  Factor factor = Factor::Su2;
  double scale = 1.0;
  std::array<ModeCube, 3> toral;
  std::array<ModeCube, 3> offplane;  // su(2) only
};

struct SpectralGaugeField {
  SpecPtr spec;
  HolonomyData hol;
  int B = 4;
  std::vector<SpectralBlock> blocks;

  SpectralGaugeField(SpecPtr s, HolonomyData h, int bandwidth)
      : spec(std::move(s)), hol(canonicalize_toral(h)), B(bandwidth) {
    for (size_t f = 0; f < spec->factors.size(); ++f) {
      SpectralBlock blk;
      blk.factor = spec->factors[f];
      blk.scale = spec->scales[f];
      const std::array<double, 3> zero{0, 0, 0};
      const std::array<double, 3> th =
          blk.factor == Factor::Su2 ? twist_shift(hol, f) : zero;
      for (int a = 0; a < 3; ++a) {
        blk.toral[static_cast<size_t>(a)] = ModeCube(B, zero);
        if (blk.factor == Factor::Su2)
          blk.offplane[static_cast<size_t>(a)] = ModeCube(B, th);
      }
      blocks.push_back(std::move(blk));
    }
  }
};

namespace spectral {

struct CurvatureBlock {
  // index pairs (0,1), (0,2), (1,2)
  std::array<ModeCube, 3> toral;
  std::array<ModeCube, 3> offplane;
};

inline int pair_index(int a, int b) { return a == 0 ? (b == 1 ? 0 : 1) : 2; }

/// F_ab = d_a A_b - d_b A_a + [A_a, A_b], exact at bandwidth 2B.
inline std::vector<CurvatureBlock> curvature(const SpectralGaugeField& A) {
  std::vector<CurvatureBlock> F;
  for (const SpectralBlock& blk : A.blocks) {
    CurvatureBlock fb;
    const std::array<double, 3> zero{0, 0, 0};
    int pi = 0;
    for (int a = 0; a < 3; ++a) {
      for (int b = a + 1; b < 3; ++b, ++pi) {
        ModeCube ft(2 * A.B, zero);
        {
          const ModeCube da = derivative(blk.toral[static_cast<size_t>(b)], a);
          const ModeCube db = derivative(blk.toral[static_cast<size_t>(a)], b);
          for (int m1 = -A.B; m1 <= A.B; ++m1)
            for (int m2 = -A.B; m2 <= A.B; ++m2)
              for (int m3 = -A.B; m3 <= A.B; ++m3)
                ft.at(m1, m2, m3) = da.at(m1, m2, m3) - db.at(m1, m2, m3);
        }
        if (blk.factor == Factor::Su2) {
          const ModeCube& wa = blk.offplane[static_cast<size_t>(a)];
          const ModeCube& wb = blk.offplane[static_cast<size_t>(b)];
          conv_accumulate(ft, flip_conj(wa), wb, Cplx(0, -1));
          conv_accumulate(ft, wa, flip_conj(wb), Cplx(0, 1));

          ModeCube fw(2 * A.B, wa.shift);
          const ModeCube dwa = derivative(wa, b);
          const ModeCube dwb = derivative(wb, a);
          for (int m1 = -A.B; m1 <= A.B; ++m1)
            for (int m2 = -A.B; m2 <= A.B; ++m2)
              for (int m3 = -A.B; m3 <= A.B; ++m3)
                fw.at(m1, m2, m3) = dwb.at(m1, m2, m3) - dwa.at(m1, m2, m3);
          conv_accumulate(fw, blk.toral[static_cast<size_t>(a)], wb, Cplx(0, 2));
          conv_accumulate(fw, blk.toral[static_cast<size_t>(b)], wa, Cplx(0, -2));
          fb.offplane[static_cast<size_t>(pi)] = std::move(fw);
        }
        fb.toral[static_cast<size_t>(pi)] = std::move(ft);
      }
    }
    F.push_back(std::move(fb));
  }
  return F;
}

/// R = int <F ^ *F> over T^3 by Parseval; exact for truncated fields.
inline double curvature_residual(const SpectralGaugeField& A,
                                 const std::vector<CurvatureBlock>& F) {
  const double vol = kTwoPi * kTwoPi * kTwoPi;
  double r = 0.0;
  for (size_t f = 0; f < F.size(); ++f) {
    double block = 0.0;
    for (int p = 0; p < 3; ++p) {
      block += F[f].toral[static_cast<size_t>(p)].norm2();
      if (A.blocks[f].factor == Factor::Su2)
        block += F[f].offplane[static_cast<size_t>(p)].norm2();
    }
    r += A.blocks[f].scale * block;
  }
  return vol * r;
}

inline double curvature_residual(const SpectralGaugeField& A) {
  return curvature_residual(A, curvature(A));
}

/// L2 gradient of the residual, projected back to bandwidth B:
/// G_b = -2 sum_a (d_a F_ab + [A_a, F_ab]).
inline SpectralGaugeField residual_gradient(const SpectralGaugeField& A,
                                            const std::vector<CurvatureBlock>& F) {
  SpectralGaugeField G(A.spec, A.hol, A.B);
  for (size_t f = 0; f < A.blocks.size(); ++f) {
    const SpectralBlock& blk = A.blocks[f];
    SpectralBlock& gb = G.blocks[f];
    for (int b = 0; b < 3; ++b) {
      for (int a = 0; a < 3; ++a) {
        if (a == b) continue;
        const double sgn = a < b ? 1.0 : -1.0;  // F_ab = sgn * stored pair
        const int p = a < b ? pair_index(a, b) : pair_index(b, a);
        const ModeCube& ft = F[f].toral[static_cast<size_t>(p)];

        // -2 d_a F_ab, truncated to B
        {
          const ModeCube dft = derivative(ft, a);
          ModeCube& out = gb.toral[static_cast<size_t>(b)];
          for (int m1 = -A.B; m1 <= A.B; ++m1)
            for (int m2 = -A.B; m2 <= A.B; ++m2)
              for (int m3 = -A.B; m3 <= A.B; ++m3)
                out.at(m1, m2, m3) += -2.0 * sgn * dft.at(m1, m2, m3);
        }
        if (blk.factor != Factor::Su2) continue;

        const ModeCube& fw = F[f].offplane[static_cast<size_t>(p)];
        {
          const ModeCube dfw = derivative(fw, a);
          ModeCube& out = gb.offplane[static_cast<size_t>(b)];
          for (int m1 = -A.B; m1 <= A.B; ++m1)
            for (int m2 = -A.B; m2 <= A.B; ++m2)
              for (int m3 = -A.B; m3 <= A.B; ++m3)
                out.at(m1, m2, m3) += -2.0 * sgn * dfw.at(m1, m2, m3);
        }

        // -2 [A_a, F_ab]
        const ModeCube& Aw = blk.offplane[static_cast<size_t>(a)];
        const ModeCube& At = blk.toral[static_cast<size_t>(a)];
        // toral channel: -i conj(Aw) Fw + i Aw conj(Fw), times -2 sgn
        conv_accumulate(gb.toral[static_cast<size_t>(b)], flip_conj(Aw), fw,
                        Cplx(0, 2.0 * sgn));
        conv_accumulate(gb.toral[static_cast<size_t>(b)], Aw, flip_conj(fw),
                        Cplx(0, -2.0 * sgn));
        // off-torus channel: 2i (At Fw - Ft Aw), times -2 sgn
        conv_accumulate(gb.offplane[static_cast<size_t>(b)], At, fw, Cplx(0, -4.0 * sgn));
        conv_accumulate(gb.offplane[static_cast<size_t>(b)], ft, Aw, Cplx(0, 4.0 * sgn));
      }
      make_hermitian(gb.toral[static_cast<size_t>(b)]);
    }
  }
  return G;
}

/// lambda-weighted coefficient inner product matching the L2 pairing.
inline double gradient_norm2(const SpectralGaugeField& G) {
  const double vol = kTwoPi * kTwoPi * kTwoPi;
  double s = 0.0;
  for (const SpectralBlock& blk : G.blocks) {
    double b = 0.0;
    for (int a = 0; a < 3; ++a) {
      b += blk.toral[static_cast<size_t>(a)].norm2();
      if (blk.factor == Factor::Su2) b += blk.offplane[static_cast<size_t>(a)].norm2();
    }
    s += blk.scale * b;
  }
  return vol * s;
}

inline void axpy_field(SpectralGaugeField& out, const SpectralGaugeField& d, double s) {
  for (size_t f = 0; f < out.blocks.size(); ++f) {
    for (int a = 0; a < 3; ++a) {
      axpy(out.blocks[f].toral[static_cast<size_t>(a)], d.blocks[f].toral[static_cast<size_t>(a)],
           Cplx(s));
      if (out.blocks[f].factor == Factor::Su2)
        axpy(out.blocks[f].offplane[static_cast<size_t>(a)],
             d.blocks[f].offplane[static_cast<size_t>(a)], Cplx(s));
    }
  }
}

/// Linearization of the curvature along a direction D at base point A:
/// F(A + sD) = F(A) + s F1 + s^2 F2 with
///   F1 = dD + [A ^ D]-part,  F2_ab = [D_a, D_b].
inline std::vector<CurvatureBlock> curvature_linear_part(const SpectralGaugeField& A,
                                                         const SpectralGaugeField& D) {
  std::vector<CurvatureBlock> F;
  for (size_t f = 0; f < A.blocks.size(); ++f) {
    const SpectralBlock& ab = A.blocks[f];
    const SpectralBlock& db = D.blocks[f];
    CurvatureBlock fb;
    const std::array<double, 3> zero{0, 0, 0};
    int pi = 0;
    for (int a = 0; a < 3; ++a) {
      for (int b = a + 1; b < 3; ++b, ++pi) {
        ModeCube ft(2 * A.B, zero);
        {
          const ModeCube da = derivative(db.toral[static_cast<size_t>(b)], a);
          const ModeCube dbb = derivative(db.toral[static_cast<size_t>(a)], b);
          for (int m1 = -A.B; m1 <= A.B; ++m1)
            for (int m2 = -A.B; m2 <= A.B; ++m2)
              for (int m3 = -A.B; m3 <= A.B; ++m3)
                ft.at(m1, m2, m3) = da.at(m1, m2, m3) - dbb.at(m1, m2, m3);
        }
        if (ab.factor == Factor::Su2) {
          const ModeCube& Awa = ab.offplane[static_cast<size_t>(a)];
          const ModeCube& Awb = ab.offplane[static_cast<size_t>(b)];
          const ModeCube& Dwa = db.offplane[static_cast<size_t>(a)];
          const ModeCube& Dwb = db.offplane[static_cast<size_t>(b)];
          // toral channel of [A_a, D_b] + [D_a, A_b]
          conv_accumulate(ft, flip_conj(Awa), Dwb, Cplx(0, -1));
          conv_accumulate(ft, Awa, flip_conj(Dwb), Cplx(0, 1));
          conv_accumulate(ft, flip_conj(Dwa), Awb, Cplx(0, -1));
          conv_accumulate(ft, Dwa, flip_conj(Awb), Cplx(0, 1));

          ModeCube fw(2 * A.B, Awa.shift);
          const ModeCube dwa = derivative(Dwa, b);
          const ModeCube dwb = derivative(Dwb, a);
          for (int m1 = -A.B; m1 <= A.B; ++m1)
            for (int m2 = -A.B; m2 <= A.B; ++m2)
              for (int m3 = -A.B; m3 <= A.B; ++m3)
                fw.at(m1, m2, m3) = dwb.at(m1, m2, m3) - dwa.at(m1, m2, m3);
          // off-torus channel of [A_a, D_b] + [D_a, A_b]
          conv_accumulate(fw, ab.toral[static_cast<size_t>(a)], Dwb, Cplx(0, 2));
          conv_accumulate(fw, db.toral[static_cast<size_t>(b)], Awa, Cplx(0, -2));
          conv_accumulate(fw, db.toral[static_cast<size_t>(a)], Awb, Cplx(0, 2));
          conv_accumulate(fw, ab.toral[static_cast<size_t>(b)], Dwa, Cplx(0, -2));
          fb.offplane[static_cast<size_t>(pi)] = std::move(fw);
        }
        fb.toral[static_cast<size_t>(pi)] = std::move(ft);
      }
    }
    F.push_back(std::move(fb));
  }
  return F;
}

/// Quadratic part along a direction: F2_ab = [D_a, D_b].
inline std::vector<CurvatureBlock> curvature_quadratic_part(const SpectralGaugeField& D) {
  std::vector<CurvatureBlock> F;
  for (const SpectralBlock& db : D.blocks) {
    CurvatureBlock fb;
    const std::array<double, 3> zero{0, 0, 0};
    int pi = 0;
    for (int a = 0; a < 3; ++a) {
      for (int b = a + 1; b < 3; ++b, ++pi) {
        ModeCube ft(2 * D.B, zero);
        if (db.factor == Factor::Su2) {
          const ModeCube& wa = db.offplane[static_cast<size_t>(a)];
          const ModeCube& wb = db.offplane[static_cast<size_t>(b)];
          conv_accumulate(ft, flip_conj(wa), wb, Cplx(0, -1));
          conv_accumulate(ft, wa, flip_conj(wb), Cplx(0, 1));
          ModeCube fw(2 * D.B, wa.shift);
          conv_accumulate(fw, db.toral[static_cast<size_t>(a)], wb, Cplx(0, 2));
          conv_accumulate(fw, db.toral[static_cast<size_t>(b)], wa, Cplx(0, -2));
          fb.offplane[static_cast<size_t>(pi)] = std::move(fw);
        }
        fb.toral[static_cast<size_t>(pi)] = std::move(ft);
      }
    }
    F.push_back(std::move(fb));
  }
  return F;
}

/// Weighted L2 pairing of curvature stacks: vol * sum lambda Re<X, Y>.
inline double curvature_dot(const SpectralGaugeField& A, const std::vector<CurvatureBlock>& X,
                            const std::vector<CurvatureBlock>& Y) {
  const double vol = kTwoPi * kTwoPi * kTwoPi;
  double s = 0.0;
  for (size_t f = 0; f < X.size(); ++f) {
    double b = 0.0;
    for (int p = 0; p < 3; ++p) {
      const ModeCube& xt = X[f].toral[static_cast<size_t>(p)];
      const ModeCube& yt = Y[f].toral[static_cast<size_t>(p)];
      for (size_t i = 0; i < xt.c.size(); ++i)
        b += xt.c[i].real() * yt.c[i].real() + xt.c[i].imag() * yt.c[i].imag();
      if (A.blocks[f].factor == Factor::Su2) {
        const ModeCube& xw = X[f].offplane[static_cast<size_t>(p)];
        const ModeCube& yw = Y[f].offplane[static_cast<size_t>(p)];
        for (size_t i = 0; i < xw.c.size(); ++i)
          b += xw.c[i].real() * yw.c[i].real() + xw.c[i].imag() * yw.c[i].imag();
      }
    }
    s += A.blocks[f].scale * b;
  }
  return vol * s;
}

inline double field_dot(const SpectralGaugeField& X, const SpectralGaugeField& Y) {
  const double vol = kTwoPi * kTwoPi * kTwoPi;
  double s = 0.0;
  for (size_t f = 0; f < X.blocks.size(); ++f) {
    double b = 0.0;
    for (int a = 0; a < 3; ++a) {
      const ModeCube& xt = X.blocks[f].toral[static_cast<size_t>(a)];
      const ModeCube& yt = Y.blocks[f].toral[static_cast<size_t>(a)];
      for (size_t i = 0; i < xt.c.size(); ++i)
        b += xt.c[i].real() * yt.c[i].real() + xt.c[i].imag() * yt.c[i].imag();
      if (X.blocks[f].factor == Factor::Su2) {
        const ModeCube& xw = X.blocks[f].offplane[static_cast<size_t>(a)];
        const ModeCube& yw = Y.blocks[f].offplane[static_cast<size_t>(a)];
        for (size_t i = 0; i < xw.c.size(); ++i)
          b += xw.c[i].real() * yw.c[i].real() + xw.c[i].imag() * yw.c[i].imag();
      }
    }
    s += X.blocks[f].scale * b;
  }
  return vol * s;
}

}  // namespace spectral

struct FlattenOptions {
  double tol = 1e-10;
  int max_iters = 10000;
  double step0 = 0.05;
  // called once per accepted iteration: (iteration, residual, step)
  std::function<void(int, double, double)> log;
};

struct FlattenResult {
  SpectralGaugeField field;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Exact minimizer for purely abelian fields, where the residual is a
/// per-mode least-squares problem: keep the component of each coefficient
/// vector parallel to its wave vector.
inline void abelian_projection(SpectralGaugeField& A) {
  for (SpectralBlock& blk : A.blocks) {
    for (int m1 = -A.B; m1 <= A.B; ++m1)
      for (int m2 = -A.B; m2 <= A.B; ++m2)
        for (int m3 = -A.B; m3 <= A.B; ++m3) {
          const auto k = blk.toral[0].wave(m1, m2, m3);
          const double k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
          if (k2 == 0.0) continue;
          Cplx dot(0);
          for (int a = 0; a < 3; ++a)
            dot += k[static_cast<size_t>(a)] *
                   blk.toral[static_cast<size_t>(a)].at(m1, m2, m3);
          for (int a = 0; a < 3; ++a)
            blk.toral[static_cast<size_t>(a)].at(m1, m2, m3) =
                dot * (k[static_cast<size_t>(a)] / k2);
        }
  }
}

namespace spectral {

/// Exact minimizer of the quartic R(s) = c0 + c1 s + ... + c4 s^4 over s >= 0,
/// assuming c1 < 0 (descent direction). Bracketing plus bisection on R'.
inline double minimize_line_quartic(double c1, double c2, double c3, double c4,
                                    double s_init) {
  auto dR = [&](double s) { return c1 + s * (2.0 * c2 + s * (3.0 * c3 + s * 4.0 * c4)); };
  double hi = s_init > 0 ? s_init : 1.0;
  for (int i = 0; i < 200 && dR(hi) < 0.0; ++i) hi *= 2.0;
  if (dR(hi) < 0.0) return hi;  // unbounded descent within reach; take the cap
  double lo = 0.0;
  for (int i = 0; i < 120; ++i) {
    const double mid = 0.5 * (lo + hi);
    (dR(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace spectral

/// Curvature-residual minimization over bandwidth-limited twisted fields.
/// First-order descent with Polak-Ribiere conjugate directions; the line
/// restriction of R is an exact quartic in the step (curvature is quadratic
/// in the coefficients), so each step takes the true 1-D minimizer instead
/// of a backtracking estimate. Plain steepest descent crawls at O(1/t) along
/// gauge-orbit directions, where the residual is purely quartic; the
/// conjugate update removes that plateau. Abelian groups take the one-shot
/// per-mode least-squares projection instead.
inline FlattenResult minimize_curvature(const SpectralGaugeField& init,
                                        const FlattenOptions& opts = {}) {
  FlattenResult res{init, 0.0, 0, false};
  bool abelian = true;
  for (Factor f : init.spec->factors)
    if (f == Factor::Su2) abelian = false;

  if (abelian) {
    abelian_projection(res.field);
    res.residual = spectral::curvature_residual(res.field);
    res.iterations = 1;
    res.converged = res.residual < opts.tol;
    if (opts.log) opts.log(1, res.residual, 0.0);
    return res;
  }

  auto F = spectral::curvature(res.field);
  double R = spectral::curvature_residual(res.field, F);
  if (opts.log) opts.log(0, R, 0.0);

  SpectralGaugeField grad = spectral::residual_gradient(res.field, F);
  SpectralGaugeField dir = grad;  // direction = -grad conceptually; sign handled below
  double g2 = spectral::field_dot(grad, grad);
  double step_scale = opts.step0;

  for (int it = 1; it <= opts.max_iters; ++it) {
    if (R < opts.tol) {
      res.converged = true;
      break;
    }
    if (g2 == 0.0) break;  // stationary point of the restricted problem

    // descent direction d; `dir` stores +d and must pair negatively with grad
    const double dd = spectral::field_dot(dir, grad);
    if (it == 1 || dd >= 0.0) {
      dir = grad;
      for (auto& blk : dir.blocks)
        for (int a = 0; a < 3; ++a) {
          for (auto& z : blk.toral[static_cast<size_t>(a)].c) z = -z;
          if (blk.factor == Factor::Su2)
            for (auto& z : blk.offplane[static_cast<size_t>(a)].c) z = -z;
        }
    }

    // exact quartic line restriction along dir
    const auto F1 = spectral::curvature_linear_part(res.field, dir);
    const auto F2 = spectral::curvature_quadratic_part(dir);
    const double c1 = 2.0 * spectral::curvature_dot(res.field, F, F1);
    const double c2 = spectral::curvature_dot(res.field, F1, F1) +
                      2.0 * spectral::curvature_dot(res.field, F, F2);
    const double c3 = 2.0 * spectral::curvature_dot(res.field, F1, F2);
    const double c4 = spectral::curvature_dot(res.field, F2, F2);
    if (c1 >= 0.0) {  // numerical non-descent; fall back to steepest next round
      dir = grad;
      for (auto& blk : dir.blocks)
        for (int a = 0; a < 3; ++a) {
          for (auto& z : blk.toral[static_cast<size_t>(a)].c) z = -z;
          if (blk.factor == Factor::Su2)
            for (auto& z : blk.offplane[static_cast<size_t>(a)].c) z = -z;
        }
      res.iterations = it;
      continue;
    }
    const double s = spectral::minimize_line_quartic(c1, c2, c3, c4, step_scale);
    step_scale = s;
    spectral::axpy_field(res.field, dir, s);

    F = spectral::curvature(res.field);
    const double Rnew = spectral::curvature_residual(res.field, F);
    res.iterations = it;
    if (opts.log) opts.log(it, Rnew, s);
    if (!(Rnew < R)) {  // exact line search failed to improve: stop
      R = Rnew;
      break;
    }
    R = Rnew;

    // Polak-Ribiere+ update
    SpectralGaugeField grad_new = spectral::residual_gradient(res.field, F);
    const double g2_new = spectral::field_dot(grad_new, grad_new);
    const double gy = g2_new - spectral::field_dot(grad_new, grad);
    const double beta = std::max(0.0, gy / g2);
    // dir <- -grad_new + beta * dir
    for (size_t f = 0; f < dir.blocks.size(); ++f)
      for (int a = 0; a < 3; ++a) {
        auto& dt = dir.blocks[f].toral[static_cast<size_t>(a)];
        const auto& gt = grad_new.blocks[f].toral[static_cast<size_t>(a)];
        for (size_t i = 0; i < dt.c.size(); ++i) dt.c[i] = -gt.c[i] + beta * dt.c[i];
        if (dir.blocks[f].factor == Factor::Su2) {
          auto& dw = dir.blocks[f].offplane[static_cast<size_t>(a)];
          const auto& gw = grad_new.blocks[f].offplane[static_cast<size_t>(a)];
          for (size_t i = 0; i < dw.c.size(); ++i) dw.c[i] = -gw.c[i] + beta * dw.c[i];
        }
      }
    grad = std::move(grad_new);
    g2 = g2_new;
  }
  res.residual = R;
  if (!res.converged) res.converged = R < opts.tol;
  return res;
}

/// Contract-enforcing wrapper: non-convergence is an error that carries the
/// final residual.
inline FlattenResult find_flat_connection(const SpectralGaugeField& init,
                                          const FlattenOptions& opts = {}) {
  FlattenResult r = minimize_curvature(init, opts);
  if (!r.converged)
    throw error("flat-connection search did not reach tolerance; final residual " +
                std::to_string(r.residual));
  return r;
}

// --- conversions ---------------------------------------------------------------

/// Exact pointwise evaluation of the truncated series, with jets.
inline VForm spectral_to_form(const SpectralGaugeField& A) {
  const SpecPtr spec = A.spec;
  VForm r;
  r.n = 3;
  r.degree = 1;
  r.val = ValueSpace::Lie;
  r.spec = spec;
  r.jet_order = 2;
  r.fn = [A, spec](const Pt& p) {
    const int dim_g = spec->algebra_dim();
    FormValue out(3, std::vector<Jet2>(static_cast<size_t>(dim_g), Jet2::constant(p.n, 0.0)));
    for (size_t f = 0; f < A.blocks.size(); ++f) {
      const SpectralBlock& blk = A.blocks[f];
      const int ao = spec->algebra_offset(f);
      for (int a = 0; a < 3; ++a) {
        auto accumulate = [&](const ModeCube& cube, Jet2* re_target, Jet2* im_target) {
          for (int m1 = -cube.B; m1 <= cube.B; ++m1)
            for (int m2 = -cube.B; m2 <= cube.B; ++m2)
              for (int m3 = -cube.B; m3 <= cube.B; ++m3) {
                const Cplx c = cube.at(m1, m2, m3);
                if (c == Cplx(0)) continue;
                const auto k = cube.wave(m1, m2, m3);
                const double phase = k[0] * p[0] + k[1] * p[1] + k[2] * p[2];
                const Cplx e = c * std::polar(1.0, phase);
                if (re_target) {
                  re_target->v += e.real();
                  for (int d = 0; d < 3; ++d) re_target->g[d] += -k[static_cast<size_t>(d)] * e.imag();
                  for (int d = 0; d < 3; ++d)
                    for (int e2 = 0; e2 < 3; ++e2)
                      re_target->h[d][e2] +=
                          -k[static_cast<size_t>(d)] * k[static_cast<size_t>(e2)] * e.real();
                }
                if (im_target) {
                  im_target->v += e.imag();
                  for (int d = 0; d < 3; ++d) im_target->g[d] += k[static_cast<size_t>(d)] * e.real();
                  for (int d = 0; d < 3; ++d)
                    for (int e2 = 0; e2 < 3; ++e2)
                      im_target->h[d][e2] +=
                          -k[static_cast<size_t>(d)] * k[static_cast<size_t>(e2)] * e.imag();
                }
              }
        };
        Jet2& toral = out[static_cast<size_t>(a)][static_cast<size_t>(ao)];
        accumulate(blk.toral[static_cast<size_t>(a)], &toral, nullptr);
        if (blk.factor == Factor::Su2) {
          Jet2& jc = out[static_cast<size_t>(a)][static_cast<size_t>(ao) + 1];
          Jet2& kc = out[static_cast<size_t>(a)][static_cast<size_t>(ao) + 2];
          accumulate(blk.offplane[static_cast<size_t>(a)], &jc, &kc);
        }
      }
    }
    return out;
  };
  return r;
}

/// Sampled projection of a (twisted) gauge field onto bandwidth B. Exact for
/// fields band-limited below the sampling rate.
inline SpectralGaugeField project_to_spectral(const VForm& form, const HolonomyData& hol,
                                              int B, int samples = 0) {
  SpectralGaugeField S(form.spec, hol, B);
  const int N = samples > 0 ? samples : std::max(4 * B + 2, 16);
  const double inv = 1.0 / (static_cast<double>(N) * N * N);
  std::vector<FormValue> grid;
  grid.reserve(static_cast<size_t>(N) * N * N);
  for (int i0 = 0; i0 < N; ++i0)
    for (int i1 = 0; i1 < N; ++i1)
      for (int i2 = 0; i2 < N; ++i2)
        grid.push_back(form.eval(make_pt(3, kTwoPi * i0 / N, kTwoPi * i1 / N, kTwoPi * i2 / N)));

  for (size_t f = 0; f < S.blocks.size(); ++f) {
    SpectralBlock& blk = S.blocks[f];
    const int ao = form.spec->algebra_offset(f);
    for (int a = 0; a < 3; ++a) {
      for (int m1 = -B; m1 <= B; ++m1)
        for (int m2 = -B; m2 <= B; ++m2)
          for (int m3 = -B; m3 <= B; ++m3) {
            Cplx acc_t(0), acc_w(0);
            const auto kt = blk.toral[static_cast<size_t>(a)].wave(m1, m2, m3);
            const auto kw = blk.factor == Factor::Su2
                                ? blk.offplane[static_cast<size_t>(a)].wave(m1, m2, m3)
                                : kt;
            size_t gi = 0;
            for (int i0 = 0; i0 < N; ++i0)
              for (int i1 = 0; i1 < N; ++i1)
                for (int i2 = 0; i2 < N; ++i2, ++gi) {
                  const double x0 = kTwoPi * i0 / N, x1 = kTwoPi * i1 / N, x2 = kTwoPi * i2 / N;
                  const auto& ch = grid[gi][static_cast<size_t>(a)];
                  acc_t += ch[static_cast<size_t>(ao)].v *
                           std::polar(1.0, -(kt[0] * x0 + kt[1] * x1 + kt[2] * x2));
                  if (blk.factor == Factor::Su2) {
                    const Cplx w(ch[static_cast<size_t>(ao) + 1].v,
                                 ch[static_cast<size_t>(ao) + 2].v);
                    acc_w += w * std::polar(1.0, -(kw[0] * x0 + kw[1] * x1 + kw[2] * x2));
                  }
                }
            blk.toral[static_cast<size_t>(a)].at(m1, m2, m3) = acc_t * inv;
            if (blk.factor == Factor::Su2)
              blk.offplane[static_cast<size_t>(a)].at(m1, m2, m3) = acc_w * inv;
          }
      spectral::make_hermitian(blk.toral[static_cast<size_t>(a)]);
    }
  }
  return S;
}

/// Random twisted perturbation respecting the channel structure; mode
/// amplitudes decay quadratically so the field is smooth at the bandwidth.
inline void add_random_perturbation(SpectralGaugeField& A, double amplitude,
                                    std::uint32_t seed) {
  Rng rng(seed);
  for (SpectralBlock& blk : A.blocks) {
    for (int a = 0; a < 3; ++a) {
      for (int m1 = -A.B; m1 <= A.B; ++m1)
        for (int m2 = -A.B; m2 <= A.B; ++m2)
          for (int m3 = -A.B; m3 <= A.B; ++m3) {
            const double decay = 1.0 / (1.0 + m1 * m1 + m2 * m2 + m3 * m3);
            blk.toral[static_cast<size_t>(a)].at(m1, m2, m3) +=
                amplitude * decay * Cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));
            if (blk.factor == Factor::Su2)
              blk.offplane[static_cast<size_t>(a)].at(m1, m2, m3) +=
                  amplitude * decay * Cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));
          }
      spectral::make_hermitian(blk.toral[static_cast<size_t>(a)]);
    }
  }
}

}  // namespace flatcs
