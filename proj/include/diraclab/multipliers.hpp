#ifndef DIRACLAB_MULTIPLIERS_HPP
#define DIRACLAB_MULTIPLIERS_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"
#include "trajectory.hpp"

namespace diraclab {

// ---- smooth bumps ----

namespace bump {

inline double mollifier(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }

/// 0 for x <= 0, 1 for x >= 1, smooth in between.
/// Strictly inside (0, 1) on the open interval even where exp(-1/x) underflows,
/// so nonzero sets of the symbols match the open A-sets exactly.
inline double step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double a = mollifier(x), b = mollifier(1.0 - x);
  if (a == 0.0) return std::numeric_limits<double>::denorm_min();
  if (b == 0.0) return std::nextafter(1.0, 0.0);
  return a / (a + b);
}

/// psi: 1 on [0,1], 0 on [2, inf).
inline double psi(double a) { return step(2.0 - a); }

/// Phi(a) = psi(a) - psi(2a), supported in [1/2, 2]; dyadic sums telescope to 1.
inline double Phi(double a) {
  a = std::abs(a);
  return psi(a) - psi(2.0 * a);
}

/// Phi_0(a) = sum over dyadic lambda <= 1/2 of Phi(a / lambda) = psi(2a).
inline double Phi0(double a) { return psi(2.0 * std::abs(a)); }

/// Equal to 1 on [lo, hi] and 0 outside [lo_out, hi_out].
inline double plateau(double x, double lo_out, double lo, double hi, double hi_out) {
  double up = lo > lo_out ? step((x - lo_out) / (lo - lo_out)) : (x >= lo ? 1.0 : 0.0);
  double dn = hi_out > hi ? step((hi_out - x) / (hi_out - hi)) : (x <= hi ? 1.0 : 0.0);
  return up * dn;
}

}  // namespace bump

inline bool is_dyadic(double v) {
  if (!(v > 0.0)) return false;
  double l = std::log2(v);
  return std::abs(l - std::round(l)) < 1e-12;
}

// ---- caps ----

struct Cap {
  Direction center;
  double alpha = 0.25;

  /// omega in factor * kappa
  bool contains(const RVec& w, double factor = 1.0) const { return angle(w, center.w) <= factor * alpha; }
  bool contains_strict(const RVec& w, double factor = 1.0) const { return angle(w, center.w) < factor * alpha; }
};

/// Finitely overlapping caps of radius alpha with a smooth partition of unity.
/// Each Phi_kappa is supported in the open cap kappa and equals its share where caps overlap.
struct CapCover {
  int n = 2;
  double alpha = 0.25;
  std::vector<Cap> caps;

  static double profile(double theta, double alpha) { return bump::psi(2.0 * theta / alpha); }

  double denominator(const RVec& w) const {
    double s = 0.0;
    for (const auto& c : caps) s += profile(angle(w, c.center.w), alpha);
    return s;
  }

  /// Phi_kappa(omega) for cap index j.
  double weight(std::size_t j, const RVec& w) const {
    if (n == 1) return rdot(w, caps[j].center.w) > 0.0 ? 1.0 : 0.0;
    double num = profile(angle(w, caps[j].center.w), alpha);
    if (num == 0.0) return 0.0;
    return num / denominator(w);
  }

  std::size_t overlap_at(const RVec& w) const {
    std::size_t c = 0;
    for (std::size_t j = 0; j < caps.size(); ++j)
      if (weight(j, w) > 0.0) ++c;
    return c;
  }
};

inline CapCover cap_cover(int n, double alpha, const Grid* grid = nullptr, double lambda = 0.0) {
  CapCover cv;
  cv.n = n;
  cv.alpha = alpha;
  if (n == 1) {
    cv.caps.push_back({Direction(1, {1.0, 0.0, 0.0}), alpha});
    cv.caps.push_back({Direction(1, {-1.0, 0.0, 0.0}), alpha});
    return cv;
  }
  if (alpha > 0.25) throw std::domain_error("cap_cover: alpha must be <= 1/4");
  if (grid && lambda > 0.0) {
    // angular resolution of the lattice at frequency lambda
    double res = grid->dk() / lambda;
    if (alpha < 2.0 * res) throw std::range_error("cap_cover: alpha below the lattice angular resolution");
  }
  if (n == 2) {
    int K = static_cast<int>(std::ceil(2.0 * std::numbers::pi / alpha));
    for (int j = 0; j < K; ++j) cv.caps.push_back({Direction::angle2(2.0 * std::numbers::pi * j / K), alpha});
    return cv;
  }
  // n = 3: Fibonacci sphere with covering radius below alpha / 2
  int M = static_cast<int>(std::ceil(std::pow(5.2 / alpha, 2)));
  double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int j = 0; j < M; ++j) {
    double z = 1.0 - 2.0 * (j + 0.5) / M;
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    double ph = golden * j;
    cv.caps.push_back({Direction::normalized(3, {r * std::cos(ph), r * std::sin(ph), z}), alpha});
  }
  return cv;
}

// ---- multipliers ----

enum class MultKind { LittlewoodPaley, Modulation, VectorModulation, Cap, SectorP, SectorPalpha, Natural, Projector, Composite };

inline std::string to_string(MultKind k) {
  switch (k) {
    case MultKind::LittlewoodPaley: return "P_lambda";
    case MultKind::Modulation: return "C_d";
    case MultKind::VectorModulation: return "frakC_d";
    case MultKind::Cap: return "R_kappa";
    case MultKind::SectorP: return "P_lambda_kappa";
    case MultKind::SectorPalpha: return "P_lambda_kappa_alpha";
    case MultKind::Natural: return "natural";
    case MultKind::Projector: return "Pi";
    case MultKind::Composite: return "composite";
  }
  return "?";
}

/// Diagonal symbol on (tau, xi); scalar symbols act as s * I.
struct FourierMultiplier {
  using ScalarFn = std::function<double(double tau, const RVec& xi, double absxi)>;
  using MatrixFn = std::function<Mat2(double tau, const RVec& xi, double absxi)>;

  MultKind kind = MultKind::Composite;
  bool spacetime = false;
  int n = 2;
  ScalarFn scalar;  // set for scalar symbols
  MatrixFn matrix;  // set for matrix symbols

  bool is_scalar() const { return static_cast<bool>(scalar); }

  Mat2 eval(double tau, const RVec& xi) const {
    double a = rnorm(xi);
    if (scalar) return Mat2::identity() * cplx(scalar(tau, xi, a));
    return matrix(tau, xi, a);
  }

  /// Apply to a field (spatial symbols only).
  void apply(Field& f) const {
    if (spacetime) throw std::logic_error("FourierMultiplier: space-time symbol applied to a field");
    bool was_physical = !f.is_fourier();
    f.to_fourier();
    const auto& lat = f.lattice();
    for (std::size_t p = 0; p < f.points(); ++p) apply_point(f, p, 0.0, lat.xi[p], lat.absxi[p]);
    if (was_physical) f.to_physical();
  }

  /// Apply to a space-time field (in tau representation).
  void apply(SpaceTime& s) const {
    bool was_time = !s.in_tau();
    s.to_tau();
    const auto& lat = s.lattice();
    std::size_t M = s.grid().size();
    for (std::size_t m = 0; m < s.steps(); ++m) {
      double tau = s.tau(m);
      for (std::size_t p = 0; p < M; ++p) {
        if (scalar) {
          double v = scalar(tau, lat.xi[p], lat.absxi[p]);
          for (int c = 0; c < s.ncomp(); ++c) s.at(m, c, p) *= v;
        } else {
          Mat2 A = matrix(tau, lat.xi[p], lat.absxi[p]);
          for (int c = 0; c + 1 < s.ncomp(); c += 2) {
            Spinor w = A * Spinor{s.at(m, c, p), s.at(m, c + 1, p)};
            s.at(m, c, p) = w[0];
            s.at(m, c + 1, p) = w[1];
          }
        }
      }
    }
    if (was_time) s.to_time();
  }

 private:
  void apply_point(Field& f, std::size_t p, double tau, const RVec& xi, double a) const {
    if (scalar) {
      double v = scalar(tau, xi, a);
      for (int c = 0; c < f.ncomp(); ++c) f.at(c, p) *= v;
    } else {
      Mat2 A = matrix(tau, xi, a);
      for (int c = 0; c + 1 < f.ncomp(); c += 2) {
        Spinor w = A * Spinor{f.at(c, p), f.at(c + 1, p)};
        f.at(c, p) = w[0];
        f.at(c + 1, p) = w[1];
      }
    }
  }
};

inline FourierMultiplier compose(const FourierMultiplier& a, const FourierMultiplier& b) {
  FourierMultiplier m;
  m.kind = MultKind::Composite;
  m.spacetime = a.spacetime || b.spacetime;
  m.n = a.n;
  if (a.is_scalar() && b.is_scalar()) {
    m.scalar = [a, b](double t, const RVec& x, double r) { return a.scalar(t, x, r) * b.scalar(t, x, r); };
  } else {
    m.matrix = [a, b](double t, const RVec& x, double r) {
      auto ea = a.scalar ? Mat2::identity() * cplx(a.scalar(t, x, r)) : a.matrix(t, x, r);
      auto eb = b.scalar ? Mat2::identity() * cplx(b.scalar(t, x, r)) : b.matrix(t, x, r);
      return ea * eb;
    };
  }
  return m;
}

/// P_lambda with symbol Phi(|xi| / lambda).
inline FourierMultiplier littlewood_paley(double lambda, const Grid& g, bool check_band = true) {
  if (!is_dyadic(lambda)) throw std::range_error("littlewood_paley: lambda must be a power of two");
  if (check_band && (lambda < 2.0 * g.dk() || lambda > g.nyquist() / 2.0))
    throw std::range_error("littlewood_paley: lambda outside the representable band");
  FourierMultiplier m;
  m.kind = MultKind::LittlewoodPaley;
  m.n = g.n;
  m.scalar = [lambda](double, const RVec&, double r) { return bump::Phi(r / lambda); };
  return m;
}

/// Dyadic levels covering the nonzero lattice up to Nyquist*sqrt(n).
inline std::vector<double> dyadic_levels(const Grid& g) {
  std::vector<double> out;
  double lo = std::exp2(std::floor(std::log2(g.dk() / 2.0)));
  double hi = g.nyquist() * std::sqrt(static_cast<double>(g.n)) * 4.0;
  for (double l = lo; l <= hi; l *= 2.0) out.push_back(l);
  return out;
}

/// Modulation symbol value. sign = +1: |tau + |xi||, -1: |tau - |xi||, 0: ||tau| - |xi||.
inline double modulation_distance(double tau, double r, int sign) {
  if (sign > 0) return std::abs(tau + r);
  if (sign < 0) return std::abs(tau - r);
  return std::abs(std::abs(tau) - r);
}

/// C_d^{+-} (or C_d for sign 0); smooth_below gives C_{<= d}. window_T enables the resolution check.
inline FourierMultiplier modulation_multiplier(double d, int sign, bool smooth_below, double window_T = 0.0) {
  if (!(d > 0.0)) throw std::range_error("modulation_multiplier: d must be positive");
  if (window_T > 0.0 && 2.0 * std::numbers::pi / window_T > d / 4.0) {
    double need = 8.0 * std::numbers::pi / d;
    throw std::range_error("modulation_multiplier: window too short, need T >= " + std::to_string(need));
  }
  FourierMultiplier m;
  m.kind = MultKind::Modulation;
  m.spacetime = true;
  m.scalar = [d, sign, smooth_below](double tau, const RVec&, double r) {
    double s = modulation_distance(tau, r, sign) / d;
    return smooth_below ? bump::Phi0(s) : bump::Phi(s);
  };
  return m;
}

/// frakC_d^{+-} = Pi_+ C_d^{+-} + Pi_- C_d^{-+}, with Pi_{+-} = Pi_{+-xi/|xi|}.
inline FourierMultiplier vector_modulation_multiplier(int n, double d, int sign, bool smooth_below) {
  FourierMultiplier m;
  m.kind = MultKind::VectorModulation;
  m.spacetime = true;
  m.n = n;
  m.matrix = [n, d, sign, smooth_below](double tau, const RVec& xi, double r) {
    auto f = [&](int sg) {
      double s = modulation_distance(tau, r, sg) / d;
      return smooth_below ? bump::Phi0(s) : bump::Phi(s);
    };
    if (r == 0.0) return Mat2::identity() * cplx(f(sign));
    Mat2 pp = projector_of(n, xi, +1), pm = projector_of(n, xi, -1);
    return pp * cplx(f(sign)) + pm * cplx(f(-sign));
  };
  return m;
}

/// Pi_{+-xi/|xi|} as a multiplier (zero mode mapped to 0).
inline FourierMultiplier half_wave_projector(int n, int sign) {
  FourierMultiplier m;
  m.kind = MultKind::Projector;
  m.n = n;
  m.matrix = [n, sign](double, const RVec& xi, double r) {
    if (r == 0.0) return Mat2::zero();
    return projector_of(n, xi, sign);
  };
  return m;
}

/// Constant projector Pi_omega.
inline FourierMultiplier constant_projector(const Direction& w) {
  FourierMultiplier m;
  m.kind = MultKind::Projector;
  m.n = w.n;
  Mat2 P = projector(w);
  m.matrix = [P](double, const RVec&, double) { return P; };
  return m;
}

enum class SectorVariant { R, P, Palpha, NaturalP, NaturalPalpha };

struct SectorParams {
  double lambda = 1.0;
  double alpha = 0.25;
  double c = 1.0 / 32.0;  // small constant in A^{+-}_{alpha,lambda}
};

inline constexpr double kNatural = 101.0 / 100.0;

/// Cutoffs of the sector table; sign selects -+ xi/|xi| in kappa.
inline FourierMultiplier sector_multiplier(const CapCover& cover, std::size_t j, int sign, SectorVariant v,
                                           const SectorParams& sp = {}) {
  FourierMultiplier m;
  m.n = cover.n;
  const double lam = sp.lambda, a = sp.alpha, c = sp.c;
  const Cap cap = cover.caps.at(j);
  auto dir = [sign](const RVec& xi, double r) { return rscale(-sign / r, xi); };
  switch (v) {
    case SectorVariant::R:
      m.kind = MultKind::Cap;
      m.scalar = [cover, j, dir](double, const RVec& xi, double r) {
        return r == 0.0 ? 0.0 : cover.weight(j, dir(xi, r));
      };
      break;
    case SectorVariant::P:
      m.kind = MultKind::SectorP;
      m.scalar = [cover, j, dir, lam](double, const RVec& xi, double r) {
        return r == 0.0 ? 0.0 : bump::Phi(r / lam) * cover.weight(j, dir(xi, r));
      };
      break;
    case SectorVariant::Palpha:
      m.kind = MultKind::SectorPalpha;
      m.spacetime = true;
      m.scalar = [cover, j, dir, lam, a, c, sign](double tau, const RVec& xi, double r) {
        if (r == 0.0) return 0.0;
        double mod = modulation_distance(tau, r, sign);
        return bump::Phi0(mod / (c * a * a * lam)) * bump::Phi(r / lam) * cover.weight(j, dir(xi, r));
      };
      break;
    case SectorVariant::NaturalP:
      m.kind = MultKind::Natural;
      m.scalar = [cap, dir, lam](double, const RVec& xi, double r) {
        if (r == 0.0) return 0.0;
        double rad = bump::plateau(r, lam / 2.0 / kNatural, lam / 2.0, 2.0 * lam, 2.0 * lam * kNatural);
        double th = angle(dir(xi, r), cap.center.w);
        double ang = bump::plateau(th, -1.0, 0.0, cap.alpha, cap.alpha * kNatural);
        return rad * ang;
      };
      break;
    case SectorVariant::NaturalPalpha:
      m.kind = MultKind::Natural;
      m.spacetime = true;
      m.scalar = [cap, dir, lam, a, c, sign](double tau, const RVec& xi, double r) {
        if (r == 0.0) return 0.0;
        double rad = bump::plateau(r, lam / 2.0 / kNatural, lam / 2.0, 2.0 * lam, 2.0 * lam * kNatural);
        double th = angle(dir(xi, r), cap.center.w);
        double ang = bump::plateau(th, -1.0, 0.0, cap.alpha, cap.alpha * kNatural);
        double b = c * a * a * lam;
        double mod = bump::plateau(modulation_distance(tau, r, sign), -1.0, 0.0, b, b * kNatural);
        return rad * ang * mod;
      };
      break;
  }
  return m;
}

// ---- set-membership predicates ----

struct SetTest {
  bool strict = false;     // open version of the set
  double enlarge = 1.0;    // 101/100 for the natural sets
};

inline bool le(double a, double b, bool strict) { return strict ? a < b : a <= b; }

/// A^{+-}_lambda(kappa) subset of R^n: lambda/2 <= |xi| <= 2 lambda, -+ xi/|xi| in kappa.
inline bool in_A_pm(const RVec& xi, int sign, double lambda, const Cap& cap, SetTest st = {}) {
  double r = rnorm(xi);
  if (r == 0.0) return false;
  double e = st.enlarge;
  if (!le(lambda / 2.0 / e, r, st.strict) || !le(r, 2.0 * lambda * e, st.strict)) return false;
  return le(angle(rscale(-sign / r, xi), cap.center.w), cap.alpha * e, st.strict);
}

/// A_lambda(kappa) subset of R^{1+n}: sgn(tau) xi/|xi| in kappa.
inline bool in_A(double tau, const RVec& xi, double lambda, const Cap& cap, SetTest st = {}) {
  double r = rnorm(xi);
  if (r == 0.0 || tau == 0.0) return false;
  double e = st.enlarge;
  if (!le(lambda / 2.0 / e, r, st.strict) || !le(r, 2.0 * lambda * e, st.strict)) return false;
  double s = tau > 0.0 ? 1.0 : -1.0;
  return le(angle(rscale(s / r, xi), cap.center.w), cap.alpha * e, st.strict);
}

inline bool in_A_alpha(double tau, const RVec& xi, double alpha, double lambda, const Cap& cap, double c,
                       SetTest st = {}) {
  if (!in_A(tau, xi, lambda, cap, st)) return false;
  return le(std::abs(std::abs(tau) - rnorm(xi)), c * alpha * alpha * lambda * st.enlarge, st.strict);
}

inline bool in_A_pm_alpha(double tau, const RVec& xi, int sign, double alpha, double lambda, const Cap& cap,
                          double c, SetTest st = {}) {
  if (!in_A_pm(xi, sign, lambda, cap, st)) return false;
  return le(modulation_distance(tau, rnorm(xi), sign), c * alpha * alpha * lambda * st.enlarge, st.strict);
}

// ---- Bernstein ----

/// L^p norm of the pointwise spinor modulus on the grid (p = inf allowed).
inline double lp_norm(const Field& f, double p) {
  Field h = f.is_fourier() ? f.physical() : f;
  double acc = 0.0;
  for (std::size_t i = 0; i < h.points(); ++i) {
    double m2 = 0.0;
    for (int c = 0; c < h.ncomp(); ++c) m2 += std::norm(h.at(c, i));
    double m = std::sqrt(m2);
    if (std::isinf(p))
      acc = std::max(acc, m);
    else
      acc += std::pow(m, p);
  }
  if (std::isinf(p)) return acc;
  return std::pow(acc * h.grid().cell_volume(), 1.0 / p);
}

/// ||f||_p / (|Omega|^{1/q - 1/p} ||f||_q); Omega given as a lattice predicate.
inline double bernstein_check(const Field& f, const std::function<bool(const RVec&)>& Omega, double p, double q) {
  if (!(q >= 2.0 && p >= q)) throw std::domain_error("bernstein_check: need 2 <= q <= p");
  Field h = f.is_fourier() ? f : f.fourier();
  const auto& lat = h.lattice();
  std::size_t count = 0;
  double tol = 1e-12 * (1.0 + h.l2());
  for (std::size_t i = 0; i < h.points(); ++i) {
    bool inside = Omega(lat.xi[i]);
    if (inside) ++count;
    if (!inside)
      for (int c = 0; c < h.ncomp(); ++c)
        if (std::abs(h.at(c, i)) > tol) throw std::domain_error("bernstein_check: support violation");
  }
  double measure = static_cast<double>(count) * std::pow(h.grid().dk(), h.grid().n);
  double ip = std::isinf(p) ? 0.0 : 1.0 / p;
  return lp_norm(h, p) / (std::pow(measure, 1.0 / q - ip) * lp_norm(h, q));
}

}  // namespace diraclab

#endif  // DIRACLAB_MULTIPLIERS_HPP
