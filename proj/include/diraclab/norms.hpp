#ifndef DIRACLAB_NORMS_HPP
#define DIRACLAB_NORMS_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"
#include "multipliers.hpp"
#include "null_frames.hpp"
#include "trajectory.hpp"

namespace diraclab {

struct NormValue {
  double value = 0.0;
  double error = 0.0;  // resolution-halving estimate
};

// ---- fixed-time norms ----

inline double sobolev(const Field& f, double s) {
  if (!(s > -0.5 * f.grid().n)) throw std::domain_error("sobolev: need s > -n/2");
  return f.hdot(s);
}

/// Homogeneous B^s_{2,1}: sum over dyadic lambda of lambda^s ||P_lambda f||.
inline double besov(const Field& f, double s) {
  Field h = f.is_fourier() ? f : f.fourier();
  const auto& lat = h.lattice();
  double total = 0.0;
  for (double lam : dyadic_levels(h.grid())) {
    double acc = 0.0;
    for (std::size_t p = 0; p < h.points(); ++p) {
      if (lat.absxi[p] == 0.0) continue;
      double w = bump::Phi(lat.absxi[p] / lam);
      if (w == 0.0) continue;
      for (int c = 0; c < h.ncomp(); ++c) acc += w * w * std::norm(h.at(c, p));
    }
    total += std::pow(lam, s) * std::sqrt(acc * h.grid().volume());
  }
  return total;
}

// ---- space-time Lebesgue ----

inline double lq_of(const std::vector<double>& v, double dt, double q) {
  double acc = 0.0;
  for (double x : v) acc = std::isinf(q) ? std::max(acc, x) : acc + std::pow(x, q) * dt;
  return std::isinf(q) ? acc : std::pow(acc, 1.0 / q);
}

/// L^q_t L^r_x over the sampled window (rectangle rule); error bar from every-other-frame resampling.
inline NormValue lq_lr(const Trajectory& tr, double q, double r) {
  tr.validate();
  if (!(q >= 1.0) || !(r >= 1.0)) throw std::domain_error("lq_lr: exponents must lie in [1, inf]");
  std::vector<double> inner, half;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    double v = r == 2.0 ? tr.frames[k].l2() : lp_norm(tr.frames[k], r);
    inner.push_back(v);
    if (k % 2 == 0) half.push_back(v);
  }
  double a = lq_of(inner, tr.dt, q);
  double b = lq_of(half, 2.0 * tr.dt, q);
  return {a, std::abs(a - b)};
}

// ---- X^{b,q} ----

/// Dyadic modulation levels resolvable on the window: [bottom, top].
struct ModulationLevels {
  double bottom = 1.0;  // C_{<= bottom} collects everything below
  std::vector<double> d;
};

inline ModulationLevels modulation_levels(const SpaceTime& st) {
  ModulationLevels ml;
  double lo = std::exp2(std::ceil(std::log2(st.dtau())));
  double tau_max = std::numbers::pi / st.dt();
  double xi_max = st.grid().nyquist() * std::sqrt(static_cast<double>(st.grid().n));
  double hi = std::exp2(std::ceil(std::log2(2.0 * (tau_max + xi_max))));
  ml.bottom = lo / 2.0;
  for (double d = lo; d <= hi; d *= 2.0) ml.d.push_back(d);
  return ml;
}

enum class XbqForm { Vector, Split };

/// Per-level norms ||frakC_d^{sign} u||_{L2} (Vector) or sqrt(||C_d^{sign} Pi_+ u||^2 + ||C_d^{-sign} Pi_- u||^2)
/// (Split). Entry 0 is the bottom block.
inline std::vector<double> modulation_profile(const SpaceTime& u, int sign, XbqForm form) {
  SpaceTime base = u;
  base.to_tau();
  ModulationLevels ml = modulation_levels(base);
  int n = base.grid().n;
  std::vector<double> out;
  auto level = [&](double d, bool below) {
    if (form == XbqForm::Vector) {
      SpaceTime w = base;
      vector_modulation_multiplier(n, d, sign, below).apply(w);
      return w.l2();
    }
    double acc = 0.0;
    for (int s : {+1, -1}) {
      SpaceTime w = base;
      half_wave_projector(n, s).apply(w);
      modulation_multiplier(d, s * sign, below).apply(w);
      acc += std::pow(w.l2(), 2);
    }
    return std::sqrt(acc);
  };
  out.push_back(level(ml.bottom, true));
  for (double d : ml.d) out.push_back(level(d, false));
  return out;
}

/// (sum_d d^{qb} ||frakC_d^{sign} u||^q)^{1/q}; the bottom block is weighted at its nominal level.
inline double xbq_norm(const SpaceTime& u, int sign, double b, double q, XbqForm form = XbqForm::Vector) {
  if (!(q >= 1.0)) throw std::domain_error("xbq_norm: q must be >= 1");
  SpaceTime t = u;
  t.to_tau();
  ModulationLevels ml = modulation_levels(t);
  std::vector<double> prof = modulation_profile(t, sign, form);
  std::vector<double> w{ml.bottom};
  w.insert(w.end(), ml.d.begin(), ml.d.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < prof.size(); ++i) {
    double v = std::pow(w[i], b) * prof[i];
    acc = std::isinf(q) ? std::max(acc, v) : acc + std::pow(v, q);
  }
  return std::isinf(q) ? acc : std::pow(acc, 1.0 / q);
}

/// ||Pi_+ u||_{X^{b,q}_{sign}} + ||Pi_- u||_{X^{b,q}_{-sign}}; between the vector form and sqrt(2) times it.
inline double xbq_split_sum(const SpaceTime& u, int sign, double b, double q) {
  double total = 0.0;
  for (int s : {+1, -1}) {
    SpaceTime w = u;
    half_wave_projector(u.grid().n, s).apply(w);
    total += xbq_norm(w, sign, b, q);  // frakC^{sign} already acts as C^{-sign} on Pi_-
  }
  return total;
}

/// Y^{sign}: sup_d d ||frakC_d u||_{L^p_t L^2_x}, p = 4n/(3n-1).
inline double ynorm(const SpaceTime& u, int sign) {
  SpaceTime base = u;
  base.to_tau();
  int n = base.grid().n;
  double p = 4.0 * n / (3.0 * n - 1.0);
  ModulationLevels ml = modulation_levels(base);
  double best = 0.0;
  for (double d : ml.d) {
    SpaceTime w = base;
    vector_modulation_multiplier(n, d, sign, false).apply(w);
    w.to_time();
    std::vector<double> frame(w.steps(), 0.0);
    for (std::size_t k = 0; k < w.steps(); ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < w.block(); ++i) s += std::norm(w.raw()[k * w.block() + i]);
      frame[k] = std::sqrt(s * w.grid().volume());
    }
    best = std::max(best, d * lq_of(frame, w.dt(), p));
  }
  return best;
}

// ---- null-frame functionals ----

/// theta(omega, kappa): angle from omega to the nearest point of the cap.
inline double theta_to_cap(const RVec& w, const Cap& cap) { return std::max(0.0, angle(w, cap.center.w) - cap.alpha); }

inline PlaneChannel same_channel(int sign) { return sign > 0 ? PlaneChannel::Plus : PlaneChannel::Minus; }
inline PlaneChannel other_channel(int sign) { return sign > 0 ? PlaneChannel::Minus : PlaneChannel::Plus; }

/// NF^{sign}(kappa) single-frame functional of direction d; upper bound for the atomic norm.
inline double nf_functional(const NullPlaneSampler& s, std::size_t d, const Cap& cap, int sign) {
  const RVec& w = s.directions()[d].w;
  if (cap.contains(w, 2.0)) throw std::domain_error("nf_functional: omega lies in 2 kappa");
  double th = theta_to_cap(w, cap);
  return s.norm(d, same_channel(sign), 1, 2) + s.norm(d, other_channel(sign), 1, 2) / th;
}

/// PW^{sign}(kappa) single-frame functional; requires omega in 2 kappa.
inline double pw_functional(const NullPlaneSampler& s, std::size_t d, const Cap& cap, int sign) {
  const RVec& w = s.directions()[d].w;
  if (!cap.contains(w, 2.0)) throw std::domain_error("pw_functional: omega outside 2 kappa");
  double inf = std::numeric_limits<double>::infinity();
  return s.norm(d, same_channel(sign), 2, inf) + s.norm(d, other_channel(sign), 2, inf) / cap.alpha;
}

struct SampledSup {
  double value = 0.0;
  std::size_t argmax = 0;
  std::size_t sampled = 0;
};

/// [NF^{sign}]*(kappa): sup over the sampled directions outside 2 kappa.
inline SampledSup nf_star_functional(const NullPlaneSampler& s, const Cap& cap, int sign) {
  SampledSup out;
  double inf = std::numeric_limits<double>::infinity();
  for (std::size_t d = 0; d < s.directions().size(); ++d) {
    const RVec& w = s.directions()[d].w;
    if (cap.contains(w, 2.0)) continue;
    double v = s.norm(d, same_channel(sign), inf, 2) + theta_to_cap(w, cap) * s.norm(d, other_channel(sign), inf, 2);
    ++out.sampled;
    if (v > out.value) out.value = v, out.argmax = d;
  }
  if (out.sampled == 0) throw std::domain_error("nf_star_functional: no sampled direction outside 2 kappa");
  return out;
}

/// Stream a trajectory into a full/half-rate sampler pair.
inline NullPlanePair sample_null_planes(const Trajectory& tr, const std::vector<Direction>& dirs) {
  tr.validate();
  NullPlanePair pair(tr.grid, tr.t0, tr.dt, tr.size(), dirs);
  for (const auto& f : tr.frames) pair.feed(f);
  return pair;
}

// ---- p-variation ----

/// sup over increasing index chains of sum dist(i_k, i_{k+1})^p, by DP over pairwise increments.
inline double vp_variation(std::size_t K, const std::function<double(std::size_t, std::size_t)>& dist, double p) {
  if (K < 2) throw std::domain_error("vp_variation: need at least two samples");
  if (!(p >= 1.0)) throw std::domain_error("vp_variation: need p >= 1");
  std::vector<double> best(K, 0.0);
  double out = 0.0;
  for (std::size_t j = 1; j < K; ++j) {
    for (std::size_t i = 0; i < j; ++i) best[j] = std::max(best[j], best[i] + std::pow(dist(i, j), p));
    out = std::max(out, best[j]);
  }
  return out;
}

inline double vp_variation(const std::vector<double>& x, double p) {
  return vp_variation(x.size(), [&](std::size_t i, std::size_t j) { return std::abs(x[j] - x[i]); }, p);
}

inline double vp_variation(const std::vector<Field>& u, double p) {
  return vp_variation(u.size(), [&](std::size_t i, std::size_t j) { return (u[j] - u[i]).l2(); }, p);
}

/// Brute force over all 2^K subsets; reference for small K.
inline double vp_variation_exhaustive(const std::vector<double>& x, double p) {
  std::size_t K = x.size();
  if (K < 2 || K > 24) throw std::domain_error("vp_variation_exhaustive: need 2 <= K <= 24");
  double best = 0.0;
  for (unsigned long mask = 0; mask < (1UL << K); ++mask) {
    double s = 0.0;
    long prev = -1;
    for (std::size_t i = 0; i < K; ++i) {
      if (!(mask >> i & 1UL)) continue;
      if (prev >= 0) s += std::pow(std::abs(x[i] - x[static_cast<std::size_t>(prev)]), p);
      prev = static_cast<long>(i);
    }
    best = std::max(best, s);
  }
  return best;
}

/// V^p norm: sup_k ||u_k|| + variation^{1/p}.
inline double vp_norm(const std::vector<Field>& u, double p) {
  double sup = 0.0;
  for (const auto& f : u) sup = std::max(sup, f.l2());
  return sup + std::pow(vp_variation(u, p), 1.0 / p);
}

// ---- dispatcher ----

enum class NormKind { LqLr, SobolevHs, BesovB, Xbq, NullL1L2, NullL2Linf, NullLinfL2, Vp, Ynorm };

struct NormSpec {
  NormKind kind = NormKind::LqLr;
  double q = 2.0, r = 2.0, s = 0.0, b = 0.5, p = 2.0;
  int sign = +1;
  Direction omega;
  PlaneChannel channel = PlaneChannel::Full;
  double taper = 0.0;  // space-time kinds

  void validate(int n) const {
    for (double e : {q, r, p})
      if (!(e >= 1.0)) throw std::domain_error("NormSpec: exponents must lie in [1, inf]");
    if (kind == NormKind::SobolevHs && !(s > -0.5 * n)) throw std::domain_error("NormSpec: need s > -n/2");
    if (sign != 1 && sign != -1) throw std::domain_error("NormSpec: sign must be +-1");
  }
};

/// Field kinds on a trajectory are taken as L^inf in time.
inline NormValue norm(const Trajectory& tr, const NormSpec& spec) {
  tr.validate();
  spec.validate(tr.grid.n);
  auto sup_over = [&](auto fn) {
    NormValue v;
    double half = 0.0;
    for (std::size_t k = 0; k < tr.size(); ++k) {
      double x = fn(tr.frames[k]);
      v.value = std::max(v.value, x);
      if (k % 2 == 0) half = std::max(half, x);
    }
    v.error = v.value - half;
    return v;
  };
  switch (spec.kind) {
    case NormKind::LqLr: return lq_lr(tr, spec.q, spec.r);
    case NormKind::SobolevHs: return sup_over([&](const Field& f) { return sobolev(f, spec.s); });
    case NormKind::BesovB: return sup_over([&](const Field& f) { return besov(f, spec.s); });
    case NormKind::Xbq:
    case NormKind::Ynorm: {
      SpaceTime st = SpaceTime::from_trajectory(tr, spec.taper);
      double a = spec.kind == NormKind::Xbq ? xbq_norm(st, spec.sign, spec.b, spec.q) : ynorm(st, spec.sign);
      Trajectory h{tr.grid, tr.t0, 2.0 * tr.dt, {}};
      for (std::size_t k = 0; k < tr.size(); k += 2) h.frames.push_back(tr.frames[k]);
      if (h.size() < 2) return {a, 0.0};
      SpaceTime sh = SpaceTime::from_trajectory(h, spec.taper);
      double c = spec.kind == NormKind::Xbq ? xbq_norm(sh, spec.sign, spec.b, spec.q) : ynorm(sh, spec.sign);
      return {a, std::abs(a - c)};
    }
    case NormKind::NullL1L2:
    case NormKind::NullL2Linf:
    case NormKind::NullLinfL2: {
      double inf = std::numeric_limits<double>::infinity();
      double q = spec.kind == NormKind::NullL1L2 ? 1.0 : spec.kind == NormKind::NullL2Linf ? 2.0 : inf;
      double r = spec.kind == NormKind::NullL2Linf ? inf : 2.0;
      auto pair = sample_null_planes(tr, {spec.omega});
      auto [v, e] = pair.norm(0, spec.channel, q, r);
      return {v, e};
    }
    case NormKind::Vp: {
      double a = vp_variation(tr.frames, spec.p);
      std::vector<Field> h;
      for (std::size_t k = 0; k < tr.size(); k += 2) h.push_back(tr.frames[k]);
      double c = h.size() >= 2 ? vp_variation(h, spec.p) : 0.0;
      return {a, a - c};
    }
  }
  throw std::logic_error("norm: unknown kind");
}

// ---- fits and reports ----

struct LineFit {
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
  double slope_se = std::numeric_limits<double>::quiet_NaN();  // needs three or more points
  std::size_t points = 0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::domain_error("fit_line: need two or more points");
  double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n, my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  f.points = x.size();
  if (x.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double r = y[i] - f.intercept - f.slope * x[i];
      rss += r * r;
    }
    f.slope_se = std::sqrt(rss / (n - 2.0) / sxx);
  }
  return f;
}

/// Slope of log2 y against log2 x.
inline LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (double v : x) lx.push_back(std::log2(v));
  for (double v : y) ly.push_back(std::log2(v));
  return fit_line(lx, ly);
}

struct Trial {
  double lhs = 0.0, rhs = 0.0;
  double ratio() const { return lhs / rhs; }
};

struct RefinementPoint {
  std::string parameter;  // "N", "T", "n_dirs", "lambda", ...
  double value = 0.0;
  double constant = 0.0;
};

struct EstimateReport {
  std::string id;
  std::string bound_side = "upper";  // which side of the norm a functional bounds
  std::vector<Trial> trials;
  std::vector<RefinementPoint> refinement;
  double constant = 0.0;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double r2 = std::numeric_limits<double>::quiet_NaN();
  double slope_se = std::numeric_limits<double>::quiet_NaN();
  std::size_t fit_points = 0;
  std::string note;

  void set_fit(const LineFit& f) {
    slope = f.slope;
    r2 = f.r2;
    slope_se = f.slope_se;
    fit_points = f.points;
  }

  std::size_t ensemble() const { return trials.size(); }

  void add(double lhs, double rhs) { trials.push_back({lhs, rhs}); }

  /// Recomputes the empirical constant; throws on non-finite entries.
  void finalize() {
    constant = 0.0;
    for (const auto& t : trials) {
      if (!std::isfinite(t.lhs) || !std::isfinite(t.rhs) || !(t.rhs > 0.0))
        throw std::runtime_error("EstimateReport " + id + ": non-finite or degenerate trial");
      constant = std::max(constant, t.ratio());
    }
    for (const auto& r : refinement)
      if (!std::isfinite(r.constant)) throw std::runtime_error("EstimateReport " + id + ": non-finite refinement entry");
  }
};

}  // namespace diraclab

#endif  // DIRACLAB_NORMS_HPP
