#ifndef DIRACLAB_ESTIMATES_HPP
#define DIRACLAB_ESTIMATES_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "evolution.hpp"
#include "norms.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace diraclab {

/// Calls fn(k, t_k, frame) with the physical frame U_sign(t_k) f, t_k = t0 + k dt; one table, no storage.
inline void for_each_free_frame(const Field& f, int sign, double t0, double dt, std::size_t K,
                                const std::function<void(std::size_t, double, const Field&)>& fn) {
  Propagator P = Propagator::half_wave(f.grid(), sign, f.ncomp());
  Field a = f.fourier();
  P.apply(a, t0);
  auto step = P.table(dt);
  for (std::size_t k = 0; k < K; ++k) {
    fn(k, t0 + dt * static_cast<double>(k), a.physical());
    P.apply(a, step);
  }
}

/// sum_x |a^dagger b|^2 dx^n for two physical frames.
inline double pair_density_l2sq(const Field& a, const Field& b) {
  double s = 0.0;
  for (std::size_t p = 0; p < a.points(); ++p) {
    cplx z = 0.0;
    for (int c = 0; c < a.ncomp(); ++c) z += std::conj(a.at(c, p)) * b.at(c, p);
    s += std::norm(z);
  }
  return s * a.grid().cell_volume();
}

/// ||u^dagger v||_{L^2([0,T] x box)} for u = U_{su} f, v = U_{sv} g, rectangle rule in t.
/// ||(U_su f)^dagger (U_sv g)||_{L^2([0,T_j] x box)} for an increasing ladder of horizons, one pass.
inline std::vector<double> bilinear_lhs_ladder(const Field& f, const Field& g, int su, int sv,
                                               const std::vector<double>& Ts, double dt) {
  if (Ts.empty()) return {};
  for (std::size_t j = 1; j < Ts.size(); ++j)
    if (!(Ts[j] > Ts[j - 1])) throw std::domain_error("bilinear_lhs_ladder: horizons must increase");
  Propagator Pu = Propagator::half_wave(f.grid(), su, f.ncomp()), Pv = Propagator::half_wave(g.grid(), sv, g.ncomp());
  Field a = f.fourier(), b = g.fourier();
  auto tu = Pu.table(dt), tv = Pv.table(dt);
  std::vector<double> out;
  double acc = 0.0;
  std::size_t k = 0;
  for (double T : Ts) {
    auto K = static_cast<std::size_t>(std::lround(T / dt));
    for (; k < K; ++k) {
      acc += pair_density_l2sq(a.physical(), b.physical()) * dt;
      Pu.apply(a, tu);
      Pv.apply(b, tv);
    }
    out.push_back(std::sqrt(acc));
  }
  return out;
}

inline double bilinear_lhs(const Field& f, const Field& g, int su, int sv, double T, double dt) {
  return bilinear_lhs_ladder(f, g, su, sv, {T}, dt).front();
}

struct BilinearParams {
  int n = 2;
  double T = 16.0;
  double dt = 0.25;
  bool co_propagating = false;  // control: same sign for both waves
  unsigned jobs = 0;
};

/// Empirical constant of ||u^dagger v||_{L^2_{t,x}} <= C ||f||_{L^2} ||g||_{H^{(n-1)/2}}.
inline EstimateReport verify_bilinear_L2(const std::vector<std::pair<Field, Field>>& ensemble, const BilinearParams& bp) {
  EstimateReport rep;
  rep.id = bp.co_propagating ? "bilinear-l2-control" : "bilinear-l2";
  std::vector<Trial> trials(ensemble.size());
  double s_g = 0.5 * (bp.n - 1);
  parallel_for(ensemble.size(), [&](std::size_t i) {
    const auto& [f, g] = ensemble[i];
    trials[i].lhs = bilinear_lhs(f, g, +1, bp.co_propagating ? +1 : -1, bp.T, bp.dt);
    trials[i].rhs = f.l2() * (bp.n == 1 ? g.l2() : g.hdot(s_g));
  }, bp.jobs);
  rep.trials = std::move(trials);
  rep.finalize();
  if (!ensemble.empty()) {
    const Grid& g = ensemble.front().first.grid();
    rep.refinement.push_back({"N", static_cast<double>(g.N), rep.constant});
    rep.refinement.push_back({"T", bp.T, rep.constant});
  }
  return rep;
}

// ---- null-plane trace ----

struct NullTrace {
  double lhs = 0.0;         // ||e^{-+i(t - x.omega)|D|} Pi_omega Pi_+- f||_{L^2_x} over the box
  double rhs = 0.0;         // ||f||_{L^2}
  double plancherel = 0.0;  // ||J^{-1/2} Pi_omega Pi_+- fhat||, the continuum value
  double min_J = 0.0;
  double ratio() const { return lhs / rhs; }
};

/// Direct restriction to the null plane: each mode xi lands at the non-lattice frequency xi + sign |xi| omega,
/// so the sum is evaluated point by point. J(xi) = 1 + sign xi.omega/|xi|.
inline NullTrace verify_nullplane_trace(const Field& f, const Direction& omega, int sign, double t = 0.0,
                                        double j_threshold = 1e-3) {
  Field h = f.is_fourier() ? f : f.fourier();
  const auto& lat = h.lattice();
  const Grid& g = h.grid();
  double peak = 0.0;
  for (std::size_t p = 0; p < h.points(); ++p) peak = std::max(peak, std::abs(h.at(0, p)) + std::abs(h.at(1, p)));
  Mat2 Pw = projector(omega);
  struct Mode {
    RVec y;
    double phase;
    Spinor c;
  };
  std::vector<Mode> modes;
  NullTrace out;
  out.min_J = std::numeric_limits<double>::infinity();
  double pl = 0.0;
  for (std::size_t p = 0; p < h.points(); ++p) {
    double r = lat.absxi[p];
    if (r == 0.0 || std::abs(h.at(0, p)) + std::abs(h.at(1, p)) <= 1e-14 * peak) continue;
    Spinor c = Pw * (projector_of(g.n, lat.xi[p], sign) * h.spinor(p));
    double J = 1.0 + sign * rdot(lat.xi[p], omega.w) / r;
    out.min_J = std::min(out.min_J, J);
    if (J < j_threshold)
      throw std::domain_error("verify_nullplane_trace: support touches the degenerate ray, min J = " + std::to_string(J));
    pl += (std::norm(c[0]) + std::norm(c[1])) / J;
    modes.push_back({radd(lat.xi[p], rscale(sign * r, omega.w)), -sign * r * t, c});
  }
  out.plancherel = std::sqrt(pl * g.volume());
  out.rhs = h.l2();
  double acc = 0.0;
  for (std::size_t p = 0; p < h.points(); ++p) {
    Spinor s{};
    for (const auto& m : modes) s = s + std::polar(1.0, rdot(m.y, lat.x[p]) + m.phase) * m.c;
    acc += std::norm(s[0]) + std::norm(s[1]);
  }
  out.lhs = std::sqrt(acc * g.cell_volume());
  return out;
}

// ---- X^{s,b} counterexample (n = 1, transform side) ----

namespace xsb_detail {

inline double overlap(double a1, double b1, double a2, double b2) { return std::max(0.0, std::min(b1, b2) - std::max(a1, a2)); }

/// Composite Simpson on [a, b] with m (even) panels.
inline double simpson(const std::function<double(double)>& fn, double a, double b, int m) {
  double h = (b - a) / m, s = fn(a) + fn(b);
  for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * fn(a + h * i);
  return s * h / 3.0;
}

}  // namespace xsb_detail

struct XsbTrace {
  double lambda = 8.0;
  bool control = false;
  std::vector<double> levels;    // dyadic d, descending
  std::vector<double> terms;     // d^{-1/2} ||C_d (F v)||
  std::vector<double> d_min;     // 2^{-1}, 2^{-2}, ...
  std::vector<double> partial;   // sum over d >= d_min
  std::vector<double> rhs;       // mu ||F||_{L2} ||v||_{X^{1/2,1}_-} at each d_min
  LineFit fit;                   // partial against log2(1/d_min)
  double rhs_spread = 0.0;       // max relative deviation of rhs from its mean
};

/// Ftilde = indicator of {lambda-4 <= |tau|, |xi| <= lambda+4}, vtilde = indicator of {|tau| <= 1, 2 <= |xi| <= 3};
/// (Fv)~ is their convolution and ||C_d(Fv)||^2 = int Phi(|tau + |xi|| / d)^2 |(Fv)~|^2, all on the transform side.
/// The control replaces Ftilde by the cone-adapted set ||tau| - |xi|| <= 1 with the same |xi| band.
inline XsbTrace xsb_counterexample(double lambda, int levels_below = 8, bool control = false) {
  using namespace xsb_detail;
  if (!is_dyadic(lambda) || lambda < 8.0) throw std::range_error("xsb_counterexample: lambda must be dyadic and >= 8");
  if (levels_below < 5) throw std::range_error("xsb_counterexample: need at least five dyadic levels below 1");
  const double lo = lambda - 4.0, hi = lambda + 4.0;
  auto band = [&](double x) { return std::abs(x) >= lo && std::abs(x) <= hi; };
  // separable main case
  auto A = [&](double tau) { return overlap(lo, hi, tau - 1, tau + 1) + overlap(-hi, -lo, tau - 1, tau + 1); };
  auto B = [&](double xi) {
    double s = 0.0;
    for (double c : {-1.0, 1.0})
      for (auto [a, b] : {std::pair{xi - 3, xi - 2}, std::pair{xi + 2, xi + 3}}) {
        double p = c > 0 ? lo : -hi, q = c > 0 ? hi : -lo;
        s += overlap(p, q, a, b);
      }
    return s;
  };
  // cone-adapted control: integrate over the v-support in xi', exact in tau'
  auto Gc = [&](double tau, double xi) {
    auto inner = [&](double xp) {
      double eta = xi - xp;
      if (!band(eta)) return 0.0;
      double r = std::abs(eta);
      return overlap(r - 1, r + 1, tau - 1, tau + 1) + overlap(-r - 1, -r + 1, tau - 1, tau + 1);
    };
    return simpson(inner, 2.0, 3.0, 64) + simpson(inner, -3.0, -2.0, 64);
  };
  auto G = [&](double tau, double xi) { return control ? Gc(tau, xi) : A(tau) * B(xi); };

  const double xi_lo = lo - 3.0, xi_hi = hi + 3.0;  // |xi| support of (Fv)~
  const int mxi = control ? 1400 : 5600, ms = control ? 64 : 256;
  auto level_energy = [&](double d) {
    auto over_xi = [&](double xi) {
      double r = std::abs(xi);
      auto f = [&](double s) {
        double w = bump::Phi(std::abs(s) / d);
        double v = G(s - r, xi);
        return w * w * v * v;
      };
      return simpson(f, 0.5 * d, 2.0 * d, ms) + simpson(f, -2.0 * d, -0.5 * d, ms);
    };
    return simpson(over_xi, xi_lo, xi_hi, mxi) + simpson(over_xi, -xi_hi, -xi_lo, mxi);
  };

  // rhs: mu ||F|| ||v||_{X^{1/2,1}_-}, v-levels below d_min contribute exactly zero (modulation of v >= 1)
  const double mu = 2.0;
  double F_l2 = control ? std::sqrt(2.0 * 2.0 * (hi - lo) * 2.0) : std::sqrt(4.0 * (hi - lo) * (hi - lo));
  auto v_level = [&](double d) {
    auto over_xi = [&](double xi) {
      auto f = [&](double tau) {
        double w = bump::Phi(std::abs(tau - std::abs(xi)) / d);
        return w * w;
      };
      return simpson(f, -1.0, 1.0, 512);
    };
    return std::sqrt(simpson(over_xi, 2.0, 3.0, 256) + simpson(over_xi, -3.0, -2.0, 256));
  };

  XsbTrace tr;
  tr.lambda = lambda;
  tr.control = control;
  double top = std::exp2(std::ceil(std::log2(4.0 * lambda + 32.0)));
  for (double d = top; d >= std::exp2(-levels_below) * (1 - 1e-12); d /= 2.0) tr.levels.push_back(d);
  std::vector<double> vterm;
  for (double d : tr.levels) {
    tr.terms.push_back(std::sqrt(level_energy(d)) / std::sqrt(d));
    vterm.push_back(std::sqrt(d) * v_level(d));
  }
  double S = 0.0, V = 0.0;
  std::vector<double> x;
  for (std::size_t i = 0; i < tr.levels.size(); ++i) {
    S += tr.terms[i];
    V += vterm[i];
    if (tr.levels[i] <= 0.5) {
      tr.d_min.push_back(tr.levels[i]);
      tr.partial.push_back(S);
      tr.rhs.push_back(mu * F_l2 * V);
      x.push_back(-std::log2(tr.levels[i]));
    }
  }
  tr.fit = fit_line(x, tr.partial);
  double mean = 0.0;
  for (double r : tr.rhs) mean += r / static_cast<double>(tr.rhs.size());
  for (double r : tr.rhs) tr.rhs_spread = std::max(tr.rhs_spread, std::abs(r / mean - 1.0));
  return tr;
}

// ---- Strichartz ----

inline double strichartz_exponent(int n, double q, double r) {
  double iq = std::isinf(q) ? 0.0 : 1.0 / q, ir = std::isinf(r) ? 0.0 : 1.0 / r;
  return n * (0.5 - ir) - iq;
}

inline void check_strichartz_pair(int n, double q, double r) {
  double iq = std::isinf(q) ? 0.0 : 1.0 / q, ir = std::isinf(r) ? 0.0 : 1.0 / r;
  if (!(q > 2.0) || r < 2.0 || iq + 0.5 * (n - 1) * ir > 0.25 * (n - 1) + 1e-12)
    throw std::domain_error("verify_strichartz: (q, r) not admissible");
}

struct StrichartzParams {
  int n = 2;
  double q = 4.0, r = std::numeric_limits<double>::infinity();
  std::vector<double> lambdas{1.0, 2.0, 4.0};
  int trials = 100;
  double L = 48.0;
  int N = 256;
  double T = 20.0;
  double dt_lambda = 0.2;  // dt = dt_lambda / lambda
  int sign = +1;
  std::uint64_t seed = 1;
  unsigned jobs = 0;
};

/// Packet family drawn once per trial index and rescaled with lambda: centre and width scale by 1/lambda.
inline Field strichartz_packet(const Grid& g, int trial, double lambda, std::uint64_t seed) {
  Rng rng = make_rng(seed, static_cast<std::uint64_t>(trial));
  std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi), wid(2.0, 3.0), cen(-4.0, 4.0);
  int n = g.n;
  RVec dir{}, x0{};
  if (n == 1) dir = {ang(rng) < std::numbers::pi ? 1.0 : -1.0, 0.0, 0.0};
  else if (n == 2) {
    double a = ang(rng);
    dir = {std::cos(a), std::sin(a), 0.0};
  } else {
    double z = std::uniform_real_distribution<double>(-1.0, 1.0)(rng), a = ang(rng), s = std::sqrt(1 - z * z);
    dir = {s * std::cos(a), s * std::sin(a), z};
  }
  double w = wid(rng);
  for (int i = 0; i < n; ++i) x0[i] = cen(rng) / lambda;
  Spinor e = random_vec<2>(rng);
  Field f = gaussian_packet(g, x0, rscale(lambda, dir), w / lambda, e);
  littlewood_paley(lambda, g).apply(f);
  f *= cplx(1.0 / f.l2());
  return f;
}

struct StrichartzResult {
  EstimateReport report;  // trials at the largest lambda; refinement holds C(lambda)
  std::vector<double> lambdas, constants;
  double expected = 0.0;
  LineFit fit;
};

inline StrichartzResult verify_strichartz(const StrichartzParams& sp) {
  check_strichartz_pair(sp.n, sp.q, sp.r);
  Grid g(sp.n, sp.N, sp.L);
  StrichartzResult out;
  out.expected = strichartz_exponent(sp.n, sp.q, sp.r);
  out.report.id = "strichartz";
  for (double lam : sp.lambdas) {
    std::vector<Trial> trials(static_cast<std::size_t>(sp.trials));
    double dt = sp.dt_lambda / lam;
    auto K = static_cast<std::size_t>(std::lround(sp.T / dt));
    parallel_for(trials.size(), [&](std::size_t i) {
      Field f = strichartz_packet(g, static_cast<int>(i), lam, sp.seed);
      std::vector<double> inner(K);
      for_each_free_frame(f, sp.sign, 0.0, dt, K, [&](std::size_t k, double, const Field& u) {
        inner[k] = sp.r == 2.0 ? u.l2() : lp_norm(u, sp.r);
      });
      trials[i] = {lq_of(inner, dt, sp.q), f.l2()};
    }, sp.jobs);
    double C = 0.0;
    for (const auto& t : trials) C = std::max(C, t.ratio());
    out.lambdas.push_back(lam);
    out.constants.push_back(C);
    out.report.refinement.push_back({"lambda", lam, C / std::pow(lam, out.expected)});
    out.report.trials = trials;
  }
  out.report.finalize();
  out.fit = fit_loglog(out.lambdas, out.constants);
  out.report.set_fit(out.fit);
  return out;
}

// ---- null-frame functionals on time-cut free waves ----

struct NullFrameParams {
  int N = 256;
  double L = 100.0;
  double lambda = 4.0;
  double band_lo = 0.75, band_hi = 1.5;  // radial band in units of lambda
  std::vector<double> betas{0.125, 0.0625, 0.03125};  // beta < alpha keeps the alpha^{-1} cross term subdominant
  double alpha = 0.25;
  double T = 12.0;
  double dt = 0.05;
  int star_dirs = 24;
  double star_dt = 0.1;
  unsigned jobs = 0;
};

struct NullFrameSweep {
  std::vector<double> betas, pw, pw_error, nf_star, data_l2;
  LineFit pw_fit, star_fit;
};

/// Coherent data with Pi_+ fhat supported in A^+_lambda(2 kappabar), kappabar the cap of radius beta about omegabar = e_1.
inline Field sector_data(const Grid& g, double lambda, double lo, double hi, double beta) {
  Field f(g, 2, true);
  const auto& lat = f.lattice();
  RVec wbar{1.0, 0.0, 0.0};
  for (std::size_t p = 0; p < f.points(); ++p) {
    double r = lat.absxi[p];
    if (r == 0.0) continue;
    double th = angle(rscale(-1.0 / r, lat.xi[p]), wbar);
    double rad = bump::plateau(r / lambda, lo, lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo), hi);
    double ang = bump::plateau(th, -1.0, 0.0, 1.5 * beta, 2.0 * beta);
    if (rad * ang == 0.0) continue;
    Spinor s = projector_of(g.n, lat.xi[p], +1) * Spinor{cplx(rad * ang), cplx(0.0)};
    f.set_spinor(p, s);
  }
  f *= cplx(1.0 / f.l2());
  return f;
}

/// PW^-(kappa) functional at omega = omegabar of rho(t/T) U_+(t) f and the sampled [NF^+]*(kappa*) functional,
/// kappa* the cap of radius 4 beta / 3 so that 2 kappabar lies in 3/2 kappa*.
inline NullFrameSweep null_frame_sweep(const NullFrameParams& np) {
  Grid g(2, np.N, np.L);
  NullFrameSweep out;
  out.betas = np.betas;
  std::size_t B = np.betas.size();
  out.pw.assign(B, 0.0);
  out.pw_error.assign(B, 0.0);
  out.nf_star.assign(B, 0.0);
  out.data_l2.assign(B, 0.0);
  Direction wbar = Direction::angle2(0.0);
  parallel_for(B, [&](std::size_t i) {
    double beta = np.betas[i];
    Field f = sector_data(g, np.lambda, np.band_lo, np.band_hi, beta);
    out.data_l2[i] = f.l2();
    auto cut = [&](double t) { return time_cutoff(t / np.T); };
    // PW: one direction, full and half rate
    auto K = static_cast<std::size_t>(std::lround(2.0 * np.T / np.dt)) + 1;
    NullPlanePair pw(g, -np.T, np.dt, K, {wbar});
    for_each_free_frame(f, +1, -np.T, np.dt, K, [&](std::size_t, double t, const Field& u) {
      Field v = u;
      v *= cplx(cut(t));
      pw.feed(v);
    });
    Cap kappa{wbar, np.alpha};
    out.pw[i] = pw_functional(pw.full(), 0, kappa, -1);
    out.pw_error[i] = std::abs(out.pw[i] - pw_functional(pw.half(), 0, kappa, -1));
    // [NF]*: free wave without cutoff over the same window
    Cap kstar{wbar, 4.0 * beta / 3.0};
    auto dirs = sphere_directions(2, np.star_dirs);
    auto Ks = static_cast<std::size_t>(std::lround(2.0 * np.T / np.star_dt)) + 1;
    NullPlaneSampler star(g, -np.T, np.star_dt, Ks, dirs);
    for_each_free_frame(f, +1, -np.T, np.star_dt, Ks, [&](std::size_t, double, const Field& u) { star.feed(u); });
    out.nf_star[i] = nf_star_functional(star, kstar, +1).value;
  }, np.jobs);
  std::vector<double> pw_norm, star_norm;
  for (std::size_t i = 0; i < B; ++i) {
    pw_norm.push_back(out.pw[i] / out.data_l2[i]);
    star_norm.push_back(out.nf_star[i] / out.data_l2[i]);
  }
  out.pw_fit = fit_loglog(out.betas, pw_norm);
  out.star_fit = fit_loglog(out.betas, star_norm);
  return out;
}

// ---- L2 away from the cone ----

/// ||frakC^{sign}_{>~delta} u||_{L2}: the complement of frakC_{<= delta}.
inline double away_from_cone(const SpaceTime& u, double delta, int sign) {
  SpaceTime low = u;
  low.to_tau();
  SpaceTime all = low;
  vector_modulation_multiplier(u.grid().n, delta, sign, true).apply(low);
  for (std::size_t i = 0; i < all.raw().size(); ++i) all.raw()[i] -= low.raw()[i];
  return all.l2();
}

}  // namespace diraclab

#endif  // DIRACLAB_ESTIMATES_HPP
