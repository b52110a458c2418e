// Acceptance suite: one PASS/FAIL line per criterion. Tolerances and sizes are pinned below.
// Usage: acceptance [--only <id>] [--list]

#include <chrono>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "diraclab/estimates.hpp"
#include "diraclab/experiments.hpp"
#include "diraclab/null_frames.hpp"

using namespace diraclab;

namespace {

struct Result {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string id;
  double budget_s;  // runtime limit
  std::function<Result()> run;
};

std::string f(double v, int prec = 4) {
  char b[64];
  std::snprintf(b, sizeof b, "%.*g", prec, v);
  return b;
}

template <class M>
double max_entry(const M& m) {
  double r = 0.0;
  for (const auto& c : m.a) r = std::max(r, std::abs(c));
  return r;
}

// ---- algebra: Fierz <= 1e-12 |psi|^3 on 1e4 spinors (n = 2, 3); anticommutators, projections <= 1e-15 ----
Result algebra() {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  auto rc = [&] { return cplx(nd(rng), nd(rng)); };
  double fierz = 0.0;
  for (int i = 0; i < 10000; ++i) {
    Spinor p{rc(), rc()};
    fierz = std::max(fierz, fierz_check(p) / std::pow(norm<2>(p), 3));
    Spinor4 q{rc(), rc(), rc(), rc()};
    fierz = std::max(fierz, fierz_check(q) / std::pow(norm<4>(q), 3));
  }
  double anti = 0.0;
  for (int m = 0; m < 3; ++m)
    for (int k = 0; k < 3; ++k)
      anti = std::max(anti, max_entry(gamma2(m) * gamma2(k) + gamma2(k) * gamma2(m) -
                                      Mat2::identity() * cplx(m == k ? 2.0 * metric(m) : 0.0)));
  for (int m = 0; m < 4; ++m)
    for (int k = 0; k < 4; ++k)
      anti = std::max(anti, max_entry(gamma3(m) * gamma3(k) + gamma3(k) * gamma3(m) -
                                      Mat4::identity() * cplx(m == k ? 2.0 * metric(m) : 0.0)));
  double proj = 0.0;
  for (int n : {1, 2, 3})
    for (int i = 0; i < 10000; ++i) {
      RVec v{0, 0, 0};
      for (int j = 0; j < n; ++j) v[j] = nd(rng);
      if (n == 1) v[0] = v[0] < 0 ? -1.0 : 1.0;
      Direction w = Direction::normalized(n, v);
      Mat2 p = projector(w), q = projector(-w);
      proj = std::max({proj, max_entry(p + q - Mat2::identity()), max_entry(p * q), max_entry(p * p - p),
                       max_entry(p - p.adjoint())});
    }
  bool ok = fierz <= 1e-12 && anti <= 1e-15 && proj <= 1e-15;
  return {ok, "fierz " + f(fierz, 3) + "/|psi|^3, anticommutator " + f(anti, 3) + ", projections " + f(proj, 3)};
}

// ---- null coordinates: round trips and the symbol identity to 1e-11 on 1e4 samples ----
Result null_coordinates() {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::normal_distribution<double> nd;
  double rt = 0.0, sym = 0.0;
  for (int i = 0; i < 10000; ++i) {
    int n = 2 + i % 2;
    RVec v{0, 0, 0}, x{0, 0, 0}, xi{0, 0, 0};
    for (int j = 0; j < n; ++j) {
      v[j] = nd(rng);
      x[j] = u(rng);
      xi[j] = u(rng);
    }
    NullFrame fr(Direction::normalized(n, v));
    double t = u(rng), tau = u(rng);
    NullCoords c = to_null(fr, t, x);
    auto [t1, x1] = from_null(fr, c);
    auto [t2, x2] = from_null_plane(fr, c.t_omega, c.x_omega);
    rt = std::max({rt, std::abs(t1 - t), rnorm(rsub(x1, x)), std::abs(t2 - t), rnorm(rsub(x2, x))});
    DualNullCoords d = to_dual_null(fr, tau, xi);
    sym = std::max(sym, std::abs(null_symbol(d) - (tau * tau - rdot(xi, xi))));
    // Euclidean pairing tau t + xi.x
    sym = std::max(sym, std::abs(null_pairing(d, c) - (tau * t + rdot(xi, x))) / (1 + std::abs(tau * t) + rnorm(xi) * rnorm(x)));
  }
  return {rt <= 1e-11 && sym <= 1e-11, "round trip " + f(rt, 3) + ", symbol/pairing " + f(sym, 3)};
}

// ---- propagator unitary to 1e-13; nonlinear charge drift <= 1e-9 over 1e3 RK4 steps at N = 128, n = 2 ----
Result propagator_charge() {
  double unit = 0.0;
  for (int n : {1, 2, 3}) {
    Grid g(n, n == 3 ? 16 : 64, 20.0);
    Rng rng = make_rng(13, static_cast<std::uint64_t>(n));
    Field a = random_band_field(g, rng, 0.0, 1e9);
    for (int sign : {+1, -1}) {
      Propagator P = Propagator::half_wave(g, sign);
      for (double t : {0.37, 5.0, -12.5}) {
        Field b = a.fourier();
        P.apply(b, t);
        unit = std::max(unit, std::abs(b.l2() / a.l2() - 1.0));
      }
    }
  }
  Campaign c;
  Grid g = c.grid.grid(2);
  Field d = campaign_data(g, 4, c.data, 13);
  SolveOptions o;
  o.dt = 0.1;
  o.T = 100.0;
  o.keep_frames = false;
  o.tail_threshold = 1.0;
  auto r = nonlinear_solve({2, Model::Soler, 0.0, 4.0, Formulation::UvForm}, d, g, o);
  bool ok = unit <= 1e-13 && r.status == SolveStatus::Ok && r.steps_done == 1000 && r.charge_drift <= 1e-9;
  return {ok, "unitarity " + f(unit, 3) + ", charge drift " + f(r.charge_drift, 3) + " over " +
                  std::to_string(r.steps_done) + " steps"};
}

// ---- bilinear: n = 1 within 2% of 1/sqrt(2) at N = 256; n = 2 within 10% under N and T doubling, 100 trials ----
Result bilinear() {
  Grid g1(1, 256, 64.0);
  std::vector<std::pair<Field, Field>> e1;
  for (std::uint64_t s = 0; s < 100; ++s) {
    Field a(g1, 2, true), b(g1, 2, true);
    Rng rng = make_rng(14, s);
    for (std::size_t p = 1; p < a.points(); ++p)
      if (g1.max_wave_index(p) <= 32) {
        a.at(0, p) = gaussian_cplx(rng);
        b.at(0, p) = gaussian_cplx(rng);
      }
    a *= cplx(1.0 / a.l2());
    b *= cplx(1.0 / b.l2());
    e1.emplace_back(a, b);
  }
  BilinearParams p1;
  p1.n = 1;
  p1.T = g1.L / 2;
  p1.dt = g1.dx() / 2;
  double c1 = verify_bilinear_L2(e1, p1).constant;
  double err1 = std::abs(c1 * std::sqrt(2.0) - 1.0);

  auto run2 = [](int N, double L, double T) {
    Grid g(2, N, L);
    std::vector<std::pair<Field, Field>> e;
    for (int i = 0; i < 100; ++i) e.emplace_back(strichartz_packet(g, i, 1.0, 14), strichartz_packet(g, i, 1.0, 15));
    BilinearParams bp;
    bp.T = T;
    bp.dt = 0.25;
    return verify_bilinear_L2(e, bp).constant;
  };
  double c2 = run2(64, 48.0, 16.0), c2r = run2(128, 96.0, 32.0);
  double err2 = std::abs(c2r / c2 - 1.0);
  return {err1 <= 0.02 && err2 <= 0.10, "n=1 C=" + f(c1, 8) + " (rel err " + f(err1, 2) + "); n=2 C=" + f(c2) + " -> " +
                                            f(c2r) + " (change " + f(err2, 3) + ")"};
}

// ---- null gain: exponent gap >= 0.3 for n = 1 and n = 2 ----
Result check_null_gain() {
  NullGainParams p1;
  p1.n = 1;
  p1.N = 1024;
  p1.L = 200.0;
  p1.dt = p1.L / p1.N;
  auto r1 = null_gain_comparison(p1);
  NullGainParams p2;  // n = 2, N = 512, L = 192, T in {16, 32, 64}
  auto r2 = null_gain_comparison(p2);
  bool ok = r1.gap >= 0.3 && r2.gap >= 0.3 && r1.verdict == Verdict::Pass && r2.verdict == Verdict::Pass;
  return {ok, "n=1 gap " + f(r1.gap) + " (refined " + f(r1.gap_ref) + "), n=2 gap " + f(r2.gap) + " (refined " +
                  f(r2.gap_ref) + ", " + to_string(r2.verdict) + ")"};
}

// ---- X^{s,b} counterexample: R^2 >= 0.98 over >= 5 dyadic levels, rhs within 1% ----
Result xsb() {
  auto tr = xsb_counterexample(8.0, 8);
  bool ok = tr.d_min.size() >= 5 && tr.fit.r2 >= 0.98 && tr.fit.slope > 0.0 && tr.rhs_spread <= 0.01;
  return {ok, "R^2 " + f(tr.fit.r2, 6) + " over " + std::to_string(tr.d_min.size()) + " levels, slope " + f(tr.fit.slope) +
                  ", rhs spread " + f(tr.rhs_spread, 3)};
}

// ---- Strichartz: fitted lambda exponent within 0.1 for (4, inf) and (inf, 2) over 3 dyadic lambda ----
Result check_strichartz() {
  std::string d;
  bool ok = true;
  const double inf = std::numeric_limits<double>::infinity();
  for (auto [q, r] : {std::pair{4.0, inf}, std::pair{inf, 2.0}}) {
    StrichartzParams sp;  // n = 2, lambda in {1, 2, 4}, 100 trials
    sp.q = q;
    sp.r = r;
    auto res = verify_strichartz(sp);
    double err = std::abs(res.fit.slope - res.expected);
    ok = ok && err <= 0.1 && res.lambdas.size() >= 3;
    d += (d.empty() ? "" : "; ") + std::string("(") + f(q) + "," + f(r) + ") slope " + f(res.fit.slope) + " vs " +
         f(res.expected);
  }
  return {ok, d};
}

// ---- fundamental solution: agrees with Duhamel to 1e-8, elliptic relation to 1e-9 ----
Result fundamental_solution() {
  Grid g(2, 32, 8 * std::numbers::pi);
  Direction w = Direction::angle2(0.3);
  std::size_t K = 512;
  double dt = 8.0 * std::numbers::pi / K;
  SpaceTime F(g, 2, K, dt);
  F.to_tau();
  Rng rng = make_rng(16);
  std::uniform_int_distribution<std::size_t> pp(0, g.size() - 1), pm(0, K - 1);
  const auto& lat = F.lattice();
  for (int placed = 0; placed < 40;) {
    std::size_t p = pp(rng), m = pm(rng);
    double r = lat.absxi[p], tau = F.tau(m);
    if (r < 2.0 || r > 4.0 || std::abs(tau) > 6.0) continue;
    if (std::abs(std::abs(tau) - r) < 0.3 || std::abs(tau - rdot(w.w, lat.xi[p])) < 0.3) continue;
    F.at(m, 0, p) = gaussian_cplx(rng);
    F.at(m, 1, p) = gaussian_cplx(rng);
    ++placed;
  }
  double worst = 0.0, ell = 0.0;
  for (int sign : {+1, -1}) {
    auto sol = null_fundamental_solution(F, NullFrame(w), sign);
    ell = std::max(ell, null_elliptic_residual(sol.u, F, NullFrame(w), sign));
    SpaceTime U = sol.u, Ft = F;
    U.to_time();
    Ft.to_time();
    Trajectory ut = U.to_trajectory(), ft = Ft.to_trajectory();
    auto ud = duhamel(ft, sign, 12);
    double err = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      Field diff = ut.frames[k];
      diff -= free_evolve(ut.frames[0], k * dt, sign);
      diff -= ud.frames[k];
      err = std::max(err, diff.l2());
      scale = std::max(scale, ud.frames[k].l2());
    }
    worst = std::max(worst, err / scale);
  }
  return {worst <= 1e-8 && ell <= 1e-9, "vs Duhamel " + f(worst, 3) + ", elliptic relation " + f(ell, 3)};
}

// ---- null-frame norms: PW exponent 0.5 +- 0.15 over 3 dyadic beta; [NF]*/|f| bounded ----
Result null_frame_norms() {
  NullFrameParams np;  // N = 256, L = 100, lambda = 4, beta in {1/8, 1/16, 1/32}
  auto s = null_frame_sweep(np);
  double mx = 0.0, mn = 1e300;
  for (std::size_t i = 0; i < s.betas.size(); ++i) {
    double v = s.nf_star[i] / s.data_l2[i];
    mx = std::max(mx, v);
    mn = std::min(mn, v);
  }
  bool ok = s.betas.size() >= 3 && std::abs(s.pw_fit.slope - 0.5) <= 0.15 && std::abs(s.star_fit.slope) <= 0.15;
  return {ok, "PW slope " + f(s.pw_fit.slope) + ", NF* slope " + f(s.star_fit.slope) + ", NF*/|f| in [" + f(mn) + ", " +
                  f(mx) + "]"};
}

// ---- V^2 oracle: DP equals exhaustive enumeration on 1e3 sequences of length <= 10, exactly ----
Result vp_oracle() {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> len(2, 10);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> pd(1.0, 3.0);
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> x(static_cast<std::size_t>(len(rng)));
    for (auto& v : x) v = nd(rng);
    double p = i % 2 ? 2.0 : pd(rng);
    if (vp_variation(x, p) != vp_variation_exhaustive(x, p)) ++bad;
  }
  double st = vp_variation(std::vector<double>{0, 1, 2, 3}, 2.0);
  return {bad == 0 && st == 9.0, std::to_string(bad) + " mismatches in 1000, staircase " + f(st)};
}

// ---- small data: sup ratio <= 2 up to T = 64 under T doubling, monotone increments, Lipschitz within 20% ----
Result check_small_data() {
  Campaign c = default_small_data_campaign();
  auto st = small_data_study(c);
  bool ratios = st.bounded.threshold > 0.0;
  double worst = 0.0;
  for (const auto& r : st.bounded.rows) {
    if (r.eps > st.bounded.threshold) continue;
    for (double v : r.sup_ratio) {
      worst = std::max(worst, v);
      ratios = ratios && v <= 2.0;
    }
  }
  bool mono = !st.scatter.empty();
  for (const auto& s : st.scatter)
    for (std::size_t j = 1; j < s.increments.size(); ++j) mono = mono && s.increments[j] < s.increments[j - 1];
  auto lip = lipschitz_dependence(c);
  bool ok = ratios && c.horizons.back() >= 64.0 && mono && st.bounded.verdict == Verdict::Pass &&
            st.scatter_verdict == Verdict::Pass && lip.spread <= 1.2 && lip.verdict == Verdict::Pass;
  return {ok, "threshold eps " + f(st.bounded.threshold) + ", max sup ratio " + f(worst, 7) + ", increments " +
                  (mono ? "monotone" : "NOT monotone") + ", boundedness " + to_string(st.bounded.verdict) +
                  ", Lipschitz spread " + f(lip.spread, 5) + " (" + to_string(lip.verdict) + ")"};
}

// ---- mass horizon: slope of log T*(m) against log m is -1 +- 0.2 over 3 dyadic m ----
Result check_mass_horizon() {
  Campaign c = default_mass_campaign();
  auto r = mass_horizon(c);
  bool ok = r.rows.size() >= 4 && std::abs(r.fit.slope + 1.0) <= 0.2 && r.verdict == Verdict::Pass;
  std::string ts;
  for (std::size_t i = 1; i < r.rows.size(); ++i) ts += (ts.empty() ? "" : ", ") + f(r.rows[i].horizon);
  return {ok, "slope " + f(r.fit.slope) + " (refined " + f(r.slope_ref) + "), T* {" + ts + "}, " + to_string(r.verdict)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance suite"};
  std::string only;
  bool list = false;
  app.add_option("--only", only, "run one criterion");
  app.add_flag("--list", list, "list criterion ids");
  CLI11_PARSE(app, argc, argv);

  std::vector<Criterion> all{
      {"algebra", 5, algebra},
      {"null-coordinates", 5, null_coordinates},
      {"propagator-charge", 120, propagator_charge},
      {"bilinear-l2", 600, bilinear},
      {"null-gain", 600, check_null_gain},
      {"xsb-counterexample", 300, xsb},
      {"strichartz", 600, check_strichartz},
      {"fundamental-solution", 300, fundamental_solution},
      {"null-frame-norms", 900, null_frame_norms},
      {"vp-oracle", 60, vp_oracle},
      {"small-data", 1800, check_small_data},
      {"mass-horizon", 1200, check_mass_horizon},
  };
  if (list) {
    for (const auto& c : all) std::printf("%s\n", c.id.c_str());
    return 0;
  }
  bool found = false, failed = false;
  for (const auto& c : all) {
    if (!only.empty() && c.id != only) continue;
    found = true;
    auto t0 = std::chrono::steady_clock::now();
    Result r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool pass = r.pass && secs <= c.budget_s;
    std::printf("%s %s: %s [%.1fs of %.0fs]\n", pass ? "PASS" : "FAIL", c.id.c_str(), r.detail.c_str(), secs, c.budget_s);
    std::fflush(stdout);
    failed = failed || !pass;
  }
  if (!found) {
    std::fprintf(stderr, "unknown criterion id: %s\n", only.c_str());
    return 4;
  }
  return failed ? 2 : 0;
}
