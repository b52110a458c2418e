#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "diraclab/evolution.hpp"
#include "diraclab/norms.hpp"
#include "diraclab/random.hpp"

using namespace diraclab;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

Field single_mode(const Grid& g, const RVec& xi0, Spinor e) {
  Field f(g, 2, false);
  const auto& lat = f.lattice();
  for (std::size_t p = 0; p < f.points(); ++p) {
    cplx ph = std::polar(1.0, rdot(xi0, lat.x[p]));
    f.at(0, p) = ph * e[0];
    f.at(1, p) = ph * e[1];
  }
  return f;
}

Trajectory free_trajectory(const Field& f, int sign, double t0, double dt, std::size_t K,
                           const std::function<double(double)>& cut = {}) {
  Trajectory tr{f.grid(), t0, dt, {}};
  for (std::size_t k = 0; k < K; ++k) {
    double t = t0 + dt * static_cast<double>(k);
    Field h = free_evolve(f, t, sign);
    if (cut) h *= cplx(cut(t));
    tr.frames.push_back(std::move(h));
  }
  return tr;
}

Field random_band(const Grid& g, std::uint64_t seed, double lo, double hi) {
  Rng rng = make_rng(seed);
  return random_band_field(g, rng, lo, hi);
}

}  // namespace

TEST(Norms, SingleModeSpaceTimeL2) {
  Grid g(2, 16, 2 * std::numbers::pi);
  double amp = 0.7;
  Field f = single_mode(g, {1.0, 2.0, 0.0}, {cplx(amp), 0.0});
  Trajectory tr{g, 0.0, 0.1, {}};
  for (int k = 0; k < 40; ++k) tr.frames.push_back(f);
  NormValue v = lq_lr(tr, 2, 2);
  double T = tr.window();
  EXPECT_NEAR(v.value, amp * std::sqrt(T * g.volume()), 1e-12);
  EXPECT_LT(v.error, 1e-12);
  NormSpec spec;
  EXPECT_NEAR(norm(tr, spec).value, v.value, 1e-12);
  // L^inf_t L^inf_x = amplitude
  EXPECT_NEAR(lq_lr(tr, kInf, kInf).value, amp, 1e-12);
}

TEST(Norms, SobolevAndBesovOfSingleMode) {
  Grid g(2, 32, 2 * std::numbers::pi);
  RVec xi0{3.0, 4.0, 0.0};
  Field f = single_mode(g, xi0, {cplx(1.0), cplx(0.0, 1.0)});
  double l2 = f.l2();
  for (double s : {-0.5, 0.5, 1.0}) EXPECT_NEAR(sobolev(f, s), std::pow(5.0, s) * l2, 1e-10 * l2);
  EXPECT_THROW(sobolev(f, -1.0), std::domain_error);
  double expect = 0.0;
  for (double lam : dyadic_levels(g)) expect += std::pow(lam, 0.5) * bump::Phi(5.0 / lam) * l2;
  EXPECT_NEAR(besov(f, 0.5), expect, 1e-10 * expect);
  // B^0_{2,1} dominates L2 for a partition of unity with Phi <= 1
  EXPECT_GE(besov(f, 0.0), l2 * (1 - 1e-12));
}

TEST(Norms, HomogeneityEveryKind) {
  Grid g(2, 16, 4 * std::numbers::pi);
  Field f = random_band(g, 3, 0.5, 3.0);
  Trajectory tr = free_trajectory(f, +1, 0.0, 0.1, 32);
  cplx c(-1.3, 0.4);
  Trajectory tc = tr;
  for (auto& fr : tc.frames) fr *= c;
  std::vector<NormSpec> specs;
  for (NormKind k : {NormKind::LqLr, NormKind::SobolevHs, NormKind::BesovB, NormKind::Xbq, NormKind::NullL1L2,
                     NormKind::NullL2Linf, NormKind::NullLinfL2, NormKind::Vp, NormKind::Ynorm}) {
    NormSpec s;
    s.kind = k;
    s.q = 4.0;
    s.r = 6.0;
    s.s = 0.5;
    s.omega = Direction::angle2(0.3);
    s.channel = PlaneChannel::Plus;
    specs.push_back(s);
  }
  for (const auto& s : specs) {
    double a = norm(tr, s).value, b = norm(tc, s).value;
    double expect = std::abs(c) * a;
    if (s.kind == NormKind::Vp) expect = std::pow(std::abs(c), s.p) * a;  // variation sum is p-homogeneous
    EXPECT_NEAR(b, expect, 1e-12 * std::max(expect, 1e-300)) << static_cast<int>(s.kind);
  }
  // the V^p norm itself is 1-homogeneous
  EXPECT_NEAR(vp_norm(tc.frames, 2.0), std::abs(c) * vp_norm(tr.frames, 2.0), 1e-12 * vp_norm(tc.frames, 2.0));
}

TEST(Norms, XbqVectorAndSplitFormsAgree) {
  Grid g(2, 16, 4 * std::numbers::pi);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Rng rng = make_rng(seed, 7);
    // random trajectory with no dispersion relation
    Trajectory tr{g, 0.0, 0.2, {}};
    for (int k = 0; k < 32; ++k) tr.frames.push_back(random_fourier_field(g, rng, [](const RVec&) { return true; }));
    SpaceTime st = SpaceTime::from_trajectory(tr, 0.2);
    for (int sign : {+1, -1})
      for (double b : {0.5, -0.5, 1.0}) {
        double v = xbq_norm(st, sign, b, 2.0, XbqForm::Vector);
        double s = xbq_norm(st, sign, b, 2.0, XbqForm::Split);
        EXPECT_NEAR(s, v, 1e-10 * v);
        for (double q : {1.0, 2.0}) {
          double sum = xbq_split_sum(st, sign, b, q);
          double vq = xbq_norm(st, sign, b, q);
          EXPECT_GE(sum, vq * (1 - 1e-12));
          EXPECT_LE(sum, std::sqrt(2.0) * vq * (1 + 1e-12));
        }
      }
  }
}

TEST(Norms, XbqPartitionRecoversL2) {
  // b = 0, q = 2 with the square-summed partition: between ||u|| / sqrt(3) and ||u|| since sum Phi = 1, Phi <= 1
  Grid g(2, 16, 4 * std::numbers::pi);
  Rng rng = make_rng(11);
  Trajectory tr{g, 0.0, 0.2, {}};
  for (int k = 0; k < 32; ++k) tr.frames.push_back(random_fourier_field(g, rng, [](const RVec&) { return true; }));
  SpaceTime st = SpaceTime::from_trajectory(tr, 0.0);
  double l2 = st.l2();
  double x = xbq_norm(st, +1, 0.0, 2.0);
  EXPECT_LE(x, l2 * (1 + 1e-12));
  EXPECT_GE(x, l2 / std::sqrt(3.0));
  // q = 1 with b = 0 dominates the L2 norm (triangle inequality over the partition)
  EXPECT_GE(xbq_norm(st, +1, 0.0, 1.0), l2 * (1 - 1e-12));
}

TEST(Norms, FreeWaveSitsOnItsCone) {
  Grid g(2, 16, 4 * std::numbers::pi);
  Field f = random_band(g, 5, 0.5, 3.0);
  Trajectory tr = free_trajectory(f, +1, 0.0, 0.1, 256);
  SpaceTime st = SpaceTime::from_trajectory(tr, 0.4);
  // the right cone has small modulation; the wrong one sees |tau - |xi|| ~ 2|xi|
  auto prof = modulation_profile(st, +1, XbqForm::Vector);
  auto wrong = modulation_profile(st, -1, XbqForm::Vector);
  double lowmass = prof[0] * prof[0] + prof[1] * prof[1] + prof[2] * prof[2];
  double total = 0.0;
  for (double v : prof) total += v * v;
  EXPECT_GT(lowmass / total, 0.9);
  double wrong_low = wrong[0] * wrong[0] + wrong[1] * wrong[1];  // modulation <= 1/2, wrong cone has >= 1
  EXPECT_LT(wrong_low / total, 1e-3);  // Tukey leakage only
}

TEST(Norms, TimeCutoffStableUnderTDoubling) {
  Grid g(2, 16, 4 * std::numbers::pi);
  Field f = random_band(g, 9, 0.5, 3.0);
  std::vector<double> ratio;
  for (double T : {8.0, 16.0, 32.0}) {
    double dt = 0.25;
    auto K = static_cast<std::size_t>(std::lround(4.0 * T / dt));
    Trajectory tr = free_trajectory(f, +1, -2.0 * T, dt, K, [T](double t) { return time_cutoff(t / T); });
    SpaceTime st = SpaceTime::from_trajectory(tr, 0.0);
    ratio.push_back(xbq_norm(st, +1, 0.5, 1.0) / f.l2());
  }
  for (std::size_t i = 1; i < ratio.size(); ++i) EXPECT_NEAR(ratio[i] / ratio[i - 1], 1.0, 0.1) << ratio[i];
}

TEST(Norms, YnormScalesLinearly) {
  Grid g(2, 16, 4 * std::numbers::pi);
  Rng rng = make_rng(4);
  Trajectory tr{g, 0.0, 0.2, {}};
  for (int k = 0; k < 32; ++k) tr.frames.push_back(random_fourier_field(g, rng, [](const RVec&) { return true; }));
  SpaceTime st = SpaceTime::from_trajectory(tr, 0.2);
  double y = ynorm(st, +1);
  EXPECT_GT(y, 0.0);
  for (auto& c : st.raw()) c *= 2.0;
  EXPECT_NEAR(ynorm(st, +1), 2.0 * y, 1e-12 * y);
}

TEST(Vp, ConstantAndTwoSamples) {
  EXPECT_EQ(vp_variation(std::vector<double>{2.0, 2.0, 2.0, 2.0}, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(vp_variation(std::vector<double>{1.0, 3.5}, 3.0), std::pow(2.5, 3.0));
  EXPECT_THROW(vp_variation(std::vector<double>{1.0}, 2.0), std::domain_error);
  EXPECT_THROW(vp_variation(std::vector<double>{1.0, 2.0}, 0.5), std::domain_error);
}

TEST(Vp, StaircaseSingleJumpDominates) {
  std::vector<double> x{0, 1, 2, 3};
  EXPECT_EQ(vp_variation(x, 2.0), 9.0);
  EXPECT_EQ(vp_variation_exhaustive(x, 2.0), 9.0);
  EXPECT_EQ(vp_variation(x, 1.0), 3.0);
}

TEST(Vp, DpEqualsExhaustive) {
  Rng rng = make_rng(2024);
  std::uniform_int_distribution<int> len(2, 10);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> pd(1.0, 3.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> x(static_cast<std::size_t>(len(rng)));
    for (auto& v : x) v = nd(rng);
    double p = trial % 2 ? 2.0 : pd(rng);
    ASSERT_EQ(vp_variation(x, p), vp_variation_exhaustive(x, p)) << trial;
  }
}

TEST(Vp, DominatesRandomPartitions) {
  Rng rng = make_rng(77);
  std::normal_distribution<double> nd;
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(40);
    for (auto& v : x) v = nd(rng);
    double dp = vp_variation(x, 2.0);
    double s = 0.0;
    long prev = -1;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!coin(rng)) continue;
      if (prev >= 0) s += std::pow(x[i] - x[static_cast<std::size_t>(prev)], 2);
      prev = static_cast<long>(i);
    }
    EXPECT_GE(dp, s);
  }
}

TEST(Vp, PulledBackFreeWaveIsConstant) {
  Grid g(2, 16, 4 * std::numbers::pi);
  Field f = random_band(g, 13, 0.5, 3.0);
  std::vector<Field> pulled;
  for (int k = 0; k < 20; ++k) {
    double t = 0.3 * k;
    pulled.push_back(free_evolve(free_evolve(f, t, +1), -t, +1));
  }
  EXPECT_LT(vp_variation(pulled, 2.0), 1e-26);
  EXPECT_NEAR(vp_norm(pulled, 2.0), f.l2(), 1e-12);
}

TEST(NullFunctionals, ZeroFieldAndCapChecks) {
  Grid g(2, 16, 4 * std::numbers::pi);
  Field z(g, 2, false);
  Trajectory tr{g, 0.0, 0.2, std::vector<Field>(8, z)};
  Cap cap{Direction::angle2(0.0), 0.25};
  std::vector<Direction> dirs{Direction::angle2(0.1), Direction::angle2(2.0), Direction::angle2(3.0)};
  auto pair = sample_null_planes(tr, dirs);
  const auto& s = pair.full();
  EXPECT_EQ(pw_functional(s, 0, cap, +1), 0.0);
  EXPECT_EQ(nf_functional(s, 1, cap, -1), 0.0);
  auto star = nf_star_functional(s, cap, +1);
  EXPECT_EQ(star.value, 0.0);
  EXPECT_EQ(star.sampled, 2u);
  EXPECT_THROW(nf_functional(s, 0, cap, +1), std::domain_error);
  EXPECT_THROW(pw_functional(s, 1, cap, +1), std::domain_error);
  EXPECT_NEAR(theta_to_cap(Direction::angle2(1.0).w, cap), 0.75, 1e-14);
}

TEST(NullFunctionals, NfStarOfFreeWaveBoundedByData) {
  // Pi_{+omega} and Pi_{-omega} parts each have L^inf_{t_omega} L^2_{x_omega} comparable to ||f||
  Grid g(2, 32, 8 * std::numbers::pi);
  Field f = random_band(g, 21, 1.0, 2.5);
  Trajectory tr = free_trajectory(f, +1, 0.0, 0.1, 60);
  auto dirs = sphere_directions(2, 16);
  auto pair = sample_null_planes(tr, dirs);
  Cap cap{Direction::angle2(0.0), 0.25};
  auto star = nf_star_functional(pair.full(), cap, +1);
  EXPECT_GT(star.value, 0.0);
  EXPECT_LT(star.value, 4.0 * f.l2());
}

TEST(Fits, LineAndLogLog) {
  std::vector<double> x{1, 2, 3, 4}, y{3, 5, 7, 9};
  LineFit f = fit_line(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 1.0, 1e-14);
  EXPECT_NEAR(f.r2, 1.0, 1e-14);
  LineFit l = fit_loglog({1, 2, 4, 8}, {1, 0.5, 0.25, 0.125});
  EXPECT_NEAR(l.slope, -1.0, 1e-14);
  EXPECT_THROW(fit_line({1}, {1}), std::domain_error);
  // residuals -1/6, 1/3, -1/6 over sxx = 2 with one degree of freedom
  LineFit e = fit_line({0, 1, 2}, {0, 1, 1});
  EXPECT_NEAR(e.slope_se, std::sqrt(1.0 / 12.0), 1e-14);
  EXPECT_EQ(e.points, 3u);
  EXPECT_TRUE(std::isnan(fit_line({0, 1}, {0, 1}).slope_se));
}

TEST(Report, ConstantAndFiniteness) {
  EstimateReport r;
  r.id = "demo";
  r.add(1.0, 2.0);
  r.add(3.0, 2.0);
  r.finalize();
  EXPECT_EQ(r.constant, 1.5);
  EXPECT_EQ(r.ensemble(), 2u);
  r.add(std::nan(""), 1.0);
  EXPECT_THROW(r.finalize(), std::runtime_error);
}
