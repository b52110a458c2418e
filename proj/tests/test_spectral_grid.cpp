#include <gtest/gtest.h>

#include <random>

#include "diraclab/grid.hpp"
#include "diraclab/random.hpp"
#include "diraclab/trajectory.hpp"

using namespace diraclab;

namespace {

Field random_field(const Grid& g, std::uint64_t seed, int ncomp = 2) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Field f(g, ncomp);
  for (auto& c : f.raw()) c = {n01(rng), n01(rng)};
  return f;
}

}  // namespace

TEST(Grid, Validation) {
  EXPECT_THROW(Grid(2, 48, 1.0), std::domain_error);
  EXPECT_THROW(Grid(2, 4, 1.0), std::domain_error);
  EXPECT_THROW(Grid(4, 16, 1.0), std::domain_error);
  EXPECT_THROW(Grid(2, 16, 1.0, 0.0), std::domain_error);
  EXPECT_NO_THROW(Grid(3, 8, 1.0));
}

TEST(Grid, LatticeSymmetric) {
  Grid g(1, 16, 2.0 * std::numbers::pi);
  std::vector<int> k;
  for (int j = 0; j < g.N; ++j) k.push_back(g.wave_index(j));
  std::sort(k.begin(), k.end());
  EXPECT_EQ(k.front(), -8);
  EXPECT_EQ(k.back(), 7);
  EXPECT_EQ(std::count(k.begin(), k.end(), -8), 1);
}

TEST(Field, RoundTrip) {
  for (int n : {1, 2, 3}) {
    Grid g(n, n == 3 ? 16 : 64, 10.0);
    Field f = random_field(g, 3 + n);
    Field h = f.fourier().physical();
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < f.raw().size(); ++i) {
      err = std::max(err, std::abs(f.raw()[i] - h.raw()[i]));
      ref = std::max(ref, std::abs(f.raw()[i]));
    }
    EXPECT_LE(err, 1e-12 * ref);
  }
}

TEST(Field, Plancherel) {
  Grid g(2, 64, 7.0);
  Field f = random_field(g, 11);
  EXPECT_NEAR(f.l2(), f.fourier().l2(), 1e-12 * f.l2());
}

TEST(Field, ZeroMeanIsExact) {
  Grid g(2, 32, 5.0);
  Field f = random_field(g, 5);
  f.zero_mean();
  Field h = f.fourier();
  EXPECT_EQ(std::abs(h.at(0, 0)), 0.0);
  EXPECT_EQ(std::abs(h.at(1, 0)), 0.0);
}

TEST(Field, SingleModeHdot) {
  Grid g(2, 32, 2.0 * std::numbers::pi);
  Field f(g, 2, true);
  std::size_t p = 3 * 32 + 4;  // index (3, 4): |xi| = 5
  f.at(0, p) = 0.7;
  EXPECT_NEAR(f.hdot(0.5), std::sqrt(5.0) * f.l2(), 1e-12);
  EXPECT_NEAR(f.l2(), 0.7 * 2.0 * std::numbers::pi, 1e-12);
}

TEST(Field, ProductSupport) {
  Grid g(1, 64, 2.0 * std::numbers::pi);
  Field a(g, 1, true), b(g, 1, true);
  a.at(0, 3) = 1.0;
  a.at(0, 5) = 0.5;
  b.at(0, 2) = 1.0;
  a.to_physical();
  b.to_physical();
  Field c(g, 1);
  for (std::size_t i = 0; i < g.size(); ++i) c.at(0, i) = a.at(0, i) * b.at(0, i);
  c.to_fourier();
  for (std::size_t i = 0; i < g.size(); ++i) {
    int k = g.wave_index(static_cast<int>(i));
    bool allowed = k == 5 || k == 7;
    if (!allowed) {
      EXPECT_LE(std::abs(c.at(0, i)), 1e-15);
    }
  }
}

TEST(Field, DealiasMask) {
  Grid g(2, 64, 1.0);
  Field f = random_field(g, 9);
  f.dealias();
  EXPECT_LE(spectral_tail_fraction(f), 1e-28);
}

TEST(Tukey, Flanks) {
  std::size_t K = 100;
  EXPECT_LT(tukey(0, K), 0.05);
  EXPECT_EQ(tukey(50, K), 1.0);
  EXPECT_EQ(tukey(10, K), 1.0);
  EXPECT_LT(tukey(K - 1, K), 0.05);
}

TEST(SpaceTime, RoundTripAndPlancherel) {
  Grid g(1, 32, 10.0);
  Trajectory tr{g, 0.0, 0.1, {}};
  for (int k = 0; k < 64; ++k) tr.frames.push_back(random_field(g, 100 + k));
  SpaceTime st = SpaceTime::from_trajectory(tr, 0.0);
  double l2t = st.l2();
  auto copy = st.raw();
  st.to_tau();
  EXPECT_NEAR(st.l2(), l2t, 1e-12 * l2t);
  st.to_time();
  double err = 0.0;
  for (std::size_t i = 0; i < copy.size(); ++i) err = std::max(err, std::abs(copy[i] - st.raw()[i]));
  EXPECT_LE(err, 1e-12);
}

TEST(SpaceTime, SingleModeFrequency) {
  Grid g(1, 16, 2.0 * std::numbers::pi);
  double dt = 0.05;
  std::size_t K = 128;
  double tau0 = 2.0 * std::numbers::pi * 5.0 / (K * dt);
  Trajectory tr{g, 0.0, dt, {}};
  for (std::size_t k = 0; k < K; ++k) {
    Field f(g, 1, true);
    f.at(0, 2) = std::exp(I_unit * tau0 * (k * dt));
    tr.frames.push_back(f);
  }
  SpaceTime st = SpaceTime::from_trajectory(tr, 0.0);
  st.to_tau();
  EXPECT_NEAR(std::abs(st.at(5, 0, 2)), 1.0, 1e-12);
  EXPECT_NEAR(st.tau(5), tau0, 1e-12);
  EXPECT_LE(std::abs(st.at(6, 0, 2)), 1e-12);
}

TEST(Field, SpectralResampleRoundTrip) {
  Grid a(2, 16, 10.0), b(2, 32, 10.0);
  Field f(a, 2, true);
  Rng rng = make_rng(4);
  for (std::size_t p = 0; p < f.points(); ++p)
    if (a.max_wave_index(p) < 8) f.at(0, p) = gaussian_cplx(rng), f.at(1, p) = gaussian_cplx(rng);
  Field up = spectral_resample(f, b);
  EXPECT_NEAR(up.l2(), f.l2(), 1e-12 * f.l2());
  // point values agree where the grids coincide
  Field fp = f.physical(), upp = up.physical();
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j)
      EXPECT_NEAR(std::abs(fp.at(1, i * 16 + j) - upp.at(1, (2 * i) * 32 + 2 * j)), 0.0, 1e-12);
  Field back = spectral_resample(up, a);
  back -= f;
  EXPECT_LT(back.l2(), 1e-14 * f.l2());
  EXPECT_THROW(spectral_resample(f, Grid(2, 32, 11.0)), std::invalid_argument);
}
