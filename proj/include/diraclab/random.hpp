#ifndef DIRACLAB_RANDOM_HPP
#define DIRACLAB_RANDOM_HPP

#include <cstdint>
#include <functional>
#include <random>

#include "grid.hpp"
#include "multipliers.hpp"

namespace diraclab {

using Rng = std::mt19937_64;

/// Independent stream for (seed, index); splitmix64 mixing so neighbouring indices decorrelate.
inline Rng make_rng(std::uint64_t seed, std::uint64_t index = 0) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return Rng(z ^ (z >> 31));
}

inline cplx gaussian_cplx(Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  double re = nd(rng);
  double im = nd(rng);
  return {re, im};
}

template <std::size_t D>
Vec<D> random_vec(Rng& rng) {
  Vec<D> v;
  for (auto& c : v) c = gaussian_cplx(rng);
  return v;
}

/// e * exp(-|x - x0|^2 / (2 w^2)) e^{i xi0 . x}, mean removed.
inline Field gaussian_packet(const Grid& g, const RVec& x0, const RVec& xi0, double width, const Spinor& e) {
  Field f(g, 2, false);
  const auto& lat = f.lattice();
  for (std::size_t p = 0; p < f.points(); ++p) {
    RVec d = rsub(lat.x[p], x0);
    double amp = std::exp(-rdot(d, d) / (2.0 * width * width));
    cplx ph = std::polar(amp, rdot(xi0, lat.x[p]));
    f.at(0, p) = ph * e[0];
    f.at(1, p) = ph * e[1];
  }
  f.zero_mean();
  return f;
}

/// Pi_{sign xi/|xi|} applied mode by mode: the part of f that U_{sign}(t) moves with phase e^{-i t |xi|}.
inline Field half_wave_part(const Field& f, int sign) {
  Field h = f;
  half_wave_projector(f.grid().n, sign).apply(h);
  return h;
}

/// Gaussian random Fourier coefficients on the modes accepted by `keep`, normalized to unit L2.
inline Field random_fourier_field(const Grid& g, Rng& rng, const std::function<bool(const RVec&)>& keep, int ncomp = 2) {
  Field f(g, ncomp, true);
  const auto& lat = f.lattice();
  for (std::size_t p = 0; p < f.points(); ++p) {
    if (lat.absxi[p] == 0.0 || !keep(lat.xi[p])) continue;
    for (int c = 0; c < ncomp; ++c) f.at(c, p) = gaussian_cplx(rng);
  }
  double n = f.l2();
  if (n > 0.0) f *= cplx(1.0 / n);
  f.zero_mean();
  return f;
}

/// Random field with spectrum in the annulus lo <= |xi| <= hi.
inline Field random_band_field(const Grid& g, Rng& rng, double lo, double hi, int ncomp = 2) {
  return random_fourier_field(g, rng, [=](const RVec& xi) {
    double r = rnorm(xi);
    return r >= lo && r <= hi;
  }, ncomp);
}

}  // namespace diraclab

#endif  // DIRACLAB_RANDOM_HPP
