#ifndef DIRACLAB_GRID_HPP
#define DIRACLAB_GRID_HPP

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "spinor_algebra.hpp"

namespace diraclab {

/// Periodic box [-L/2, L/2)^n with N points per axis.
struct Grid {
  int n = 2;
  int N = 64;
  double L = 2.0 * std::numbers::pi;
  double dt = 0.05;
  double T = 1.0;

  Grid() = default;
  Grid(int dim, int pts, double len, double step = 0.05, double horizon = 1.0)
      : n(dim), N(pts), L(len), dt(step), T(horizon) {
    validate();
  }

  void validate() const {
    if (n < 1 || n > 3) throw std::domain_error("Grid: n must be 1, 2 or 3");
    if (N < 8 || (N & (N - 1)) != 0) throw std::domain_error("Grid: N must be a power of two, N >= 8");
    if (!(L > 0.0)) throw std::domain_error("Grid: L must be positive");
    if (!(dt > 0.0)) throw std::domain_error("Grid: dt must be positive");
  }

  std::size_t size() const {
    std::size_t m = 1;
    for (int i = 0; i < n; ++i) m *= static_cast<std::size_t>(N);
    return m;
  }
  double dx() const { return L / N; }
  double dk() const { return 2.0 * std::numbers::pi / L; }
  double cell_volume() const { return std::pow(dx(), n); }
  double volume() const { return std::pow(L, n); }
  double nyquist() const { return std::numbers::pi * N / L; }

  /// Signed integer wavenumber of index j along an axis; Nyquist appears once as -N/2.
  int wave_index(int j) const { return j < N / 2 ? j : j - N; }
  /// Centered coordinate of index j: wraps to [-L/2, L/2).
  double coord(int j) const { return wave_index(j) * dx(); }

  std::array<int, 3> unravel(std::size_t p) const {
    std::array<int, 3> idx{0, 0, 0};
    for (int a = n - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(p % N);
      p /= N;
    }
    return idx;
  }
  RVec xi_at(std::size_t p) const {
    auto idx = unravel(p);
    RVec k{0, 0, 0};
    for (int a = 0; a < n; ++a) k[a] = dk() * wave_index(idx[a]);
    return k;
  }
  RVec x_at(std::size_t p) const {
    auto idx = unravel(p);
    RVec x{0, 0, 0};
    for (int a = 0; a < n; ++a) x[a] = coord(idx[a]);
    return x;
  }
  /// Largest |index| over axes; used by the 2/3 dealiasing mask.
  int max_wave_index(std::size_t p) const {
    auto idx = unravel(p);
    int m = 0;
    for (int a = 0; a < n; ++a) m = std::max(m, std::abs(wave_index(idx[a])));
    return m;
  }

  bool operator==(const Grid& o) const { return n == o.n && N == o.N && L == o.L; }
};

/// Precomputed lattice data shared between fields on one grid.
struct Lattice {
  Grid grid;
  std::vector<RVec> xi;
  std::vector<double> absxi;
  std::vector<RVec> x;

  explicit Lattice(const Grid& g) : grid(g) {
    std::size_t M = g.size();
    xi.resize(M);
    absxi.resize(M);
    x.resize(M);
    for (std::size_t p = 0; p < M; ++p) {
      xi[p] = g.xi_at(p);
      absxi[p] = rnorm(xi[p]);
      x[p] = g.x_at(p);
    }
  }
};

inline std::shared_ptr<const Lattice> lattice_for(const Grid& g) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, double>, std::shared_ptr<const Lattice>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_tuple(g.n, g.N, g.L);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto lat = std::make_shared<const Lattice>(g);
  cache.emplace(key, lat);
  return lat;
}

// ---- FFT plans ----
// Planning is serialized; execution through the new-array interface is thread safe.

class FftPlans {
 public:
  static fftw_plan get(int n, int N, int howmany, int sign) {
    static std::mutex mu;
    static std::map<std::tuple<int, int, int, int>, fftw_plan> plans;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_tuple(n, N, howmany, sign);
    auto it = plans.find(key);
    if (it != plans.end()) return it->second;
    int dims[3] = {N, N, N};
    std::size_t M = 1;
    for (int i = 0; i < n; ++i) M *= N;
    std::vector<cplx> scratch(M * howmany);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan p = fftw_plan_many_dft(n, dims, howmany, buf, nullptr, 1, static_cast<int>(M), buf, nullptr, 1,
                                     static_cast<int>(M), sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!p) throw std::runtime_error("FFTW planning failed");
    plans.emplace(key, p);
    return p;
  }

  static fftw_plan get_1d_many(int len, int howmany, int stride, int dist, int sign) {
    static std::mutex mu;
    static std::map<std::tuple<int, int, int, int, int>, fftw_plan> plans;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_tuple(len, howmany, stride, dist, sign);
    auto it = plans.find(key);
    if (it != plans.end()) return it->second;
    // extent of the strided layout, not len * howmany * stride
    std::size_t extent = static_cast<std::size_t>(len - 1) * std::max(1, stride) +
                         static_cast<std::size_t>(howmany - 1) * std::max(1, dist) + 1;
    std::vector<cplx> scratch(extent);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    int dims[1] = {len};
    fftw_plan p = fftw_plan_many_dft(1, dims, howmany, buf, nullptr, stride, dist, buf, nullptr, stride, dist, sign,
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!p) throw std::runtime_error("FFTW planning failed");
    plans.emplace(key, p);
    return p;
  }
};

/// Multi-component field on a grid; components stored one after another.
/// Fourier convention: uhat_k = N^{-n} sum_j u_j e^{-i k x_j}, u_j = sum_k uhat_k e^{i k x_j}.
class Field {
 public:
  Field() = default;
  Field(const Grid& g, int ncomp, bool fourier = false)
      : grid_(g), lat_(lattice_for(g)), ncomp_(ncomp), fourier_(fourier), data_(g.size() * ncomp, cplx(0.0)) {}

  const Grid& grid() const { return grid_; }
  const Lattice& lattice() const { return *lat_; }
  int ncomp() const { return ncomp_; }
  bool is_fourier() const { return fourier_; }
  void set_fourier_flag(bool f) { fourier_ = f; }
  bool mean_zero() const { return mean_zero_; }
  /// Flag only; coefficients are left alone. Evolved states drop it once the nonlinearity feeds xi = 0.
  void set_mean_zero_flag(bool m) { mean_zero_ = m; }
  std::size_t points() const { return grid_.size(); }

  cplx* comp(int c) { return data_.data() + c * points(); }
  const cplx* comp(int c) const { return data_.data() + c * points(); }
  cplx& at(int c, std::size_t p) { return data_[c * points() + p]; }
  const cplx& at(int c, std::size_t p) const { return data_[c * points() + p]; }
  std::vector<cplx>& raw() { return data_; }
  const std::vector<cplx>& raw() const { return data_; }

  Spinor spinor(std::size_t p, int first = 0) const { return {at(first, p), at(first + 1, p)}; }
  void set_spinor(std::size_t p, const Spinor& s, int first = 0) {
    at(first, p) = s[0];
    at(first + 1, p) = s[1];
  }

  void to_fourier() {
    if (fourier_) return;
    fftw_plan plan = FftPlans::get(grid_.n, grid_.N, ncomp_, FFTW_FORWARD);
    auto* buf = reinterpret_cast<fftw_complex*>(data_.data());
    fftw_execute_dft(plan, buf, buf);
    double s = 1.0 / static_cast<double>(points());
    for (auto& c : data_) c *= s;
    fourier_ = true;
    if (mean_zero_)
      for (int c = 0; c < ncomp_; ++c) at(c, 0) = 0.0;
  }
  void to_physical() {
    if (!fourier_) return;
    fftw_plan plan = FftPlans::get(grid_.n, grid_.N, ncomp_, FFTW_BACKWARD);
    auto* buf = reinterpret_cast<fftw_complex*>(data_.data());
    fftw_execute_dft(plan, buf, buf);
    fourier_ = false;
  }
  Field fourier() const {
    Field f = *this;
    f.to_fourier();
    return f;
  }
  Field physical() const {
    Field f = *this;
    f.to_physical();
    return f;
  }

  /// Continuum L2 norm of the field (either representation).
  double l2() const {
    double s = 0.0;
    for (const auto& c : data_) s += std::norm(c);
    if (fourier_) return std::sqrt(s * grid_.volume());
    return std::sqrt(s * grid_.cell_volume());
  }

  /// Homogeneous Sobolev norm; zero mode excluded.
  double hdot(double s_exp) const {
    Field f = fourier_ ? *this : fourier();
    const auto& ax = lat_->absxi;
    double acc = 0.0;
    for (int c = 0; c < ncomp_; ++c)
      for (std::size_t p = 0; p < points(); ++p) {
        if (ax[p] == 0.0) continue;
        acc += std::pow(ax[p], 2.0 * s_exp) * std::norm(f.at(c, p));
      }
    return std::sqrt(acc * grid_.volume());
  }

  /// Sets the mean-zero flag: the xi = 0 coefficient is held at exactly 0 from now on.
  void zero_mean() {
    mean_zero_ = true;
    bool was_physical = !fourier_;
    to_fourier();
    for (int c = 0; c < ncomp_; ++c) at(c, 0) = 0.0;
    if (was_physical) to_physical();
  }

  /// 2/3-rule mask in Fourier space.
  void dealias() {
    bool was_physical = !fourier_;
    to_fourier();
    int cut = grid_.N / 3;
    for (std::size_t p = 0; p < points(); ++p)
      if (grid_.max_wave_index(p) > cut)
        for (int c = 0; c < ncomp_; ++c) at(c, p) = 0.0;
    if (was_physical) to_physical();
  }

  Field& operator+=(const Field& o) {
    check_compat(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Field& operator-=(const Field& o) {
    check_compat(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Field& operator*=(cplx s) {
    for (auto& c : data_) c *= s;
    return *this;
  }
  void axpy(cplx a, const Field& o) {
    check_compat(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += a * o.data_[i];
  }

 private:
  void check_compat(const Field& o) const {
    if (!(grid_ == o.grid_) || ncomp_ != o.ncomp_ || fourier_ != o.fourier_)
      throw std::invalid_argument("Field: incompatible operands");
  }

  Grid grid_;
  std::shared_ptr<const Lattice> lat_;
  int ncomp_ = 0;
  bool fourier_ = false;
  bool mean_zero_ = false;
  std::vector<cplx> data_;
};

inline Field operator+(Field a, const Field& b) { return a += b; }
inline Field operator-(Field a, const Field& b) { return a -= b; }
inline Field operator*(cplx s, Field a) { return a *= s; }

/// Spinor field convenience constructor.
inline Field spinor_field(const Grid& g, bool fourier = false) { return Field(g, 2, fourier); }

/// Continuum inner product <a, b> = integral a^dag b.
inline cplx inner(const Field& a, const Field& b) {
  if (a.is_fourier() != b.is_fourier() || a.ncomp() != b.ncomp()) throw std::invalid_argument("inner: mismatch");
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.raw().size(); ++i) s += std::conj(a.raw()[i]) * b.raw()[i];
  return s * (a.is_fourier() ? a.grid().volume() : a.grid().cell_volume());
}

/// Same continuum function on another grid with the same n and L (zero padding or truncation).
/// Wave indices |k| >= min(N, N')/2 are dropped so the result stays real-symmetric.
inline Field spectral_resample(const Field& f, const Grid& to) {
  const Grid& from = f.grid();
  if (from.n != to.n || from.L != to.L) throw std::invalid_argument("spectral_resample: n and L must agree");
  Field h = f.is_fourier() ? f : f.fourier();
  Field out(to, f.ncomp(), true);
  int half = std::min(from.N, to.N) / 2;
  for (std::size_t p = 0; p < h.points(); ++p) {
    auto idx = from.unravel(p);
    std::size_t q = 0;
    bool keep = true;
    for (int a = 0; a < from.n; ++a) {
      int k = from.wave_index(idx[a]);
      if (std::abs(k) >= half) keep = false;
      q = q * to.N + static_cast<std::size_t>((k + to.N) % to.N);
    }
    if (!keep) continue;
    for (int c = 0; c < f.ncomp(); ++c) out.at(c, q) = h.at(c, p);
  }
  if (f.mean_zero()) out.zero_mean();
  if (!f.is_fourier()) out.to_physical();
  return out;
}

/// Spectral tail mass fraction beyond the 2/3 cutoff.
inline double spectral_tail_fraction(const Field& f) {
  Field h = f.is_fourier() ? f : f.fourier();
  int cut = h.grid().N / 3;
  double tail = 0.0, tot = 0.0;
  for (int c = 0; c < h.ncomp(); ++c)
    for (std::size_t p = 0; p < h.points(); ++p) {
      double w = std::norm(h.at(c, p));
      tot += w;
      if (h.grid().max_wave_index(p) > cut) tail += w;
    }
  return tot > 0.0 ? tail / tot : 0.0;
}

}  // namespace diraclab

#endif  // DIRACLAB_GRID_HPP
