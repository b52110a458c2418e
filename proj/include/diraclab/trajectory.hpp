#ifndef DIRACLAB_TRAJECTORY_HPP
#define DIRACLAB_TRAJECTORY_HPP

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "grid.hpp"

namespace diraclab {

/// Frames at t_k = t0 + k dt.
struct Trajectory {
  Grid grid;
  double t0 = 0.0;
  double dt = 0.05;
  std::vector<Field> frames;

  std::size_t size() const { return frames.size(); }
  double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
  double window() const { return dt * static_cast<double>(frames.size()); }

  void validate() const {
    if (frames.size() < 2) throw std::domain_error("Trajectory: at least two frames required");
    if (!(dt > 0.0)) throw std::domain_error("Trajectory: dt must be positive");
  }
};

/// Tukey window with flank fraction r (total, split over both ends).
inline double tukey(std::size_t k, std::size_t K, double r = 0.2) {
  if (r <= 0.0) return 1.0;
  double x = (static_cast<double>(k) + 0.5) / static_cast<double>(K);
  double h = r / 2.0;
  if (x < h) return 0.5 * (1.0 - std::cos(std::numbers::pi * x / h));
  if (x > 1.0 - h) return 0.5 * (1.0 - std::cos(std::numbers::pi * (1.0 - x) / h));
  return 1.0;
}

/// Space-time field on K time samples x spatial lattice; layout [k][comp][p].
/// In the transformed representation index k is the tau index.
class SpaceTime {
 public:
  SpaceTime() = default;
  SpaceTime(const Grid& g, int ncomp, std::size_t K, double dt)
      : grid_(g), lat_(lattice_for(g)), ncomp_(ncomp), K_(K), dt_(dt), data_(K * ncomp * g.size(), cplx(0.0)) {}

  /// Build from a trajectory; frames are moved to spatial Fourier space and tapered.
  static SpaceTime from_trajectory(const Trajectory& tr, double taper_fraction = 0.2) {
    tr.validate();
    const Field& f0 = tr.frames.front();
    SpaceTime st(tr.grid, f0.ncomp(), tr.size(), tr.dt);
    st.t0_ = tr.t0;
    std::size_t block = f0.ncomp() * f0.points();
    for (std::size_t k = 0; k < tr.size(); ++k) {
      Field h = tr.frames[k].is_fourier() ? tr.frames[k] : tr.frames[k].fourier();
      double w = tukey(k, tr.size(), taper_fraction);
      for (std::size_t i = 0; i < block; ++i) st.data_[k * block + i] = w * h.raw()[i];
    }
    st.taper_ = taper_fraction;
    return st;
  }

  const Grid& grid() const { return grid_; }
  const Lattice& lattice() const { return *lat_; }
  int ncomp() const { return ncomp_; }
  std::size_t steps() const { return K_; }
  double dt() const { return dt_; }
  double t0() const { return t0_; }
  bool in_tau() const { return tau_; }
  double taper() const { return taper_; }
  std::size_t block() const { return static_cast<std::size_t>(ncomp_) * grid_.size(); }

  cplx& at(std::size_t k, int c, std::size_t p) { return data_[k * block() + c * grid_.size() + p]; }
  const cplx& at(std::size_t k, int c, std::size_t p) const { return data_[k * block() + c * grid_.size() + p]; }
  std::vector<cplx>& raw() { return data_; }
  const std::vector<cplx>& raw() const { return data_; }

  /// Angular frequency of tau index m.
  double tau(std::size_t m) const {
    long K = static_cast<long>(K_);
    long j = static_cast<long>(m) < K / 2 ? static_cast<long>(m) : static_cast<long>(m) - K;
    return 2.0 * std::numbers::pi * static_cast<double>(j) / (static_cast<double>(K_) * dt_);
  }
  double dtau() const { return 2.0 * std::numbers::pi / (static_cast<double>(K_) * dt_); }

  /// F(t_k) = sum_m Ftilde_m e^{i tau_m (t_k - t0)}.
  void to_tau() {
    if (tau_) return;
    int howmany = static_cast<int>(block());
    fftw_plan p = FftPlans::get_1d_many(static_cast<int>(K_), howmany, howmany, 1, FFTW_FORWARD);
    auto* buf = reinterpret_cast<fftw_complex*>(data_.data());
    fftw_execute_dft(p, buf, buf);
    double s = 1.0 / static_cast<double>(K_);
    for (auto& c : data_) c *= s;
    tau_ = true;
  }
  void to_time() {
    if (!tau_) return;
    int howmany = static_cast<int>(block());
    fftw_plan p = FftPlans::get_1d_many(static_cast<int>(K_), howmany, howmany, 1, FFTW_BACKWARD);
    auto* buf = reinterpret_cast<fftw_complex*>(data_.data());
    fftw_execute_dft(p, buf, buf);
    tau_ = false;
  }

  /// Space-time L2 norm over the window (either representation).
  double l2() const {
    double s = 0.0;
    for (const auto& c : data_) s += std::norm(c);
    // spatial Fourier coefficients: integral over box = L^n sum |c|^2; time: dt sum or K dt sum over tau
    double w = grid_.volume() * (tau_ ? static_cast<double>(K_) * dt_ : dt_);
    return std::sqrt(s * w);
  }

  Trajectory to_trajectory() const {
    if (tau_) throw std::logic_error("SpaceTime: transform back to time first");
    Trajectory tr;
    tr.grid = grid_;
    tr.t0 = t0_;
    tr.dt = dt_;
    for (std::size_t k = 0; k < K_; ++k) {
      Field f(grid_, ncomp_, true);
      std::copy(data_.begin() + k * block(), data_.begin() + (k + 1) * block(), f.raw().begin());
      tr.frames.push_back(std::move(f));
    }
    return tr;
  }

 private:
  Grid grid_;
  std::shared_ptr<const Lattice> lat_;
  int ncomp_ = 2;
  std::size_t K_ = 0;
  double dt_ = 0.0;
  double t0_ = 0.0;
  double taper_ = 0.0;
  bool tau_ = false;
  std::vector<cplx> data_;
};

}  // namespace diraclab

#endif  // DIRACLAB_TRAJECTORY_HPP
