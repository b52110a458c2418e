#ifndef DIRACLAB_NULL_FRAMES_HPP
#define DIRACLAB_NULL_FRAMES_HPP

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "grid.hpp"
#include "multipliers.hpp"

namespace diraclab {

inline const double kSqrt2 = std::sqrt(2.0);

/// Null frame generated by theta = (1, omega)/sqrt(2).
struct NullFrame {
  Direction omega;
  explicit NullFrame(const Direction& w) : omega(w) {}
  int n() const { return omega.n; }
};

struct NullCoords {
  double t_omega = 0.0;
  double x1 = 0.0;    // (t - omega.x)/sqrt(2)
  RVec xperp{};       // component of x orthogonal to omega
  RVec x_omega{};     // xperp - x1 omega / sqrt(2)
};

struct DualNullCoords {
  double tau_omega = 0.0;
  double xi1 = 0.0;   // (tau - omega.xi)/sqrt(2)
  RVec xiperp{};
  RVec xi_omega{};    // xi - tau omega = xiperp - sqrt(2) xi1 omega
};

inline RVec perp_part(const RVec& v, const RVec& w) { return rsub(v, rscale(rdot(v, w), w)); }

inline NullCoords to_null(const NullFrame& f, double t, const RVec& x) {
  const RVec& w = f.omega.w;
  double ox = rdot(w, x);
  NullCoords c;
  c.t_omega = (t + ox) / kSqrt2;
  c.x1 = (t - ox) / kSqrt2;
  c.xperp = perp_part(x, w);
  c.x_omega = rsub(c.xperp, rscale(c.x1 / kSqrt2, w));
  return c;
}

/// Inverse: t = (t_omega + x1)/sqrt(2), x = xperp + (t_omega - x1) omega / sqrt(2).
inline std::pair<double, RVec> from_null(const NullFrame& f, const NullCoords& c) {
  double t = (c.t_omega + c.x1) / kSqrt2;
  RVec x = radd(c.xperp, rscale((c.t_omega - c.x1) / kSqrt2, f.omega.w));
  return {t, x};
}

/// Inverse from (t_omega, x_omega) alone.
inline std::pair<double, RVec> from_null_plane(const NullFrame& f, double t_omega, const RVec& x_omega) {
  const RVec& w = f.omega.w;
  double x1 = -kSqrt2 * rdot(x_omega, w);
  RVec xperp = perp_part(x_omega, w);
  return from_null(f, NullCoords{t_omega, x1, xperp, x_omega});
}

inline DualNullCoords to_dual_null(const NullFrame& f, double tau, const RVec& xi) {
  const RVec& w = f.omega.w;
  double oxi = rdot(w, xi);
  DualNullCoords d;
  d.tau_omega = (tau + oxi) / kSqrt2;
  d.xi1 = (tau - oxi) / kSqrt2;
  d.xiperp = perp_part(xi, w);
  d.xi_omega = rsub(xi, rscale(tau, w));
  return d;
}

/// 2 tau_omega xi1 - |xiperp|^2, which equals tau^2 - |xi|^2.
inline double null_symbol(const DualNullCoords& d) { return 2.0 * d.tau_omega * d.xi1 - rdot(d.xiperp, d.xiperp); }

/// Euclidean pairing in null coordinates.
inline double null_pairing(const DualNullCoords& d, const NullCoords& c) {
  return d.tau_omega * c.t_omega + rdot(d.xi_omega, c.x_omega);
}

/// Angle from omega to the closed cap (0 inside).
inline double angle_to_cap(const RVec& w, const Cap& cap) { return std::max(0.0, angle(w, cap.center.w) - cap.alpha); }

// ---- dual-coordinate support bounds ----

struct DualBoundReport {
  std::size_t samples = 0;
  double theta = 0.0;           // angle from omega to the cap center
  bool outside_2kappa = false;
  double max_xi1 = 0.0;         // max |xi1| / ((max{alpha, theta})^2 lambda)
  double max_xiperp = 0.0;      // max |xiperp| / (max{alpha, theta} lambda)
  double max_tau_omega = 0.0;   // max |tau_omega| / lambda
  double min_xi1 = std::numeric_limits<double>::infinity();  // min |xi1| / (theta^2 lambda), outside 2 kappa
};

inline DualBoundReport dual_support_bounds(const NullFrame& f, double alpha, double lambda, const Cap& cap,
                                           const std::vector<std::pair<double, RVec>>& points) {
  if (points.empty()) throw std::domain_error("dual_support_bounds: empty sample");
  DualBoundReport r;
  r.samples = points.size();
  r.theta = angle(f.omega.w, cap.center.w);
  r.outside_2kappa = r.theta > 2.0 * cap.alpha;
  double m = std::max(alpha, r.theta);
  for (const auto& [tau, xi] : points) {
    auto d = to_dual_null(f, tau, xi);
    r.max_xi1 = std::max(r.max_xi1, std::abs(d.xi1) / (m * m * lambda));
    r.max_xiperp = std::max(r.max_xiperp, rnorm(d.xiperp) / (m * lambda));
    r.max_tau_omega = std::max(r.max_tau_omega, std::abs(d.tau_omega) / lambda);
    if (r.outside_2kappa) r.min_xi1 = std::min(r.min_xi1, std::abs(d.xi1) / (r.theta * r.theta * lambda));
  }
  return r;
}

/// Uniform samples of A^{+-}_{alpha,lambda}(kappa) realized through the A_{alpha,lambda} set on the
/// forward (tau > 0) sheet; points are drawn in polar form and filtered by the predicate.
inline std::vector<std::pair<double, RVec>> sample_A_alpha(int n, double alpha, double lambda, const Cap& cap, double c,
                                                           std::size_t count, std::uint64_t seed,
                                                           double enlarge = 1.0, int tau_sign = +1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<std::pair<double, RVec>> out;
  out.reserve(count);
  SetTest st{false, enlarge};
  std::size_t guard = 0;
  while (out.size() < count) {
    if (++guard > 1000 * count + 100000) throw std::runtime_error("sample_A_alpha: rejection sampling stalled");
    double r = lambda * (0.5 / enlarge + (2.0 * enlarge - 0.5 / enlarge) * 0.5 * (1.0 + U(rng)));
    RVec dir{};
    if (n == 1) {
      dir = cap.center.w;
    } else {
      // perturb the center inside the cap
      RVec v = cap.center.w;
      for (int i = 0; i < n; ++i) v[i] += enlarge * cap.alpha * U(rng);
      dir = rscale(1.0 / rnorm(v), v);
    }
    RVec xi = rscale(r * tau_sign, dir);
    double tau = tau_sign * (r + enlarge * c * alpha * alpha * lambda * U(rng));
    if (in_A_alpha(tau, xi, alpha, lambda, cap, c, st)) out.emplace_back(tau, xi);
  }
  return out;
}

// ---- null projections ----

struct OverlapReport {
  std::size_t max_overlap = 0;
  std::size_t caps = 0;
  std::size_t cells = 0;
};

/// Pr_omega(A) = A + (1, omega)R is described by the invariant coordinates (xi1, xiperp).
/// Each natural set is sampled, projected and rasterized; the result is the largest number of
/// projected sets sharing a raster cell (n = 2).
inline OverlapReport null_projection_overlap(const Direction& omega, double alpha, double lambda,
                                             const std::vector<Cap>& caps, double c = 1.0 / 32.0,
                                             std::size_t samples_per_cap = 20000, std::uint64_t seed = 1) {
  if (omega.n != 2) throw std::domain_error("null_projection_overlap: n = 2 only");
  OverlapReport rep;
  rep.caps = caps.size();
  NullFrame f(omega);
  RVec wp{-omega.w[1], omega.w[0], 0.0};
  double h = alpha * lambda / 8.0;
  std::map<std::pair<long, long>, std::vector<std::size_t>> cells;
  for (std::size_t j = 0; j < caps.size(); ++j) {
    if (angle(omega.w, caps[j].center.w) <= 2.0 * caps[j].alpha)
      throw std::domain_error("null_projection_overlap: omega inside 2 kappa");
    for (int sg : {+1, -1}) {
      auto pts = sample_A_alpha(2, alpha, lambda, caps[j], c, samples_per_cap / 2, seed + 7 * j + (sg > 0), kNatural, sg);
      for (const auto& [tau, xi] : pts) {
        auto d = to_dual_null(f, tau, xi);
        long a = static_cast<long>(std::floor(d.xi1 / h));
        long b = static_cast<long>(std::floor(rdot(d.xiperp, wp) / h));
        auto& v = cells[{a, b}];
        if (v.empty() || v.back() != j) v.push_back(j);
      }
    }
  }
  rep.cells = cells.size();
  for (auto& [k, v] : cells) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    rep.max_overlap = std::max(rep.max_overlap, v.size());
  }
  return rep;
}

struct ConeSliceReport {
  std::size_t tested = 0;
  std::size_t violations = 0;
  std::size_t angular_violations = 0;
  double worst_angle_ratio = 0.0;  // max angle to center / (3/2 alpha), over both caps
  double min_radius = std::numeric_limits<double>::infinity();  // of |xi| / lambda
  double max_radius = 0.0;
};

/// Cone points of Pr_omega[natA_{alpha,lambda}(kappa) cap natA_{beta,lambda}(kbar)] checked for
/// membership in natA_lambda(3/2 kappa) cap natA_lambda(3/2 kbar).
inline ConeSliceReport cone_slice_inclusion(const Direction& omega, double alpha, double beta, double lambda,
                                            const Cap& kappa, const Cap& kbar, double c, std::size_t samples,
                                            std::uint64_t seed) {
  ConeSliceReport rep;
  NullFrame f(omega);
  Cap k32{kappa.center, 1.5 * kappa.alpha}, b32{kbar.center, 1.5 * kbar.alpha};
  SetTest nat{false, kNatural};
  for (int sg : {+1, -1}) {
    auto pts = sample_A_alpha(omega.n, beta, lambda, kbar, c, samples, seed + (sg > 0), kNatural, sg);
    for (const auto& [tau0, xi0] : pts) {
      if (!in_A_alpha(tau0, xi0, alpha, lambda, kappa, c, nat)) continue;
      // shift along (1, omega) onto the cone: (tau+s)^2 = |xi + s omega|^2
      double den = 2.0 * (tau0 - rdot(omega.w, xi0));
      if (den == 0.0) continue;
      double s = (rdot(xi0, xi0) - tau0 * tau0) / den;
      double tau = tau0 + s;
      RVec xi = radd(xi0, rscale(s, omega.w));
      ++rep.tested;
      double r = rnorm(xi);
      rep.min_radius = std::min(rep.min_radius, r / lambda);
      rep.max_radius = std::max(rep.max_radius, r / lambda);
      RVec dir = rscale((tau > 0 ? 1.0 : -1.0) / r, xi);
      double ra = std::max(angle(dir, kappa.center.w) / k32.alpha, angle(dir, kbar.center.w) / b32.alpha);
      rep.worst_angle_ratio = std::max(rep.worst_angle_ratio, ra);
      if (ra > kNatural) ++rep.angular_violations;
      if (!in_A(tau, xi, lambda, k32, nat) || !in_A(tau, xi, lambda, b32, nat)) ++rep.violations;
    }
  }
  return rep;
}

// ---- angle estimates ----

struct AngleEstimate {
  double lhs = 0.0;  // theta(xi + xi', +-xi')^2
  double rhs = 0.0;  // ||xi+xi'| -+ |xi'| - |xi|| ||xi+xi'| -+ |xi'| + |xi|| / (|xi+xi'| |xi'|)
};

inline AngleEstimate angle_estimates(const RVec& xi, const RVec& xip, int sign) {
  RVec s = radd(xi, xip);
  double a = rnorm(s), b = rnorm(xip), c = rnorm(xi);
  if (a == 0.0 || b == 0.0) throw std::domain_error("angle_estimates: degenerate vectors");
  double th = angle(s, rscale(static_cast<double>(sign), xip));
  double m = a - sign * b;
  return {th * th, std::abs(m - c) * std::abs(m + c) / (a * b)};
}

/// |omega - omega'| = 2 sin(theta/2); the sharp bounds are (49/50) theta <= |omega - omega'| <= theta.
inline double chord(double theta) { return 2.0 * std::sin(theta / 2.0); }

// ---- null-plane sampler ----

/// Smooth time cutoff: 1 on [-1/2, 1/2], 0 outside (-1, 1).
inline double time_cutoff(double s) { return bump::psi(2.0 * std::abs(s)); }

enum class PlaneChannel { Plus = 0, Minus = 1, Full = 2 };

/// Per-plane norms of Pi_{+omega} u, Pi_{-omega} u and u on the planes t + omega.x = i dt,
/// that is t_omega = i dt / sqrt(2). Frames are streamed; each (interval, point) pair hits
/// exactly one plane and the value is cubic-Lagrange interpolated in t.
class NullPlaneSampler {
 public:
  NullPlaneSampler(const Grid& g, double t0, double dt, std::size_t frames, std::vector<Direction> dirs)
      : grid_(g), lat_(lattice_for(g)), t0_(t0), dt_(dt), K_(frames), dirs_(std::move(dirs)) {
    if (K_ < 4) throw std::domain_error("NullPlaneSampler: at least four frames required");
    double R = 0.5 * g.L * std::sqrt(static_cast<double>(g.n)) + g.dx();
    imin_ = static_cast<long>(std::floor((t0_ - R) / dt_)) - 2;
    long imax = static_cast<long>(std::ceil((t0_ + dt_ * static_cast<double>(K_) + R) / dt_)) + 2;
    planes_ = static_cast<std::size_t>(imax - imin_ + 1);
    for (auto& d : dirs_) {
      proj_.push_back({projector(d), projector(-d)});
      sup_.push_back(std::vector<std::vector<double>>(3, std::vector<double>(planes_, 0.0)));
      sq_.push_back(std::vector<std::vector<double>>(3, std::vector<double>(planes_, 0.0)));
    }
  }

  /// Frames must arrive in order, two components, either representation.
  void feed(const Field& frame) {
    Field f = frame.is_fourier() ? frame.physical() : frame;
    buf_.push_back(std::move(f));
    std::size_t j = received_++;
    if (j == 3) process(0, 0);
    if (j >= 3) process(j - 2, j - 3);
    if (buf_.size() > 4) buf_.pop_front(), base_++;
    if (received_ == K_) process(K_ - 2, K_ - 4);
  }

  bool complete() const { return received_ == K_; }
  std::size_t planes() const { return planes_; }
  double plane_spacing() const { return dt_ / kSqrt2; }
  double t_omega(std::size_t i) const { return static_cast<double>(static_cast<long>(i) + imin_) * dt_ / kSqrt2; }
  const std::vector<Direction>& directions() const { return dirs_; }

  /// L^q_{t_omega} L^r_{x_omega} of the channel; q, r in {1, 2, inf} (r in {2, inf}).
  double norm(std::size_t d, PlaneChannel ch, double q, double r) const {
    const auto& sup = sup_[d][static_cast<int>(ch)];
    const auto& sq = sq_[d][static_cast<int>(ch)];
    double acc = 0.0;
    for (std::size_t i = 0; i < planes_; ++i) {
      double v = std::isinf(r) ? sup[i] : std::sqrt(sq[i]);
      if (std::isinf(q))
        acc = std::max(acc, v);
      else
        acc += std::pow(v, q) * plane_spacing();
    }
    return std::isinf(q) ? acc : std::pow(acc, 1.0 / q);
  }

 private:
  // interval k = [t_k, t_{k+1}], interpolation nodes first .. first+3
  void process(std::size_t k, std::size_t first) {
    const Field* nodes[4];
    for (int a = 0; a < 4; ++a) nodes[a] = &buf_.at(first + a - base_);
    double tk = t0_ + dt_ * static_cast<double>(k);
    double off = static_cast<double>(k) - static_cast<double>(first);  // position of t_k in node units
    double cv = grid_.cell_volume();
    std::size_t M = grid_.size();
    for (std::size_t d = 0; d < dirs_.size(); ++d) {
      const RVec& w = dirs_[d].w;
      const Mat2& Pp = proj_[d].first;
      const Mat2& Pm = proj_[d].second;
      auto& sp = sup_[d];
      auto& sq = sq_[d];
      for (std::size_t p = 0; p < M; ++p) {
        double u = (tk + rdot(w, lat_->x[p])) / dt_;
        double ic = std::ceil(u);
        double th = ic - u;  // t = t_k + th dt, th in [0, 1)
        std::size_t i = static_cast<std::size_t>(static_cast<long>(ic) - imin_);
        double x = off + th;  // node coordinate
        double L[4];
        for (int a = 0; a < 4; ++a) {
          double v = 1.0;
          for (int b = 0; b < 4; ++b)
            if (b != a) v *= (x - b) / static_cast<double>(a - b);
          L[a] = v;
        }
        Spinor s{};
        for (int a = 0; a < 4; ++a) {
          s[0] += L[a] * nodes[a]->at(0, p);
          s[1] += L[a] * nodes[a]->at(1, p);
        }
        Spinor sp_ = Pp * s, sm_ = Pm * s;
        double m2[3] = {std::norm(sp_[0]) + std::norm(sp_[1]), std::norm(sm_[0]) + std::norm(sm_[1]),
                        std::norm(s[0]) + std::norm(s[1])};
        for (int c = 0; c < 3; ++c) {
          sp[c][i] = std::max(sp[c][i], std::sqrt(m2[c]));
          sq[c][i] += m2[c] * cv;
        }
      }
    }
  }

  Grid grid_;
  std::shared_ptr<const Lattice> lat_;
  double t0_, dt_;
  std::size_t K_;
  std::vector<Direction> dirs_;
  std::vector<std::pair<Mat2, Mat2>> proj_;
  long imin_ = 0;
  std::size_t planes_ = 0;
  std::deque<Field> buf_;
  std::size_t base_ = 0;
  std::size_t received_ = 0;
  std::vector<std::vector<std::vector<double>>> sup_, sq_;
};

/// Full-rate and half-rate samplers fed together; the difference estimates the interpolation error.
class NullPlanePair {
 public:
  NullPlanePair(const Grid& g, double t0, double dt, std::size_t frames, const std::vector<Direction>& dirs)
      : full_(g, t0, dt, frames, dirs), half_(g, t0, 2.0 * dt, (frames + 1) / 2, dirs) {}
  void feed(const Field& f) {
    if (count_ % 2 == 0) half_.feed(f);
    full_.feed(f);
    ++count_;
  }
  const NullPlaneSampler& full() const { return full_; }
  const NullPlaneSampler& half() const { return half_; }

  /// Value and frame-halving error estimate.
  std::pair<double, double> norm(std::size_t d, PlaneChannel ch, double q, double r) const {
    double a = full_.norm(d, ch, q, r), b = half_.norm(d, ch, q, r);
    return {a, std::abs(a - b)};
  }

 private:
  NullPlaneSampler full_, half_;
  std::size_t count_ = 0;
};

}  // namespace diraclab

#endif  // DIRACLAB_NULL_FRAMES_HPP
