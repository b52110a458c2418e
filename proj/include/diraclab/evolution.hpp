#ifndef DIRACLAB_EVOLUTION_HPP
#define DIRACLAB_EVOLUTION_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"
#include "multipliers.hpp"
#include "null_frames.hpp"
#include "trajectory.hpp"

namespace diraclab {

// ---- linear flows ----

/// Generator blocks. Each block evolves by exp(-i t D(xi)) with D^2 = E^2 I.
///   Plus:   D = sigma.xi        ((d_t + sigma.grad) u = 0)
///   Minus:  D = -sigma.xi       ((d_t - sigma.grad) v = 0)
///   Dirac2: D = sigma.xi + m sigma^3   (n = 2 psi-form, alpha_j = sigma_j)
///   Dirac4: D = alpha.xi + m beta      (n = 3 psi-form, Dirac representation)
enum class BlockKind { Plus, Minus, Dirac2, Dirac4 };

struct LinearBlock {
  int first = 0;
  BlockKind kind = BlockKind::Plus;
  int dim() const { return kind == BlockKind::Dirac4 ? 4 : 2; }
};

inline Mat4 alpha3(int j) { return gamma3(0) * gamma3(j); }

class Propagator {
 public:
  /// Per-mode matrices exp(-i t D) for every block, flattened row-major.
  struct Table {
    double t = 0.0;
    std::vector<std::vector<cplx>> blocks;
  };

  Propagator() = default;
  Propagator(const Grid& g, std::vector<LinearBlock> blocks, double mass = 0.0)
      : grid_(g), lat_(lattice_for(g)), blocks_(std::move(blocks)), mass_(mass) {
    if (mass < 0.0) throw std::domain_error("Propagator: mass must be >= 0");
    for (const auto& b : blocks_) {
      if (b.kind == BlockKind::Dirac2 && g.n != 2) throw std::domain_error("Propagator: Dirac2 block needs n = 2");
      if (b.kind == BlockKind::Dirac4 && g.n != 3) throw std::domain_error("Propagator: Dirac4 block needs n = 3");
      ncomp_ = std::max(ncomp_, b.first + b.dim());
    }
  }

  /// U_+ (sign = +1) or U_- (sign = -1) on every consecutive spinor pair.
  static Propagator half_wave(const Grid& g, int sign, int ncomp = 2) {
    if (ncomp % 2 != 0) throw std::domain_error("Propagator: component count must be even");
    std::vector<LinearBlock> bl;
    for (int c = 0; c < ncomp; c += 2) bl.push_back({c, sign > 0 ? BlockKind::Plus : BlockKind::Minus});
    return Propagator(g, bl);
  }

  const Grid& grid() const { return grid_; }
  int ncomp() const { return ncomp_; }
  double mass() const { return mass_; }
  const std::vector<LinearBlock>& blocks() const { return blocks_; }

  Mat2 generator2(const LinearBlock& b, const RVec& xi) const {
    Mat2 s = sigma_dot(grid_.n, xi);
    switch (b.kind) {
      case BlockKind::Plus: return s;
      case BlockKind::Minus: return s * cplx(-1.0);
      case BlockKind::Dirac2: return s + pauli::s3() * cplx(mass_);
      default: throw std::logic_error("generator2: 4x4 block");
    }
  }
  Mat4 generator4(const RVec& xi) const {
    Mat4 D = gamma3(0) * cplx(mass_);
    for (int j = 0; j < 3; ++j) D += alpha3(j + 1) * cplx(xi[j]);
    return D;
  }
  double energy(const LinearBlock& b, double absxi) const {
    if (b.kind == BlockKind::Dirac2 || b.kind == BlockKind::Dirac4) return std::sqrt(absxi * absxi + mass_ * mass_);
    return absxi;
  }

  Table table(double t) const {
    Table tb;
    tb.t = t;
    std::size_t M = grid_.size();
    for (const auto& b : blocks_) {
      int d = b.dim();
      std::vector<cplx> m(M * d * d);
      for (std::size_t p = 0; p < M; ++p) {
        double E = energy(b, lat_->absxi[p]);
        double c = std::cos(t * E);
        double s = E > 0.0 ? std::sin(t * E) / E : t;
        cplx* out = m.data() + p * d * d;
        if (d == 2) {
          Mat2 U = Mat2::identity() * cplx(c) - generator2(b, lat_->xi[p]) * (I_unit * s);
          for (int i = 0; i < 4; ++i) out[i] = U.a[i];
        } else {
          Mat4 U = Mat4::identity() * cplx(c) - generator4(lat_->xi[p]) * (I_unit * s);
          for (int i = 0; i < 16; ++i) out[i] = U.a[i];
        }
      }
      tb.blocks.push_back(std::move(m));
    }
    return tb;
  }

  /// In-place application; f must be in the Fourier representation.
  void apply(Field& f, const Table& tb) const {
    if (!f.is_fourier()) throw std::logic_error("Propagator: field must be in Fourier representation");
    if (f.ncomp() < ncomp_) throw std::invalid_argument("Propagator: too few components");
    std::size_t M = grid_.size();
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
      const auto& b = blocks_[bi];
      const cplx* m = tb.blocks[bi].data();
      if (b.dim() == 2) {
        cplx* x0 = f.comp(b.first);
        cplx* x1 = f.comp(b.first + 1);
        for (std::size_t p = 0; p < M; ++p) {
          const cplx* A = m + 4 * p;
          cplx a = x0[p], c = x1[p];
          x0[p] = A[0] * a + A[1] * c;
          x1[p] = A[2] * a + A[3] * c;
        }
      } else {
        cplx* x[4] = {f.comp(b.first), f.comp(b.first + 1), f.comp(b.first + 2), f.comp(b.first + 3)};
        for (std::size_t p = 0; p < M; ++p) {
          const cplx* A = m + 16 * p;
          cplx in[4] = {x[0][p], x[1][p], x[2][p], x[3][p]};
          for (int r = 0; r < 4; ++r)
            x[r][p] = A[4 * r] * in[0] + A[4 * r + 1] * in[1] + A[4 * r + 2] * in[2] + A[4 * r + 3] * in[3];
        }
      }
    }
  }

  void apply(Field& f, double t) const {
    bool was_physical = !f.is_fourier();
    f.to_fourier();
    apply(f, table(t));
    if (was_physical) f.to_physical();
  }

 private:
  Grid grid_;
  std::shared_ptr<const Lattice> lat_;
  std::vector<LinearBlock> blocks_;
  double mass_ = 0.0;
  int ncomp_ = 0;
};

/// U_+(t) f (sign = +1) or U_-(t) f (sign = -1); returns the same representation as f.
inline Field free_evolve(const Field& f, double t, int sign) {
  Field out = f;
  Propagator::half_wave(f.grid(), sign, f.ncomp()).apply(out, t);
  return out;
}

// ---- traveling-wave decomposition ----

/// Free solution of (d_t - sigma.grad) v = 0 written as a sum over directions of Pi g_omega(t + x.omega).
/// Each lattice mode is assigned to the direction nearest xi/|xi| (phase e^{+i r a}) and to the direction
/// nearest -xi/|xi| (phase e^{-i r a}). The projector acts at the exact mode direction; the angular
/// quantization enters only through the phase.
struct FreeWaveAverage {
  struct Term {
    RVec xi{};
    double r = 0.0;
    int sgn = +1;
    Spinor raw{};
  };
  int n = 2;
  Grid grid;
  std::vector<Direction> dirs;
  std::vector<double> weights;  // surface measure per direction
  std::vector<std::vector<Term>> terms;

  /// g_{omega_j}(a), unprojected.
  Spinor profile(std::size_t j, double a) const {
    Spinor s{};
    for (const auto& tm : terms[j]) s = s + std::polar(1.0, tm.sgn * tm.r * a) * tm.raw;
    return s * cplx(1.0 / weights[j]);
  }

  std::vector<std::vector<Spinor>> sample_profiles(const std::vector<double>& a) const {
    std::vector<std::vector<Spinor>> out(dirs.size());
    for (std::size_t j = 0; j < dirs.size(); ++j)
      for (double s : a) out[j].push_back(profile(j, s));
    return out;
  }

  /// Sum_j w_j Pi g_{omega_j}(t + x.omega_j) on the grid (physical representation).
  Field reassemble(double t) const {
    Field v(grid, 2, false);
    const auto& lat = *lattice_for(grid);
    for (std::size_t j = 0; j < dirs.size(); ++j)
      for (const auto& tm : terms[j]) {
        Spinor c = projector_of(n, tm.xi, tm.sgn) * tm.raw;
        for (std::size_t p = 0; p < v.points(); ++p) {
          cplx e = std::polar(1.0, tm.sgn * tm.r * (t + rdot(lat.x[p], dirs[j].w)));
          v.at(0, p) += e * c[0];
          v.at(1, p) += e * c[1];
        }
      }
    return v;
  }

  /// Lattice mass carried by direction j (projected coefficients).
  double direction_mass(std::size_t j) const {
    double s = 0.0;
    for (const auto& tm : terms[j]) s += std::norm(norm<2>(projector_of(n, tm.xi, tm.sgn) * tm.raw));
    return std::sqrt(s * grid.volume());
  }

  /// Quadrature of the angular L1 norm  int ||g_omega||_{L2(da)} dS  in continuum units.
  double angular_l1() const {
    double dkn = std::pow(grid.dk(), n);
    double acc = 0.0;
    for (std::size_t j = 0; j < dirs.size(); ++j) {
      double s = 0.0;
      for (const auto& tm : terms[j]) s += std::norm(norm<2>(tm.raw)) * std::pow(tm.r, n - 1);
      acc += weights[j] * std::sqrt(2.0 * std::numbers::pi * s / (dkn * weights[j]));
    }
    return acc;
  }
};

inline std::vector<Direction> sphere_directions(int n, int count) {
  std::vector<Direction> d;
  if (n == 2) {
    for (int j = 0; j < count; ++j) d.push_back(Direction::angle2(2.0 * std::numbers::pi * j / count));
  } else {
    double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int j = 0; j < count; ++j) {
      double z = 1.0 - 2.0 * (j + 0.5) / count;
      double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      d.push_back(Direction::normalized(3, {r * std::cos(golden * j), r * std::sin(golden * j), z}));
    }
  }
  return d;
}

inline FreeWaveAverage traveling_wave_decompose(const Field& g, int n_dirs) {
  int n = g.grid().n;
  if (n != 2 && n != 3) throw std::domain_error("traveling_wave_decompose: n must be 2 or 3");
  if (g.ncomp() != 2) throw std::invalid_argument("traveling_wave_decompose: spinor field expected");
  int min_dirs = n == 2 ? 4 : 8;
  if (n_dirs < min_dirs)
    throw std::range_error("traveling_wave_decompose: insufficient angular resolution, need at least " +
                           std::to_string(min_dirs) + " directions");
  FreeWaveAverage fw;
  fw.n = n;
  fw.grid = g.grid();
  fw.dirs = sphere_directions(n, n_dirs);
  double area = n == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi;
  fw.weights.assign(n_dirs, area / n_dirs);
  fw.terms.resize(n_dirs);

  Field h = g.is_fourier() ? g : g.fourier();
  const auto& lat = h.lattice();
  double cutoff = 0.0;
  for (std::size_t p = 0; p < h.points(); ++p) cutoff = std::max(cutoff, norm<2>(h.spinor(p)));
  cutoff *= 1e-15;
  // directions tied for nearest share the mode equally, which keeps lattice symmetries exact
  auto assign = [&](const RVec& u, const FreeWaveAverage::Term& tm) {
    double bd = -2.0;
    for (const auto& d : fw.dirs) bd = std::max(bd, rdot(u, d.w));
    std::vector<std::size_t> tied;
    for (std::size_t j = 0; j < fw.dirs.size(); ++j)
      if (rdot(u, fw.dirs[j].w) >= bd - 1e-12) tied.push_back(j);
    for (std::size_t j : tied) {
      FreeWaveAverage::Term t = tm;
      t.raw = t.raw * cplx(1.0 / static_cast<double>(tied.size()));
      fw.terms[j].push_back(t);
    }
  };
  for (std::size_t p = 0; p < h.points(); ++p) {
    double r = lat.absxi[p];
    Spinor c = h.spinor(p);
    if (r == 0.0 || norm<2>(c) <= cutoff) continue;
    RVec u = rscale(1.0 / r, lat.xi[p]);
    assign(u, {lat.xi[p], r, +1, c});
    assign(rscale(-1.0, u), {lat.xi[p], r, -1, c});
  }
  return fw;
}

// ---- Duhamel ----

/// Weights w_i = int_0^1 l_i(x) dx for the Lagrange basis on nodes i - s, i = 0..q-1.
inline std::vector<double> lagrange_interval_weights(int q, int s) {
  std::vector<double> w(q, 0.0);
  for (int i = 0; i < q; ++i) {
    // coefficients of prod_{j != i} (x - (j - s)) / ((i - s) - (j - s))
    std::vector<double> poly{1.0};
    double den = 1.0;
    for (int j = 0; j < q; ++j) {
      if (j == i) continue;
      double root = j - s;
      std::vector<double> next(poly.size() + 1, 0.0);
      for (std::size_t k = 0; k < poly.size(); ++k) {
        next[k + 1] += poly[k];
        next[k] -= root * poly[k];
      }
      poly = std::move(next);
      den *= static_cast<double>(i - j);
    }
    double integral = 0.0;
    for (std::size_t k = 0; k < poly.size(); ++k) integral += poly[k] / static_cast<double>(k + 1);
    w[i] = integral / den;
  }
  return w;
}

/// u(t) = int_{t0}^t U_sign(t - s) F(s) ds on the frames of F.
/// Interaction picture w' = U(-s) F(s), integrated with piecewise Lagrange weights of the given even
/// order (4: cubic, local error O(dt^5)); stencils are centred and shifted inward at the ends.
inline Trajectory duhamel(const Trajectory& F, int sign, int order = 4) {
  F.validate();
  if (order < 2 || order % 2 != 0) throw std::domain_error("duhamel: order must be even and >= 2");
  const Grid& g = F.grid;
  std::size_t K = F.size();
  int nc = F.frames.front().ncomp();
  Propagator prop = Propagator::half_wave(g, sign, nc);
  int q = std::min<int>(order, static_cast<int>(K));

  std::vector<Field> G;
  G.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    Field h = F.frames[k].is_fourier() ? F.frames[k] : F.frames[k].fourier();
    prop.apply(h, -static_cast<double>(k) * F.dt);
    G.push_back(std::move(h));
  }

  std::vector<std::vector<double>> wcache(q);
  auto interval = [&](std::size_t k, Field& acc) {
    long first = static_cast<long>(k) - (q / 2 - 1);
    first = std::clamp(first, 0L, static_cast<long>(K) - q);
    int s = static_cast<int>(static_cast<long>(k) - first);
    if (wcache[s].empty()) wcache[s] = lagrange_interval_weights(q, s);
    for (int i = 0; i < q; ++i) acc.axpy(F.dt * wcache[s][i], G[first + i]);
  };

  Trajectory out;
  out.grid = g;
  out.t0 = F.t0;
  out.dt = F.dt;
  Field W(g, nc, true);
  out.frames.push_back(W);
  for (std::size_t k = 0; k + 1 < K; ++k) {
    interval(k, W);
    Field u = W;
    prop.apply(u, static_cast<double>(k + 1) * F.dt);
    out.frames.push_back(std::move(u));
  }
  return out;
}

// ---- fundamental solution in null coordinates ----

struct NullSolution {
  SpaceTime u;          // full solution, tau representation
  SpaceTime free_part;  // superposition of free waves, +-(sigma.xi_omega / a) Pi_{+-omega} u
  SpaceTime elliptic;   // G = -(omega.grad_{x_omega})^{-1} Pi_{-+omega} F
  double min_a = std::numeric_limits<double>::infinity();     // min |omega.xi_omega| over support
  double min_cone = std::numeric_limits<double>::infinity();  // min ||tau| - |xi|| over support
};

/// Periodic-in-time solution of (d_t + sign sigma.grad) u = F built mode by mode from the null-coordinate system
///   Pi_{-+w} u = +-(sigma.xi^perp / a) Pi_{+-w} u - Pi_{-+w} F / (i a),
///   i (sqrt2 tau_w + |xi^perp|^2 / a) Pi_{+-w} u = Pi_{+-w} F +- (sigma.xi^perp / a) Pi_{-+w} F,
/// with a = omega.xi_omega = omega.xi - tau. Support closer than `threshold` to a = 0 throws.
inline NullSolution null_fundamental_solution(const SpaceTime& F, const NullFrame& frame, int sign,
                                              double threshold = 1e-8) {
  if (F.ncomp() != 2) throw std::invalid_argument("null_fundamental_solution: spinor field expected");
  const Grid& g = F.grid();
  if (frame.n() != g.n) throw std::domain_error("null_fundamental_solution: frame dimension mismatch");
  SpaceTime Ft = F;
  Ft.to_tau();
  NullSolution out{Ft, Ft, Ft};
  const auto& lat = Ft.lattice();
  const RVec& w = frame.omega.w;
  double s = sign > 0 ? 1.0 : -1.0;
  Mat2 Pp = projector_of(g.n, w, sign > 0 ? +1 : -1);
  Mat2 Pm = projector_of(g.n, w, sign > 0 ? -1 : +1);
  double peak = 0.0;
  for (const auto& c : Ft.raw()) peak = std::max(peak, std::abs(c));
  double floor = peak * 1e-14;

  for (std::size_t m = 0; m < Ft.steps(); ++m) {
    double tau = Ft.tau(m);
    for (std::size_t p = 0; p < g.size(); ++p) {
      Spinor c{Ft.at(m, 0, p), Ft.at(m, 1, p)};
      if (norm<2>(c) <= floor) {
        for (auto* st : {&out.u, &out.free_part, &out.elliptic}) st->at(m, 0, p) = st->at(m, 1, p) = 0.0;
        continue;
      }
      DualNullCoords d = to_dual_null(frame, tau, lat.xi[p]);
      double a = rdot(w, d.xi_omega);
      out.min_a = std::min(out.min_a, std::abs(a));
      out.min_cone = std::min(out.min_cone, std::abs(std::abs(tau) - lat.absxi[p]));
      if (std::abs(a) < threshold)
        throw std::domain_error("null_fundamental_solution: support touches the null plane, min |omega.xi_omega| = " +
                                std::to_string(std::abs(a)));
      Mat2 sp = sigma_dot(g.n, d.xiperp);
      Spinor cp = Pp * c, cm = Pm * c;
      double perp2 = rdot(d.xiperp, d.xiperp);
      cplx den = I_unit * (kSqrt2 * d.tau_omega + perp2 / a);
      if (std::abs(den) * std::abs(a) < threshold)
        throw std::domain_error("null_fundamental_solution: support touches the light cone");
      Spinor H = cp + (sp * cm) * cplx(s / a);
      Spinor Pu = H * (1.0 / den);
      Spinor psi = (sigma_dot(g.n, d.xi_omega) * Pu) * cplx(s / a);
      Spinor G = cm * (-1.0 / (I_unit * a));
      Spinor u = psi + G;
      out.u.at(m, 0, p) = u[0];
      out.u.at(m, 1, p) = u[1];
      out.free_part.at(m, 0, p) = psi[0];
      out.free_part.at(m, 1, p) = psi[1];
      out.elliptic.at(m, 0, p) = G[0];
      out.elliptic.at(m, 1, p) = G[1];
    }
  }
  return out;
}

/// Relative residual of the elliptic line of the null-coordinate system for (u, F) in tau representation.
inline double null_elliptic_residual(const SpaceTime& u, const SpaceTime& F, const NullFrame& frame, int sign) {
  SpaceTime U = u, Ft = F;
  U.to_tau();
  Ft.to_tau();
  const Grid& g = U.grid();
  const auto& lat = U.lattice();
  const RVec& w = frame.omega.w;
  double s = sign > 0 ? 1.0 : -1.0;
  Mat2 Pp = projector_of(g.n, w, sign > 0 ? +1 : -1);
  Mat2 Pm = projector_of(g.n, w, sign > 0 ? -1 : +1);
  double num = 0.0, den = 0.0;
  for (std::size_t m = 0; m < U.steps(); ++m) {
    double tau = U.tau(m);
    for (std::size_t p = 0; p < g.size(); ++p) {
      Spinor x{U.at(m, 0, p), U.at(m, 1, p)};
      Spinor f{Ft.at(m, 0, p), Ft.at(m, 1, p)};
      if (norm<2>(x) == 0.0 && norm<2>(f) == 0.0) continue;
      DualNullCoords d = to_dual_null(frame, tau, lat.xi[p]);
      double a = rdot(w, d.xi_omega);
      Spinor rhs = (sigma_dot(g.n, d.xiperp) * (Pp * x)) * cplx(s / a) - (Pm * f) * (1.0 / (I_unit * a));
      num += std::norm(norm<2>(Pm * x - rhs));
      den += std::norm(norm<2>(x));
    }
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

/// Residual of (d_t + sign sigma.grad) u = F in the tau representation, relative to |F|.
inline double spacetime_residual(const SpaceTime& u, const SpaceTime& F, int sign) {
  SpaceTime U = u, Ft = F;
  U.to_tau();
  Ft.to_tau();
  const auto& lat = U.lattice();
  double num = 0.0, den = 0.0;
  for (std::size_t m = 0; m < U.steps(); ++m)
    for (std::size_t p = 0; p < U.grid().size(); ++p) {
      Mat2 L = Mat2::identity() * (I_unit * U.tau(m)) + sigma_dot(U.grid().n, lat.xi[p]) * (I_unit * double(sign));
      Spinor r = L * Spinor{U.at(m, 0, p), U.at(m, 1, p)} - Spinor{Ft.at(m, 0, p), Ft.at(m, 1, p)};
      num += std::norm(norm<2>(r));
      den += std::norm(Ft.at(m, 0, p)) + std::norm(Ft.at(m, 1, p));
    }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

// ---- nonlinear evolution ----

enum class Formulation { PsiForm, UvForm };

struct ModelSpec {
  int n = 2;
  Model model = Model::Soler;
  double mass = 0.0;
  double eps = 1.0;
  Formulation form = Formulation::UvForm;

  void validate() const {
    if (n < 1 || n > 3) throw std::domain_error("ModelSpec: n must be 1, 2 or 3");
    if (!(eps > 0.0)) throw std::domain_error("ModelSpec: eps must be positive");
    if (mass < 0.0) throw std::domain_error("ModelSpec: mass must be >= 0");
    if (n == 1) throw std::domain_error("ModelSpec: nonlinear evolution needs n = 2 or 3");
    if (form == Formulation::UvForm && mass != 0.0)
      throw std::domain_error("ModelSpec: mass is supported only in psi-form");
  }
  int ncomp() const { return (form == Formulation::UvForm || n == 3) ? 4 : 2; }
};

inline Propagator model_propagator(const Grid& g, const ModelSpec& s) {
  if (s.form == Formulation::UvForm) return Propagator(g, {{0, BlockKind::Plus}, {2, BlockKind::Minus}});
  if (s.n == 2) return Propagator(g, {{0, BlockKind::Dirac2}}, s.mass);
  return Propagator(g, {{0, BlockKind::Dirac4}}, s.mass);
}

/// Exponential (Lawson) RK4 step: exact linear flow, classical RK4 on the interaction-picture nonlinearity.
class LawsonRK4 {
 public:
  LawsonRK4(const ModelSpec& spec, const Grid& g, double h, bool dealias = true)
      : spec_(spec), grid_(g), h_(h), dealias_(dealias), prop_(model_propagator(g, spec)), half_(prop_.table(h / 2.0)) {
    spec_.validate();
    if (g.n != spec.n) throw std::domain_error("LawsonRK4: grid and model dimensions differ");
    mask_.resize(g.size());
    int cut = g.N / 3;
    for (std::size_t p = 0; p < g.size(); ++p) mask_[p] = g.max_wave_index(p) <= cut;
  }

  double h() const { return h_; }
  const Propagator& propagator() const { return prop_; }

  /// Nonlinearity in Fourier space (input and output in Fourier representation).
  Field nonlinearity(const Field& s) const {
    int nc = s.ncomp();
    bool u_only = spec_.form == Formulation::UvForm && spec_.n == 2;
    int work = u_only ? 2 : nc;
    Field x(grid_, work, true);
    std::copy(s.raw().begin(), s.raw().begin() + work * s.points(), x.raw().begin());
    x.to_physical();
    Field out(grid_, work, false);
    std::size_t M = s.points();
    for (std::size_t p = 0; p < M; ++p) {
      if (spec_.form == Formulation::UvForm) {
        Spinor u{x.at(0, p), x.at(1, p)};
        Spinor v = u_only ? Spinor{} : Spinor{x.at(2, p), x.at(3, p)};
        auto [ru, rv] = soler_thirring_rhs(u, v, spec_.model, spec_.n);
        out.at(0, p) = ru[0];
        out.at(1, p) = ru[1];
        if (!u_only) {
          out.at(2, p) = rv[0];
          out.at(3, p) = rv[1];
        }
      } else if (spec_.n == 2) {
        Spinor r = psi_rhs2({x.at(0, p), x.at(1, p)});
        out.at(0, p) = r[0];
        out.at(1, p) = r[1];
      } else {
        Spinor4 r = psi_rhs4({x.at(0, p), x.at(1, p), x.at(2, p), x.at(3, p)}, spec_.model);
        for (int c = 0; c < 4; ++c) out.at(c, p) = r[c];
      }
    }
    out.to_fourier();
    Field full(grid_, nc, true);
    std::copy(out.raw().begin(), out.raw().end(), full.raw().begin());
    if (dealias_) apply_mask(full);
    return full;
  }

  void apply_mask(Field& f) const {
    for (int c = 0; c < f.ncomp(); ++c) {
      cplx* x = f.comp(c);
      for (std::size_t p = 0; p < f.points(); ++p)
        if (!mask_[p]) x[p] = 0.0;
    }
  }

  void step(Field& a) const {
    if (!a.is_fourier()) throw std::logic_error("LawsonRK4: state must be in Fourier representation");
    double h = h_;
    Field A = a;
    prop_.apply(A, half_);
    Field k1 = nonlinearity(a);
    Field B = k1;
    prop_.apply(B, half_);
    Field y = A;
    y.axpy(h / 2.0, B);
    Field k2 = nonlinearity(y);
    y = A;
    y.axpy(h / 2.0, k2);
    Field k3 = nonlinearity(y);
    y = A;
    y.axpy(h, k3);
    prop_.apply(y, half_);
    Field k4 = nonlinearity(y);
    // a <- E_{h/2}(A + h/6 B + h/3 (k2 + k3)) + h/6 k4
    A.axpy(h / 6.0, B);
    A.axpy(h / 3.0, k2);
    A.axpy(h / 3.0, k3);
    prop_.apply(A, half_);
    A.axpy(h / 6.0, k4);
    a = std::move(A);
  }

 private:
  ModelSpec spec_;
  Grid grid_;
  double h_;
  bool dealias_;
  Propagator prop_;
  Propagator::Table half_;
  std::vector<char> mask_;
};

struct Checkpoint {
  long step = 0;
  double time = 0.0;
  double charge0 = 0.0;
  Field state;  // Fourier representation
};

enum class SolveStatus { Ok, BlowUp, ResolutionExceeded };

inline std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Ok: return "ok";
    case SolveStatus::BlowUp: return "blow-up";
    case SolveStatus::ResolutionExceeded: return "resolution-exceeded";
  }
  return "?";
}

struct SolveOptions {
  double dt = 0.05;
  double T = 1.0;
  int record_stride = 1;
  bool keep_frames = true;
  int checkpoint_stride = 0;    // 0 disables checkpoints
  int defect_stride = 0;        // step-doubling defect estimate every k steps; 0 disables
  double tail_threshold = 1e-6; // mass fraction allowed in the guard band N/4 < |k| <= N/3
  bool dealias = true;
  double blowup_factor = 1e6;
  std::function<void(long, double, const Field&)> on_frame;
  std::function<void(const Checkpoint&)> on_checkpoint;
  const Checkpoint* resume = nullptr;
};

struct SolveResult {
  SolveStatus status = SolveStatus::Ok;
  std::string message;
  Trajectory traj;              // recorded frames (Fourier representation)
  std::vector<double> times;    // charge sample times, every step
  std::vector<double> charge;   // ||psi||^2 (or ||u||^2 + ||v||^2)
  double charge_drift = 0.0;    // max relative deviation from the initial charge
  double max_defect = 0.0;
  double max_tail = 0.0;
  long steps_done = 0;
  Field last_valid;
};

/// Mass fraction in the guard band between N/4 and the 2/3 cutoff.
inline double guard_band_fraction(const Field& f) {
  Field h = f.is_fourier() ? f : f.fourier();
  int lo = h.grid().N / 4, hi = h.grid().N / 3;
  double tail = 0.0, tot = 0.0;
  for (int c = 0; c < h.ncomp(); ++c)
    for (std::size_t p = 0; p < h.points(); ++p) {
      double w = std::norm(h.at(c, p));
      tot += w;
      int m = h.grid().max_wave_index(p);
      if (m > lo && m <= hi) tail += w;
    }
  return tot > 0.0 ? tail / tot : 0.0;
}

inline double field_charge(const Field& f) {
  double s = 0.0;
  for (const auto& c : f.raw()) s += std::norm(c);
  return s * (f.is_fourier() ? f.grid().volume() : f.grid().cell_volume());
}

inline bool all_finite(const Field& f) {
  for (const auto& c : f.raw())
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
  return true;
}

/// Integrates the model from eps * data over [0, T]. data has spec.ncomp() components;
/// for the (u, v)-form components 0-1 hold u and 2-3 hold v.
inline SolveResult nonlinear_solve(const ModelSpec& spec, const Field& data, const Grid& grid, const SolveOptions& opt) {
  spec.validate();
  if (data.ncomp() != spec.ncomp()) throw std::invalid_argument("nonlinear_solve: data has the wrong component count");
  if (!(data.grid() == grid)) throw std::invalid_argument("nonlinear_solve: data grid differs from grid");
  if (!(opt.dt > 0.0) || !(opt.T >= 0.0)) throw std::domain_error("nonlinear_solve: dt must be positive, T >= 0");
  long nsteps = std::lround(opt.T / opt.dt);
  LawsonRK4 rk(spec, grid, opt.dt, opt.dealias);
  std::optional<LawsonRK4> rk_half;
  if (opt.defect_stride > 0) rk_half.emplace(spec, grid, opt.dt / 2.0, opt.dealias);

  SolveResult res;
  res.traj.grid = grid;
  res.traj.dt = opt.dt * opt.record_stride;
  Field a(grid, spec.ncomp(), true);
  long k0 = 0;
  double q0;
  if (opt.resume) {
    a = opt.resume->state;
    if (!a.is_fourier()) a.to_fourier();
    k0 = opt.resume->step;
    q0 = opt.resume->charge0;
    res.traj.t0 = k0 * opt.dt;
  } else {
    a = data.is_fourier() ? data : data.fourier();
    a *= spec.eps;
    if (opt.dealias) rk.apply_mask(a);
    q0 = field_charge(a);
  }
  a.set_mean_zero_flag(false);  // the cubic term populates xi = 0
  auto record = [&](long k) {
    double t = static_cast<double>(k) * opt.dt;
    res.times.push_back(t);
    double q = field_charge(a);
    res.charge.push_back(q);
    if (q0 > 0.0) res.charge_drift = std::max(res.charge_drift, std::abs(q - q0) / q0);
    if ((k - k0) % opt.record_stride == 0) {
      if (opt.keep_frames) res.traj.frames.push_back(a);
      if (opt.on_frame) opt.on_frame(k, t, a);
      double tail = guard_band_fraction(a);
      res.max_tail = std::max(res.max_tail, tail);
    }
  };
  record(k0);
  res.last_valid = a;
  for (long k = k0; k < nsteps; ++k) {
    Field prev = a;
    rk.step(a);
    if (rk_half && opt.defect_stride > 0 && (k + 1) % opt.defect_stride == 0) {
      Field b = prev;
      rk_half->step(b);
      rk_half->step(b);
      Field d = a;
      d -= b;
      double nb = b.l2();
      if (nb > 0.0) res.max_defect = std::max(res.max_defect, d.l2() / nb);
    }
    double q = field_charge(a);
    if (!all_finite(a) || (q0 > 0.0 && q > opt.blowup_factor * q0)) {
      res.status = SolveStatus::BlowUp;
      res.message = "non-finite or exploding state at t = " + std::to_string((k + 1) * opt.dt);
      res.last_valid = prev;
      res.steps_done = k - k0;
      return res;
    }
    record(k + 1);
    res.last_valid = a;
    res.steps_done = k + 1 - k0;
    if (res.max_tail > opt.tail_threshold) {
      res.status = SolveStatus::ResolutionExceeded;
      res.message = "spectral guard-band fraction " + std::to_string(res.max_tail) + " exceeds threshold";
      return res;
    }
    if (opt.checkpoint_stride > 0 && (k + 1) % opt.checkpoint_stride == 0 && opt.on_checkpoint)
      opt.on_checkpoint(Checkpoint{k + 1, (k + 1) * opt.dt, q0, a});
  }
  return res;
}

/// psi = (u + v, u - v) for n = 3 (Fourier or physical, componentwise).
inline Field uv_to_psi(const Field& uv) {
  Field psi(uv.grid(), 4, uv.is_fourier());
  for (std::size_t p = 0; p < uv.points(); ++p)
    for (int c = 0; c < 2; ++c) {
      psi.at(c, p) = uv.at(c, p) + uv.at(c + 2, p);
      psi.at(c + 2, p) = uv.at(c, p) - uv.at(c + 2, p);
    }
  return psi;
}
inline Field psi_to_uv(const Field& psi) {
  Field uv(psi.grid(), 4, psi.is_fourier());
  for (std::size_t p = 0; p < psi.points(); ++p)
    for (int c = 0; c < 2; ++c) {
      uv.at(c, p) = 0.5 * (psi.at(c, p) + psi.at(c + 2, p));
      uv.at(c + 2, p) = 0.5 * (psi.at(c, p) - psi.at(c + 2, p));
    }
  return uv;
}

}  // namespace diraclab

#endif  // DIRACLAB_EVOLUTION_HPP
