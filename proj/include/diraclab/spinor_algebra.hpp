#ifndef DIRACLAB_SPINOR_ALGEBRA_HPP
#define DIRACLAB_SPINOR_ALGEBRA_HPP

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <utility>

namespace diraclab {

using cplx = std::complex<double>;
inline constexpr cplx I_unit{0.0, 1.0};

/// Dense D x D complex matrix, row-major.
template <std::size_t D>
struct Mat {
  std::array<cplx, D * D> a{};

  cplx& operator()(std::size_t r, std::size_t c) { return a[r * D + c]; }
  const cplx& operator()(std::size_t r, std::size_t c) const { return a[r * D + c]; }

  static Mat identity() {
    Mat m;
    for (std::size_t i = 0; i < D; ++i) m(i, i) = 1.0;
    return m;
  }
  static Mat zero() { return Mat{}; }

  Mat adjoint() const {
    Mat m;
    for (std::size_t r = 0; r < D; ++r)
      for (std::size_t c = 0; c < D; ++c) m(r, c) = std::conj((*this)(c, r));
    return m;
  }

  Mat& operator+=(const Mat& o) {
    for (std::size_t i = 0; i < D * D; ++i) a[i] += o.a[i];
    return *this;
  }
  Mat& operator-=(const Mat& o) {
    for (std::size_t i = 0; i < D * D; ++i) a[i] -= o.a[i];
    return *this;
  }
  Mat& operator*=(cplx s) {
    for (auto& x : a) x *= s;
    return *this;
  }
};

template <std::size_t D>
Mat<D> operator+(Mat<D> x, const Mat<D>& y) { return x += y; }
template <std::size_t D>
Mat<D> operator-(Mat<D> x, const Mat<D>& y) { return x -= y; }
template <std::size_t D>
Mat<D> operator*(cplx s, Mat<D> x) { return x *= s; }
template <std::size_t D>
Mat<D> operator*(Mat<D> x, cplx s) { return x *= s; }

template <std::size_t D>
Mat<D> operator*(const Mat<D>& x, const Mat<D>& y) {
  Mat<D> m;
  for (std::size_t r = 0; r < D; ++r)
    for (std::size_t c = 0; c < D; ++c) {
      cplx s = 0.0;
      for (std::size_t k = 0; k < D; ++k) s += x(r, k) * y(k, c);
      m(r, c) = s;
    }
  return m;
}

template <std::size_t D>
using Vec = std::array<cplx, D>;

template <std::size_t D>
Vec<D> operator*(const Mat<D>& m, const Vec<D>& v) {
  Vec<D> w{};
  for (std::size_t r = 0; r < D; ++r) {
    cplx s = 0.0;
    for (std::size_t c = 0; c < D; ++c) s += m(r, c) * v[c];
    w[r] = s;
  }
  return w;
}

template <std::size_t D>
Vec<D> operator+(Vec<D> x, const Vec<D>& y) {
  for (std::size_t i = 0; i < D; ++i) x[i] += y[i];
  return x;
}
template <std::size_t D>
Vec<D> operator-(Vec<D> x, const Vec<D>& y) {
  for (std::size_t i = 0; i < D; ++i) x[i] -= y[i];
  return x;
}
template <std::size_t D>
Vec<D> operator*(cplx s, Vec<D> x) {
  for (auto& c : x) c *= s;
  return x;
}
template <std::size_t D>
Vec<D> operator*(Vec<D> x, cplx s) {
  return s * x;
}

/// x^dagger y
template <std::size_t D>
cplx dot(const Vec<D>& x, const Vec<D>& y) {
  cplx s = 0.0;
  for (std::size_t i = 0; i < D; ++i) s += std::conj(x[i]) * y[i];
  return s;
}

template <std::size_t D>
double norm(const Vec<D>& x) {
  double s = 0.0;
  for (const auto& c : x) s += std::norm(c);
  return std::sqrt(s);
}

template <std::size_t D>
double max_abs(const Mat<D>& m) {
  double s = 0.0;
  for (const auto& c : m.a) s = std::max(s, std::abs(c));
  return s;
}

using Mat2 = Mat<2>;
using Mat4 = Mat<4>;
using Spinor = Vec<2>;
using Spinor4 = Vec<4>;

/// Real spatial vector; components beyond the dimension are zero.
using RVec = std::array<double, 3>;

inline double rdot(const RVec& a, const RVec& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double rnorm(const RVec& a) { return std::sqrt(rdot(a, a)); }
inline RVec rscale(double s, RVec a) {
  for (auto& x : a) x *= s;
  return a;
}
inline RVec radd(RVec a, const RVec& b) {
  for (int i = 0; i < 3; ++i) a[i] += b[i];
  return a;
}
inline RVec rsub(RVec a, const RVec& b) {
  for (int i = 0; i < 3; ++i) a[i] -= b[i];
  return a;
}

struct Direction {
  int n = 2;
  RVec w{1.0, 0.0, 0.0};

  Direction() = default;
  Direction(int dim, RVec v) : n(dim), w(v) {
    if (dim < 1 || dim > 3) throw std::domain_error("Direction: dimension must be 1, 2 or 3");
    for (int i = dim; i < 3; ++i)
      if (v[i] != 0.0) throw std::domain_error("Direction: components beyond dimension must vanish");
    if (std::abs(rnorm(v) - 1.0) > 1e-14) throw std::domain_error("Direction: vector is not unit");
  }
  static Direction normalized(int dim, RVec v) {
    double r = rnorm(v);
    if (r == 0.0) throw std::domain_error("Direction: zero vector");
    v = rscale(1.0 / r, v);
    // renormalize once more so |w| = 1 to the last ulp or so
    v = rscale(1.0 / rnorm(v), v);
    return Direction(dim, v);
  }
  static Direction angle2(double phi) { return normalized(2, {std::cos(phi), std::sin(phi), 0.0}); }
  Direction operator-() const {
    Direction d = *this;
    d.w = rscale(-1.0, w);
    return d;
  }
};

// ---- Pauli and gamma matrices ----

namespace pauli {
inline Mat2 s0() { return Mat2::identity(); }
inline Mat2 s1() {
  Mat2 m;
  m(0, 1) = 1.0;
  m(1, 0) = 1.0;
  return m;
}
inline Mat2 s2() {
  Mat2 m;
  m(0, 1) = -I_unit;
  m(1, 0) = I_unit;
  return m;
}
inline Mat2 s3() {
  Mat2 m;
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  return m;
}
inline Mat2 sigma(int j) {
  switch (j) {
    case 1: return s1();
    case 2: return s2();
    case 3: return s3();
    default: return s0();
  }
}
}  // namespace pauli

/// sigma . v in dimension n. For n = 1 the convention is sigma.grad = sigma^3 d_1.
inline Mat2 sigma_dot(int n, const RVec& v) {
  if (n == 1) return pauli::s3() * cplx(v[0]);
  Mat2 m;
  for (int j = 0; j < n; ++j) m += pauli::sigma(j + 1) * cplx(v[j]);
  return m;
}

/// Minkowski metric diag(1,-1,...).
inline double metric(int mu) { return mu == 0 ? 1.0 : -1.0; }

/// n = 2: gamma^0 = sigma^3, gamma^1 = i sigma^2, gamma^2 = -i sigma^1.
inline Mat2 gamma2(int mu) {
  switch (mu) {
    case 0: return pauli::s3();
    case 1: return I_unit * pauli::s2();
    case 2: return -I_unit * pauli::s1();
    default: throw std::domain_error("gamma2: index out of range");
  }
}

/// n = 3 Dirac representation; mu = 5 gives gamma^5.
inline Mat4 gamma3(int mu) {
  Mat4 m;
  if (mu == 0) {
    m(0, 0) = m(1, 1) = 1.0;
    m(2, 2) = m(3, 3) = -1.0;
    return m;
  }
  if (mu == 5) {
    m(0, 2) = m(1, 3) = m(2, 0) = m(3, 1) = 1.0;
    return m;
  }
  if (mu < 1 || mu > 3) throw std::domain_error("gamma3: index out of range");
  Mat2 s = pauli::sigma(mu);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      m(r, c + 2) = s(r, c);
      m(r + 2, c) = -s(r, c);
    }
  return m;
}

/// Largest singular value of a 2x2 matrix, closed form.
inline double op_norm(const Mat2& A) {
  double f2 = 0.0;
  for (const auto& c : A.a) f2 += std::norm(c);
  double det = std::abs(A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0));
  double disc = f2 * f2 - 4.0 * det * det;
  if (disc < 0.0) disc = 0.0;
  return std::sqrt(0.5 * (f2 + std::sqrt(disc)));
}

/// Angle between two directions via atan2.
inline double angle(const RVec& a, const RVec& b) {
  RVec c{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
  return std::atan2(rnorm(c), rdot(a, b));
}
inline double angle(const Direction& a, const Direction& b) { return angle(a.w, b.w); }

/// Pi_omega = (I + sigma.omega)/2.
inline Mat2 projector(const Direction& omega) {
  if (std::abs(rnorm(omega.w) - 1.0) > 1e-14) throw std::domain_error("projector: direction is not unit");
  Mat2 m = Mat2::identity() + sigma_dot(omega.n, omega.w);
  return m * cplx(0.5);
}

/// Pi at an arbitrary nonzero vector (normalizes internally, no unit check).
inline Mat2 projector_of(int n, const RVec& xi, int sign = +1) {
  double r = rnorm(xi);
  Mat2 m = Mat2::identity() + sigma_dot(n, rscale(sign / r, xi));
  return m * cplx(0.5);
}

struct NullStructureBound {
  double norm;   // |Pi_w Pi_w'|
  double theta;  // theta(w, -w')
};

inline NullStructureBound null_structure_bound(const Direction& w, const Direction& wp) {
  return {op_norm(projector(w) * projector(wp)), angle(w, -wp)};
}

// ---- bilinears and the Fierz identity ----

inline cplx bar_bilinear2(const Spinor& psi, const Mat2& G) {
  // psibar G psi with psibar = psi^dagger gamma^0
  return dot(psi, gamma2(0) * (G * psi));
}
inline cplx bar_bilinear4(const Spinor4& psi, const Mat4& G) { return dot(psi, gamma3(0) * (G * psi)); }

/// (psibar gamma^mu psi) gamma_mu psi, computed directly from the currents.
inline Spinor thirring_lhs2(const Spinor& psi) {
  Spinor out{};
  for (int mu = 0; mu < 3; ++mu) {
    cplx j = bar_bilinear2(psi, gamma2(mu));
    out = out + (metric(mu) * j) * (gamma2(mu) * psi);
  }
  return out;
}
inline Spinor4 thirring_lhs4(const Spinor4& psi) {
  Spinor4 out{};
  for (int mu = 0; mu < 4; ++mu) {
    cplx j = bar_bilinear4(psi, gamma3(mu));
    out = out + (metric(mu) * j) * (gamma3(mu) * psi);
  }
  return out;
}

inline double fierz_check(const Spinor& psi) {
  Spinor rhs = bar_bilinear2(psi, Mat2::identity()) * psi;
  return norm<2>(thirring_lhs2(psi) - rhs);
}
inline double fierz_check(const Spinor4& psi) {
  Mat4 g5 = gamma3(5);
  Spinor4 rhs = bar_bilinear4(psi, Mat4::identity()) * psi - bar_bilinear4(psi, g5) * (g5 * psi);
  return norm<4>(thirring_lhs4(psi) - rhs);
}

/// Residual of sum_j (w1^dag s^j w2) s^j w3 = 2 (w1^dag w3) w2 - (w1^dag w2) w3.
inline double sigma_contraction_residual(const Spinor& w1, const Spinor& w2, const Spinor& w3) {
  Spinor lhs{};
  for (int j = 1; j <= 3; ++j) lhs = lhs + dot(w1, pauli::sigma(j) * w2) * (pauli::sigma(j) * w3);
  Spinor rhs = (2.0 * dot(w1, w3)) * w2 - dot(w1, w2) * w3;
  return norm<2>(lhs - rhs);
}

enum class Model { Soler, Thirring };

/// Pointwise right-hand sides of the (u, v) system.
/// n = 3: (B1 v, B3 u). n = 2: (i (u^dag beta u) beta u, 0); the models coincide.
inline std::pair<Spinor, Spinor> soler_thirring_rhs(const Spinor& u, const Spinor& v, Model model, int n) {
  if (n == 3) {
    cplx b1, b3;
    if (model == Model::Soler) {
      b1 = b3 = 2.0 * I_unit * (dot(u, v) + dot(v, u));
    } else {
      b1 = 4.0 * I_unit * dot(v, u);
      b3 = 4.0 * I_unit * dot(u, v);
    }
    return {b1 * v, b3 * u};
  }
  if (n == 2) {
    Mat2 beta = pauli::s3();
    Spinor bu = beta * u;
    cplx b2 = I_unit * dot(u, bu);
    return {b2 * bu, Spinor{}};
  }
  throw std::domain_error("soler_thirring_rhs: n must be 2 or 3");
}

/// Psi-form nonlinearity i gamma^0 F(psi) for n = 3.
inline Spinor4 psi_rhs4(const Spinor4& psi, Model model) {
  Spinor4 F;
  if (model == Model::Soler) {
    F = bar_bilinear4(psi, Mat4::identity()) * psi;
  } else {
    F = thirring_lhs4(psi);
  }
  return I_unit * (gamma3(0) * F);
}

/// Psi-form nonlinearity i gamma^0 F(psi) for n = 2 (both models give (psibar psi) psi).
inline Spinor psi_rhs2(const Spinor& psi) {
  Spinor F = bar_bilinear2(psi, Mat2::identity()) * psi;
  return I_unit * (gamma2(0) * F);
}

}  // namespace diraclab

#endif  // DIRACLAB_SPINOR_ALGEBRA_HPP
