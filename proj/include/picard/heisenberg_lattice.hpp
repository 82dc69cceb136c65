#pragma once

// Imaginary-quadratic lattice data, the Heisenberg stabiliser of the cusp
// in the left-half model, group action by fractional linear maps, lattice
// enumeration, and hyperbolic counting bounds.
//
// K = Q[sqrt(-d)] with d positive square-free.  The ring of integers is
// Z[omega] with omega = sqrt(-d) when d = 1,2 (mod 4) and
// omega = (1+sqrt(-d))/2 when d = 3 (mod 4).  Stabiliser elements carry
// a translation (tau, t), a unitary rotation U and a dilation r:
//
//   [ r   -tau* U   (-|tau|^2 + i t) / (2r) ]
//   [ 0      U           tau / r            ]
//   [ 0      0            1 / r             ]
//
// For the lattice of the full arithmetic group: when d = 3 (mod 4) the
// translations range over tau in O_K^{n-1}, t in Z sqrt(d); otherwise over
// the index-2 sublattice |tau|^2 in 2Z with t in 2Z sqrt(d).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "picard/complex_hyperbolic.hpp"
#include "picard/quadrature.hpp"

namespace picard {

struct QuadraticField {
  int d = 3;

  QuadraticField() = default;
  explicit QuadraticField(int d_) : d(d_) {
    if (d < 1) throw std::invalid_argument("QuadraticField: d must be positive");
    for (int p = 2; p * p <= d; ++p)
      if (d % (p * p) == 0)
        throw std::invalid_argument("QuadraticField: d must be square-free");
  }

  // true when d = 3 (mod 4), i.e. O_K = Z[(1+sqrt(-d))/2]
  bool half_integer_ring() const { return d % 4 == 3; }

  cplx omega() const {
    double s = std::sqrt(static_cast<double>(d));
    return half_integer_ring() ? cplx(0.5, 0.5 * s) : cplx(0.0, s);
  }

  // t-spacing: elements of Z sqrt(d) or 2Z sqrt(d)
  double t_step() const {
    return (half_integer_ring() ? 1.0 : 2.0) * std::sqrt(static_cast<double>(d));
  }
};

// a + b*omega with integer coefficients; norms stay exact integers.
struct OkElement {
  long long a = 0;
  long long b = 0;

  bool operator==(const OkElement&) const = default;
};

inline cplx ok_value(const QuadraticField& f, OkElement e) {
  return cplx(static_cast<double>(e.a), 0.0) +
         static_cast<double>(e.b) * f.omega();
}

// |a + b omega|^2 as an exact integer.
inline long long ok_norm2(const QuadraticField& f, OkElement e) {
  if (f.half_integer_ring())
    return e.a * e.a + e.a * e.b + e.b * e.b * ((1 + f.d) / 4);
  return e.a * e.a + f.d * e.b * e.b;
}

struct HeisenbergElement {
  QuadraticField field;
  int n = 2;
  std::vector<OkElement> tau;  // n-1 coordinates
  long long t_coeff = 0;       // t = t_coeff * t_step
  std::vector<cplx> unitary;   // (n-1)x(n-1); empty means identity
  double dilation = 1.0;

  HeisenbergElement() = default;
  HeisenbergElement(QuadraticField f, int n_, std::vector<OkElement> tau_,
                    long long t_coeff_)
      : field(f), n(n_), tau(std::move(tau_)), t_coeff(t_coeff_) {
    validate();
  }

  long long tau_norm2_int() const {
    long long s = 0;
    for (auto e : tau) s += ok_norm2(field, e);
    return s;
  }

  double t() const { return static_cast<double>(t_coeff) * field.t_step(); }

  std::vector<cplx> tau_values() const {
    std::vector<cplx> v(tau.size());
    for (std::size_t j = 0; j < tau.size(); ++j) v[j] = ok_value(field, tau[j]);
    return v;
  }

  bool is_identity() const {
    if (t_coeff != 0 || dilation != 1.0) return false;
    for (auto e : tau)
      if (e.a != 0 || e.b != 0) return false;
    if (!unitary.empty()) {
      const int m = n - 1;
      for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c)
          if (std::abs(unitary[static_cast<std::size_t>(r) * m + c] -
                       (r == c ? cplx(1, 0) : cplx(0, 0))) > 1e-14)
            return false;
    }
    return true;
  }

  void validate() const {
    if (n < 1) throw std::invalid_argument("HeisenbergElement: n must be >= 1");
    if (static_cast<int>(tau.size()) != n - 1)
      throw std::invalid_argument("HeisenbergElement: tau must have n-1 coordinates");
    if (dilation <= 0.0)
      throw std::invalid_argument("HeisenbergElement: dilation must be positive");
    if (!field.half_integer_ring() && tau_norm2_int() % 2 != 0)
      throw std::invalid_argument(
          "HeisenbergElement: |tau|^2 must be even when d = 1,2 (mod 4)");
    if (!unitary.empty()) {
      const int m = n - 1;
      if (static_cast<int>(unitary.size()) != m * m)
        throw std::invalid_argument("HeisenbergElement: unitary must be (n-1)x(n-1)");
      for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) {
          cplx acc(0, 0);
          for (int l = 0; l < m; ++l)
            acc += unitary[static_cast<std::size_t>(r) * m + l] *
                   std::conj(unitary[static_cast<std::size_t>(c) * m + l]);
          cplx want = (r == c) ? cplx(1, 0) : cplx(0, 0);
          if (std::abs(acc - want) > 1e-12)
            throw std::invalid_argument("HeisenbergElement: U U* != Id");
        }
    }
  }
};

// (n+1)x(n+1) matrix acting by z -> (Az+B)/(Cz+D) on the model matching
// its declared form.
struct GroupElement {
  int n = 0;
  FormTag form = FormTag::H1;
  std::vector<cplx> m;  // row-major (n+1)x(n+1)

  cplx at(int r, int c) const { return m[static_cast<std::size_t>(r) * (n + 1) + c]; }
  cplx& at(int r, int c) { return m[static_cast<std::size_t>(r) * (n + 1) + c]; }

  static GroupElement identity(int n, FormTag form) {
    GroupElement g;
    g.n = n;
    g.form = form;
    g.m.assign(static_cast<std::size_t>(n + 1) * (n + 1), cplx(0, 0));
    for (int j = 0; j <= n; ++j) g.at(j, j) = 1.0;
    return g;
  }

  // max |M* H M - H| entrywise
  double isometry_defect() const {
    HermitianForm H = HermitianForm::standard(form, n);
    const int mdim = n + 1;
    double worst = 0.0;
    for (int r = 0; r < mdim; ++r)
      for (int c = 0; c < mdim; ++c) {
        cplx acc(0, 0);
        for (int i = 0; i < mdim; ++i)
          for (int j = 0; j < mdim; ++j)
            acc += std::conj(at(i, r)) * H.at(i, j) * at(j, c);
        worst = std::max(worst, std::abs(acc - H.at(r, c)));
      }
    return worst;
  }

  void require_isometry(double tol = 1e-10) const {
    double defect = isometry_defect();
    if (defect > tol)
      throw std::invalid_argument("GroupElement: matrix does not preserve its form (defect " +
                                  std::to_string(defect) + ")");
  }
};

inline GroupElement group_product(const GroupElement& a, const GroupElement& b) {
  if (a.n != b.n || a.form != b.form)
    throw std::invalid_argument("group_product: mismatched elements");
  GroupElement out;
  out.n = a.n;
  out.form = a.form;
  const int m = a.n + 1;
  out.m.assign(static_cast<std::size_t>(m) * m, cplx(0, 0));
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) {
      cplx acc(0, 0);
      for (int l = 0; l < m; ++l) acc += a.at(r, l) * b.at(l, c);
      out.at(r, c) = acc;
    }
  return out;
}

// gamma^{-1} = H^{-1} gamma* H; for H1 and H3, H^{-1} = H.
inline GroupElement group_inverse(const GroupElement& g) {
  if (g.form == FormTag::H2)
    throw std::invalid_argument("group_inverse: H2 elements unsupported");
  HermitianForm H = HermitianForm::standard(g.form, g.n);
  const int m = g.n + 1;
  GroupElement out;
  out.n = g.n;
  out.form = g.form;
  out.m.assign(static_cast<std::size_t>(m) * m, cplx(0, 0));
  // H * conj(g)^T * H
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) {
      cplx acc(0, 0);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
          acc += H.at(r, i) * std::conj(g.at(j, i)) * H.at(j, c);
      out.at(r, c) = acc;
    }
  return out;
}

// Builds the stabiliser matrix displayed above and checks M* H3 M = H3.
inline GroupElement heisenberg_matrix(const HeisenbergElement& h) {
  h.validate();
  const int n = h.n;
  GroupElement g;
  g.n = n;
  g.form = FormTag::H3;
  g.m.assign(static_cast<std::size_t>(n + 1) * (n + 1), cplx(0, 0));

  const int mdim = n - 1;
  auto u_at = [&](int r, int c) -> cplx {
    if (h.unitary.empty()) return r == c ? cplx(1, 0) : cplx(0, 0);
    return h.unitary[static_cast<std::size_t>(r) * mdim + c];
  };

  auto tau = h.tau_values();
  const double r = h.dilation;
  const double tau2 = static_cast<double>(h.tau_norm2_int());

  g.at(0, 0) = r;
  for (int c = 0; c < mdim; ++c) {
    cplx acc(0, 0);
    for (int l = 0; l < mdim; ++l) acc += std::conj(tau[l]) * u_at(l, c);
    g.at(0, 1 + c) = -acc;
  }
  g.at(0, n) = cplx(-tau2, h.t()) / (2.0 * r);
  for (int i = 0; i < mdim; ++i) {
    for (int c = 0; c < mdim; ++c) g.at(1 + i, 1 + c) = u_at(i, c);
    g.at(1 + i, n) = tau[i] / r;
  }
  g.at(n, n) = 1.0 / r;

  g.require_isometry(1e-10);
  return g;
}

// z -> (Az + B) / (Cz + D)
inline ModelPoint apply(const GroupElement& g, const ModelPoint& p) {
  const int n = p.n();
  if (g.n != n) throw std::invalid_argument("apply: dimension mismatch");
  cplx den(0, 0);
  for (int j = 0; j < n; ++j) den += g.at(n, j) * p.z[j];
  den += g.at(n, n);
  if (std::abs(den) < 1e-300)
    throw std::domain_error("apply: vanishing denominator Cz + D");
  ModelPoint out;
  out.model = p.model;
  out.z.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    cplx num(0, 0);
    for (int j = 0; j < n; ++j) num += g.at(i, j) * p.z[j];
    num += g.at(i, n);
    out.z[static_cast<std::size_t>(i)] = num / den;
  }
  return out;
}

// All (tau, t) with |tau|^2 + |t| <= norm_bound satisfying the ring
// congruences, U = Id, r = 1.  Order: lexicographic on the flattened
// integer coefficients (a_1, b_1, ..., a_{n-1}, b_{n-1}), then on the
// t coefficient, which makes downstream sums bit-reproducible.
inline std::vector<HeisenbergElement> enumerate_lattice(const QuadraticField& field,
                                                        int n, double norm_bound) {
  if (n < 1) throw std::invalid_argument("enumerate_lattice: n must be >= 1");
  if (norm_bound < 0.0)
    throw std::invalid_argument("enumerate_lattice: norm_bound must be >= 0");

  const int ncoords = n - 1;
  std::vector<HeisenbergElement> out;
  std::vector<OkElement> tau(static_cast<std::size_t>(ncoords));

  // half-integer ring: the norm form has min_b |a+b omega|^2 = (3/4) a^2,
  // so the a-box must cover sqrt(4B/3)
  long long amax, bmax;
  if (field.half_integer_ring()) {
    amax = static_cast<long long>(std::floor(std::sqrt(4.0 * norm_bound / 3.0))) + 2;
    bmax = static_cast<long long>(std::floor(2.0 * std::sqrt(norm_bound / field.d))) + 2;
  } else {
    amax = static_cast<long long>(std::floor(std::sqrt(norm_bound))) + 2;
    bmax = static_cast<long long>(std::floor(std::sqrt(norm_bound / field.d))) + 2;
  }

  std::function<void(int, long long)> rec = [&](int coord, long long norm_so_far) {
    if (coord == ncoords) {
      if (!field.half_integer_ring() && norm_so_far % 2 != 0) return;
      double slack = norm_bound - static_cast<double>(norm_so_far);
      if (slack < 0.0) return;
      double step = field.t_step();
      // membership is decided by multiplication so the brute-force
      // predicate |t| <= slack agrees bit for bit
      long long tmax = static_cast<long long>(std::floor(slack / step));
      while (static_cast<double>(tmax) * step > slack) --tmax;
      while (static_cast<double>(tmax + 1) * step <= slack) ++tmax;
      for (long long tc = -tmax; tc <= tmax; ++tc) {
        HeisenbergElement h;
        h.field = field;
        h.n = n;
        h.tau = tau;
        h.t_coeff = tc;
        out.push_back(std::move(h));
      }
      return;
    }
    for (long long a = -amax; a <= amax; ++a)
      for (long long b = -bmax; b <= bmax; ++b) {
        OkElement e{a, b};
        long long q = ok_norm2(field, e);
        if (static_cast<double>(norm_so_far + q) > norm_bound) continue;
        tau[static_cast<std::size_t>(coord)] = e;
        rec(coord + 1, norm_so_far + q);
      }
  };
  rec(0, 0);
  return out;
}

struct CountingContext {
  double r_x = 1.0;  // injectivity radius; always supplied, never computed
  int n = 2;

  CountingContext() = default;
  CountingContext(double r, int n_) : r_x(r), n(n_) {
    if (r_x <= 0.0) throw std::invalid_argument("CountingContext: r_x must be positive");
  }
};

// Packing bound on the orbit counting function:
//   N(delta) <= sinh^{2n}((2 delta + r_X)/4) / sinh^{2n}(r_X/4)
inline double counting_bound(double delta, const CountingContext& ctx) {
  if (delta < 0.0) throw std::invalid_argument("counting_bound: delta must be >= 0");
  double num = std::sinh((2.0 * delta + ctx.r_x) / 4.0);
  double den = std::sinh(ctx.r_x / 4.0);
  return std::pow(num / den, 2 * ctx.n);
}

// Closed-form bound for the tail sum_{d(z,gamma w) > delta} f(d):
//   f(delta) N(delta)-bound
//   + 2n / sinh^{2n}(r_X/4) * int_delta^inf f(rho) sinh^{2n-1}((2rho+r_X)/4) cosh((2rho+r_X)/4) drho
// for positive decreasing f with a convergent tail.  The integral is done
// by adaptive quadrature to relative tolerance 1e-8.
inline double stieltjes_tail_bound(const std::function<double(double)>& f,
                                   double delta, const CountingContext& ctx,
                                   int max_windows = 60) {
  if (!(delta > ctx.r_x / 2.0))
    throw std::invalid_argument("stieltjes_tail_bound: requires delta > r_X/2");
  double head = f(delta) * counting_bound(delta, ctx);
  if (head == 0.0) {
    // f == 0 beyond delta for decreasing nonnegative f
    return 0.0;
  }
  const int two_n = 2 * ctx.n;
  auto integrand = [&](double rho) {
    double arg = (2.0 * rho + ctx.r_x) / 4.0;
    return f(rho) * std::pow(std::sinh(arg), two_n - 1) * std::cosh(arg);
  };
  double tail = integrate_to_infinity(integrand, delta, 1e-8, max_windows);
  return head + static_cast<double>(two_n) /
                    std::pow(std::sinh(ctx.r_x / 4.0), two_n) * tail;
}

enum class CuspVariant { Literal, Slab };

// Membership in the cusp neighbourhood 2 Re(z_1) <= -1/eps (boundary
// included); the literal variant additionally requires z_2 = ... = z_n = 0.
inline bool cusp_neighborhood_test(const ModelPoint& p, double epsilon,
                                   CuspVariant variant, double tol = 1e-12) {
  if (p.model != Model::LeftHalf)
    throw std::invalid_argument("cusp_neighborhood_test: left-half model points only");
  if (epsilon <= 0.0) throw std::invalid_argument("cusp_neighborhood_test: eps must be > 0");
  if (2.0 * p.z[0].real() > -1.0 / epsilon) return false;
  if (variant == CuspVariant::Literal)
    for (std::size_t j = 1; j < p.z.size(); ++j)
      if (std::abs(p.z[j]) > tol) return false;
  return true;
}

// Conjugation carrying left-half-model isometries to ball-model ones.  The
// linear lift of the first-coordinate involution satisfies Cay^2 = 2 Id and
// Cay* H1 Cay = 2 H3, so gamma -> Cay gamma Cay / 2 preserves H1.
inline GroupElement ball_conjugate(const GroupElement& g3) {
  if (g3.form != FormTag::H3)
    throw std::invalid_argument("ball_conjugate: expects an H3 element");
  const int n = g3.n;
  GroupElement cay;
  cay.n = n;
  cay.form = FormTag::H1;  // tag irrelevant for the raw product below
  cay.m.assign(static_cast<std::size_t>(n + 1) * (n + 1), cplx(0, 0));
  cay.at(0, 0) = 1.0;
  cay.at(0, n) = 1.0;
  for (int j = 1; j < n; ++j) cay.at(j, j) = std::numbers::sqrt2;
  cay.at(n, 0) = 1.0;
  cay.at(n, n) = -1.0;

  GroupElement tmp = g3;
  tmp.form = FormTag::H1;
  GroupElement out = group_product(group_product(cay, tmp), cay);
  for (auto& v : out.m) v *= 0.5;
  out.form = FormTag::H1;
  out.require_isometry(1e-9);
  return out;
}

}  // namespace picard
