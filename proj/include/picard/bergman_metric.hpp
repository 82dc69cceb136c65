#pragma once

// Analytic first and second derivatives of the truncated kernel series on
// the diagonal, the Bergman-metric coefficient matrix M(z), its pivoted
// determinant, and the volume ratio (1-|z|^2)^{n+1} |det M(z)|.
//
// The diagonal series is taken in the form
//   B(z) = sum_gamma c / u_gamma(z)^K,
//   u_gamma(z) = conj(Cz + D) - (Az + B)^* z,
// whose identity term is c (1-|z|^2)^{-K} with a positive base.  With
//   P_i = conj((Az+B)_i),        du/dz_i      = -P_i
//   Q_j = conj(c_j) - sum_l conj(a_lj) z_l,   du/dzbar_j = Q_j
//   d2u/dz_i dzbar_j = -conj(a_ij)
// the term derivatives are
//   dT/dz_i      =  K c u^{-K-1} P_i
//   dT/dzbar_j   = -K c u^{-K-1} Q_j
//   d2T/dz dzbar =  K c u^{-K-2} ( u conj(a_ij) - (K+1) P_i Q_j ).

#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include "picard/bergman_kernel.hpp"
#include "picard/complex_hyperbolic.hpp"
#include "picard/heisenberg_lattice.hpp"
#include "picard/log_domain.hpp"

namespace picard {

// Diagonal value and Wirtinger derivatives of the kernel series, all as
// log-domain values sharing the same huge magnitude scale.
struct DerivativeBundle {
  int n = 0;
  LogComplex B;
  std::vector<LogComplex> dB;     // n entries, d/dz_i
  std::vector<LogComplex> dBbar;  // n entries, d/dzbar_j
  std::vector<LogComplex> d2B;    // n*n entries, d2/dz_i dzbar_j (row i, col j)

  LogComplex d2(int i, int j) const { return d2B[static_cast<std::size_t>(i) * n + j]; }
};

namespace detail {

struct TermDerivs {
  LogComplex B;
  std::vector<LogComplex> dB, dBbar, d2B;
};

inline TermDerivs kernel_term_derivs_impl(const GroupElement& g, const ModelPoint& z,
                                          const KernelParams& params) {
  if (z.model != Model::Ball || g.form != FormTag::H1)
    throw std::invalid_argument("kernel_term_derivatives: ball-model series only");
  const int n = z.n();
  const int K = params.K();
  const double c = params.c;

  std::vector<cplx> az_b(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    cplx acc = g.at(i, n);
    for (int j = 0; j < n; ++j) acc += g.at(i, j) * z.z[j];
    az_b[static_cast<std::size_t>(i)] = acc;
  }
  cplx czd = g.at(n, n);
  for (int j = 0; j < n; ++j) czd += g.at(n, j) * z.z[j];

  cplx u = std::conj(czd);
  for (int i = 0; i < n; ++i) u -= std::conj(az_b[static_cast<std::size_t>(i)]) * z.z[i];
  if (std::abs(u) < 1e-300)
    throw std::domain_error("kernel_term_derivatives: pole in the series denominator");

  std::vector<cplx> P(static_cast<std::size_t>(n)), Q(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) P[static_cast<std::size_t>(i)] = std::conj(az_b[static_cast<std::size_t>(i)]);
  for (int j = 0; j < n; ++j) {
    cplx acc = std::conj(g.at(n, j));
    for (int l = 0; l < n; ++l) acc -= std::conj(g.at(l, j)) * z.z[l];
    Q[static_cast<std::size_t>(j)] = acc;
  }

  LogComplex logU = LogComplex::from_complex(u);
  LogComplex um_k = logU.pow(-K);
  LogComplex um_k1 = logU.pow(-(K + 1));
  LogComplex um_k2 = logU.pow(-(K + 2));

  TermDerivs out;
  out.B = um_k;
  out.B.log_mag += std::log(c);
  out.dB.resize(static_cast<std::size_t>(n));
  out.dBbar.resize(static_cast<std::size_t>(n));
  out.d2B.resize(static_cast<std::size_t>(n) * n);
  const double Kc = K * c;
  for (int i = 0; i < n; ++i) {
    out.dB[static_cast<std::size_t>(i)] =
        um_k1 * LogComplex::from_complex(Kc * P[static_cast<std::size_t>(i)]);
    out.dBbar[static_cast<std::size_t>(i)] =
        um_k1 * LogComplex::from_complex(-Kc * Q[static_cast<std::size_t>(i)]);
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      cplx bracket = u * std::conj(g.at(i, j)) -
                     static_cast<double>(K + 1) * P[static_cast<std::size_t>(i)] *
                         Q[static_cast<std::size_t>(j)];
      out.d2B[static_cast<std::size_t>(i) * n + j] =
          um_k2 * LogComplex::from_complex(Kc * bracket);
    }
  return out;
}

}  // namespace detail

// Contribution of a single group element; matches central finite
// differences of the series term.
inline DerivativeBundle kernel_term_derivatives(const GroupElement& g,
                                                const ModelPoint& z,
                                                const KernelParams& params) {
  auto t = detail::kernel_term_derivs_impl(g, z, params);
  DerivativeBundle b;
  b.n = z.n();
  b.B = t.B;
  b.dB = std::move(t.dB);
  b.dBbar = std::move(t.dBbar);
  b.d2B = std::move(t.d2B);
  return b;
}

// Per-entry deterministic log-sum-exp over the element list.
inline DerivativeBundle accumulate_derivatives(const ModelPoint& z,
                                               const KernelParams& params,
                                               std::span<const GroupElement> elements,
                                               unsigned thread_count = 1) {
  if (elements.empty())
    throw std::invalid_argument("accumulate_derivatives: empty element list");
  const int n = z.n();
  const std::size_t E = elements.size();
  const std::size_t nn = static_cast<std::size_t>(n) * n;

  std::vector<LogComplex> tB(E);
  std::vector<std::vector<LogComplex>> tdB(static_cast<std::size_t>(n), std::vector<LogComplex>(E));
  std::vector<std::vector<LogComplex>> tdBbar(static_cast<std::size_t>(n), std::vector<LogComplex>(E));
  std::vector<std::vector<LogComplex>> td2B(nn, std::vector<LogComplex>(E));

  for (std::size_t e = 0; e < E; ++e) {
    auto t = detail::kernel_term_derivs_impl(elements[e], z, params);
    tB[e] = t.B;
    for (int i = 0; i < n; ++i) {
      tdB[static_cast<std::size_t>(i)][e] = t.dB[static_cast<std::size_t>(i)];
      tdBbar[static_cast<std::size_t>(i)][e] = t.dBbar[static_cast<std::size_t>(i)];
    }
    for (std::size_t q = 0; q < nn; ++q) td2B[q][e] = t.d2B[q];
  }

  DerivativeBundle out;
  out.n = n;
  out.B = log_sum_exp(tB, thread_count);
  out.dB.resize(static_cast<std::size_t>(n));
  out.dBbar.resize(static_cast<std::size_t>(n));
  out.d2B.resize(nn);
  for (int i = 0; i < n; ++i) {
    out.dB[static_cast<std::size_t>(i)] = log_sum_exp(tdB[static_cast<std::size_t>(i)], thread_count);
    out.dBbar[static_cast<std::size_t>(i)] = log_sum_exp(tdBbar[static_cast<std::size_t>(i)], thread_count);
  }
  for (std::size_t q = 0; q < nn; ++q) out.d2B[q] = log_sum_exp(td2B[q], thread_count);
  return out;
}

// Diagonal series value in the positive-base form sum c / u_gamma^K.
inline LogComplex diag_kernel_log(const ModelPoint& z, const KernelParams& params,
                                  std::span<const GroupElement> elements,
                                  unsigned thread_count = 1) {
  std::vector<LogComplex> terms;
  terms.reserve(elements.size());
  for (const auto& g : elements)
    terms.push_back(detail::kernel_term_derivs_impl(g, z, params).B);
  return log_sum_exp(terms, thread_count);
}

// Coefficients of the hyperbolic metric: h_ij = (d_ij u + zbar_i z_j)/u^2
// with u = 1 - |z|^2.
inline cplx hyp_metric_coeff(const ModelPoint& z, int i, int j) {
  double u = interior_margin(z);
  cplx v = std::conj(z.z[static_cast<std::size_t>(i)]) * z.z[static_cast<std::size_t>(j)];
  if (i == j) v += u;
  return v / (u * u);
}

struct BergmanMatrix {
  int n = 0;
  std::vector<cplx> m;  // row-major n x n
  ModelPoint base_point;
  KernelParams params;

  cplx at(int i, int j) const { return m[static_cast<std::size_t>(i) * n + j]; }

  double hermitian_defect() const {
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        worst = std::max(worst, std::abs(at(i, j) - std::conj(at(j, i))));
    return worst;
  }
};

// Pivoted complex LU determinant; n stays small so direct elimination is fine.
inline cplx det_pivoted(int n, std::vector<cplx> a) {
  cplx det(1.0, 0.0);
  for (int col = 0; col < n; ++col) {
    int piv = col;
    double best = std::abs(a[static_cast<std::size_t>(col) * n + col]);
    for (int r = col + 1; r < n; ++r) {
      double v = std::abs(a[static_cast<std::size_t>(r) * n + col]);
      if (v > best) { best = v; piv = r; }
    }
    if (best == 0.0) return cplx(0.0, 0.0);
    if (piv != col) {
      for (int c = 0; c < n; ++c)
        std::swap(a[static_cast<std::size_t>(piv) * n + c], a[static_cast<std::size_t>(col) * n + c]);
      det = -det;
    }
    cplx p = a[static_cast<std::size_t>(col) * n + col];
    det *= p;
    for (int r = col + 1; r < n; ++r) {
      cplx f = a[static_cast<std::size_t>(r) * n + col] / p;
      for (int c = col; c < n; ++c)
        a[static_cast<std::size_t>(r) * n + c] -= f * a[static_cast<std::size_t>(col) * n + c];
    }
  }
  return det;
}

// Metric coefficient matrix.  The derivative slots receive the
// Petersson-weighted diagonal W = (1-|z|^2)^K B, i.e.
//   m_ij = -K h_ij + d2 log W / dz_i dzbar_j
//        = -2K h_ij + s_ij - r_i rbar_j
// with s, r, rbar the ratios d2B/B, dB/B, dBbar/B of the raw series.
// Under this convention the single-element {Id} series gives m = -K h and
// the volume ratio is exactly K^n.  sign_flip negates every entry.
inline BergmanMatrix bergman_matrix(const ModelPoint& z, const KernelParams& params,
                                    std::span<const GroupElement> elements,
                                    bool sign_flip = false,
                                    unsigned thread_count = 1) {
  require_valid(z);
  if (z.model != Model::Ball)
    throw std::invalid_argument("bergman_matrix: ball-model points only");
  auto bundle = accumulate_derivatives(z, params, elements, thread_count);
  if (bundle.B.is_zero())
    throw std::domain_error("bergman_matrix: kernel diagonal vanishes");

  const int n = z.n();
  const double K = params.K();
  BergmanMatrix M;
  M.n = n;
  M.base_point = z;
  M.params = params;
  M.m.resize(static_cast<std::size_t>(n) * n);

  std::vector<cplx> r(static_cast<std::size_t>(n)), rb(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    r[static_cast<std::size_t>(i)] = (bundle.dB[static_cast<std::size_t>(i)] / bundle.B).to_complex();
    rb[static_cast<std::size_t>(i)] = (bundle.dBbar[static_cast<std::size_t>(i)] / bundle.B).to_complex();
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      cplx s = (bundle.d2(i, j) / bundle.B).to_complex();
      cplx h = hyp_metric_coeff(z, i, j);
      cplx log_hess_w = s - r[static_cast<std::size_t>(i)] * rb[static_cast<std::size_t>(j)] - K * h;
      cplx v = -K * h + log_hess_w;
      M.m[static_cast<std::size_t>(i) * n + j] = sign_flip ? -v : v;
    }
  return M;
}

inline bool is_positive_definite(const BergmanMatrix& M) {
  // LDL* pivots without permutation; any nonpositive pivot fails
  const int n = M.n;
  std::vector<cplx> a = M.m;
  for (int col = 0; col < n; ++col) {
    cplx p = a[static_cast<std::size_t>(col) * n + col];
    if (p.real() <= 0.0) return false;
    for (int r = col + 1; r < n; ++r) {
      cplx f = a[static_cast<std::size_t>(r) * n + col] / p;
      for (int c = col; c < n; ++c)
        a[static_cast<std::size_t>(r) * n + c] -= f * a[static_cast<std::size_t>(col) * n + c];
    }
  }
  return true;
}

// (1-|z|^2)^{n+1} |det M(z)|
inline double bergman_volume_ratio(const ModelPoint& z, const KernelParams& params,
                                   std::span<const GroupElement> elements,
                                   unsigned thread_count = 1) {
  BergmanMatrix M = bergman_matrix(z, params, elements, false, thread_count);
  double u = interior_margin(z);
  return std::pow(u, z.n() + 1) * std::abs(det_pivoted(M.n, M.m));
}

// max over the grid and over (i,j) of (1-|z|^2)^{K-a} |d2B/dz_i dzbar_j|;
// growth-table reporting only.
inline double derivative_sup_scan(const KernelParams& params, double a,
                                  std::span<const ModelPoint> grid,
                                  std::span<const GroupElement> elements,
                                  unsigned thread_count = 1) {
  if (a < -2.0 * params.n || a > 2.0 * params.n)
    throw std::invalid_argument("derivative_sup_scan: a out of [-2n, 2n]");
  double best = 0.0;
  for (const auto& z : grid) {
    auto bundle = accumulate_derivatives(z, params, elements, thread_count);
    double lw = (params.K() - a) * std::log(interior_margin(z));
    for (int i = 0; i < bundle.n; ++i)
      for (int j = 0; j < bundle.n; ++j)
        best = std::max(best, std::exp(lw + bundle.d2(i, j).log_mag));
  }
  return best;
}

// Mixed Wirtinger finite differences of the doubly weighted diagonal
//   g(z) = 2K log(1-|z|^2) + log|B(z)|,
// whose exact log-Hessian equals the bergman_matrix entries.  Used as the
// independent cross-check path; evaluates only series values.
inline cplx fd_log_weighted_hessian(const ModelPoint& z, const KernelParams& params,
                                    std::span<const GroupElement> elements,
                                    int i, int j, double step = 1e-4) {
  auto g = [&](const ModelPoint& p) {
    return 2.0 * params.K() * std::log(interior_margin(p)) +
           diag_kernel_log(p, params, elements).log_mag;
  };
  auto shift = [&](int coord, double dx, double dy) {
    ModelPoint p = z;
    p.z[static_cast<std::size_t>(coord)] += cplx(dx, dy);
    return p;
  };
  const double h = step;
  if (i == j) {
    double gxx = (g(shift(i, h, 0)) - 2.0 * g(z) + g(shift(i, -h, 0))) / (h * h);
    double gyy = (g(shift(i, 0, h)) - 2.0 * g(z) + g(shift(i, 0, -h))) / (h * h);
    return cplx(0.25 * (gxx + gyy), 0.0);
  }
  auto shift2 = [&](double dxi, double dyi, double dxj, double dyj) {
    ModelPoint p = z;
    p.z[static_cast<std::size_t>(i)] += cplx(dxi, dyi);
    p.z[static_cast<std::size_t>(j)] += cplx(dxj, dyj);
    return g(p);
  };
  auto cross = [&](bool yi, bool yj) {
    double dxi = yi ? 0.0 : h, dyi = yi ? h : 0.0;
    double dxj = yj ? 0.0 : h, dyj = yj ? h : 0.0;
    return (shift2(dxi, dyi, dxj, dyj) - shift2(dxi, dyi, -dxj, -dyj) -
            shift2(-dxi, -dyi, dxj, dyj) + shift2(-dxi, -dyi, -dxj, -dyj)) /
           (4.0 * h * h);
  };
  double xx = cross(false, false);
  double yy = cross(true, true);
  double xy = cross(false, true);
  double yx = cross(true, false);
  return 0.25 * cplx(xx + yy, xy - yx);
}

}  // namespace picard
