#pragma once

// Log-domain evaluation of the Poincare-series Bergman kernel
//
//   B_k(z,w) = sum_gamma c / ( <z~, (gamma w)~>_H  conj(Cw + D) )^{k(n+1)},
//
// together with its cosh-power upper bound, the cusp boundary function
// P, cusp lattice sums over the Heisenberg stabiliser, the closed-form
// Gamma tail integral, and the Poisson-summation lower-bound machinery.

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "picard/complex_hyperbolic.hpp"
#include "picard/heisenberg_lattice.hpp"
#include "picard/log_domain.hpp"

namespace picard {

struct KernelParams {
  int k = 1;       // weight index
  int n = 2;       // complex dimension
  double c = 1.0;  // normalisation constant c_{k,n}

  KernelParams() = default;
  KernelParams(int k_, int n_, double c_ = 1.0) : k(k_), n(n_), c(c_) {
    if (k < 1) throw std::invalid_argument("KernelParams: k must be >= 1");
    if (n < 1) throw std::invalid_argument("KernelParams: n must be >= 1");
    if (c <= 0.0) throw std::invalid_argument("KernelParams: c must be positive");
  }

  int K() const { return k * (n + 1); }
  double log_c() const { return std::log(c); }
};

struct SumReport {
  LogComplex value;
  long long terms_used = 0;
  double norm_bound = 0.0;     // enumeration radius covered by the sum
  double tail_estimate = 0.0;  // bound on the omitted mass (counting machinery)
  double relative_tail = 0.0;  // tail_estimate / |value|
  double log_tail = -std::numeric_limits<double>::infinity();

  void finish_tail(double log_tail_bound) {
    log_tail = log_tail_bound;
    tail_estimate = std::exp(log_tail_bound);
    relative_tail = std::exp(log_tail_bound - value.log_mag);
  }
};

// log cosh / log sinh without overflow for large arguments
inline double log_cosh(double x) {
  double a = std::abs(x);
  if (a > 20.0) return a - std::numbers::ln2 + std::log1p(std::exp(-2.0 * a));
  return std::log(std::cosh(a));
}

inline double log_sinh(double x) {
  if (x <= 0.0) throw std::domain_error("log_sinh: nonpositive argument");
  if (x > 20.0) return x - std::numbers::ln2 + std::log1p(-std::exp(-2.0 * x));
  return std::log(std::sinh(x));
}

// (K/2) log(1 - |z|^2) in the ball model,
// (K/2) log(-2 Re z_1 - sum_{j>=2} |z_j|^2) in the left-half model.
inline double petersson_log_weight(const ModelPoint& p, const KernelParams& params) {
  require_valid(p);
  double base;
  switch (p.model) {
    case Model::Ball:
      base = interior_margin(p);
      break;
    case Model::LeftHalf:
      base = 2.0 * interior_margin(p);
      break;
    default:
      throw std::invalid_argument("petersson_log_weight: ball or left-half model only");
  }
  return 0.5 * params.K() * std::log(base);
}

// alpha(z) = -<z~, z~>_H : 1-|z|^2 (ball), -2 Re z_1 - sum |z_j|^2 (left half)
inline double diagonal_alpha(const ModelPoint& p) {
  switch (p.model) {
    case Model::Ball: return interior_margin(p);
    case Model::LeftHalf: return 2.0 * interior_margin(p);
    default: throw std::invalid_argument("diagonal_alpha: ball or left-half model only");
  }
}

// One series term c / ( <z~,(gamma w)~>_H conj(Cw+D) )^K as a LogComplex.
inline LogComplex kernel_term(const GroupElement& g, const ModelPoint& z,
                              const ModelPoint& w, const KernelParams& params) {
  if (form_for_model(z.model) != g.form || z.model != w.model)
    throw std::invalid_argument("kernel_term: element form does not match the point model");
  const int n = z.n();
  cplx cwd(0, 0);
  for (int j = 0; j < n; ++j) cwd += g.at(n, j) * w.z[j];
  cwd += g.at(n, n);
  if (std::abs(cwd) < 1e-300) throw std::domain_error("kernel_term: pole, Cw + D = 0");

  ModelPoint gw = apply(g, w);
  HermitianForm H = HermitianForm::standard(g.form, n);
  auto lz = lift(z);
  auto lgw = lift(gw);
  cplx base = herm_inner(H, lz, lgw) * std::conj(cwd);

  LogComplex t = LogComplex::from_complex(base).pow(-params.K());
  t.log_mag += params.log_c();
  return t;
}

namespace detail {

// log of the closed-form tail bound for f(rho) = c cosh^{-K}(rho/2) beyond
// delta, using the packing bound with injectivity radius r_x:
//   f(delta) S(delta) + 2n/sinh^{2n}(r_x/4) *
//       int_delta^inf f sinh^{2n-1}((2rho+r_x)/4) cosh((2rho+r_x)/4) drho
// Everything runs on logs so K ~ 10^3 cannot underflow the intermediate
// quantities.
inline double log_cosh_power_tail(const KernelParams& params, double r_x,
                                  double delta) {
  const int K = params.K();
  const int two_n = 2 * params.n;
  if (K <= two_n)
    throw std::invalid_argument("cosh-power tail requires K > 2n for convergence");
  const double log_c = params.log_c();
  const double ls_rx = log_sinh(r_x / 4.0);

  double head = log_c - K * log_cosh(delta / 2.0) +
                two_n * (log_sinh((2.0 * delta + r_x) / 4.0) - ls_rx);

  auto log_integrand = [&](double rho) {
    double arg = (2.0 * rho + r_x) / 4.0;
    return log_c - K * log_cosh(rho / 2.0) + (two_n - 1) * log_sinh(arg) +
           log_cosh(arg);
  };

  // coarse scan for the integrand peak, then shifted quadrature
  double peak = log_integrand(delta);
  double rho = delta;
  const double h = 0.25;
  double drop_until = peak - 80.0;
  double hi = delta;
  for (int i = 1; i < 4000; ++i) {
    rho = delta + i * h;
    double v = log_integrand(rho);
    peak = std::max(peak, v);
    drop_until = peak - 80.0;
    hi = rho;
    if (v < drop_until && i > 8) break;
  }
  double shifted = integrate(
      [&](double r) { return std::exp(log_integrand(r) - peak); }, delta, hi,
      1e-8);
  double log_integral = peak + std::log(std::max(shifted, 1e-300));
  double log_tail_term = std::log(static_cast<double>(two_n)) -
                         two_n * ls_rx + log_integral;

  // log(e^a + e^b)
  double m = std::max(head, log_tail_term);
  return m + std::log(std::exp(head - m) + std::exp(log_tail_term - m));
}

}  // namespace detail

// Log-sum-exp reduction of kernel_term over the deduplicated element list,
// in list order, with the tail reported through the cosh-power counting
// machinery (r_x = smallest positive displacement seen, delta = largest).
inline SumReport kernel_sum(const ModelPoint& z, const ModelPoint& w,
                            const KernelParams& params,
                            std::span<const GroupElement> elements,
                            unsigned thread_count = 1) {
  if (elements.empty()) throw std::invalid_argument("kernel_sum: empty element list");
  HermitianForm H = HermitianForm::standard(form_for_model(z.model), z.n());

  std::vector<LogComplex> terms;
  terms.reserve(elements.size());
  double min_disp = std::numeric_limits<double>::infinity();
  double max_disp = 0.0;
  for (const auto& g : elements) {
    terms.push_back(kernel_term(g, z, w, params));
    double d = hyp_distance(H, z, apply(g, w));
    if (d > 1e-12) min_disp = std::min(min_disp, d);
    max_disp = std::max(max_disp, d);
  }

  SumReport rep;
  rep.value = log_sum_exp(terms, thread_count);
  rep.terms_used = static_cast<long long>(terms.size());
  rep.norm_bound = max_disp;
  if (std::isfinite(min_disp) && params.K() > 2 * params.n) {
    double delta = std::max(max_disp, min_disp);
    rep.finish_tail(detail::log_cosh_power_tail(params, min_disp, delta));
  }
  return rep;
}

// sum_gamma c cosh^{-K}(d(z, gamma z)/2); dominates the Petersson-weighted
// kernel magnitude termwise and is reported with the same tail machinery.
inline SumReport kernel_cosh_bound(const ModelPoint& z, const KernelParams& params,
                                   std::span<const GroupElement> elements,
                                   unsigned thread_count = 1) {
  if (elements.empty())
    throw std::invalid_argument("kernel_cosh_bound: empty element list");
  HermitianForm H = HermitianForm::standard(form_for_model(z.model), z.n());

  std::vector<LogComplex> terms;
  terms.reserve(elements.size());
  double min_disp = std::numeric_limits<double>::infinity();
  double max_disp = 0.0;
  for (const auto& g : elements) {
    double d = hyp_distance(H, z, apply(g, z));
    terms.push_back(
        LogComplex::from_log_real(params.log_c() - params.K() * log_cosh(d / 2.0)));
    if (d > 1e-12) min_disp = std::min(min_disp, d);
    max_disp = std::max(max_disp, d);
  }

  SumReport rep;
  rep.value = log_sum_exp(terms, thread_count);
  rep.terms_used = static_cast<long long>(terms.size());
  rep.norm_bound = max_disp;
  if (std::isfinite(min_disp) && params.K() > 2 * params.n) {
    double delta = std::max(max_disp, min_disp);
    rep.finish_tail(detail::log_cosh_power_tail(params, min_disp, delta));
  }
  return rep;
}

// log P with P(z) = e^{4 pi x_1} (-2 x_1 - sum |transverse|^2)^K.
inline double p_function_log(double x1, std::span<const cplx> transverse,
                             const KernelParams& params) {
  double s = 0.0;
  for (const auto& v : transverse) s += std::norm(v);
  double base = -2.0 * x1 - s;
  if (base <= 0.0) throw std::domain_error("p_function: requires -2 x_1 > sum |z_j|^2");
  return 4.0 * std::numbers::pi * x1 + params.K() * std::log(base);
}

inline double p_function(double x1, std::span<const cplx> transverse,
                         const KernelParams& params) {
  return std::exp(p_function_log(x1, transverse, params));
}

struct CuspSumOptions {
  double tau_scale = 0.5;  // |tau|^2 coefficient inside the base
  double t_scale = 0.5;    // t coefficient inside the base
  double u_factor = 1.0;   // multiplicity of the rotation part, O(1)
  double auto_rel_cut = 1e-16;   // first omitted term below cut * current sum
  double max_norm_bound = 2e5;   // growth cap for auto truncation
};

struct TruncationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

// smallest value of (alpha + ts u)^2 + (tt v)^2 over u + v = B, u,v >= 0
inline double min_base_on_shell(double alpha, double B, double ts, double tt) {
  auto val = [&](double u) {
    double a = alpha + ts * u;
    double b = tt * (B - u);
    return a * a + b * b;
  };
  double best = std::min(val(0.0), val(B));
  // interior stationary point of the quadratic
  double denom = ts * ts + tt * tt;
  if (denom > 0.0) {
    double u = (tt * tt * B - ts * alpha) / denom;
    if (u > 0.0 && u < B) best = std::min(best, val(u));
  }
  return best;
}

inline double log_largest_omitted(const KernelParams& params, double alpha,
                                  double B, const CuspSumOptions& opt) {
  double mb = min_base_on_shell(alpha, B, opt.tau_scale, opt.t_scale);
  return params.log_c() + params.K() * std::log(alpha) -
         0.5 * params.K() * std::log(mb);
}

}  // namespace detail

inline double cusp_term_log(const KernelParams& params, double alpha,
                            double tau_norm2, double t,
                            const CuspSumOptions& opt = {}) {
  double a = alpha + opt.tau_scale * tau_norm2;
  double b = opt.t_scale * t;
  return params.log_c() + params.K() * std::log(alpha) -
         0.5 * params.K() * std::log(a * a + b * b);
}

// sum over the stabiliser lattice of
//   c alpha^K / ((alpha + |tau|^2/2)^2 + (t/2)^2)^{K/2},
// enumerated in the deterministic lattice order.  A negative norm_bound
// grows the radius until the largest omitted term falls below auto_rel_cut
// times the identity term (throws TruncationError at the cap).
inline SumReport cusp_lattice_sum(const KernelParams& params,
                                  const QuadraticField& field, double alpha,
                                  double norm_bound,
                                  const CuspSumOptions& opt = {},
                                  unsigned thread_count = 1) {
  if (alpha <= 0.0) throw std::invalid_argument("cusp_lattice_sum: alpha must be > 0");

  double B = norm_bound;
  if (B < 0.0) {
    B = std::max(4.0, 8.0 * alpha / params.K());
    double cut = std::log(opt.auto_rel_cut);
    while (detail::log_largest_omitted(params, alpha, B, opt) - params.log_c() >= cut) {
      B *= 1.5;
      if (B > opt.max_norm_bound)
        throw TruncationError("cusp_lattice_sum: tail target unreachable at norm bound cap");
    }
  }

  auto lattice = enumerate_lattice(field, params.n, B);
  std::vector<LogComplex> terms;
  terms.reserve(lattice.size());
  for (const auto& h : lattice) {
    double tn2 = static_cast<double>(h.tau_norm2_int());
    terms.push_back(LogComplex::from_log_real(
        cusp_term_log(params, alpha, tn2, h.t(), opt)));
  }

  SumReport rep;
  rep.value = log_sum_exp(terms, thread_count);
  rep.value.log_mag += std::log(opt.u_factor);
  rep.terms_used = static_cast<long long>(terms.size());
  rep.norm_bound = B;

  // tail via the cosh identity: the summand equals c cosh^{-K}(d/2) for the
  // displacement of the corresponding stabiliser element
  double min_base = std::numeric_limits<double>::infinity();
  for (const auto& h : lattice) {
    if (h.is_identity()) continue;
    double a = alpha + opt.tau_scale * static_cast<double>(h.tau_norm2_int());
    double b = opt.t_scale * h.t();
    min_base = std::min(min_base, a * a + b * b);
  }
  if (std::isfinite(min_base) && params.K() > 2 * params.n) {
    double r_x = 2.0 * std::acosh(std::sqrt(min_base) / alpha);
    double omitted = detail::min_base_on_shell(alpha, B, opt.tau_scale, opt.t_scale);
    double delta = 2.0 * std::acosh(std::sqrt(omitted) / alpha);
    if (delta > r_x / 2.0)
      rep.finish_tail(detail::log_cosh_power_tail(params, r_x, delta));
  }
  return rep;
}

// int_0^inf dx/(1+x^2)^a = (sqrt(pi)/2) Gamma(a-1/2)/Gamma(a).  The flag
// drops the leading 1/2, giving the uncorrected tabulated form
// sqrt(pi) Gamma(a-1/2)/Gamma(a), twice the quadrature value.
inline double gamma_tail_integral(double a, bool literal_constant = false) {
  if (a < 1.0) throw std::invalid_argument("gamma_tail_integral: requires a >= 1");
  double v = std::exp(std::lgamma(a - 0.5) - std::lgamma(a)) *
             std::sqrt(std::numbers::pi);
  return literal_constant ? v : 0.5 * v;
}

// log of  sum_{m=1}^{M} (int_0^inf e^{-2 pi m x^2} dx)^{2n-2}
//                       * 2 pi alpha^K e^{-2 pi m alpha} (2 pi m)^K / (K-1)!
// with (int ...) = 1/(2 sqrt(2m)).
inline double poisson_lower_bound_log(double alpha, const KernelParams& params,
                                      int m_terms) {
  if (alpha <= 0.0) throw std::invalid_argument("poisson_lower_bound: alpha must be > 0");
  if (m_terms < 1) throw std::invalid_argument("poisson_lower_bound: m_terms must be >= 1");
  const double K = params.K();
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> logs(static_cast<std::size_t>(m_terms));
  for (int m = 1; m <= m_terms; ++m) {
    double lm = std::log(static_cast<double>(m));
    logs[static_cast<std::size_t>(m - 1)] =
        std::log(two_pi) + K * std::log(alpha) - two_pi * m * alpha +
        K * (std::log(two_pi) + lm) - std::lgamma(K) -
        (2.0 * params.n - 2.0) *
            (std::numbers::ln2 + 0.5 * (std::numbers::ln2 + lm));
  }
  return log_sum_exp_real(logs);
}

inline double poisson_lower_bound(double alpha, const KernelParams& params,
                                  int m_terms) {
  return std::exp(poisson_lower_bound_log(alpha, params, m_terms));
}

// number of m-terms that saturates the sum above to ~1e-18 relative
inline int poisson_m_terms(double alpha, const KernelParams& params) {
  double m_star = params.K() / (2.0 * std::numbers::pi * alpha);
  double width = std::sqrt(params.K()) / (2.0 * std::numbers::pi * alpha);
  return static_cast<int>(std::ceil(m_star + 12.0 * width + 24.0));
}

namespace detail {

inline cplx cplx_ipow(cplx base, int e) {
  cplx acc(1.0, 0.0);
  while (e > 0) {
    if (e & 1) acc *= base;
    base *= base;
    e >>= 1;
  }
  return acc;
}

}  // namespace detail

// Exact Poisson pair for the family t -> (beta + i t)^{-K}:
//   left  = sum_{|t| <= t_range} Re (beta + i t)^{-K}
//   right = (2 pi)^K / Gamma(K) sum_{m <= m_terms} m^{K-1} e^{-2 pi m beta}
// The two sides agree in the limit; truncation chooses how closely.
inline std::pair<double, double> poisson_identity_check(double beta, int K,
                                                        long long t_range,
                                                        int m_terms) {
  if (beta <= 0.0) throw std::invalid_argument("poisson_identity_check: beta must be > 0");
  if (K < 2) throw std::invalid_argument("poisson_identity_check: K must be >= 2");

  // pairs (t, -t) give 2 Re; accumulate ascending in term magnitude with
  // Kahan compensation so huge t_range stays accurate
  double left = 0.0, comp = 0.0;
  auto add = [&](double v) {
    double y = v - comp;
    double s = left + y;
    comp = (s - left) - y;
    left = s;
  };
  const double b2 = beta * beta;
  for (long long t = t_range; t >= 1; --t) {
    double td = static_cast<double>(t);
    if (K == 2) {
      double re = b2 - td * td, im = 2.0 * beta * td;
      add(2.0 * re / (re * re + im * im));
    } else {
      cplx wk = detail::cplx_ipow(cplx(beta, td), K);
      add(2.0 * wk.real() / std::norm(wk));
    }
  }
  add(1.0 / std::pow(beta, K));

  std::vector<double> logs(static_cast<std::size_t>(m_terms));
  const double two_pi = 2.0 * std::numbers::pi;
  for (int m = 1; m <= m_terms; ++m)
    logs[static_cast<std::size_t>(m - 1)] =
        K * std::log(two_pi) - std::lgamma(static_cast<double>(K)) +
        (K - 1) * std::log(static_cast<double>(m)) - two_pi * m * beta;
  double right = std::exp(log_sum_exp_real(logs));
  return {left, right};
}

}  // namespace picard
