#pragma once

// Exponent regression over k grids, the closed-form compact-part bound,
// and the lower/measured/upper sandwich over the cusp stabiliser.

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "picard/bergman_kernel.hpp"
#include "picard/heisenberg_lattice.hpp"

namespace picard {

struct GrowthSample {
  int k = 0;
  double log_value = 0.0;  // natural log of the measured quantity
  std::string label;
};

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
  int k_min = 0;
  int k_max = 0;
};

// Ordinary least squares of log value against log k; the slope is the
// empirical growth exponent.
inline FitResult fit_exponent(std::span<const GrowthSample> samples) {
  if (samples.size() < 4)
    throw std::invalid_argument("fit_exponent: need at least 4 samples");
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (samples[i].k <= samples[i - 1].k)
      throw std::invalid_argument("fit_exponent: k must be strictly increasing");

  const double m = static_cast<double>(samples.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& s : samples) {
    double x = std::log(static_cast<double>(s.k));
    sx += x;
    sy += s.log_value;
    sxx += x * x;
    sxy += x * s.log_value;
  }
  double denom = m * sxx - sx * sx;
  if (denom <= 0.0) throw std::invalid_argument("fit_exponent: degenerate k spread");

  FitResult fit;
  fit.slope = (m * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / m;
  double rss = 0.0;
  for (const auto& s : samples) {
    double x = std::log(static_cast<double>(s.k));
    double e = s.log_value - (fit.intercept + fit.slope * x);
    rss += e * e;
  }
  fit.residual_rms = std::sqrt(rss / m);
  fit.k_min = samples.front().k;
  fit.k_max = samples.back().k;
  return fit;
}

// Three-term compact-part bound
//   c + c sinh^{2n}(5r/8) / (sinh^{2n}(r/4) cosh^K(3r/8))
//     + c cosh^{2n}(r/4) / ((K-2n-1) sinh^{2n}(r/4) cosh^{K-2n-2}(3r/8)),
// valid for K > 2n+1.  literal_sin swaps the sinh(5r/8) numerator for the
// literal sin(5r/8).
inline double closed_form_compact_bound(const KernelParams& params, double r,
                                        bool literal_sin = false) {
  if (r <= 0.0) throw std::invalid_argument("closed_form_compact_bound: r must be > 0");
  const int K = params.K();
  const int two_n = 2 * params.n;
  if (K <= two_n + 1)
    throw std::invalid_argument("closed_form_compact_bound: requires K > 2n+1");

  const double log_c = params.log_c();
  const double ls_r4 = log_sinh(r / 4.0);
  double num2 = literal_sin ? std::log(std::abs(std::sin(5.0 * r / 8.0)))
                            : log_sinh(5.0 * r / 8.0);
  double t2 = log_c + two_n * (num2 - ls_r4) - K * log_cosh(3.0 * r / 8.0);
  double t3 = log_c + two_n * (log_cosh(r / 4.0) - ls_r4) -
              std::log(static_cast<double>(K - two_n - 1)) -
              (K - two_n - 2) * log_cosh(3.0 * r / 8.0);
  return params.c + std::exp(t2) + std::exp(t3);
}

struct SandwichRow {
  int k = 0;
  double log_measured = 0.0;  // stabiliser lattice sum, direct formula
  double log_lower = 0.0;     // Poisson-summation lower-bound surrogate
  double log_upper = 0.0;     // cosh-route stabiliser sum + compact bound
  long long terms = 0;
  bool lower_ok = false;  // lower <= measured
  bool upper_ok = false;  // measured <= upper
};

struct SandwichReport {
  std::vector<SandwichRow> rows;
  FitResult fit_measured;
  FitResult fit_lower;
  double band_lower_first = 0.0;  // log(measured/lower) at the smallest k
  double band_lower_last = 0.0;
  double band_upper_first = 0.0;  // log(upper/measured) at the smallest k
  double band_upper_last = 0.0;
};

namespace detail {

// One sandwich row at boundary height alpha: lower = Poisson surrogate,
// measured = stabiliser lattice sum via the direct (tau, t) formula,
// upper = the same sum routed through group matrices, actions and
// distances (an independent code path) plus the compact-part bound.
// Everything is c-normalised before comparison.
inline SandwichRow sandwich_row(int k, int n, double c, const QuadraticField& field,
                                double alpha, double compact_r_x,
                                double norm_bound_override, unsigned thread_count,
                                bool literal_sin = false) {
  KernelParams params(k, n, c);
  const double log_c = params.log_c();

  SumReport direct =
      cusp_lattice_sum(params, field, alpha, norm_bound_override, {}, thread_count);

  // independent route, streamed: matrix -> action -> distance -> cosh power
  ModelPoint z = ModelPoint::left_half(
      std::vector<cplx>(static_cast<std::size_t>(n), cplx(0, 0)));
  z.z[0] = cplx(-0.5 * alpha, 0.0);
  HermitianForm H3 = HermitianForm::standard(FormTag::H3, n);
  auto lattice = enumerate_lattice(field, n, direct.norm_bound);
  std::vector<double> cosh_logs;
  cosh_logs.reserve(lattice.size());
  for (const auto& h : lattice) {
    double d = hyp_distance(H3, z, apply(heisenberg_matrix(h), z));
    cosh_logs.push_back(params.log_c() - params.K() * log_cosh(d / 2.0));
  }

  double compact = closed_form_compact_bound(params, compact_r_x, literal_sin);
  double log_upper_stab = log_sum_exp_real(cosh_logs, thread_count);
  double log_compact = std::log(compact);
  double m = std::max(log_upper_stab, log_compact);
  double log_upper = m + std::log(std::exp(log_upper_stab - m) + std::exp(log_compact - m));

  SandwichRow row;
  row.k = k;
  row.log_measured = direct.value.log_mag - log_c;
  row.log_lower =
      poisson_lower_bound_log(alpha, params, poisson_m_terms(alpha, params)) - log_c;
  row.log_upper = log_upper - log_c;
  row.terms = direct.terms_used;
  row.lower_ok = row.log_lower <= row.log_measured + 1e-9;
  row.upper_ok = row.log_measured <= row.log_upper + 1e-9;
  return row;
}

inline void finish_sandwich(SandwichReport& rep) {
  std::vector<GrowthSample> meas, low;
  for (const auto& row : rep.rows) {
    meas.push_back({row.k, row.log_measured, "measured"});
    low.push_back({row.k, row.log_lower, "lower"});
  }
  rep.fit_measured = fit_exponent(meas);
  rep.fit_lower = fit_exponent(low);
  rep.band_lower_first = rep.rows.front().log_measured - rep.rows.front().log_lower;
  rep.band_lower_last = rep.rows.back().log_measured - rep.rows.back().log_lower;
  rep.band_upper_first = rep.rows.front().log_upper - rep.rows.front().log_measured;
  rep.band_upper_last = rep.rows.back().log_upper - rep.rows.back().log_measured;
}

}  // namespace detail

// Sandwich at a fixed left-half point z.  The transverse coordinates of z
// only enter through alpha(z); the point must sit inside the boundary
// neighbourhood (alpha >= K/4pi) for at least half the grid.
inline SandwichReport sandwich_experiment(std::span<const int> k_grid, int n,
                                          double c, const QuadraticField& field,
                                          const ModelPoint& z, double compact_r_x,
                                          double norm_bound_override = -1.0,
                                          unsigned thread_count = 1,
                                          bool literal_sin = false) {
  if (z.model != Model::LeftHalf)
    throw std::invalid_argument("sandwich_experiment: z must be a left-half point");
  require_valid(z);
  if (k_grid.size() < 4)
    throw std::invalid_argument("sandwich_experiment: need at least 4 grid points");

  const double alpha = diagonal_alpha(z);
  int in_cusp = 0;
  for (int k : k_grid)
    if (4.0 * std::numbers::pi * alpha >= k * (n + 1)) ++in_cusp;
  if (2 * in_cusp < static_cast<int>(k_grid.size()))
    throw std::invalid_argument(
        "sandwich_experiment: z must lie in the cusp region for at least half the grid");

  SandwichReport rep;
  for (int k : k_grid)
    rep.rows.push_back(detail::sandwich_row(k, n, c, field, alpha, compact_r_x,
                                            norm_bound_override, thread_count,
                                            literal_sin));
  detail::finish_sandwich(rep);
  return rep;
}

// Sandwich along the moving boundary point alpha = K/4pi, where measured
// and lower both scale like sqrt(k) and the bands settle to constants.
inline SandwichReport sandwich_boundary_experiment(std::span<const int> k_grid, int n,
                                                   double c, const QuadraticField& field,
                                                   double compact_r_x,
                                                   unsigned thread_count = 1,
                                                   bool literal_sin = false) {
  if (k_grid.size() < 4)
    throw std::invalid_argument("sandwich_boundary_experiment: need at least 4 grid points");
  SandwichReport rep;
  for (int k : k_grid) {
    double alpha = k * (n + 1) / (4.0 * std::numbers::pi);
    rep.rows.push_back(detail::sandwich_row(k, n, c, field, alpha, compact_r_x, -1.0,
                                            thread_count, literal_sin));
  }
  detail::finish_sandwich(rep);
  return rep;
}

}  // namespace picard
