#pragma once

// Log-domain complex arithmetic and deterministic log-sum-exp reduction.
//
// Series terms of the form (K/4pi)^K / base^K with K ~ 10^3 span thousands
// of orders of magnitude; they are representable only as (log-magnitude,
// phase) pairs.  All reductions here are specified as a fixed tree (max
// shift, fixed-size blocks, block-order combine) so that single- and
// multi-threaded runs produce identical bits.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>
#include <thread>
#include <vector>

namespace picard {

using cplx = std::complex<double>;

inline double wrap_phase(double p) {
  double w = std::remainder(p, 2.0 * std::numbers::pi);
  if (w <= -std::numbers::pi) w += 2.0 * std::numbers::pi;
  return w;
}

// Complex value stored as (log of magnitude, phase in (-pi, pi]).
// log_mag == -inf encodes an exact zero.
struct LogComplex {
  double log_mag = -std::numeric_limits<double>::infinity();
  double phase = 0.0;

  static LogComplex zero() { return {}; }

  static LogComplex from_complex(cplx v) {
    if (v == cplx(0.0, 0.0)) return zero();
    return {std::log(std::abs(v)), std::arg(v)};
  }

  // Positive real value given directly by its natural log.
  static LogComplex from_log_real(double log_value) { return {log_value, 0.0}; }

  bool is_zero() const { return std::isinf(log_mag) && log_mag < 0; }

  cplx to_complex() const {
    double m = std::exp(log_mag);
    return {m * std::cos(phase), m * std::sin(phase)};
  }

  // exp(log_mag); +inf when the magnitude exceeds double range.
  double magnitude() const { return std::exp(log_mag); }

  LogComplex operator*(const LogComplex& o) const {
    if (is_zero() || o.is_zero()) return zero();
    return {log_mag + o.log_mag, wrap_phase(phase + o.phase)};
  }

  LogComplex operator/(const LogComplex& o) const {
    return {log_mag - o.log_mag, wrap_phase(phase - o.phase)};
  }

  // Integer power; phase wraps exactly through std::remainder.
  LogComplex pow(long e) const {
    if (is_zero()) return zero();
    return {log_mag * static_cast<double>(e),
            wrap_phase(phase * static_cast<double>(e))};
  }

  LogComplex conj() const { return {log_mag, wrap_phase(-phase)}; }
};

namespace detail {

constexpr std::size_t kReduceBlock = 1024;

inline cplx block_sum(std::span<const LogComplex> terms, std::size_t lo,
                      std::size_t hi, double shift) {
  cplx acc(0.0, 0.0);
  for (std::size_t i = lo; i < hi; ++i) {
    if (terms[i].is_zero()) continue;
    double m = std::exp(terms[i].log_mag - shift);
    acc += cplx(m * std::cos(terms[i].phase), m * std::sin(terms[i].phase));
  }
  return acc;
}

}  // namespace detail

// Deterministic log-sum-exp: two passes (max shift, then accumulation in
// blocks of 1024 combined in block order).  The result does not depend on
// thread_count; threads only split the independent block sums.
inline LogComplex log_sum_exp(std::span<const LogComplex> terms,
                              unsigned thread_count = 1) {
  if (terms.empty()) return LogComplex::zero();

  double shift = -std::numeric_limits<double>::infinity();
  for (const auto& t : terms) shift = std::max(shift, t.log_mag);
  if (std::isinf(shift) && shift < 0) return LogComplex::zero();

  const std::size_t nblocks =
      (terms.size() + detail::kReduceBlock - 1) / detail::kReduceBlock;
  std::vector<cplx> blocks(nblocks);

  auto run = [&](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b) {
      std::size_t lo = b * detail::kReduceBlock;
      std::size_t hi = std::min(terms.size(), lo + detail::kReduceBlock);
      blocks[b] = detail::block_sum(terms, lo, hi, shift);
    }
  };

  if (thread_count <= 1 || nblocks <= 1) {
    run(0, nblocks);
  } else {
    unsigned nt = std::min<unsigned>(thread_count, static_cast<unsigned>(nblocks));
    std::vector<std::thread> pool;
    pool.reserve(nt);
    std::size_t chunk = (nblocks + nt - 1) / nt;
    for (unsigned t = 0; t < nt; ++t) {
      std::size_t b0 = t * chunk;
      std::size_t b1 = std::min(nblocks, b0 + chunk);
      if (b0 >= b1) break;
      pool.emplace_back(run, b0, b1);
    }
    for (auto& th : pool) th.join();
  }

  cplx total(0.0, 0.0);
  for (const auto& b : blocks) total += b;

  if (total == cplx(0.0, 0.0)) return LogComplex::zero();
  return {shift + std::log(std::abs(total)), std::arg(total)};
}

// Log-sum-exp specialised to nonnegative real terms given by their logs.
inline double log_sum_exp_real(std::span<const double> log_terms,
                               unsigned thread_count = 1) {
  std::vector<LogComplex> t(log_terms.size());
  for (std::size_t i = 0; i < log_terms.size(); ++i)
    t[i] = LogComplex::from_log_real(log_terms[i]);
  return log_sum_exp(t, thread_count).log_mag;
}

}  // namespace picard
