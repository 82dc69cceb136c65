#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "picard/bergman_kernel.hpp"
#include "picard/complex_hyperbolic.hpp"
#include "picard/heisenberg_lattice.hpp"

using namespace picard;

namespace {

std::vector<GroupElement> stabilizer_elements(const QuadraticField& f, int n,
                                              double norm_bound) {
  std::vector<GroupElement> out;
  for (const auto& h : enumerate_lattice(f, n, norm_bound))
    out.push_back(heisenberg_matrix(h));
  return out;
}

}  // namespace

TEST_CASE("LogComplex arithmetic and deterministic reduction") {
  auto a = LogComplex::from_complex(cplx(3, 4));
  CHECK(a.log_mag == doctest::Approx(std::log(5.0)).epsilon(1e-15));
  auto sq = a.pow(2);
  CHECK(std::abs(sq.to_complex() - cplx(-7, 24)) < 1e-12);
  CHECK(std::abs((a * a.conj()).to_complex() - cplx(25, 0)) < 1e-12);
  CHECK(LogComplex::zero().is_zero());
  CHECK((LogComplex::zero() * a).is_zero());

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  std::vector<LogComplex> terms(5000);
  cplx direct(0, 0);
  for (auto& t : terms) {
    cplx v(u(rng), u(rng));
    t = LogComplex::from_complex(v);
    direct += v;
  }
  auto red1 = log_sum_exp(terms, 1);
  CHECK(std::abs(red1.to_complex() - direct) < 1e-9 * std::abs(direct));
  for (unsigned threads : {2u, 4u, 8u}) {
    auto red = log_sum_exp(terms, threads);
    CHECK(red.log_mag == red1.log_mag);  // bit-identical across thread counts
    CHECK(red.phase == red1.phase);
  }
}

TEST_CASE("petersson_log_weight pinned values") {
  KernelParams p4(1, 3);  // K = 4
  CHECK(petersson_log_weight(ModelPoint::origin(3), p4) == 0.0);

  KernelParams pk4(2, 1);  // K = 4
  auto half = ModelPoint::ball({cplx(std::sqrt(0.5), 0)});
  CHECK(petersson_log_weight(half, pk4) ==
        doctest::Approx(2.0 * std::log(0.5)).epsilon(1e-14));

  KernelParams pk2(1, 1);  // K = 2
  auto e = ModelPoint::left_half({cplx(-1, 0)});
  CHECK(petersson_log_weight(e, pk2) == doctest::Approx(std::log(2.0)).epsilon(1e-14));

  auto boundary = ModelPoint::ball({cplx(1, 0)});
  CHECK_THROWS(petersson_log_weight(boundary, pk2));
}

TEST_CASE("kernel_term: identity-element values and weighted cancellation") {
  KernelParams p(2, 2);  // K = 6
  auto id = GroupElement::identity(2, FormTag::H1);
  auto o = ModelPoint::origin(2);
  CHECK(kernel_term(id, o, o, p).log_mag == doctest::Approx(0.0).epsilon(1e-14));

  auto half = ModelPoint::ball({cplx(std::sqrt(0.5), 0), cplx(0, 0)});
  CHECK(kernel_term(id, half, half, p).log_mag ==
        doctest::Approx(6.0 * std::log(2.0)).epsilon(1e-13));

  std::mt19937_64 rng(4);
  for (double c : {1.0, 0.37, 12.5}) {
    KernelParams pc(3, 2, c);
    for (int it = 0; it < 40; ++it) {
      auto z = oracles::random_ball_point(rng, 2);
      double logv = 2.0 * petersson_log_weight(z, pc) +
                    kernel_term(id, z, z, pc).log_mag;
      CHECK(std::exp(logv) == doctest::Approx(c).epsilon(1e-12));
    }
    // same cancellation in the left-half model
    auto id3 = GroupElement::identity(2, FormTag::H3);
    for (int it = 0; it < 40; ++it) {
      auto z = oracles::random_left_half_point(rng, 2);
      double logv = 2.0 * petersson_log_weight(z, pc) +
                    kernel_term(id3, z, z, pc).log_mag;
      CHECK(std::exp(logv) == doctest::Approx(c).epsilon(1e-12));
    }
  }
}

TEST_CASE("termwise bound: weighted term magnitude equals the cosh power") {
  QuadraticField f3(3);
  KernelParams p(4, 2);  // K = 12
  auto elems = stabilizer_elements(f3, 2, 12.0);
  auto H3 = HermitianForm::standard(FormTag::H3, 2);
  std::mt19937_64 rng(6);
  for (int it = 0; it < 100; ++it) {
    auto z = oracles::random_left_half_point(rng, 2);
    auto w = oracles::random_left_half_point(rng, 2);
    double wz = petersson_log_weight(z, p), ww = petersson_log_weight(w, p);
    for (const auto& g : elems) {
      double lhs = wz + ww + kernel_term(g, z, w, p).log_mag;
      double d = hyp_distance(H3, z, apply(g, w));
      double rhs = p.log_c() - p.K() * log_cosh(d / 2.0);
      CHECK(std::exp(lhs) <= std::exp(rhs) + 1e-12);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
  }
}

TEST_CASE("kernel_sum: identity-only value, diagonal positivity, tail consistency") {
  KernelParams p(8, 2, 0.7);  // K = 24
  auto id = GroupElement::identity(2, FormTag::H1);
  auto o = ModelPoint::origin(2);
  std::vector<GroupElement> only_id{id};
  auto rep = kernel_sum(o, o, p, only_id);
  CHECK(std::exp(rep.value.log_mag) == doctest::Approx(0.7).epsilon(1e-13));
  CHECK(rep.terms_used == 1);
  CHECK(rep.tail_estimate == 0.0);

  // diagonal positivity over the (inversion-closed) stabiliser lattice
  QuadraticField f3(3);
  auto elems = stabilizer_elements(f3, 2, 20.0);
  auto z = ModelPoint::left_half({cplx(-0.5 * p.K() / (4.0 * std::numbers::pi), 0),
                                  cplx(0, 0)});
  auto srep = kernel_sum(z, z, p, elems);
  CHECK(std::abs(srep.value.phase) < 1e-10);

  // doubling the enumeration radius moves the sum by less than the tail bound
  auto elems2 = stabilizer_elements(f3, 2, 40.0);
  auto srep2 = kernel_sum(z, z, p, elems2);
  double change = std::abs(srep2.value.magnitude() - srep.value.magnitude());
  CHECK(change <= srep.tail_estimate);
  CHECK(srep.relative_tail < 1.0);
}

TEST_CASE("kernel_cosh_bound: identity value, decrease in K, dominates the sum") {
  KernelParams p(8, 2, 2.0);
  auto id = GroupElement::identity(2, FormTag::H1);
  auto o = ModelPoint::origin(2);
  std::vector<GroupElement> only_id{id};
  CHECK(std::exp(kernel_cosh_bound(o, p, only_id).value.log_mag) ==
        doctest::Approx(2.0).epsilon(1e-13));

  QuadraticField f3(3);
  auto lat = enumerate_lattice(f3, 2, 10.0);
  std::vector<GroupElement> non_id;
  for (const auto& h : lat)
    if (!h.is_identity()) non_id.push_back(heisenberg_matrix(h));
  auto z = ModelPoint::left_half({cplx(-2.0, 0.1), cplx(0.1, 0)});
  double prev = std::numeric_limits<double>::infinity();
  for (int k : {4, 8, 16, 32}) {
    KernelParams pk(k, 2);
    double b = kernel_cosh_bound(z, pk, non_id).value.log_mag;
    CHECK(b < prev);
    prev = b;
  }

  // weighted |kernel_sum| <= cosh bound termwise implies it for the sums
  KernelParams pk(6, 2);
  auto elems = stabilizer_elements(f3, 2, 10.0);
  auto srep = kernel_sum(z, z, pk, elems);
  auto brep = kernel_cosh_bound(z, pk, elems);
  double weighted = 2.0 * petersson_log_weight(z, pk) + srep.value.log_mag;
  CHECK(weighted <= brep.value.log_mag + 1e-10);
}

TEST_CASE("two independent code paths: cosh route vs direct cusp formula") {
  QuadraticField f3(3);
  for (int k : {16, 32}) {
    KernelParams p(k, 2);
    double alpha = p.K() / (4.0 * std::numbers::pi);
    auto z = ModelPoint::left_half({cplx(-0.5 * alpha, 0), cplx(0, 0)});
    double B = 30.0;
    auto direct = cusp_lattice_sum(p, f3, alpha, B);
    auto elems = stabilizer_elements(f3, 2, B);
    auto viamat = kernel_cosh_bound(z, p, elems);
    CHECK(direct.terms_used == static_cast<long long>(elems.size()));
    CHECK(direct.value.log_mag ==
          doctest::Approx(viamat.value.log_mag).epsilon(1e-10));
  }
}

TEST_CASE("p_function: oracle argmax at x_1 = -K/4pi, decay, stationarity") {
  for (int K : {24, 120, 600}) {
    KernelParams p(K / 3, 2);  // n = 2 so K() = 3k
    REQUIRE(p.K() == K);
    std::vector<cplx> none;

    // 1-D scan oracle at resolution 1e-4
    double lo = -2.0 * K / (4.0 * std::numbers::pi), hi = -1e-3;
    double best_x = lo, best_v = -std::numeric_limits<double>::infinity();
    for (double x = lo; x <= hi; x += 1e-4) {
      double v = p_function_log(x, none, p);
      if (v > best_v) { best_v = v; best_x = x; }
    }
    double want = -K / (4.0 * std::numbers::pi);
    CHECK(std::abs(best_x - want) < 1e-3);

    // log P decays to -inf toward the cusp
    double v1 = p_function_log(-10.0 * std::abs(want), none, p);
    double v2 = p_function_log(-100.0 * std::abs(want), none, p);
    CHECK(v2 < v1);
    CHECK(v1 < best_v);
  }

  // stationarity of P at the critical point via central differences
  KernelParams p8(8, 2);  // K = 24
  std::vector<cplx> none;
  double xc = -p8.K() / (4.0 * std::numbers::pi);
  double h = 1e-5;
  double deriv = (p_function(xc + h, none, p8) - p_function(xc - h, none, p8)) / (2.0 * h);
  double scale = 4.0 * std::numbers::pi * p_function(xc, none, p8);
  CHECK(std::abs(deriv) / scale < 1e-6);

  // transverse coordinates only decrease P
  std::vector<cplx> tr{cplx(0.2, 0.1)};
  CHECK(p_function_log(xc, tr, p8) < p_function_log(xc, none, p8));
  CHECK_THROWS_AS(p_function_log(-0.01, tr, p8), std::domain_error);
}

TEST_CASE("p_function boundary maximization on a slab grid") {
  KernelParams p(40, 2);  // K = 120
  double xc = -p.K() / (4.0 * std::numbers::pi);
  double best = -std::numeric_limits<double>::infinity();
  double best_x = 0, best_t = 0;
  for (double x = 4.0 * xc; x <= -1e-3; x += 2e-3) {
    for (double t = 0.0; t < 1.0; t += 0.05) {
      if (-2.0 * x <= t * t) continue;
      std::vector<cplx> tr{cplx(t, 0)};
      double v = p_function_log(x, tr, p);
      if (v > best) { best = v; best_x = x; best_t = t; }
    }
  }
  CHECK(std::abs(best_x - xc) <= 2e-3 + 1e-12);
  CHECK(best_t == 0.0);
}

TEST_CASE("subharmonicity surrogate: exponential sums pass the Laplacian check") {
  // h(z) = sum_j |g_j(z)|^2 with g_j holomorphic exponential sums; the
  // 4-point discrete Laplacian in each complex coordinate stays >= -1e-9
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 2;
  for (int fn = 0; fn < 10; ++fn) {
    std::vector<std::vector<cplx>> coeff(3, std::vector<cplx>(3));
    for (auto& row : coeff)
      for (auto& c : row) c = cplx(u(rng), u(rng));
    auto h_val = [&](const ModelPoint& pt) {
      double acc = 0.0;
      for (int j = 0; j < 3; ++j) {
        cplx g(0, 0);
        for (int m = 1; m <= 3; ++m)
          g += coeff[static_cast<std::size_t>(j)][static_cast<std::size_t>(m - 1)] *
               std::exp(2.0 * std::numbers::pi * static_cast<double>(m) * pt.z[0]) *
               std::pow(pt.z[1], j);
        acc += std::norm(g);
      }
      return acc;
    };
    for (int it = 0; it < 50; ++it) {
      auto z = oracles::random_left_half_point(rng, n);
      const double step = 1e-3;
      for (int coord = 0; coord < n; ++coord) {
        auto shifted = [&](double dx, double dy) {
          ModelPoint q = z;
          q.z[static_cast<std::size_t>(coord)] += cplx(dx, dy);
          return h_val(q);
        };
        double lap = (shifted(step, 0) + shifted(-step, 0) + shifted(0, step) +
                      shifted(0, -step) - 4.0 * h_val(z)) /
                     (step * step);
        CHECK(lap >= -1e-9 * std::max(1.0, h_val(z)));
      }
    }
  }
}

TEST_CASE("cusp_lattice_sum: unit term, K-monotonicity, order invariance") {
  QuadraticField f3(3);
  KernelParams p(8, 2, 0.9);
  // truncation below the smallest positive norm keeps only (0,0)
  auto rep = cusp_lattice_sum(p, f3, 2.0, 0.5);
  CHECK(rep.terms_used == 1);
  CHECK(std::exp(rep.value.log_mag) == doctest::Approx(0.9).epsilon(1e-13));

  // each nonidentity term decreases as K grows
  for (auto [tn2, tc] : {std::pair<double, double>{1.0, 0.0}, {0.0, 1.0}, {3.0, 2.0}}) {
    double prev = 0.0;
    bool first = true;
    for (int k : {4, 8, 16, 32}) {
      KernelParams pk(k, 2);
      double lt = cusp_term_log(pk, 2.0, tn2, tc * std::sqrt(3.0));
      if (!first) CHECK(lt < prev);
      prev = lt;
      first = false;
    }
  }

  // permutation of the enumeration order moves the sum by < 1e-12
  KernelParams pk(16, 2);
  double alpha = pk.K() / (4.0 * std::numbers::pi);
  auto lat = enumerate_lattice(f3, 2, 25.0);
  std::vector<LogComplex> terms;
  for (const auto& h : lat)
    terms.push_back(LogComplex::from_log_real(
        cusp_term_log(pk, alpha, static_cast<double>(h.tau_norm2_int()), h.t())));
  auto canonical = log_sum_exp(terms);
  std::mt19937_64 rng(10);
  for (int it = 0; it < 5; ++it) {
    std::shuffle(terms.begin(), terms.end(), rng);
    auto shuffled = log_sum_exp(terms);
    CHECK(shuffled.log_mag == doctest::Approx(canonical.log_mag).epsilon(1e-12));
  }

  // automatic truncation reports the radius it used
  auto arep = cusp_lattice_sum(pk, f3, alpha, -1.0);
  CHECK(arep.norm_bound > 0.0);
  CHECK(arep.relative_tail < 1e-10);
  CuspSumOptions cap;
  cap.max_norm_bound = 1.0;
  CHECK_THROWS_AS(cusp_lattice_sum(pk, f3, alpha, -1.0, cap), TruncationError);
}

TEST_CASE("gamma_tail_integral against the quadrature oracle") {
  // oracle: int_0^inf dx/(1+x^2)^a = int_0^{pi/2} cos^{2a-2} theta dtheta
  auto oracle = [](double a) {
    return oracles::quad(
        [a](double th) { return std::pow(std::cos(th), 2.0 * a - 2.0); }, 0.0,
        std::numbers::pi / 2.0, 1e-13);
  };
  CHECK(gamma_tail_integral(1.0) == doctest::Approx(std::numbers::pi / 2.0).epsilon(1e-14));
  CHECK(gamma_tail_integral(2.0) == doctest::Approx(std::numbers::pi / 4.0).epsilon(1e-14));
  for (double a : {1.0, 1.5, 2.0, 10.0})
    CHECK(gamma_tail_integral(a) == doctest::Approx(oracle(a)).epsilon(1e-10));
  // the uncorrected form is exactly twice the quadrature value
  for (double a : {1.0, 2.5})
    CHECK(gamma_tail_integral(a, true) ==
          doctest::Approx(2.0 * gamma_tail_integral(a)).epsilon(1e-15));
  // large-a decay ~ (sqrt(pi)/2)/sqrt(a)
  double a = 1e3;
  CHECK(gamma_tail_integral(a) ==
        doctest::Approx(0.5 * std::sqrt(std::numbers::pi / a)).epsilon(0.01));
}

TEST_CASE("poisson_lower_bound: single-term closed form and saturation") {
  for (double alpha : {0.8, 2.0, 7.5}) {
    for (int k : {2, 5}) {
      for (int n : {2, 3}) {
        KernelParams p(k, n);
        double K = p.K();
        double two_pi = 2.0 * std::numbers::pi;
        double hand = std::log(two_pi) + K * std::log(alpha) - two_pi * alpha +
                      K * std::log(two_pi) - std::lgamma(K) -
                      (2.0 * n - 2.0) * std::log(2.0 * std::sqrt(2.0));
        CHECK(poisson_lower_bound_log(alpha, p, 1) ==
              doctest::Approx(hand).epsilon(1e-12));
      }
    }
  }
  // the m-sum saturates: doubling m_terms changes nothing measurable
  KernelParams p(32, 2);
  double alpha = p.K() / (4.0 * std::numbers::pi);
  int M = poisson_m_terms(alpha, p);
  CHECK(poisson_lower_bound_log(alpha, p, M) ==
        doctest::Approx(poisson_lower_bound_log(alpha, p, 2 * M)).epsilon(1e-14));
  // stays finite in log domain at weights far beyond double range
  KernelParams big(512, 3);
  CHECK(std::isfinite(poisson_lower_bound_log(big.K() / (4.0 * std::numbers::pi), big,
                                              poisson_m_terms(big.K() / (4.0 * std::numbers::pi), big))));
}

TEST_CASE("poisson_lower_bound growth law at the regime boundary") {
  // at alpha = K/2pi the m = 1 term gives sqrt(2 pi K) / 8^{n-1} up to the
  // 1/(12K) Stirling correction; the remaining terms decay like e^{-0.3K}
  for (int n : {2, 3}) {
    for (int k : {16, 64, 256}) {
      KernelParams p(k, n);
      double alpha = p.K() / (2.0 * std::numbers::pi);
      double got = poisson_lower_bound_log(alpha, p, poisson_m_terms(alpha, p));
      double want = std::log(std::sqrt(2.0 * std::numbers::pi * p.K())) -
                    3.0 * (n - 1) * std::numbers::ln2;
      CHECK(std::abs(got - want) < 0.01);
    }
  }
  // in the acceptance regime alpha = K/4pi the m = 2 term dominates:
  // log bound ~ log(sqrt(2 pi K) / 16^{n-1})
  for (int n : {2, 3}) {
    KernelParams p(128, n);
    double alpha = p.K() / (4.0 * std::numbers::pi);
    double got = poisson_lower_bound_log(alpha, p, poisson_m_terms(alpha, p));
    double want = std::log(std::sqrt(2.0 * std::numbers::pi * p.K())) -
                  4.0 * (n - 1) * std::numbers::ln2;
    CHECK(std::abs(got - want) < 5e-3);
  }
}

TEST_CASE("poisson_identity_check: closed form and pair agreement") {
  // right side has a closed form at K = 2: (2pi)^2 x/(1-x)^2 = pi^2/sinh^2(pi beta)
  for (double beta : {0.5, 1.0, 2.0}) {
    auto [left, right] = poisson_identity_check(beta, 2, 10'000'000, 60);
    double closed = std::pow(std::numbers::pi / std::sinh(std::numbers::pi * beta), 2);
    CHECK(right == doctest::Approx(closed).epsilon(1e-12));
    CHECK(std::abs(left - right) < 3e-7);  // truncation tail ~ 2/t_range
  }
  {
    auto [left, right] = poisson_identity_check(2.0, 4, 200'000, 40);
    CHECK(std::abs(left - right) < 1e-8);
  }
  {
    auto [left, right] = poisson_identity_check(1.0, 8, 20'000, 40);
    CHECK(std::abs(left - right) < 1e-10);
  }
  // large beta: both sides collapse to (2pi)^K e^{-2pi beta}/Gamma(K); the
  // t = 0 term beta^{-K} is canceled by the oscillating neighbours
  {
    int K = 4;
    double beta = 4.0;
    auto [left, right] = poisson_identity_check(beta, K, 100'000, 20);
    double lead = std::pow(2.0 * std::numbers::pi, K) / 6.0 *
                  std::exp(-2.0 * std::numbers::pi * beta);
    CHECK(right == doctest::Approx(lead).epsilon(1e-4));
    CHECK(std::abs(left - right) < 1e-11);
    CHECK(std::abs(left) < std::pow(beta, -K));
  }
}
