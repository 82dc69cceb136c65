#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "picard/complex_hyperbolic.hpp"

using namespace picard;

namespace {

// matrix-vector oracle for the pairing b* H a, written independently of
// herm_inner's loop structure
cplx pairing_oracle(const HermitianForm& H, const std::vector<cplx>& a,
                    const std::vector<cplx>& b) {
  const int m = H.n + 1;
  cplx acc(0, 0);
  for (int c = 0; c < m; ++c) {
    cplx col(0, 0);
    for (int r = 0; r < m; ++r) col += std::conj(b[static_cast<std::size_t>(r)]) * H.at(r, c);
    acc += col * a[static_cast<std::size_t>(c)];
  }
  return acc;
}

}  // namespace

TEST_CASE("standard forms are Hermitian with signature (n,1)") {
  for (int n : {1, 2, 3, 4})
    for (auto tag : {FormTag::H1, FormTag::H2, FormTag::H3}) {
      auto H = HermitianForm::standard(tag, n);
      for (int r = 0; r <= n; ++r)
        for (int c = 0; c <= n; ++c)
          CHECK(H.at(r, c) == std::conj(H.at(c, r)));
      auto ev = oracles::hermitian_eigenvalues(n + 1, H.matrix);
      int pos = 0, neg = 0;
      for (double e : ev) (e > 0 ? pos : neg)++;
      CHECK(pos == n);
      CHECK(neg == 1);
    }
}

TEST_CASE("lift appends a unit last coordinate") {
  auto l0 = lift(ModelPoint::origin(3));
  CHECK(l0.size() == 4);
  CHECK(l0[3] == cplx(1, 0));
  for (int j = 0; j < 3; ++j) CHECK(l0[static_cast<std::size_t>(j)] == cplx(0, 0));

  auto l1 = lift(ModelPoint::ball({cplx(0.5, 0), cplx(0, 0)}));
  CHECK(l1[0] == cplx(0.5, 0));
  CHECK(l1[2] == cplx(1, 0));

  auto l2 = lift(ModelPoint::left_half({cplx(-1, 0), cplx(0, 0)}));
  CHECK(l2[0] == cplx(-1, 0));
  CHECK(l2[2] == cplx(1, 0));
}

TEST_CASE("herm_inner pinned values and matrix oracle") {
  auto H1 = HermitianForm::standard(FormTag::H1, 2);
  auto H3 = HermitianForm::standard(FormTag::H3, 2);

  auto o = lift(ModelPoint::origin(2));
  CHECK(herm_inner(H1, o, o) == cplx(-1, 0));

  auto e = lift(ModelPoint::left_half({cplx(-1, 0), cplx(0, 0)}));
  CHECK(herm_inner(H3, e, e) == cplx(-2, 0));

  auto a = lift(ModelPoint::ball({cplx(0.5, 0), cplx(0, 0)}));
  CHECK(herm_inner(H1, a, o) == cplx(-1, 0));

  std::mt19937_64 rng(41);
  for (int it = 0; it < 50; ++it) {
    auto z = oracles::random_ball_point(rng, 2);
    auto w = oracles::random_ball_point(rng, 2);
    auto lz = lift(z), lw = lift(w);
    CHECK(std::abs(herm_inner(H1, lz, lw) - pairing_oracle(H1, lz, lw)) < 1e-14);
    // Hermitian symmetry
    CHECK(std::abs(herm_inner(H1, lz, lw) - std::conj(herm_inner(H1, lw, lz))) < 1e-14);
  }
  // H3 inner product expands to z_1 + conj(w_1) + sum_{j>=2} z_j conj(w_j)
  for (int it = 0; it < 50; ++it) {
    auto z = oracles::random_left_half_point(rng, 3);
    auto w = oracles::random_left_half_point(rng, 3);
    auto H3b = HermitianForm::standard(FormTag::H3, 3);
    cplx got = herm_inner(H3b, lift(z), lift(w));
    cplx want = z.z[0] + std::conj(w.z[0]) + z.z[1] * std::conj(w.z[1]) +
                z.z[2] * std::conj(w.z[2]);
    CHECK(std::abs(got - want) < 1e-14);
  }
}

TEST_CASE("model membership uses a boundary tolerance") {
  ModelPoint close = ModelPoint::ball({cplx(std::sqrt(1.0 - 1e-13), 0), cplx(0, 0)});
  CHECK(!model_contains(close));
  ModelPoint fine = ModelPoint::ball({cplx(std::sqrt(1.0 - 1e-9), 0), cplx(0, 0)});
  CHECK(model_contains(fine));
  CHECK(!model_contains(ModelPoint::ball({cplx(1.5, 0)})));
  CHECK(model_contains(ModelPoint::hyperquadric({cplx(1, 0), cplx(0, 1)})));
  CHECK(!model_contains(ModelPoint::hyperquadric({cplx(2, 0), cplx(0, 1)})));
  CHECK(model_contains(ModelPoint::left_half({cplx(-1, 3), cplx(1, 0)})));
  CHECK(!model_contains(ModelPoint::left_half({cplx(-0.4, 0), cplx(1, 0)})));
}

TEST_CASE("cosh2_half_dist pinned values") {
  auto H1 = HermitianForm::standard(FormTag::H1, 2);
  auto H3 = HermitianForm::standard(FormTag::H3, 2);
  auto o = ModelPoint::origin(2);

  CHECK(cosh2_half_dist(H1, o, o) == doctest::Approx(1.0).epsilon(1e-15));

  for (double r : {0.1, 0.3, 0.6, 0.9}) {
    auto w = ModelPoint::ball({cplx(r, 0), cplx(0, 0)});
    CHECK(cosh2_half_dist(H1, o, w) == doctest::Approx(1.0 / (1.0 - r * r)).epsilon(1e-13));
    // 1D Poincare-disk oracle: d(0, r) = 2 artanh(r)
    double d = 2.0 * std::atanh(r);
    CHECK(cosh2_half_dist(H1, o, w) ==
          doctest::Approx(std::pow(std::cosh(d / 2.0), 2)).epsilon(1e-13));
  }

  auto z = ModelPoint::left_half({cplx(-1, 0), cplx(0, 0)});
  auto w = ModelPoint::left_half({cplx(-2, 0), cplx(0, 0)});
  CHECK(cosh2_half_dist(H3, z, w) == doctest::Approx(9.0 / 8.0).epsilon(1e-15));

  auto boundary = ModelPoint::ball({cplx(1, 0), cplx(0, 0)});
  CHECK_THROWS_AS(cosh2_half_dist(H1, o, boundary), std::domain_error);
}

TEST_CASE("hyp_distance: zero at coincidence, pinned value, symmetry") {
  auto H1 = HermitianForm::standard(FormTag::H1, 2);
  auto o = ModelPoint::origin(2);
  CHECK(hyp_distance(H1, o, o) == 0.0);

  auto w = ModelPoint::ball({cplx(std::tanh(0.5), 0), cplx(0, 0)});
  CHECK(hyp_distance(H1, o, w) == doctest::Approx(1.0).epsilon(1e-13));

  std::mt19937_64 rng(7);
  for (int it = 0; it < 200; ++it) {
    auto a = oracles::random_ball_point(rng, 2);
    auto b = oracles::random_ball_point(rng, 2);
    CHECK(hyp_distance(H1, a, b) == doctest::Approx(hyp_distance(H1, b, a)).epsilon(1e-13));
    CHECK(cosh2_half_dist(H1, a, b) >= 1.0 - 1e-12);
  }
}

TEST_CASE("cayley pinned images and involution") {
  auto o = ModelPoint::origin(2);
  auto img = cayley(CayleyMap::g13, o);
  CHECK(img.model == Model::LeftHalf);
  CHECK(std::abs(img.z[0] - cplx(-1, 0)) < 1e-15);
  CHECK(std::abs(img.z[1]) < 1e-15);

  auto back = cayley(CayleyMap::g31, ModelPoint::left_half({cplx(-1, 0), cplx(0, 0)}));
  CHECK(back.model == Model::Ball);
  CHECK(std::abs(back.z[0]) < 1e-15);

  std::mt19937_64 rng(11);
  for (int it = 0; it < 100; ++it) {
    auto p = oracles::random_ball_point(rng, 3);
    auto rt = cayley(CayleyMap::g31, cayley(CayleyMap::g13, p));
    for (int j = 0; j < 3; ++j)
      CHECK(std::abs(rt.z[static_cast<std::size_t>(j)] - p.z[static_cast<std::size_t>(j)]) < 1e-12);
  }
}

TEST_CASE("cayley maps send valid points to valid targets") {
  std::mt19937_64 rng(13);
  for (int n : {2, 3}) {
    for (int it = 0; it < 1000; ++it) {
      auto d = oracles::random_hyperquadric_point(rng, n);
      CHECK(model_contains(cayley(CayleyMap::g21, d)));
      CHECK(model_contains(cayley(CayleyMap::g23, d)));
      auto b = oracles::random_ball_point(rng, n);
      CHECK(model_contains(cayley(CayleyMap::g13, b)));
      auto e = oracles::random_left_half_point(rng, n);
      CHECK(model_contains(cayley(CayleyMap::g31, e)));
    }
  }
}

TEST_CASE("cayley isometry: distances match across models") {
  auto H1 = HermitianForm::standard(FormTag::H1, 2);
  auto H3 = HermitianForm::standard(FormTag::H3, 2);
  std::mt19937_64 rng(17);
  for (int it = 0; it < 300; ++it) {
    auto z = oracles::random_left_half_point(rng, 2);
    auto w = oracles::random_left_half_point(rng, 2);
    double d3 = hyp_distance(H3, z, w);
    double d1 = hyp_distance(H1, cayley(CayleyMap::g31, z), cayley(CayleyMap::g31, w));
    CHECK(std::abs(d1 - d3) < 1e-10);
  }
  // hyperquadric pairs through the two routes into the ball / left half
  for (int it = 0; it < 300; ++it) {
    auto z = oracles::random_hyperquadric_point(rng, 2);
    auto w = oracles::random_hyperquadric_point(rng, 2);
    double d1 = hyp_distance(H1, cayley(CayleyMap::g21, z), cayley(CayleyMap::g21, w));
    double d3 = hyp_distance(H3, cayley(CayleyMap::g23, z), cayley(CayleyMap::g23, w));
    CHECK(std::abs(d1 - d3) < 1e-10);
  }
}

TEST_CASE("hyp_volume_density pinned values") {
  CHECK(hyp_volume_density(ModelPoint::origin(2)) == 1.0);
  auto half = ModelPoint::ball({cplx(std::sqrt(0.5), 0), cplx(0, 0)});
  CHECK(hyp_volume_density(half) == doctest::Approx(8.0).epsilon(1e-12));
  auto z9 = ModelPoint::ball({cplx(std::sqrt(0.9), 0), cplx(0, 0), cplx(0, 0)});
  CHECK(hyp_volume_density(z9) == doctest::Approx(1e4).epsilon(1e-10));
}

TEST_CASE("geodesic_ball_volume pinned values and monotonicity") {
  CHECK(geodesic_ball_volume(0.0, 2) == 0.0);
  CHECK(geodesic_ball_volume(2.0 * std::asinh(1.0), 1) ==
        doctest::Approx(4.0 * std::numbers::pi).epsilon(1e-13));
  double want = std::pow(4.0 * std::numbers::pi, 2) / 2.0 * std::pow(std::sinh(0.5), 4);
  CHECK(geodesic_ball_volume(1.0, 2) == doctest::Approx(want).epsilon(1e-13));
  double prev = 0.0;
  for (double r = 0.1; r < 3.0; r += 0.1) {
    double v = geodesic_ball_volume(r, 2);
    CHECK(v > prev);
    prev = v;
  }
}
