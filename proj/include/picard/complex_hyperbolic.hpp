#pragma once

// Models of complex hyperbolic n-space and the isometries between them.
//
// Three realisations are supported:
//   Ball         B^n = { |z_1|^2 + ... + |z_n|^2 < 1 }          (form H1)
//   Hyperquadric D^n = { Im(z_n) > 1/2 sum_{j<n} |z_j|^2 }      (form H2)
//   LeftHalf     E^n = { Re(z_1) < -1/2 sum_{j>=2} |z_j|^2 }    (form H3)
//
// Points lift to C^{n+1} as (z_1, ..., z_n, 1); the Hermitian pairing
// <a,b>_H = b* H a drives every distance through
//   cosh^2(d(z,w)/2) = <z,w><w,z> / (<z,z><w,w>).

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "picard/log_domain.hpp"

namespace picard {

enum class Model { Ball, Hyperquadric, LeftHalf };
enum class FormTag { H1, H2, H3 };

inline const char* model_name(Model m) {
  switch (m) {
    case Model::Ball: return "ball";
    case Model::Hyperquadric: return "hyperquadric";
    case Model::LeftHalf: return "lefthalf";
  }
  return "?";
}

// Hermitian matrix of signature (n,1) acting on lifted vectors in C^{n+1}.
struct HermitianForm {
  int n = 0;
  FormTag tag = FormTag::H1;
  std::vector<cplx> matrix;  // (n+1) x (n+1), row-major

  cplx at(int r, int c) const { return matrix[static_cast<std::size_t>(r) * (n + 1) + c]; }

  static HermitianForm standard(FormTag tag, int n) {
    if (n < 1) throw std::invalid_argument("HermitianForm: dimension must be >= 1");
    HermitianForm f;
    f.n = n;
    f.tag = tag;
    f.matrix.assign(static_cast<std::size_t>(n + 1) * (n + 1), cplx(0.0, 0.0));
    auto set = [&](int r, int c, cplx v) { f.matrix[static_cast<std::size_t>(r) * (n + 1) + c] = v; };
    switch (tag) {
      case FormTag::H1:
        for (int j = 0; j < n; ++j) set(j, j, 1.0);
        set(n, n, -1.0);
        break;
      case FormTag::H2:
        // corner entries +-i, identity on the middle block
        set(0, n, cplx(0.0, 1.0));
        set(n, 0, cplx(0.0, -1.0));
        for (int j = 1; j < n; ++j) set(j, j, 1.0);
        break;
      case FormTag::H3:
        set(0, n, 1.0);
        set(n, 0, 1.0);
        for (int j = 1; j < n; ++j) set(j, j, 1.0);
        break;
    }
    return f;
  }
};

inline FormTag form_for_model(Model m) {
  switch (m) {
    case Model::Ball: return FormTag::H1;
    case Model::Hyperquadric: return FormTag::H2;
    case Model::LeftHalf: return FormTag::H3;
  }
  return FormTag::H1;
}

// A point of one of the three models; coords are z_1..z_n.
struct ModelPoint {
  Model model = Model::Ball;
  std::vector<cplx> z;

  int n() const { return static_cast<int>(z.size()); }

  static ModelPoint ball(std::vector<cplx> coords) { return {Model::Ball, std::move(coords)}; }
  static ModelPoint hyperquadric(std::vector<cplx> coords) { return {Model::Hyperquadric, std::move(coords)}; }
  static ModelPoint left_half(std::vector<cplx> coords) { return {Model::LeftHalf, std::move(coords)}; }
  static ModelPoint origin(int n) { return {Model::Ball, std::vector<cplx>(static_cast<std::size_t>(n), cplx(0, 0))}; }
};

// Positive quantity whose sign decides membership:
//   Ball:         1 - |z|^2
//   Hyperquadric: Im(z_n) - 1/2 sum_{j<n} |z_j|^2
//   LeftHalf:     -Re(z_1) - 1/2 sum_{j>=2} |z_j|^2
inline double interior_margin(const ModelPoint& p) {
  const std::size_t n = p.z.size();
  switch (p.model) {
    case Model::Ball: {
      double s = 0.0;
      for (const auto& c : p.z) s += std::norm(c);
      return 1.0 - s;
    }
    case Model::Hyperquadric: {
      double s = 0.0;
      for (std::size_t j = 0; j + 1 < n; ++j) s += std::norm(p.z[j]);
      return p.z[n - 1].imag() - 0.5 * s;
    }
    case Model::LeftHalf: {
      double s = 0.0;
      for (std::size_t j = 1; j < n; ++j) s += std::norm(p.z[j]);
      return -p.z[0].real() - 0.5 * s;
    }
  }
  return 0.0;
}

// Points within boundary_tol of the boundary are rejected; the kernel
// weights (1-|z|^2)^{k(n+1)} degenerate there.
inline bool model_contains(const ModelPoint& p, double boundary_tol = 1e-12) {
  if (p.z.empty()) return false;
  return interior_margin(p) > boundary_tol;
}

inline void require_valid(const ModelPoint& p, double boundary_tol = 1e-12) {
  if (p.z.empty()) throw std::invalid_argument("ModelPoint: empty coordinate vector");
  if (!model_contains(p, boundary_tol)) {
    std::string msg = "point not interior to the ";
    msg += model_name(p.model);
    msg += " model: ";
    switch (p.model) {
      case Model::Ball: msg += "requires |z|^2 < 1"; break;
      case Model::Hyperquadric: msg += "requires Im(z_n) > 1/2 sum_{j<n} |z_j|^2"; break;
      case Model::LeftHalf: msg += "requires Re(z_1) < -1/2 sum_{j>=2} |z_j|^2"; break;
    }
    msg += " (interior margin " + std::to_string(interior_margin(p)) + ")";
    throw std::domain_error(msg);
  }
}

// Canonical lift (z_1, ..., z_n, 1).
inline std::vector<cplx> lift(const ModelPoint& p) {
  std::vector<cplx> v(p.z.begin(), p.z.end());
  v.push_back(cplx(1.0, 0.0));
  return v;
}

// <a, b>_H = b* H a.
inline cplx herm_inner(const HermitianForm& form, std::span<const cplx> a,
                       std::span<const cplx> b) {
  const std::size_t m = static_cast<std::size_t>(form.n) + 1;
  if (a.size() != m || b.size() != m)
    throw std::invalid_argument("herm_inner: dimension mismatch");
  cplx acc(0.0, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    cplx row(0.0, 0.0);
    for (std::size_t c = 0; c < m; ++c) row += form.matrix[r * m + c] * a[c];
    acc += std::conj(b[r]) * row;
  }
  return acc;
}

// cosh^2(d/2) - 1, computed so that coincident points give exactly 0.
inline double cosh2_half_dist_m1(const HermitianForm& form, const ModelPoint& z,
                                 const ModelPoint& w) {
  auto lz = lift(z);
  auto lw = lift(w);
  double zz = herm_inner(form, lz, lz).real();
  double ww = herm_inner(form, lw, lw).real();
  if (zz >= 0.0 || ww >= 0.0)
    throw std::domain_error("cosh2_half_dist: point on or outside the model boundary");
  cplx zw = herm_inner(form, lz, lw);
  double num = std::norm(zw);
  double den = zz * ww;
  return (num - den) / den;
}

inline double cosh2_half_dist(const HermitianForm& form, const ModelPoint& z,
                              const ModelPoint& w) {
  return 1.0 + cosh2_half_dist_m1(form, z, w);
}

// d = 2 arccosh(sqrt(cosh^2(d/2))), evaluated as 2 asinh(sqrt(cosh^2 - 1))
// to stay accurate near z = w.
inline double hyp_distance(const HermitianForm& form, const ModelPoint& z,
                           const ModelPoint& w) {
  double e = cosh2_half_dist_m1(form, z, w);
  if (e < 0.0) e = 0.0;
  return 2.0 * std::asinh(std::sqrt(e));
}

enum class CayleyMap { g21, g31, g13, g23 };

namespace detail {

// Shared involutive formula behind g31 and g13:
//   (z_1, ..., z_n) -> ((z_1+1)/(z_1-1), sqrt2 z_2/(z_1-1), ..., sqrt2 z_n/(z_1-1))
inline std::vector<cplx> first_coord_involution(std::span<const cplx> z) {
  const cplx den = z[0] - 1.0;
  if (std::abs(den) < 1e-300) throw std::domain_error("cayley: pole at z_1 = 1");
  std::vector<cplx> out(z.size());
  out[0] = (z[0] + 1.0) / den;
  const double sqrt2 = std::numbers::sqrt2;
  for (std::size_t j = 1; j < z.size(); ++j) out[j] = sqrt2 * z[j] / den;
  return out;
}

//   (z_1, ..., z_n) -> (z_1/(z_n+i), ..., z_{n-1}/(z_n+i), (z_n-i)/(z_n+i))
inline std::vector<cplx> hyperquadric_to_ball(std::span<const cplx> z) {
  const cplx den = z.back() + cplx(0.0, 1.0);
  if (std::abs(den) < 1e-300) throw std::domain_error("cayley: pole at z_n = -i");
  std::vector<cplx> out(z.size());
  for (std::size_t j = 0; j + 1 < z.size(); ++j) out[j] = z[j] / den;
  out.back() = (z.back() - cplx(0.0, 1.0)) / den;
  return out;
}

}  // namespace detail

inline ModelPoint cayley(CayleyMap map, const ModelPoint& p) {
  require_valid(p);
  switch (map) {
    case CayleyMap::g21:
      if (p.model != Model::Hyperquadric)
        throw std::invalid_argument("cayley g21: source must be the hyperquadric model");
      return ModelPoint::ball(detail::hyperquadric_to_ball(p.z));
    case CayleyMap::g31:
      if (p.model != Model::LeftHalf)
        throw std::invalid_argument("cayley g31: source must be the left-half model");
      return ModelPoint::ball(detail::first_coord_involution(p.z));
    case CayleyMap::g13:
      if (p.model != Model::Ball)
        throw std::invalid_argument("cayley g13: source must be the ball model");
      return ModelPoint::left_half(detail::first_coord_involution(p.z));
    case CayleyMap::g23: {
      if (p.model != Model::Hyperquadric)
        throw std::invalid_argument("cayley g23: source must be the hyperquadric model");
      ModelPoint b = ModelPoint::ball(detail::hyperquadric_to_ball(p.z));
      return ModelPoint::left_half(detail::first_coord_involution(b.z));
    }
  }
  throw std::invalid_argument("cayley: unknown map");
}

// Density of the hyperbolic volume form in the ball model: (1-|z|^2)^{-(n+1)}.
inline double hyp_volume_density(const ModelPoint& p) {
  if (p.model != Model::Ball)
    throw std::invalid_argument("hyp_volume_density: ball-model points only");
  require_valid(p);
  return std::pow(interior_margin(p), -(p.n() + 1));
}

// vol(B(z,r)) = (4 pi)^n / n!  * sinh^{2n}(r/2).
inline double geodesic_ball_volume(double r, int n) {
  if (r < 0.0) throw std::invalid_argument("geodesic_ball_volume: negative radius");
  if (n < 1) throw std::invalid_argument("geodesic_ball_volume: dimension must be >= 1");
  double fact = 1.0;
  for (int j = 2; j <= n; ++j) fact *= j;
  return std::pow(4.0 * std::numbers::pi, n) / fact *
         std::pow(std::sinh(r / 2.0), 2 * n);
}

}  // namespace picard
