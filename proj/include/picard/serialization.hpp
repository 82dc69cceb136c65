#pragma once

// JSON bindings for the public value types and small CSV/file helpers
// shared by the command-line front end.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "picard/bergman_kernel.hpp"
#include "picard/growth.hpp"
#include "picard/heisenberg_lattice.hpp"

namespace picard {

using json = nlohmann::json;

// 17 significant digits: enough to round-trip a double exactly, which makes
// determinism byte-checkable.
inline std::string fmt_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline json to_json(const SumReport& r) {
  json j;
  j["log_value"] = r.value.log_mag;
  j["phase"] = r.value.phase;
  j["value"] = r.value.magnitude();
  j["terms_used"] = r.terms_used;
  j["norm_bound"] = r.norm_bound;
  j["tail_estimate"] = r.tail_estimate;
  j["relative_tail"] = r.relative_tail;
  return j;
}

inline json to_json(const FitResult& f) {
  json j;
  j["slope"] = f.slope;
  j["intercept"] = f.intercept;
  j["residual_rms"] = f.residual_rms;
  j["k_range"] = {f.k_min, f.k_max};
  return j;
}

struct LatticeSpec {
  QuadraticField field;
  int n = 2;
  double norm_bound = 0.0;  // <= 0: automatic truncation
  double u_factor = 1.0;

  static LatticeSpec from_json(const json& j) {
    LatticeSpec s;
    s.field = QuadraticField(j.at("d").get<int>());
    s.n = j.at("n").get<int>();
    if (j.contains("norm_bound")) s.norm_bound = j["norm_bound"].get<double>();
    if (j.contains("U_factor")) s.u_factor = j["U_factor"].get<double>();
    return s;
  }

  json to_json() const {
    json j;
    j["d"] = field.d;
    j["ring_case"] = field.half_integer_ring() ? "d=3 mod 4" : "d=1,2 mod 4";
    j["n"] = n;
    j["norm_bound"] = norm_bound;
    j["U_factor"] = u_factor;
    return j;
  }
};

inline json kernel_params_to_json(const KernelParams& p) {
  json j;
  j["k"] = p.k;
  j["n"] = p.n;
  j["c"] = p.c;
  j["K"] = p.K();
  return j;
}

// FNV-1a over the canonical config text; stamped into output headers so a
// file can be traced back to the exact configuration that produced it.
inline std::uint64_t config_hash(const std::string& canonical) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Write-to-temp then atomic rename; a failed run never leaves a partial file.
inline void atomic_write_file(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << contents;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

}  // namespace picard
