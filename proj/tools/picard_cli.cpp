// Batch front end: hyperbolic distances and Cayley images, cusp lattice
// sums over a k grid with exponent fits, Bergman metric grid scans, and
// the lower/measured/upper sandwich.  Output tables are CSV with a
// metadata header; single results are JSON.  Every float is printed with
// 17 significant digits and all reductions are deterministic, so a rerun
// of the same config is byte-identical regardless of --threads.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "picard/picard.hpp"
#include "picard/serialization.hpp"

using namespace picard;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

constexpr int kExitInvalidPoint = 2;
constexpr int kExitTruncation = 3;
constexpr int kExitKernelVanishes = 4;

// coordinates "re[:im]" separated by commas, e.g. "-1:0.5,0.25"
std::vector<cplx> parse_coords(const std::string& text) {
  std::vector<cplx> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto colon = item.find(':');
    double re = 0, im = 0;
    if (colon == std::string::npos) {
      re = std::stod(item);
    } else {
      re = std::stod(item.substr(0, colon));
      im = std::stod(item.substr(colon + 1));
    }
    out.emplace_back(re, im);
  }
  if (out.empty()) throw CLI::ValidationError("empty coordinate list");
  return out;
}

Model parse_model(const std::string& name) {
  if (name == "ball") return Model::Ball;
  if (name == "hyperquadric") return Model::Hyperquadric;
  if (name == "lefthalf") return Model::LeftHalf;
  throw CLI::ValidationError("unknown model '" + name + "'");
}

std::string csv_header(std::uint64_t hash) {
  std::stringstream ss;
  ss << "# config_hash=" << std::hex << hash << std::dec << "\n";
  ss << "# version=" << kVersion << "\n";
  return ss.str();
}

// effective configuration shared by the table-producing commands
struct RunConfig {
  int d = 3;
  int n = 2;
  std::vector<int> k_grid;
  int k = 8;
  double c = 1.0;
  double alpha = -1.0;       // <= 0: boundary value K/4pi per k
  double norm_bound = -1.0;  // < 0: automatic truncation
  double u_factor = 1.0;
  double grid_radius = 0.5;
  int grid_steps = 10;
  double compact_r = 1.0;
  unsigned threads = 1;
  std::uint64_t seed = 12345;
  std::string out;
  std::string variant = "slab";
  std::string erratum_mode = "corrected";

  // canonical text of everything that shapes output bytes (threads and the
  // output path deliberately excluded)
  std::string canonical(const std::string& command) const {
    json j;
    j["command"] = command;
    j["d"] = d;
    j["n"] = n;
    j["k_grid"] = k_grid;
    j["k"] = k;
    j["c"] = c;
    j["alpha"] = alpha;
    j["norm_bound"] = norm_bound;
    j["U_factor"] = u_factor;
    j["grid_radius"] = grid_radius;
    j["grid_steps"] = grid_steps;
    j["compact_r"] = compact_r;
    j["seed"] = seed;
    j["variant"] = variant;
    j["erratum_mode"] = erratum_mode;
    return j.dump();
  }
};

void apply_config_file(const std::string& path, RunConfig& cfg,
                       const std::set<std::string>& overridden) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("cannot read config file " + path);
  json j = json::parse(in);
  if (j.contains("lattice")) {
    auto spec = LatticeSpec::from_json(j["lattice"]);
    if (!overridden.count("d")) cfg.d = spec.field.d;
    if (!overridden.count("n")) cfg.n = spec.n;
    if (!overridden.count("norm_bound")) cfg.norm_bound = spec.norm_bound;
    if (!overridden.count("u_factor")) cfg.u_factor = spec.u_factor;
  }
  auto take = [&](const char* key, auto& slot) {
    if (j.contains(key) && !overridden.count(key))
      slot = j[key].get<std::decay_t<decltype(slot)>>();
  };
  take("d", cfg.d);
  take("n", cfg.n);
  take("k", cfg.k);
  take("k_grid", cfg.k_grid);
  take("c", cfg.c);
  take("alpha", cfg.alpha);
  take("norm_bound", cfg.norm_bound);
  take("U_factor", cfg.u_factor);
  take("grid_radius", cfg.grid_radius);
  take("grid_steps", cfg.grid_steps);
  take("compact_r", cfg.compact_r);
  take("threads", cfg.threads);
  take("seed", cfg.seed);
  take("out", cfg.out);
  take("variant", cfg.variant);
  take("erratum_mode", cfg.erratum_mode);
}

void emit(const RunConfig& cfg, const std::string& contents) {
  if (cfg.out.empty())
    std::fputs(contents.c_str(), stdout);
  else
    atomic_write_file(cfg.out, contents);
}

// ---- distance ---------------------------------------------------------------

int run_distance(const std::string& model_name, const std::string& z_text,
                 const std::string& w_text, bool cayley_images, bool round_trip,
                 std::uint64_t seed, double cusp_eps, const std::string& variant) {
  Model model = parse_model(model_name);
  ModelPoint z{model, parse_coords(z_text)};
  ModelPoint w{model, parse_coords(w_text)};
  if (z.n() != w.n()) {
    std::fprintf(stderr, "error: z and w have different dimensions\n");
    return kExitInvalidPoint;
  }
  for (const auto* p : {&z, &w}) {
    try {
      require_valid(*p);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return kExitInvalidPoint;
    }
  }

  json out;
  auto coords_json = [](const ModelPoint& p) {
    json arr = json::array();
    for (const auto& v : p.z) arr.push_back({v.real(), v.imag()});
    return arr;
  };

  // distances live on the ball/left-half forms; hyperquadric points are
  // measured through their Cayley image in the ball
  double dist;
  if (model == Model::Hyperquadric) {
    auto H1 = HermitianForm::standard(FormTag::H1, z.n());
    dist = hyp_distance(H1, cayley(CayleyMap::g21, z), cayley(CayleyMap::g21, w));
  } else {
    auto H = HermitianForm::standard(form_for_model(model), z.n());
    dist = hyp_distance(H, z, w);
  }
  out["model"] = model_name;
  out["z"] = coords_json(z);
  out["w"] = coords_json(w);
  out["distance"] = dist;

  if (cusp_eps > 0.0 && model == Model::LeftHalf) {
    CuspVariant v = variant == "literal" ? CuspVariant::Literal : CuspVariant::Slab;
    out["cusp_neighborhood"] = {
        {"epsilon", cusp_eps},
        {"variant", variant},
        {"z", cusp_neighborhood_test(z, cusp_eps, v)},
        {"w", cusp_neighborhood_test(w, cusp_eps, v)},
    };
  }

  if (cayley_images) {
    json imgs;
    auto add = [&](const char* name, CayleyMap map, const ModelPoint& p) {
      try {
        imgs[name] = coords_json(cayley(map, p));
      } catch (const std::exception&) {
      }
    };
    switch (model) {
      case Model::Ball:
        add("g13_z", CayleyMap::g13, z);
        add("g13_w", CayleyMap::g13, w);
        break;
      case Model::Hyperquadric:
        add("g21_z", CayleyMap::g21, z);
        add("g23_z", CayleyMap::g23, z);
        break;
      case Model::LeftHalf:
        add("g31_z", CayleyMap::g31, z);
        add("g31_w", CayleyMap::g31, w);
        break;
    }
    out["cayley_images"] = imgs;
  }

  if (round_trip) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int it = 0; it < 100; ++it) {
      std::vector<cplx> v(static_cast<std::size_t>(z.n()));
      double s;
      do {
        s = 0.0;
        for (auto& cc : v) {
          cc = cplx(0.6 * u(rng), 0.6 * u(rng));
          s += std::norm(cc);
        }
      } while (s >= 0.8);
      ModelPoint p = ModelPoint::ball(v);
      auto rt = cayley(CayleyMap::g31, cayley(CayleyMap::g13, p));
      for (int j = 0; j < p.n(); ++j)
        worst = std::max(worst, std::abs(rt.z[static_cast<std::size_t>(j)] -
                                         p.z[static_cast<std::size_t>(j)]));
    }
    out["round_trip_residual"] = worst;
  }

  std::printf("%s\n", out.dump(2).c_str());
  return 0;
}

// ---- cusp-sum ---------------------------------------------------------------

int run_cusp_sum(const RunConfig& cfg) {
  QuadraticField field(cfg.d);
  std::vector<int> grid = cfg.k_grid;
  if (grid.empty()) grid = {16, 32, 64, 128, 256, 512};

  CuspSumOptions opt;
  opt.u_factor = cfg.u_factor;

  std::uint64_t hash = config_hash(cfg.canonical("cusp-sum"));
  std::stringstream csv;
  csv << csv_header(hash);
  csv << "k,log_sum,terms,norm_bound,tail,relative_tail\n";

  std::vector<GrowthSample> samples;
  json reports = json::array();
  for (int k : grid) {
    KernelParams params(k, cfg.n, cfg.c);
    double alpha = cfg.alpha > 0.0 ? cfg.alpha
                                   : params.K() / (4.0 * std::numbers::pi);
    SumReport rep;
    try {
      rep = cusp_lattice_sum(params, field, alpha, cfg.norm_bound, opt, cfg.threads);
    } catch (const TruncationError& e) {
      std::fprintf(stderr, "error: %s (k = %d)\n", e.what(), k);
      return kExitTruncation;
    }
    csv << k << ',' << fmt_double(rep.value.log_mag) << ',' << rep.terms_used << ','
        << fmt_double(rep.norm_bound) << ',' << fmt_double(rep.tail_estimate) << ','
        << fmt_double(rep.relative_tail) << "\n";
    samples.push_back({k, rep.value.log_mag, "cusp_sum"});
    json entry = to_json(rep);
    entry["params"] = kernel_params_to_json(params);
    reports.push_back(entry);
  }
  emit(cfg, csv.str());

  json summary;
  summary["params"] = {{"d", cfg.d}, {"n", cfg.n}, {"c", cfg.c}};
  summary["reports"] = reports;
  if (samples.size() >= 4) {
    auto fit = fit_exponent(samples);
    summary["fit"] = to_json(fit);
    summary["combined_exponent_c_model"] = fit.slope + cfg.n;
  }
  std::printf("%s\n", summary.dump(2).c_str());
  return 0;
}

// ---- metric-scan ------------------------------------------------------------

int run_metric_scan(const RunConfig& cfg) {
  QuadraticField field(cfg.d);
  KernelParams params(cfg.k, cfg.n, cfg.c);

  std::vector<GroupElement> elems;
  for (const auto& h : enumerate_lattice(field, cfg.n,
                                         cfg.norm_bound < 0 ? 0.0 : cfg.norm_bound))
    elems.push_back(ball_conjugate(heisenberg_matrix(h)));

  std::uint64_t hash = config_hash(cfg.canonical("metric-scan"));
  std::stringstream csv;
  csv << csv_header(hash);
  csv << "re_z1,im_z1,log_B,ratio,det_re,det_im,pos_def,fd_residual";
  for (int i = 0; i < cfg.n; ++i)
    for (int j = 0; j < cfg.n; ++j)
      csv << ",m_" << i << j << "_re,m_" << i << j << "_im";
  csv << "\n";

  // square grid in the first coordinate, remaining coordinates zero
  std::vector<ModelPoint> grid;
  for (int a = 0; a < cfg.grid_steps; ++a)
    for (int b = 0; b < cfg.grid_steps; ++b) {
      double span = (cfg.grid_steps > 1) ? 2.0 / (cfg.grid_steps - 1) : 0.0;
      double x = cfg.grid_steps > 1 ? -1.0 + a * span : 0.0;
      double y = cfg.grid_steps > 1 ? -1.0 + b * span : 0.0;
      std::vector<cplx> v(static_cast<std::size_t>(cfg.n), cplx(0, 0));
      v[0] = cplx(cfg.grid_radius * x, cfg.grid_radius * y);
      ModelPoint p = ModelPoint::ball(v);
      if (model_contains(p)) grid.push_back(std::move(p));
    }

  for (const auto& z : grid) {
    BergmanMatrix M;
    LogComplex B;
    try {
      B = diag_kernel_log(z, params, elems, cfg.threads);
      M = bergman_matrix(z, params, elems, false, cfg.threads);
    } catch (const std::domain_error& e) {
      std::fprintf(stderr, "error: %s at z_1 = %.17g + %.17gi\n", e.what(),
                   z.z[0].real(), z.z[0].imag());
      return kExitKernelVanishes;
    }
    cplx det = det_pivoted(M.n, M.m);
    double ratio = std::pow(interior_margin(z), cfg.n + 1) * std::abs(det);

    double fd_res = 0.0;
    for (int i = 0; i < cfg.n; ++i)
      for (int j = 0; j < cfg.n; ++j) {
        cplx fd = fd_log_weighted_hessian(z, params, elems, i, j, 1e-4);
        fd_res = std::max(fd_res, std::abs(M.at(i, j) - fd) /
                                      std::max(1.0, std::abs(M.at(i, j))));
      }

    csv << fmt_double(z.z[0].real()) << ',' << fmt_double(z.z[0].imag()) << ','
        << fmt_double(B.log_mag) << ',' << fmt_double(ratio) << ','
        << fmt_double(det.real()) << ',' << fmt_double(det.imag()) << ','
        << (is_positive_definite(M) ? 1 : 0) << ',' << fmt_double(fd_res);
    for (int i = 0; i < cfg.n; ++i)
      for (int j = 0; j < cfg.n; ++j)
        csv << ',' << fmt_double(M.at(i, j).real()) << ','
            << fmt_double(M.at(i, j).imag());
    csv << "\n";
  }
  emit(cfg, csv.str());
  return 0;
}

// ---- sandwich ---------------------------------------------------------------

int run_sandwich(const RunConfig& cfg, const std::string& z_text) {
  QuadraticField field(cfg.d);
  std::vector<int> grid = cfg.k_grid;
  if (grid.empty()) grid = {16, 32, 64, 128, 256, 512};
  const bool literal = cfg.erratum_mode == "literal";

  SandwichReport rep;
  if (z_text.empty()) {
    rep = sandwich_boundary_experiment(grid, cfg.n, cfg.c, field, cfg.compact_r,
                                       cfg.threads, literal);
  } else {
    ModelPoint z{Model::LeftHalf, parse_coords(z_text)};
    try {
      require_valid(z);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return kExitInvalidPoint;
    }
    rep = sandwich_experiment(grid, cfg.n, cfg.c, field, z, cfg.compact_r,
                              cfg.norm_bound, cfg.threads, literal);
  }

  std::uint64_t hash = config_hash(cfg.canonical("sandwich") + z_text);
  std::stringstream csv;
  csv << csv_header(hash);
  csv << "k,value,bound_lower,bound_upper,slope_so_far\n";
  std::vector<GrowthSample> sofar;
  for (const auto& row : rep.rows) {
    sofar.push_back({row.k, row.log_measured, "measured"});
    double slope = 0.0;
    if (sofar.size() >= 4) slope = fit_exponent(sofar).slope;
    csv << row.k << ',' << fmt_double(row.log_measured) << ','
        << fmt_double(row.log_lower) << ',' << fmt_double(row.log_upper) << ','
        << fmt_double(slope) << "\n";
  }
  emit(cfg, csv.str());

  json summary;
  summary["fit"] = to_json(rep.fit_measured);
  summary["fit_lower"] = to_json(rep.fit_lower);
  bool ordered = true;
  for (const auto& row : rep.rows) ordered = ordered && row.lower_ok && row.upper_ok;
  summary["ordering_holds"] = ordered;
  summary["band_lower_first"] = rep.band_lower_first;
  summary["band_lower_last"] = rep.band_lower_last;
  summary["band_upper_first"] = rep.band_upper_first;
  summary["band_upper_last"] = rep.band_upper_last;
  summary["erratum_mode"] = cfg.erratum_mode;
  std::printf("%s\n", summary.dump(2).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"complex-hyperbolic kernel and lattice-sum toolkit"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path;
  std::string model_name = "ball";
  std::string z_text, w_text;
  std::string k_grid_text;
  bool cayley_images = false, round_trip = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file mirroring the flags");
    sub->add_option("--d", cfg.d, "square-free d of Q(sqrt(-d))");
    sub->add_option("--n", cfg.n, "complex dimension");
    sub->add_option("--c", cfg.c, "kernel normalisation constant");
    sub->add_option("--k", cfg.k, "weight index");
    sub->add_option("--k-grid", k_grid_text, "comma-separated weight grid");
    sub->add_option("--alpha", cfg.alpha, "boundary height (<=0: K/4pi per k)");
    sub->add_option("--norm-bound", cfg.norm_bound,
                    "lattice truncation radius (<0: automatic)");
    sub->add_option("--u-factor", cfg.u_factor, "rotation multiplicity factor");
    sub->add_option("--threads", cfg.threads, "worker threads (result-invariant)");
    sub->add_option("--out", cfg.out, "output file (default stdout)");
    sub->add_option("--seed", cfg.seed, "seed for random-point suites");
    sub->add_option("--variant", cfg.variant, "cusp neighbourhood: literal|slab");
    sub->add_option("--erratum-mode", cfg.erratum_mode,
                    "constant conventions: corrected|literal");
    sub->add_option("--compact-r", cfg.compact_r, "compact-part injectivity radius");
  };

  auto* dist = app.add_subcommand("distance", "hyperbolic distance between two points");
  dist->add_option("--model", model_name, "ball|hyperquadric|lefthalf");
  dist->add_option("--z", z_text, "first point, coords re[:im] comma-separated")->required();
  dist->add_option("--w", w_text, "second point")->required();
  dist->add_flag("--cayley-images", cayley_images, "print images under the Cayley maps");
  dist->add_flag("--round-trip", round_trip, "print the g31 o g13 round-trip residual");
  dist->add_option("--seed", cfg.seed, "seed for the round-trip sample");
  double cusp_eps = 0.0;
  dist->add_option("--cusp-eps", cusp_eps,
                   "report cusp-neighbourhood membership at this epsilon");
  dist->add_option("--variant", cfg.variant, "cusp neighbourhood: literal|slab");

  auto* cusp = app.add_subcommand("cusp-sum", "cusp lattice sums over a k grid");
  add_common(cusp);

  auto* metric = app.add_subcommand("metric-scan", "Bergman matrix over a ball grid");
  add_common(metric);
  metric->add_option("--grid-radius", cfg.grid_radius, "half-width of the z_1 grid");
  metric->add_option("--grid-steps", cfg.grid_steps, "grid points per axis (0: empty)");

  auto* sandwich = app.add_subcommand("sandwich", "lower/measured/upper bounds over k");
  add_common(sandwich);
  sandwich->add_option("--z", z_text, "fixed left-half point (default: moving boundary)");

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* sub = app.get_subcommands().front();

    if (!config_path.empty()) {
      std::set<std::string> overridden;
      for (const auto* opt : sub->get_options())
        if (opt->count() > 0) {
          std::string name = opt->get_name();
          if (name.rfind("--", 0) == 0) name = name.substr(2);
          for (auto& ch : name)
            if (ch == '-') ch = '_';
          overridden.insert(name);
        }
      apply_config_file(config_path, cfg, overridden);
    }
    if (!k_grid_text.empty()) {
      cfg.k_grid.clear();
      std::stringstream ss(k_grid_text);
      std::string item;
      while (std::getline(ss, item, ',')) cfg.k_grid.push_back(std::stoi(item));
    }

    if (sub == dist)
      return run_distance(model_name, z_text, w_text, cayley_images, round_trip,
                          cfg.seed, cusp_eps, cfg.variant);
    if (sub == cusp) return run_cusp_sum(cfg);
    if (sub == metric) return run_metric_scan(cfg);
    if (sub == sandwich) return run_sandwich(cfg, z_text);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
