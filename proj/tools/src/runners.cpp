#include "runners.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "skewsim/attractor.hpp"
#include "skewsim/base.hpp"
#include "skewsim/csv.hpp"
#include "skewsim/driving.hpp"
#include "skewsim/models.hpp"
#include "skewsim/rng.hpp"
#include "skewsim/semiuniform.hpp"
#include "skewsim/skew.hpp"

namespace skewsim::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

struct Context {
  const RunOptions& opts;
  fs::path out;
  std::vector<std::string> violations;  // human-readable contract violations
  json verdicts = json::object();
  std::vector<std::string> artifacts;

  void violation(const std::string& msg) { violations.push_back(msg); }
};

std::ofstream open_artifact(Context& ctx, const std::string& name) {
  const fs::path path = ctx.out / name;
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open output file " + path.string());
  os.precision(17);
  ctx.artifacts.push_back(name);
  return os;
}

void write_manifest(Context& ctx, const std::string& subcommand, json extra) {
  json m;
  m["tool"] = "skewsim";
  m["version"] = kToolVersion;
  m["subcommand"] = subcommand;
  m["config"] = ctx.opts.config.origin();
  {
    std::ostringstream hash;
    hash << std::hex << ctx.opts.config.content_hash();
    m["config_hash"] = hash.str();
  }
  m["seeds"] = ctx.opts.seeds;
  m["threads"] = ctx.opts.threads;
  m["negative_control"] = ctx.opts.negative_control;
  const auto now = std::chrono::system_clock::now();
  m["timestamp_unix"] = std::chrono::duration_cast<std::chrono::seconds>(
                            now.time_since_epoch())
                            .count();
  m["artifacts"] = ctx.artifacts;
  m["parameters"] = std::move(extra);
  std::ofstream os(ctx.out / "manifest.json");
  os << m.dump(2) << '\n';
}

void write_report(Context& ctx) {
  json r;
  r["verdicts"] = ctx.verdicts;
  r["contract_violations"] = ctx.violations;
  std::ofstream os(ctx.out / "report.json");
  ctx.artifacts.push_back("report.json");
  os << r.dump(2) << '\n';
}

void parallel_indices(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  const int workers = std::min<int>(threads, static_cast<int>(n));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// Per-member orbit seed: mixes the configured seed list with the member index
// so arbitrarily large ensembles stay reproducible from a short list.
std::uint64_t member_seed(const std::vector<std::int64_t>& seeds, std::size_t i) {
  const auto base = static_cast<std::uint64_t>(seeds[i % seeds.size()]);
  return rng::derive_stream(base, i);
}

std::string model_name(const Config& cfg) { return cfg.get_string("", "model"); }

MatrixNorm norm_from(const Config& cfg, const std::string& section) {
  const std::string n = cfg.get_string(section, "norm", cfg.get_string("", "norm", "spectral"));
  if (n == "spectral") return MatrixNorm::spectral;
  if (n == "frobenius") return MatrixNorm::frobenius;
  throw ConfigError("config: unknown norm '" + n + "' (spectral|frobenius)");
}

Vector const_vector(int dim, const std::vector<double>& values) {
  Vector v(dim);
  for (int j = 0; j < dim; ++j)
    v(j) = values[static_cast<std::size_t>(j) % values.size()];
  return v;
}

PullbackParams pullback_params(const Config& cfg, const std::string& section,
                               const SkewSystem& sys,
                               const models::ModelCatalogEntry& entry) {
  PullbackParams p;
  p.t0 = cfg.get_int(section, "t0", 0);
  p.t1 = cfg.get_int(section, "t1", p.t0);
  p.depth = static_cast<int>(cfg.get_int(section, "depth", 60));
  p.grid = static_cast<int>(cfg.get_int(section, "grid", 64));
  p.samples_per_axis = static_cast<int>(cfg.get_int(section, "samples_per_cell", 4));
  const double lo = cfg.get_double(section, "seed_box_lo", entry.seed_lo.front());
  const double hi = cfg.get_double(section, "seed_box_hi", entry.seed_hi.front());
  p.seed_lo = const_vector(sys.dim, entry.seed_lo);
  p.seed_hi = const_vector(sys.dim, entry.seed_hi);
  if (cfg.has(section, "seed_box_lo")) p.seed_lo = Vector::Constant(sys.dim, lo);
  if (cfg.has(section, "seed_box_hi")) p.seed_hi = Vector::Constant(sys.dim, hi);
  return p;
}

std::int64_t auto_window_radius(const Config& cfg, const std::string& section,
                                std::int64_t required) {
  const std::int64_t configured = cfg.get_int(section, "window_radius",
                                              cfg.get_int("", "window_radius", 0));
  if (configured == 0) return required;
  if (configured < required) {
    std::ostringstream msg;
    msg << "window_radius " << configured << " too small; this run needs at least "
        << required;
    throw OutOfWindowError(msg.str(), required);
  }
  return configured;
}

// ---------------------------------------------------------------------------
// catalog
// ---------------------------------------------------------------------------

void run_catalog(Context& ctx) {
  json list = json::array();
  for (const auto& e : models::catalog()) {
    json m;
    m["name"] = e.name;
    m["dim"] = e.dim;
    m["summary"] = e.summary;
    m["defaults"] = e.defaults;
    json facts;
    if (e.facts.exponent) {
      facts["exponent"] = *e.facts.exponent;
      facts["exponent_provenance"] = e.facts.exponent_provenance;
    }
    if (e.facts.cardinality) {
      facts["cardinality"] = *e.facts.cardinality;
      facts["cardinality_provenance"] = e.facts.cardinality_provenance;
    }
    if (e.facts.separation) {
      facts["separation"] = *e.facts.separation;
      facts["separation_provenance"] = e.facts.separation_provenance;
    }
    facts["continuity"] = e.facts.continuity;
    m["facts"] = facts;
    list.push_back(m);
    std::cout << e.name << " (d=" << e.dim << "): " << e.summary << '\n';
  }
  std::ofstream os(ctx.out / "catalog.json");
  ctx.artifacts.push_back("catalog.json");
  os << list.dump(2) << '\n';
  ctx.verdicts["models"] = models::catalog().size();
}

// ---------------------------------------------------------------------------
// lyapunov
// ---------------------------------------------------------------------------

void run_lyapunov(Context& ctx) {
  const Config& cfg = ctx.opts.config;
  const std::string name = model_name(cfg);
  const auto params = cfg.section_doubles("model_params");
  const SkewSystem sys = models::build(name, params);
  const auto& entry = models::entry(name);

  const std::int64_t n = cfg.get_int("lyapunov", "n", 100000);
  const std::size_t m = static_cast<std::size_t>(cfg.get_int("lyapunov", "ensemble", 100));
  const MatrixNorm norm = norm_from(cfg, "lyapunov");
  const Vector box_lo = const_vector(sys.dim, entry.seed_lo);
  const Vector box_hi = const_vector(sys.dim, entry.seed_hi);

  // Members are sampled uniformly from the model's seed box (pre-attractor
  // sampling; the report records which convention produced the numbers).
  const auto member = [&](std::size_t i) {
    EnsembleMember mem;
    const std::uint64_t s = member_seed(ctx.opts.seeds, i);
    mem.orbit = sample_orbit(sys.base, n, s);
    mem.xi0 = rng::u01(rng::derive_stream(s, 0xa1), 0, 0);
    mem.y0 = Vector(sys.dim);
    for (int j = 0; j < sys.dim; ++j) {
      const double u = rng::u01(rng::derive_stream(s, 0xa2), 0, static_cast<std::uint32_t>(j));
      mem.y0(j) = box_lo(j) + u * (box_hi(j) - box_lo(j));
    }
    return mem;
  };

  const LyapunovEstimate est = lyapunov_estimate(sys, m, n, member, norm);

  auto os = open_artifact(ctx, "samples.csv");
  csv::Writer w(os);
  w.row({std::string("sample_id"), std::string("n"), std::string("phi_n"),
         std::string("lambda_hat")});
  for (std::size_t i = 0; i < est.per_sample_phi.size(); ++i) {
    w.field(static_cast<std::int64_t>(i)).field(n).field(est.per_sample_phi[i]);
    w.field(est.per_sample_lambda[i]);
    w.end_row();
  }

  ctx.verdicts["mean"] = est.mean;
  ctx.verdicts["stderr"] = est.stderr_;
  ctx.verdicts["n"] = est.n;
  ctx.verdicts["ensemble"] = est.samples;
  ctx.verdicts["minus_inf_samples"] = est.minus_inf_count;
  ctx.verdicts["norm"] = norm_name(norm);
  ctx.verdicts["sampling"] = "seed_box";
  if (entry.facts.exponent) ctx.verdicts["analytic_exponent"] = *entry.facts.exponent;
}

// ---------------------------------------------------------------------------
// pullback
// ---------------------------------------------------------------------------

void run_pullback(Context& ctx) {
  const Config& cfg = ctx.opts.config;
  const std::string name = model_name(cfg);
  const auto params = cfg.section_doubles("model_params");
  const SkewSystem sys = models::build(name, params);
  const auto& entry = models::entry(name);
  const PullbackParams p = pullback_params(cfg, "pullback", sys, entry);
  const double oracle_tol = cfg.get_double("pullback", "oracle_tolerance", 1e-6);

  const std::int64_t required =
      std::max(std::llabs(p.t0 - p.depth), std::llabs(p.t1)) + 1;
  const std::int64_t radius = auto_window_radius(cfg, "pullback", required);

  const bool has_oracle = (name == "affine_random");
  std::optional<AffineFamily> family;
  if (has_oracle) family = models::affine_family(name, params);

  double worst_diff = 0.0;
  double worst_residual = 0.0;
  auto diff_os = open_artifact(ctx, "oracle_diff.csv");
  csv::Writer diff_w(diff_os);
  diff_w.row({std::string("seed"), std::string("t"), std::string("cell"),
              std::string("diff")});

  for (std::size_t si = 0; si < ctx.opts.seeds.size(); ++si) {
    const auto seed = static_cast<std::uint64_t>(ctx.opts.seeds[si]);
    const BaseOrbit orbit = sample_orbit(sys.base, radius, seed);
    const RandomSetApprox K = pullback(sys, orbit, p);
    K.validate();

    {
      auto os = open_artifact(ctx, "clouds_seed" + std::to_string(seed) + ".csv");
      K.write_csv(os);
    }
    const GraphEstimate graph = graph_from_clouds(K);
    {
      auto os = open_artifact(ctx, "graph_seed" + std::to_string(seed) + ".csv");
      graph.write_csv(os);
    }

    if (has_oracle) {
      ExactFibreEval exact = [&](std::int64_t t, double xi) {
        const BaseOrbit at_t = orbit.shifted(t - orbit.origin());
        Vector v(1);
        v(0) = affine_graph_oracle(at_t, sys.driving, *family, xi, p.depth);
        return Cloud{v};
      };
      for (std::int64_t t = p.t0; t <= p.t1; ++t) {
        const BaseOrbit at_t = orbit.shifted(t - orbit.origin());
        for (int cell = 0; cell < p.grid; ++cell) {
          const double oracle =
              affine_graph_oracle(at_t, sys.driving, *family, K.xi_of_cell(cell), p.depth);
          const double diff = std::fabs(graph.value(t, cell)(0) - oracle);
          diff_w.field(static_cast<std::int64_t>(seed)).field(t).field(cell).field(diff);
          diff_w.end_row();
          worst_diff = std::max(worst_diff, diff);
        }
      }
      if (p.t1 > p.t0)
        worst_residual = std::max(worst_residual, invariance_residual(K, sys, orbit, &exact));
    } else if (p.t1 > p.t0) {
      worst_residual = std::max(worst_residual, invariance_residual(K, sys, orbit));
    }
  }

  ctx.verdicts["max_oracle_diff"] = has_oracle ? json(worst_diff) : json();
  ctx.verdicts["oracle_tolerance"] = oracle_tol;
  if (has_oracle)
    ctx.verdicts["oracle_tail_bound"] = affine_oracle_tail_bound(*family, p.depth);
  ctx.verdicts["max_invariance_residual"] = worst_residual;
  ctx.verdicts["depth"] = p.depth;
  ctx.verdicts["grid"] = p.grid;
  if (has_oracle && worst_diff > oracle_tol) {
    std::ostringstream msg;
    msg << "pullback/oracle mismatch: max diff " << worst_diff << " > " << oracle_tol;
    ctx.violation(msg.str());
  }
}

// ---------------------------------------------------------------------------
// cardinality
// ---------------------------------------------------------------------------

void run_cardinality(Context& ctx) {
  const Config& cfg = ctx.opts.config;
  const std::string name = model_name(cfg);
  const auto params = cfg.section_doubles("model_params");
  const SkewSystem sys = models::build(name, params);
  const auto& entry = models::entry(name);
  const PullbackParams p = pullback_params(cfg, "cardinality", sys, entry);
  const std::int64_t required =
      std::max(std::llabs(p.t0 - p.depth), std::llabs(p.t1)) + 1;
  const std::int64_t radius = auto_window_radius(cfg, "cardinality", required);

  auto counts_os = open_artifact(ctx, "counts.csv");
  csv::Writer counts_w(counts_os);
  counts_w.row({std::string("seed"), std::string("t"), std::string("cell"),
                std::string("count")});
  auto sep_os = open_artifact(ctx, "separations.csv");
  csv::Writer sep_w(sep_os);
  sep_w.row({std::string("seed"), std::string("t"), std::string("cell"),
             std::string("separation")});

  json per_seed = json::array();
  bool all_agree = true;
  std::optional<int> consensus;
  double min_sep = std::numeric_limits<double>::infinity();

  for (std::size_t si = 0; si < ctx.opts.seeds.size(); ++si) {
    const auto seed = static_cast<std::uint64_t>(ctx.opts.seeds[si]);
    const BaseOrbit orbit = sample_orbit(sys.base, radius, seed);
    const RandomSetApprox K = pullback(sys, orbit, p);
    const double radius_cfg = cfg.get_double("cardinality", "cluster_radius", 0.0);
    const double cluster_radius =
        radius_cfg > 0.0 ? radius_cfg : default_cluster_radius(K);
    const CardinalityReport report = fibre_cardinality(K, cluster_radius);

    for (std::int64_t t = K.t0; t <= K.t1; ++t) {
      for (int cell = 0; cell < K.grid; ++cell) {
        counts_w.field(static_cast<std::int64_t>(seed)).field(t).field(cell);
        counts_w.field(report.counts[static_cast<std::size_t>(t - K.t0)]
                                    [static_cast<std::size_t>(cell)]);
        counts_w.end_row();
        const double sep = min_separation(K, t, cell, cluster_radius);
        sep_w.field(static_cast<std::int64_t>(seed)).field(t).field(cell).field(sep);
        sep_w.end_row();
        if (std::isfinite(sep)) min_sep = std::min(min_sep, sep);
      }
    }

    json s;
    s["seed"] = seed;
    s["cluster_radius"] = cluster_radius;
    if (report.global)
      s["global_n"] = *report.global;
    else
      s["global_n"] = "non-constant";
    per_seed.push_back(s);
    if (!report.global) {
      all_agree = false;
    } else {
      if (!consensus) consensus = *report.global;
      if (*consensus != *report.global) all_agree = false;
    }
  }

  ctx.verdicts["per_seed"] = per_seed;
  ctx.verdicts["consensus_n"] =
      (all_agree && consensus) ? json(*consensus) : json("non-constant");
  ctx.verdicts["min_separation"] =
      std::isfinite(min_sep) ? json(min_sep) : json("inf");
  if (entry.facts.cardinality) {
    ctx.verdicts["expected_n"] = *entry.facts.cardinality;
    if (!(all_agree && consensus && *consensus == *entry.facts.cardinality)) {
      std::ostringstream msg;
      msg << "cardinality: expected global n = " << *entry.facts.cardinality
          << " not reproduced";
      ctx.violation(msg.str());
    }
  }
  if (entry.facts.separation) {
    ctx.verdicts["expected_separation"] = *entry.facts.separation;
    if (!(std::isfinite(min_sep) &&
          std::fabs(min_sep - *entry.facts.separation) <= 1e-6)) {
      std::ostringstream msg;
      msg << "separation: expected " << *entry.facts.separation << ", measured "
          << min_sep;
      ctx.violation(msg.str());
    }
  }
}

// ---------------------------------------------------------------------------
// continuity
// ---------------------------------------------------------------------------

void run_continuity(Context& ctx) {
  const Config& cfg = ctx.opts.config;
  const std::string name = model_name(cfg);
  const auto params = cfg.section_doubles("model_params");
  const SkewSystem sys = models::build(name, params);
  const auto& entry = models::entry(name);

  const auto grids = cfg.get_int_list("continuity", "grids", {64, 128, 256});
  const std::int64_t t = cfg.get_int("continuity", "t", 0);
  const double decay_factor = cfg.get_double("continuity", "decay_factor", 1.7);
  const double floor_value = cfg.get_double("continuity", "floor", 0.1);

  auto os = open_artifact(ctx, "moduli.csv");
  csv::Writer w(os);
  w.row({std::string("seed"), std::string("grid"), std::string("modulus")});

  bool all_decay = true;
  bool all_floor = true;
  for (std::size_t si = 0; si < ctx.opts.seeds.size(); ++si) {
    const auto seed = static_cast<std::uint64_t>(ctx.opts.seeds[si]);
    std::vector<RandomSetApprox> refinements;
    for (std::int64_t g : grids) {
      PullbackParams p = pullback_params(cfg, "continuity", sys, entry);
      p.grid = static_cast<int>(g);
      p.t0 = p.t1 = t;
      const std::int64_t required = std::llabs(t - p.depth) + std::llabs(t) + 1;
      const std::int64_t radius = auto_window_radius(cfg, "continuity", required);
      const BaseOrbit orbit = sample_orbit(sys.base, radius, seed);
      refinements.push_back(pullback(sys, orbit, p));
    }
    const auto moduli = continuity_modulus(refinements, t);
    for (std::size_t i = 0; i < moduli.size(); ++i) {
      w.field(static_cast<std::int64_t>(seed)).field(grids[i]).field(moduli[i]);
      w.end_row();
    }
    for (std::size_t i = 0; i + 1 < moduli.size(); ++i) {
      if (!(moduli[i] >= decay_factor * moduli[i + 1])) all_decay = false;
    }
    for (double m : moduli)
      if (m < floor_value) all_floor = false;
  }

  ctx.verdicts["grids"] = grids;
  ctx.verdicts["decays_by_factor"] = all_decay;
  ctx.verdicts["decay_factor"] = decay_factor;
  ctx.verdicts["stays_above_floor"] = all_floor;
  ctx.verdicts["floor"] = floor_value;
  if (entry.facts.continuity.rfind("continuous", 0) == 0 && !all_decay)
    ctx.violation("continuity: moduli did not decay by the expected factor");
  if (entry.facts.continuity.rfind("discontinuous", 0) == 0 && !all_floor)
    ctx.violation("continuity: moduli fell below the discontinuity floor");
}

// ---------------------------------------------------------------------------
// covering
// ---------------------------------------------------------------------------

void run_covering(Context& ctx) {
  const Config& cfg = ctx.opts.config;
  const std::string name = model_name(cfg);
  const auto params = cfg.section_doubles("model_params");
  const SkewSystem sys = models::build(name, params);
  const auto& entry = models::entry(name);

  const double r = cfg.get_double("covering", "r", 0.5);
  const double eta = cfg.get_double("covering", "eta", 0.25);
  const int p_max = static_cast<int>(cfg.get_int("covering", "p_max", 6));
  const int k = static_cast<int>(cfg.get_int("covering", "k", 1));
  const double lambda_prime = cfg.get_double("covering", "lambda_prime", -0.5);
  const int hat_n_max = static_cast<int>(cfg.get_int("covering", "hat_n_max", 32));
  const double gate_tol = cfg.get_double("covering", "gate_tolerance", 0.05);
  const MatrixNorm norm = norm_from(cfg, "covering");
  const int slack = sys.dim == 1 ? 0 : 1;  // greedy covers may wobble by one ball

  PullbackParams p = pullback_params(cfg, "covering", sys, entry);
  // The nonpos adjusted bound sweeps forward hat_n_max*k steps past t1.
  const std::int64_t sweep_hi = p.t1 + static_cast<std::int64_t>(hat_n_max) * k + k;
  PullbackParams p_ext = p;
  p_ext.t1 = sweep_hi;
  const std::int64_t required =
      std::max(std::llabs(p.t0 - p.depth), std::llabs(sweep_hi + k)) + 1;
  const std::int64_t radius = auto_window_radius(cfg, "covering", required);

  auto cov_os = open_artifact(ctx, "covering.csv");
  csv::Writer cov_w(cov_os);
  cov_w.row({std::string("seed"), std::string("t"), std::string("cell"),
             std::string("p"), std::string("eps"), std::string("n_source"),
             std::string("n_image")});
  auto gate_os = open_artifact(ctx, "gate.csv");
  csv::Writer gate_w(gate_os);
  gate_w.row({std::string("seed"), std::string("residual"), std::string("passed")});

  int worst_violation = std::numeric_limits<int>::min();
  bool any_gate_passed = false;
  for (std::size_t si = 0; si < ctx.opts.seeds.size(); ++si) {
    const auto seed = static_cast<std::uint64_t>(ctx.opts.seeds[si]);
    const BaseOrbit orbit = sample_orbit(sys.base, radius, seed);
    const RandomSetApprox K = pullback(sys, orbit, p_ext);

    const double residual = invariance_residual(K, sys, orbit);
    const bool gate = residual <= gate_tol;
    gate_w.field(static_cast<std::int64_t>(seed)).field(residual);
    gate_w.field(static_cast<std::int64_t>(gate ? 1 : 0));
    gate_w.end_row();
    if (!gate) continue;
    any_gate_passed = true;

    // phi^K_k along the sweep, then the nonpos adjusted bound.
    PhiKByTime phi_k;
    phi_k.t_first = p.t0;
    for (std::int64_t t = p.t0; t <= sweep_hi; ++t)
      phi_k.values.push_back(phi_sup_K(sys, orbit, K, t, k, norm));
    const BoundSeries c_hat = compute_c_hat_k(phi_k, p.t0, p.t1 + k, k, lambda_prime,
                                              hat_n_max, HatVariant::nonpos);
    if (!c_hat.all_interior())
      ctx.violation("covering: adjusted bound truncated at the sup boundary; "
                    "verdict void (raise hat_n_max or lower lambda_prime)");

    std::vector<double> c_values;
    for (std::int64_t t = p.t0; t <= p.t1 + k; ++t) c_values.push_back(c_hat.at(t));
    RandomSetApprox K_window = K;
    // Restrict the check to [t0, t1 + k]; the sweep tail only fed phi^K_k.
    K_window.t1 = p.t1 + k;
    K_window.clouds.resize(static_cast<std::size_t>(K_window.t1 - K_window.t0 + 1));

    const CoveringCheck check = covering_monotonicity_check(
        K_window, sys, orbit, c_values, r, eta, p_max, k);
    worst_violation = std::max(worst_violation, check.max_violation);
    for (const auto& rec : check.records) {
      cov_w.field(static_cast<std::int64_t>(seed)).field(rec.t).field(rec.cell);
      cov_w.field(rec.p).field(rec.eps).field(rec.n_source).field(rec.n_image);
      cov_w.end_row();
    }
  }

  ctx.verdicts["gate_tolerance"] = gate_tol;
  ctx.verdicts["any_gate_passed"] = any_gate_passed;
  ctx.verdicts["greedy_slack"] = slack;
  if (any_gate_passed) {
    ctx.verdicts["max_violation"] = worst_violation;
    if (worst_violation > slack) {
      std::ostringstream msg;
      msg << "covering monotonicity violated: max N_image - N_source = "
          << worst_violation << " (slack " << slack << ")";
      ctx.violation(msg.str());
    }
  } else {
    ctx.verdicts["max_violation"] = nullptr;
    ctx.verdicts["note"] = "invariance gate failed on every seed; check skipped";
  }
}

// ---------------------------------------------------------------------------
// semiuniform
// ---------------------------------------------------------------------------

void run_semiuniform(Context& ctx) {
  const Config& cfg = ctx.opts.config;
  const std::string name = model_name(cfg);
  const auto params = cfg.section_doubles("model_params");
  const SkewSystem sys = models::build(name, params);
  const auto& entry = models::entry(name);
  const MatrixNorm norm = norm_from(cfg, "semiuniform");

  const double lambda = cfg.get_double("semiuniform", "lambda");
  const std::string lambda_prime_raw =
      cfg.get_string("semiuniform", "lambda_prime", "auto");
  const double delta = cfg.get_double("semiuniform", "delta", 0.0);
  const std::int64_t n_max = cfg.get_int("semiuniform", "n_max", 1000);
  const auto k_values_raw = cfg.get_int_list("semiuniform", "k_values", {1});
  const int hat_n_max = static_cast<int>(cfg.get_int("semiuniform", "hat_n_max", 64));
  const auto slope_horizons =
      cfg.get_int_list("semiuniform", "slope_horizons", {10000});
  const std::size_t ensemble =
      static_cast<std::size_t>(cfg.get_int("semiuniform", "ensemble",
                                           static_cast<std::int64_t>(ctx.opts.seeds.size())));
  const bool corrupt = ctx.opts.negative_control == "corrupt-c";
  if (!ctx.opts.negative_control.empty() && !corrupt)
    throw ConfigError("unknown negative control '" + ctx.opts.negative_control + "'");

  PullbackParams p = pullback_params(cfg, "semiuniform", sys, entry);

  int k_max = 1;
  for (auto k : k_values_raw) k_max = std::max(k_max, static_cast<int>(k));
  const std::int64_t sweep_lo = p.t0 - static_cast<std::int64_t>(hat_n_max) * k_max;
  const std::int64_t sweep_hi =
      p.t1 + static_cast<std::int64_t>(hat_n_max) * k_max + k_max;
  std::int64_t max_slope = 0;
  for (auto h : slope_horizons) max_slope = std::max(max_slope, h);

  const std::int64_t required =
      std::max({static_cast<std::int64_t>(std::llabs(sweep_lo - p.depth)),
                static_cast<std::int64_t>(std::llabs(sweep_hi)) + k_max,
                max_slope + n_max, max_slope + p.depth}) +
      1;
  const std::int64_t radius = auto_window_radius(cfg, "semiuniform", required);

  // Artifact writers (shared across the ensemble, written in seed order).
  auto phi_os = open_artifact(ctx, "phi_sup.csv");
  csv::Writer phi_w(phi_os);
  phi_w.row({std::string("sample"), std::string("t"), std::string("n"),
             std::string("phi_sup")});
  auto c_os = open_artifact(ctx, "c_values.csv");
  csv::Writer c_w(c_os);
  c_w.row({std::string("sample"), std::string("t"), std::string("c"),
           std::string("interior")});
  auto hat_os = open_artifact(ctx, "c_hat.csv");
  csv::Writer hat_w(hat_os);
  hat_w.row({std::string("sample"), std::string("k"), std::string("variant"),
             std::string("t"), std::string("value"), std::string("interior")});
  auto viol_os = open_artifact(ctx, "violations.csv");
  csv::Writer viol_w(viol_os);
  viol_w.row({std::string("sample"), std::string("kind"), std::string("k"),
              std::string("t"), std::string("n"), std::string("cell"),
              std::string("point"), std::string("excess")});
  auto slope_os = open_artifact(ctx, "slopes.csv");
  csv::Writer slope_w(slope_os);
  slope_w.row({std::string("sample"), std::string("horizon"), std::string("slope")});
  auto entry_os = open_artifact(ctx, "entry_times.csv");
  csv::Writer entry_w(entry_os);
  entry_w.row({std::string("sample"), std::string("entry_time")});

  struct PerOrbit {
    std::vector<std::vector<double>> phi_by_t;  // [t-p.t0][n-1]
    BoundSeries c;
    std::map<int, BoundSeries> hat_nonneg, hat_nonpos;
    std::vector<Violation> main_violations;
    std::map<int, std::vector<Violation>> complement_nonneg, complement_nonpos;
    std::vector<std::pair<std::int64_t, double>> slopes;
    double max_slope_value = 0.0;
    std::optional<std::int64_t> entry_time;
    double phi_sup_at_n_max = 0.0;
    double c_increment_violation_value = 0.0;
    std::map<int, PhiKByTime> phi_k_by_time;
    std::map<std::int64_t, double> c_at_horizon;  // +-h -> C
  };
  std::vector<PerOrbit> results(ensemble);

  // lambda' resolution may need a first pass for the sup exponent.
  double lambda_prime;
  bool lambda_prime_auto = (lambda_prime_raw == "auto");
  if (!lambda_prime_auto) {
    lambda_prime = cfg.get_double("semiuniform", "lambda_prime");
  } else {
    lambda_prime = 0.0;  // resolved below
  }

  const auto compute_orbit = [&](std::size_t i) {
    PerOrbit& res = results[i];
    const std::uint64_t seed = member_seed(ctx.opts.seeds, i);
    const BaseOrbit orbit = sample_orbit(sys.base, radius, seed);

    PullbackParams p_ext = p;
    p_ext.t0 = sweep_lo;
    p_ext.t1 = sweep_hi;
    const RandomSetApprox K = pullback(sys, orbit, p_ext);

    for (std::int64_t t = p.t0; t <= p.t1; ++t)
      res.phi_by_t.push_back(phi_sup_series(sys, orbit, K, t, n_max, norm));
    res.phi_sup_at_n_max = res.phi_by_t.front().back();

    for (int k : std::vector<int>(k_values_raw.begin(), k_values_raw.end())) {
      PhiKByTime phi_k;
      phi_k.t_first = sweep_lo;
      for (std::int64_t t = sweep_lo; t <= sweep_hi; ++t)
        phi_k.values.push_back(phi_sup_K(sys, orbit, K, t, k, norm));
      res.phi_k_by_time[k] = std::move(phi_k);
    }

    // The slope horizons need C at +-h: pull back to those times and record
    // the phi series there.
    for (auto h : slope_horizons) {
      for (std::int64_t t : {-h, h}) {
        PullbackParams ps = p;
        ps.t0 = ps.t1 = t;
        const RandomSetApprox Kh = pullback(sys, orbit, ps);
        const auto series = phi_sup_series(sys, orbit, Kh, t, n_max, norm);
        const BoundSeries ch = compute_c_values({series}, t, lambda_prime);
        res.c_at_horizon[t] = ch.at(t);
      }
    }

    res.c = compute_c_values(res.phi_by_t, p.t0, lambda_prime);
    const BoundSeries c_used = corrupt ? corrupt_bound(res.c, CorruptMode::halve_shift)
                                       : res.c;

    // Restrict verification to [t0, t1]: K spans the sweep range.
    res.main_violations =
        verify_main_estimate(sys, orbit, K, c_used, lambda_prime, n_max, norm);

    for (const auto& [k, phi_k] : res.phi_k_by_time) {
      res.hat_nonneg[k] = compute_c_hat_k(phi_k, p.t0, p.t1 + k, k, lambda_prime,
                                          hat_n_max, HatVariant::nonneg);
      res.hat_nonpos[k] = compute_c_hat_k(phi_k, p.t0, p.t1 + k, k, lambda_prime,
                                          hat_n_max, HatVariant::nonpos);
      const BoundSeries nn = corrupt
                                 ? corrupt_bound(res.hat_nonneg[k], CorruptMode::spike)
                                 : res.hat_nonneg[k];
      const BoundSeries np = corrupt
                                 ? corrupt_bound(res.hat_nonpos[k], CorruptMode::spike)
                                 : res.hat_nonpos[k];
      res.complement_nonneg[k] = verify_complement(sys, orbit, K, nn, k, lambda_prime, norm);
      res.complement_nonpos[k] = verify_complement(sys, orbit, K, np, k, lambda_prime, norm);
    }

    // C-increment inequality along [t0, t1].
    if (res.c.values.size() >= 2) {
      const auto phi1_at = [&](std::int64_t t) {
        return res.phi_by_t[static_cast<std::size_t>(t - p.t0)][0];
      };
      res.c_increment_violation_value =
          c_increment_violation(res.c, phi1_at, lambda_prime);
    }

    res.slopes = adjustedness_slopes(
        [&](std::int64_t t) { return res.c_at_horizon.at(t); },
        std::span<const std::int64_t>(slope_horizons.data(), slope_horizons.size()));
    for (const auto& [h, slope] : res.slopes)
      res.max_slope_value = std::max(res.max_slope_value, slope);

    if (delta > 0.0)
      res.entry_time = semiuniform_entry_time(res.phi_by_t.front(), lambda, delta);
  };

  if (lambda_prime_auto) {
    // Resolve lambda' = (lambda + sup exponent)/2 from a pilot pass over the
    // first few orbits, then run the full ensemble with it.
    std::vector<double> pilot;
    const std::size_t pilot_n = std::min<std::size_t>(8, ensemble);
    for (std::size_t i = 0; i < pilot_n; ++i) {
      const std::uint64_t seed = member_seed(ctx.opts.seeds, i);
      const BaseOrbit orbit = sample_orbit(sys.base, radius, seed);
      PullbackParams ps = p;
      const RandomSetApprox K = pullback(sys, orbit, ps);
      pilot.push_back(phi_sup_K(sys, orbit, K, p.t0, n_max, norm));
    }
    const SupLyapEstimate sup = sup_lyap_over_K(pilot, n_max);
    lambda_prime = default_lambda_prime(lambda, sup.mean);
    ctx.verdicts["lambda_prime_rule"] = "midpoint(lambda, sup_lyap)";
  }

  parallel_indices(ensemble, ctx.opts.threads, compute_orbit);

  // Aggregate + serialize in sample order.
  std::size_t total_main = 0, total_complement = 0;
  bool all_interior = true;
  bool hats_signed = true;
  double worst_slope = 0.0;
  double worst_increment = -std::numeric_limits<double>::infinity();
  std::vector<double> sup_inputs;
  const auto write_violations = [&](std::size_t sample, const std::string& kind, int k,
                                    const std::vector<Violation>& list) {
    for (const auto& v : list) {
      viol_w.field(static_cast<std::int64_t>(sample)).field(kind).field(k);
      viol_w.field(v.t).field(v.n).field(v.cell).field(v.point).field(v.excess);
      viol_w.end_row();
    }
  };

  for (std::size_t i = 0; i < ensemble; ++i) {
    const PerOrbit& res = results[i];
    total_main += res.main_violations.size();
    write_violations(i, "main", 0, res.main_violations);
    for (const auto& [k, v] : res.complement_nonneg) {
      total_complement += v.size();
      write_violations(i, "complement_nonneg", k, v);
    }
    for (const auto& [k, v] : res.complement_nonpos) {
      total_complement += v.size();
      write_violations(i, "complement_nonpos", k, v);
    }
    all_interior = all_interior && res.c.all_interior();
    worst_slope = std::max(worst_slope, res.max_slope_value);
    worst_increment = std::max(worst_increment, res.c_increment_violation_value);
    sup_inputs.push_back(res.phi_sup_at_n_max);

    for (std::size_t ti = 0; ti < res.phi_by_t.size(); ++ti) {
      const std::int64_t t = p.t0 + static_cast<std::int64_t>(ti);
      const auto& series = res.phi_by_t[ti];
      for (std::size_t ni = 0; ni < series.size(); ++ni) {
        phi_w.field(static_cast<std::int64_t>(i)).field(t);
        phi_w.field(static_cast<std::int64_t>(ni + 1)).field(series[ni]);
        phi_w.end_row();
      }
      c_w.field(static_cast<std::int64_t>(i)).field(t).field(res.c.at(t));
      c_w.field(static_cast<std::int64_t>(res.c.interior_at(t) ? 1 : 0));
      c_w.end_row();
    }
    for (const auto& [k, series] : res.hat_nonneg) {
      for (std::int64_t t = series.t0; t <= series.t1(); ++t) {
        hat_w.field(static_cast<std::int64_t>(i)).field(k).field("nonneg").field(t);
        hat_w.field(series.at(t));
        hat_w.field(static_cast<std::int64_t>(series.interior_at(t) ? 1 : 0));
        hat_w.end_row();
        if (series.at(t) < 0.0) hats_signed = false;
      }
    }
    for (const auto& [k, series] : res.hat_nonpos) {
      for (std::int64_t t = series.t0; t <= series.t1(); ++t) {
        hat_w.field(static_cast<std::int64_t>(i)).field(k).field("nonpos").field(t);
        hat_w.field(series.at(t));
        hat_w.field(static_cast<std::int64_t>(series.interior_at(t) ? 1 : 0));
        hat_w.end_row();
        if (series.at(t) > 0.0) hats_signed = false;
      }
    }
    for (const auto& [h, slope] : res.slopes) {
      slope_w.field(static_cast<std::int64_t>(i)).field(h).field(slope);
      slope_w.end_row();
    }
    entry_w.field(static_cast<std::int64_t>(i));
    entry_w.field(res.entry_time ? *res.entry_time : static_cast<std::int64_t>(-1));
    entry_w.end_row();
  }

  const SupLyapEstimate sup_est = sup_lyap_over_K(sup_inputs, n_max);

  ctx.verdicts["lambda"] = lambda;
  ctx.verdicts["lambda_prime"] = lambda_prime;
  ctx.verdicts["lambda_prime_below_lambda"] = lambda_prime < lambda;
  ctx.verdicts["norm"] = norm_name(norm);
  ctx.verdicts["ensemble"] = ensemble;
  ctx.verdicts["n_max"] = n_max;
  ctx.verdicts["main_violations"] = total_main;
  ctx.verdicts["complement_violations"] = total_complement;
  ctx.verdicts["all_c_interior"] = all_interior;
  ctx.verdicts["hat_signs_ok"] = hats_signed;
  ctx.verdicts["max_adjustedness_slope"] = worst_slope;
  ctx.verdicts["max_c_increment_violation"] = worst_increment;
  ctx.verdicts["sup_lyap_mean"] = sup_est.mean;
  ctx.verdicts["sup_lyap_stderr"] = sup_est.stderr_;
  ctx.verdicts["negative_control"] = corrupt;

  if (total_main > 0) {
    std::ostringstream msg;
    msg << "main estimate violated " << total_main << " times"
        << (corrupt ? " (negative control: expected)" : "");
    ctx.violation(msg.str());
  }
  if (total_complement > 0) {
    std::ostringstream msg;
    msg << "complement estimate violated " << total_complement << " times"
        << (corrupt ? " (negative control: expected)" : "");
    ctx.violation(msg.str());
  }
  if (!all_interior)
    ctx.violation("some C sups were boundary-attained; raise n_max");
  if (!hats_signed) ctx.violation("adjusted bound sign contract broken");
  if (corrupt && total_main + total_complement == 0)
    ctx.violation("negative control produced no violations (check sensitivity)");
}

// ---------------------------------------------------------------------------
// minimality
// ---------------------------------------------------------------------------

void run_minimality(Context& ctx) {
  const Config& cfg = ctx.opts.config;
  const std::string driving_kind = cfg.get_string("minimality", "driving", "random_rotation");
  DrivingSystem driving;
  if (driving_kind == "random_rotation")
    driving = DrivingSystem::random_rotation(cfg.get_double("minimality", "tau", 0.37));
  else if (driving_kind == "identity")
    driving = DrivingSystem::identity();
  else if (driving_kind == "quasiperiodic_shift")
    driving = DrivingSystem::quasiperiodic_shift(
        cfg.get_double("minimality", "rho", models::kGoldenMean));
  else
    throw ConfigError("minimality: unknown driving '" + driving_kind + "'");

  const double alpha_lo = cfg.get_double("minimality", "alpha_lo", 0.0);
  const double alpha_hi = cfg.get_double("minimality", "alpha_hi", 1.0);
  const BaseSpec base = BaseSpec::bernoulli(NoiseLaw::uniform(alpha_lo, alpha_hi), 1);

  const int grid = static_cast<int>(cfg.get_int("minimality", "grid", 200));
  const std::int64_t horizon = cfg.get_int("minimality", "horizon", 100000);
  const std::int64_t burn_in = cfg.get_int("minimality", "burn_in", 1000);
  const std::size_t trials =
      static_cast<std::size_t>(cfg.get_int("minimality", "trials",
                                           static_cast<std::int64_t>(ctx.opts.seeds.size())));
  const double selector_threshold =
      cfg.get_double("minimality", "selector_threshold", 0.4);
  const int weyl_m = static_cast<int>(cfg.get_int("minimality", "weyl_m", 8));

  std::vector<BaseOrbit> orbits;
  orbits.reserve(trials);
  for (std::size_t i = 0; i < trials; ++i)
    orbits.push_back(sample_orbit(base, horizon, member_seed(ctx.opts.seeds, i)));

  const auto points = default_probe_points();
  const MinimalityVerdict verdict = minimality_diagnostic(
      orbits, driving, points, grid, burn_in, horizon);

  {
    auto os = open_artifact(ctx, "trials.csv");
    csv::Writer w(os);
    w.row({std::string("trial"), std::string("max_gap")});
    for (std::size_t i = 0; i < verdict.per_trial_gap.size(); ++i) {
      w.field(static_cast<std::int64_t>(i)).field(verdict.per_trial_gap[i]);
      w.end_row();
    }
  }

  // Union occupancy across the first point for reference.
  GridSet occupancy(grid);
  for (const auto& orbit : orbits)
    occupancy.merge(omega_limit(orbit, driving, points.front(), grid, burn_in, horizon));
  {
    auto os = open_artifact(ctx, "occupancy.csv");
    occupancy.write_csv(os);
  }

  const auto selector = [selector_threshold](std::span<const double> payload) {
    return payload[0] < selector_threshold;
  };
  const SubsectionResult subsection = subsection_omega_limit(
      orbits, driving, points.front(), selector, grid, burn_in, horizon);
  {
    auto os = open_artifact(ctx, "subsection.csv");
    subsection.cells.write_csv(os);
  }

  {
    const auto pts = pullback_orbit(orbits.front(), driving, points.front(), horizon);
    const auto sums = weyl_sums(
        std::span<const double>(pts.data() + burn_in,
                                static_cast<std::size_t>(horizon - burn_in + 1)),
        weyl_m);
    auto os = open_artifact(ctx, "weyl.csv");
    csv::Writer w(os);
    w.row({std::string("m"), std::string("modulus")});
    for (const auto& [m, modulus] : sums) {
      w.field(m).field(modulus);
      w.end_row();
    }
  }

  ctx.verdicts["fills"] = verdict.fills;
  ctx.verdicts["max_gap"] = verdict.max_gap;
  ctx.verdicts["subsection_fills"] = subsection.cells.all_occupied();
  ctx.verdicts["subsection_fires"] = subsection.fires;
  ctx.verdicts["subsection_fire_fraction"] =
      static_cast<double>(subsection.fires) / static_cast<double>(subsection.tested);
  ctx.verdicts["grid"] = grid;
  ctx.verdicts["horizon"] = horizon;
  ctx.verdicts["trials"] = trials;
  ctx.verdicts["driving"] = driving.kind_name();
}

}  // namespace

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names = {
      "catalog",   "lyapunov",    "pullback", "cardinality",
      "continuity", "covering",   "semiuniform", "minimality"};
  return names;
}

int run_subcommand(const std::string& name, const RunOptions& opts) {
  Context ctx{opts, fs::path(opts.out_dir), {}, json::object(), {}};
  try {
    fs::create_directories(ctx.out);
    if (name == "catalog")
      run_catalog(ctx);
    else if (name == "lyapunov")
      run_lyapunov(ctx);
    else if (name == "pullback")
      run_pullback(ctx);
    else if (name == "cardinality")
      run_cardinality(ctx);
    else if (name == "continuity")
      run_continuity(ctx);
    else if (name == "covering")
      run_covering(ctx);
    else if (name == "semiuniform")
      run_semiuniform(ctx);
    else if (name == "minimality")
      run_minimality(ctx);
    else
      throw ConfigError("unknown subcommand: " + name);

    write_report(ctx);
    write_manifest(ctx, name, json::object());
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::config:
        return kExitConfigError;
      case ErrorKind::window:
      case ErrorKind::numerical:
        return kExitWindowError;
    }
    return kExitWindowError;
  }

  if (!ctx.violations.empty()) {
    std::cerr << "contract violations (" << ctx.violations.size() << "):\n";
    for (const auto& v : ctx.violations) std::cerr << "  - " << v << '\n';
    return kExitContractViolation;
  }
  return kExitOk;
}

}  // namespace skewsim::cli
