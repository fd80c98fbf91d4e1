#include "skewsim/models.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace skewsim::models {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double param(const std::map<std::string, double>& params,
             const std::map<std::string, double>& defaults, const std::string& key) {
  if (auto it = params.find(key); it != params.end()) return it->second;
  if (auto it = defaults.find(key); it != defaults.end()) return it->second;
  throw ConfigError("model parameter missing: " + key);
}

void reject_unknown(const std::map<std::string, double>& params,
                    const std::map<std::string, double>& defaults,
                    const std::string& model) {
  for (const auto& [key, _] : params) {
    if (defaults.find(key) == defaults.end())
      throw ConfigError("model " + model + ": unknown parameter '" + key + "'");
  }
}

std::vector<ModelCatalogEntry> make_catalog() {
  std::vector<ModelCatalogEntry> entries;

  {
    ModelCatalogEntry e;
    e.name = "identity";
    e.summary = "h(y) = y over identity driving; every exponent is exactly zero";
    e.dim = 1;
    e.facts.exponent = 0.0;
    e.facts.exponent_provenance = "derivative is identically 1";
    e.facts.cardinality = std::nullopt;  // whatever the seed grid provides
    e.facts.continuity = "constant clouds; modulus 0";
    e.probe_boxes = {{{-10.0}, {10.0}}};
    e.seed_lo = {-10.0};
    e.seed_hi = {10.0};
    entries.push_back(std::move(e));
  }

  {
    ModelCatalogEntry e;
    e.name = "affine_random";
    e.summary = "h = a(payload)*y + cos(2 pi xi), a ~ uniform[a_lo, a_hi], "
                "quasiperiodic driving; contracting with a continuous graph";
    e.dim = 1;
    e.defaults = {{"a_lo", 0.2}, {"a_hi", 0.6}, {"rho", kGoldenMean}};
    e.facts.exponent = uniform_log_mean(0.2, 0.6);
    e.facts.exponent_provenance =
        "E log a over uniform[0.2,0.6] = (a ln a - a)/(hi-lo) |_{0.2}^{0.6} = -0.961519...";
    e.facts.cardinality = 1;
    e.facts.cardinality_provenance = "single contracting affine branch";
    e.facts.continuity = "continuous (Lipschitz graph; backward-series oracle)";
    e.probe_boxes = {{{-5.0}, {5.0}}};
    e.seed_lo = {-10.0};
    e.seed_hi = {10.0};
    entries.push_back(std::move(e));
  }

  {
    ModelCatalogEntry e;
    e.name = "two_branch";
    e.summary = "h(y) = sgn(y)*(a|y| + b): two symmetric contracting branches "
                "with fixed points +-b/(1-a)";
    e.dim = 1;
    e.defaults = {{"a", 0.5}, {"b", 1.0}, {"a_minus", 0.5}, {"rho", kGoldenMean}};
    e.facts.exponent = std::log(0.5);
    e.facts.exponent_provenance = "derivative is a on each branch; log 0.5";
    e.facts.cardinality = 2;
    e.facts.cardinality_provenance = "fixed points +-b/(1-a) of the two branches";
    e.facts.separation = 4.0;
    e.facts.separation_provenance = "2*b/(1-a) = 4 at defaults";
    e.facts.continuity = "constant two-point fibres; modulus 0";
    // Not differentiable at y = 0; diagnostics stay near K = {+-2} where h is
    // smooth, so the probe boxes exclude a neighbourhood of 0.
    e.probe_boxes = {{{1.0}, {3.0}}, {{-3.0}, {-1.0}}};
    e.seed_lo = {-10.0};
    e.seed_hi = {10.0};
    entries.push_back(std::move(e));
  }

  {
    ModelCatalogEntry e;
    e.name = "pinched_sna";
    e.summary = "h = 2*sigma*cos(2 pi xi)*tanh(y), quasiperiodic driving: the "
                "pinched family whose attractor is a strange nonchaotic set";
    e.dim = 1;
    e.defaults = {{"sigma", 1.5}, {"rho", kGoldenMean}};
    e.facts.exponent = std::log(1.5);
    e.facts.exponent_provenance =
        "zero-graph exponent log(2 sigma) + int_0^1 log|cos 2 pi xi| d xi = "
        "log(2 sigma) - log 2 = log sigma";
    e.facts.cardinality = std::nullopt;
    e.facts.cardinality_provenance =
        "grid-dependent: clouds pinch to {0} on the forward orbit of cos = 0";
    e.facts.continuity = "discontinuous fibres (modulus does not decay under refinement)";
    e.probe_boxes = {{{-3.0}, {3.0}}};
    e.seed_lo = {-5.0};
    e.seed_hi = {5.0};
    entries.push_back(std::move(e));
  }

  {
    ModelCatalogEntry e;
    e.name = "random_matrix_2d";
    e.summary = "linear 2-d cocycle y -> A(payload, xi) y with payload-driven "
                "entries; exercises matrix norms and subadditivity";
    e.dim = 2;
    e.defaults = {{"rho", kGoldenMean}};
    e.facts.continuity = "n/a (linear cocycle; exponent estimated empirically)";
    e.probe_boxes = {{{-2.0, -2.0}, {2.0, 2.0}}};
    e.seed_lo = {-1.0, -1.0};
    e.seed_hi = {1.0, 1.0};
    entries.push_back(std::move(e));
  }

  return entries;
}

SkewSystem make_system(const ModelCatalogEntry& e,
                       const std::map<std::string, double>& params) {
  reject_unknown(params, e.defaults, e.name);
  SkewSystem sys;
  sys.name = e.name;
  sys.dim = e.dim;

  if (e.name == "identity") {
    sys.base = BaseSpec::bernoulli(NoiseLaw::uniform(0.0, 1.0), 1);
    sys.driving = DrivingSystem::identity();
    sys.fibre_map = [](std::span<const double>, double, const Vector& y) { return y; };
    sys.jacobian = [](std::span<const double>, double, const Vector&) {
      return Matrix::Identity(1, 1);
    };
    return sys;
  }

  if (e.name == "affine_random") {
    const double a_lo = param(params, e.defaults, "a_lo");
    const double a_hi = param(params, e.defaults, "a_hi");
    const double rho = param(params, e.defaults, "rho");
    if (!(0.0 < a_lo && a_lo < a_hi && a_hi < 1.0))
      throw ConfigError("affine_random: need 0 < a_lo < a_hi < 1");
    sys.base = BaseSpec::bernoulli(NoiseLaw::uniform(a_lo, a_hi), 1);
    sys.driving = DrivingSystem::quasiperiodic_shift(rho);
    sys.fibre_map = [](std::span<const double> p, double xi, const Vector& y) {
      Vector out(1);
      out(0) = p[0] * y(0) + std::cos(kTwoPi * xi);
      return out;
    };
    sys.jacobian = [](std::span<const double> p, double, const Vector&) {
      Matrix j(1, 1);
      j(0, 0) = p[0];
      return j;
    };
    return sys;
  }

  if (e.name == "two_branch") {
    const double a_plus = param(params, e.defaults, "a");
    const double a_minus = param(params, e.defaults, "a_minus");
    const double b = param(params, e.defaults, "b");
    const double rho = param(params, e.defaults, "rho");
    if (!(a_plus > 0.0 && a_plus < 1.0 && a_minus > 0.0 && a_minus < 1.0))
      throw ConfigError("two_branch: branch slopes must lie in (0,1)");
    if (!(b > 0.0)) throw ConfigError("two_branch: b must be positive");
    sys.base = BaseSpec::bernoulli(NoiseLaw::uniform(0.0, 1.0), 1);
    sys.driving = DrivingSystem::quasiperiodic_shift(rho);
    sys.fibre_map = [a_plus, a_minus, b](std::span<const double>, double,
                                         const Vector& y) {
      Vector out(1);
      const double v = y(0);
      if (v > 0.0)
        out(0) = a_plus * v + b;
      else if (v < 0.0)
        out(0) = a_minus * v - b;
      else
        out(0) = 0.0;
      return out;
    };
    sys.jacobian = [a_plus, a_minus](std::span<const double>, double, const Vector& y) {
      Matrix j(1, 1);
      j(0, 0) = y(0) >= 0.0 ? a_plus : a_minus;  // convention at the kink y = 0
      return j;
    };
    return sys;
  }

  if (e.name == "pinched_sna") {
    const double sigma = param(params, e.defaults, "sigma");
    const double rho = param(params, e.defaults, "rho");
    if (!(sigma > 0.0)) throw ConfigError("pinched_sna: sigma must be positive");
    sys.base = BaseSpec::bernoulli(NoiseLaw::uniform(0.0, 1.0), 1);
    sys.driving = DrivingSystem::quasiperiodic_shift(rho);
    sys.fibre_map = [sigma](std::span<const double>, double xi, const Vector& y) {
      Vector out(1);
      out(0) = 2.0 * sigma * std::cos(kTwoPi * xi) * std::tanh(y(0));
      return out;
    };
    sys.jacobian = [sigma](std::span<const double>, double xi, const Vector& y) {
      Matrix j(1, 1);
      const double c = std::cosh(y(0));
      j(0, 0) = 2.0 * sigma * std::cos(kTwoPi * xi) / (c * c);
      return j;
    };
    return sys;
  }

  if (e.name == "random_matrix_2d") {
    const double rho = param(params, e.defaults, "rho");
    sys.base = BaseSpec::bernoulli(NoiseLaw::uniform(0.0, 1.0), 4);
    sys.driving = DrivingSystem::quasiperiodic_shift(rho);
    const auto matrix_of = [](std::span<const double> p, double xi) {
      Matrix a(2, 2);
      a(0, 0) = 0.6 + 0.3 * p[0] + 0.2 * std::cos(kTwoPi * xi);
      a(0, 1) = 0.5 * (p[1] - 0.5);
      a(1, 0) = 0.4 * (p[2] - 0.5);
      a(1, 1) = 0.5 + 0.2 * p[3];
      return a;
    };
    sys.fibre_map = [matrix_of](std::span<const double> p, double xi, const Vector& y) {
      return Vector(matrix_of(p, xi) * y);
    };
    sys.jacobian = [matrix_of](std::span<const double> p, double xi, const Vector&) {
      return matrix_of(p, xi);
    };
    return sys;
  }

  throw ConfigError("unknown model: " + e.name);
}

}  // namespace

double uniform_log_mean(double lo, double hi) {
  const auto antiderivative = [](double a) { return a * std::log(a) - a; };
  return (antiderivative(hi) - antiderivative(lo)) / (hi - lo);
}

const std::vector<ModelCatalogEntry>& catalog() {
  static const std::vector<ModelCatalogEntry> entries = make_catalog();
  return entries;
}

const ModelCatalogEntry& entry(const std::string& name) {
  for (const auto& e : catalog())
    if (e.name == name) return e;
  throw ConfigError("unknown model: " + name);
}

SkewSystem build(const std::string& name,
                 const std::map<std::string, double>& params) {
  const ModelCatalogEntry& e = entry(name);
  SkewSystem sys = make_system(e, params);

  // Load-time validation on a fixed small orbit.
  const BaseOrbit probe_orbit = sample_orbit(sys.base, 600, 0x5eedULL);
  validate_driving(sys.driving, probe_orbit);

  const int probes_per_box =
      static_cast<int>(1000 / std::max<std::size_t>(1, e.probe_boxes.size()));
  for (const auto& box : e.probe_boxes) {
    Vector lo(e.dim), hi(e.dim);
    for (int j = 0; j < e.dim; ++j) {
      lo(j) = box.lo[static_cast<std::size_t>(j)];
      hi(j) = box.hi[static_cast<std::size_t>(j)];
    }
    const double err = validate_jacobian(sys, probe_orbit, lo, hi, probes_per_box);
    if (err > 1e-6) {
      std::ostringstream msg;
      msg << "model " << name << ": Jacobian mismatch " << err
          << " against central differences (tolerance 1e-6)";
      throw NumericalDomainError(msg.str());
    }
  }
  return sys;
}

AffineFamily affine_family(const std::string& name,
                           const std::map<std::string, double>& params) {
  if (name != "affine_random")
    throw ConfigError("affine_family: only affine_random has a series oracle");
  const ModelCatalogEntry& e = entry(name);
  const double a_hi = param(params, e.defaults, "a_hi");
  AffineFamily fam;
  fam.a = [](std::span<const double> p) { return p[0]; };
  fam.b = [](std::span<const double>, double xi) { return std::cos(kTwoPi * xi); };
  fam.a_sup = a_hi;
  fam.b_sup = 1.0;
  return fam;
}

}  // namespace skewsim::models
