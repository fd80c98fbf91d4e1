#include "skewsim/driving.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "skewsim/csv.hpp"
#include "skewsim/rng.hpp"

namespace skewsim {

double wrap_circle(double x) {
  double r = x - std::floor(x);
  if (r >= 1.0) r -= 1.0;
  return r;
}

double circle_distance(double a, double b) {
  const double d = std::fabs(wrap_circle(a) - wrap_circle(b));
  return std::min(d, 1.0 - d);
}

DrivingSystem DrivingSystem::identity() {
  DrivingSystem d;
  d.kind = Kind::identity;
  return d;
}

DrivingSystem DrivingSystem::random_rotation(double tau) {
  DrivingSystem d;
  d.kind = Kind::random_rotation;
  d.tau = tau;
  return d;
}

DrivingSystem DrivingSystem::quasiperiodic_shift(double rho) {
  DrivingSystem d;
  d.kind = Kind::quasiperiodic_shift;
  d.rho = rho;
  return d;
}

DrivingSystem DrivingSystem::custom(
    std::function<double(std::span<const double>, double)> fwd,
    std::function<double(std::span<const double>, double)> inv) {
  if (!fwd || !inv) throw ConfigError("custom driving requires forward and inverse maps");
  DrivingSystem d;
  d.kind = Kind::custom;
  d.forward_fn = std::move(fwd);
  d.inverse_fn = std::move(inv);
  return d;
}

double DrivingSystem::shift_amount(std::span<const double> payload) const {
  switch (kind) {
    case Kind::identity:
      return 0.0;
    case Kind::random_rotation:
      return payload[0] + tau;
    case Kind::quasiperiodic_shift:
      return rho;
    case Kind::custom:
      break;
  }
  throw ConfigError("shift_amount is defined for additive drivings only");
}

double DrivingSystem::apply(std::span<const double> payload, double xi) const {
  if (kind == Kind::custom) return wrap_circle(forward_fn(payload, xi));
  return wrap_circle(xi + shift_amount(payload));
}

double DrivingSystem::apply_inverse(std::span<const double> payload, double xi) const {
  if (kind == Kind::custom) return wrap_circle(inverse_fn(payload, xi));
  return wrap_circle(xi - shift_amount(payload));
}

std::string DrivingSystem::kind_name() const {
  switch (kind) {
    case Kind::identity: return "identity";
    case Kind::random_rotation: return "random_rotation";
    case Kind::quasiperiodic_shift: return "quasiperiodic_shift";
    case Kind::custom: return "custom";
  }
  return "?";
}

DrivingValidation validate_driving(const DrivingSystem& driving, const BaseOrbit& orbit,
                                   int grid, int payload_samples, double tol) {
  DrivingValidation out;
  out.min_lift_increment = 1.0;

  const std::int64_t radius = orbit.window_radius();
  const std::int64_t span = 2 * radius + 1;
  const BaseOrbit at_zero = orbit.shifted(-orbit.origin());
  for (int s = 0; s < payload_samples; ++s) {
    // Deterministic sweep over the window (wrapping when samples > span).
    const std::int64_t t = -radius + (s % span);
    const auto payload = at_zero.payload(t);

    double prev = driving.apply(payload, 0.0);
    double lift_span = 0.0;
    for (int i = 1; i <= grid; ++i) {
      const double xi = (i < grid) ? static_cast<double>(i) / grid : 0.0;
      const double y = driving.apply(payload, xi);
      // Increment of the degree-one lift between consecutive grid points.
      double inc = y - prev;
      inc -= std::floor(inc);
      if (i < grid) {
        out.min_lift_increment = std::min(out.min_lift_increment, inc);
        if (inc <= 0.0) {
          throw ConfigError("driving validation: lift not strictly increasing at grid point " +
                            std::to_string(i));
        }
      }
      lift_span += inc;
      prev = y;
    }
    if (std::fabs(lift_span - 1.0) > 1e-9)
      throw ConfigError("driving validation: map is not a degree-one circle homeomorphism");

    for (int i = 0; i < grid; ++i) {
      const double xi = static_cast<double>(i) / grid;
      const double err = circle_distance(driving.apply_inverse(payload, driving.apply(payload, xi)), xi);
      out.max_inverse_error = std::max(out.max_inverse_error, err);
    }
  }
  if (out.max_inverse_error > tol) {
    std::ostringstream msg;
    msg << "driving validation: inverse error " << out.max_inverse_error
        << " exceeds tolerance " << tol;
    throw ConfigError(msg.str());
  }
  return out;
}

RandomPoint RandomPoint::constant(double xi) {
  RandomPoint p;
  const double v = wrap_circle(xi);
  p.fn = [v](std::span<const double>) { return v; };
  p.label = "const(" + csv::format_double(v) + ")";
  return p;
}

RandomPoint RandomPoint::payload_component(int component) {
  RandomPoint p;
  p.fn = [component](std::span<const double> payload) {
    return payload[static_cast<std::size_t>(component)];
  };
  p.label = "payload" + std::to_string(component);
  return p;
}

int GridSet::cell_of(double xi) const {
  int c = static_cast<int>(std::floor(wrap_circle(xi) * resolution));
  if (c >= resolution) c = resolution - 1;
  if (c < 0) c = 0;
  return c;
}

void GridSet::mark(double xi) { occupied[static_cast<std::size_t>(cell_of(xi))] = 1; }

bool GridSet::all_occupied() const {
  return std::all_of(occupied.begin(), occupied.end(), [](std::uint8_t v) { return v != 0; });
}

std::size_t GridSet::count() const {
  std::size_t n = 0;
  for (auto v : occupied) n += (v != 0);
  return n;
}

double GridSet::max_gap() const {
  const int G = resolution;
  if (count() == 0) return 1.0;
  if (all_occupied()) return 0.0;
  // Longest empty run on the circle: scan twice around.
  int best = 0, run = 0;
  for (int i = 0; i < 2 * G; ++i) {
    if (!occupied[static_cast<std::size_t>(i % G)]) {
      run = std::min(run + 1, G);
      best = std::max(best, run);
    } else {
      run = 0;
    }
  }
  return static_cast<double>(best) / G;
}

void GridSet::merge(const GridSet& other) {
  if (other.resolution != resolution)
    throw ConfigError("GridSet::merge: resolution mismatch");
  for (std::size_t i = 0; i < occupied.size(); ++i)
    occupied[i] = occupied[i] || other.occupied[i];
}

bool GridSet::subset_of(const GridSet& other) const {
  if (other.resolution != resolution) return false;
  for (std::size_t i = 0; i < occupied.size(); ++i)
    if (occupied[i] && !other.occupied[i]) return false;
  return true;
}

void GridSet::write_csv(std::ostream& os) const {
  csv::Writer w(os);
  w.row({std::string("cell_index"), std::string("occupied")});
  for (int i = 0; i < resolution; ++i) {
    w.field(i).field(static_cast<std::int64_t>(cell_occupied(i) ? 1 : 0));
    w.end_row();
  }
}

double drive_forward(const BaseOrbit& orbit, const DrivingSystem& driving, double xi0,
                     std::int64_t n) {
  double xi = wrap_circle(xi0);
  for (std::int64_t i = 0; i < n; ++i) xi = driving.apply(orbit.payload(i), xi);
  return xi;
}

double drive_backward(const BaseOrbit& orbit, const DrivingSystem& driving, double xi0,
                      std::int64_t n) {
  double xi = wrap_circle(xi0);
  for (std::int64_t j = 1; j <= n; ++j) xi = driving.apply_inverse(orbit.payload(-j), xi);
  return xi;
}

std::vector<double> pullback_orbit(const BaseOrbit& orbit, const DrivingSystem& driving,
                                   const RandomPoint& point, std::int64_t horizon) {
  if (!orbit.in_window(-horizon))
    throw OutOfWindowError("pullback_orbit: horizon exceeds window",
                           std::llabs(orbit.origin() - horizon));
  std::vector<double> out(static_cast<std::size_t>(horizon) + 1);
  out[0] = point.eval(orbit.payload(0));
  if (driving.additive()) {
    // xi_n = xi(payload(-n)) + sum_{j=1}^{n} shift(payload(-j)), mod 1.
    double cumulative = 0.0;
    for (std::int64_t n = 1; n <= horizon; ++n) {
      const auto payload = orbit.payload(-n);
      cumulative += driving.shift_amount(payload);
      out[static_cast<std::size_t>(n)] = wrap_circle(point.eval(payload) + cumulative);
    }
    return out;
  }
  // General homeomorphisms: one forward pass per depth.
  for (std::int64_t n = 1; n <= horizon; ++n) {
    double xi = point.eval(orbit.payload(-n));
    for (std::int64_t j = n; j >= 1; --j) xi = driving.apply(orbit.payload(-j), xi);
    out[static_cast<std::size_t>(n)] = xi;
  }
  return out;
}

GridSet omega_limit(const BaseOrbit& orbit, const DrivingSystem& driving,
                    const RandomPoint& point, int grid, std::int64_t burn_in,
                    std::int64_t horizon) {
  if (grid < 1) throw ConfigError("omega_limit: grid must be >= 1");
  if (horizon <= burn_in) throw ConfigError("omega_limit: horizon must exceed burn_in");
  const auto points = pullback_orbit(orbit, driving, point, horizon);
  GridSet cells(grid);
  for (std::int64_t n = burn_in; n <= horizon; ++n)
    cells.mark(points[static_cast<std::size_t>(n)]);
  return cells;
}

SubsectionResult subsection_omega_limit(
    std::span<const BaseOrbit> orbits, const DrivingSystem& driving,
    const RandomPoint& point,
    const std::function<bool(std::span<const double>)>& selector, int grid,
    std::int64_t burn_in, std::int64_t horizon) {
  if (orbits.empty()) throw ConfigError("subsection_omega_limit: empty orbit ensemble");
  SubsectionResult res;
  res.cells = GridSet(grid);
  for (const auto& orbit : orbits) {
    const auto points = pullback_orbit(orbit, driving, point, horizon);
    for (std::int64_t n = burn_in; n <= horizon; ++n) {
      ++res.tested;
      if (!selector(orbit.payload(-n))) continue;
      ++res.fires;
      res.cells.mark(points[static_cast<std::size_t>(n)]);
    }
  }
  if (res.fires == 0)
    throw ConfigError("subsection_omega_limit: selector never fired within horizon");
  return res;
}

MinimalityVerdict minimality_diagnostic(std::span<const BaseOrbit> orbits,
                                        const DrivingSystem& driving,
                                        std::span<const RandomPoint> points, int grid,
                                        std::int64_t burn_in, std::int64_t horizon) {
  if (orbits.empty()) throw ConfigError("minimality_diagnostic: need at least one trial orbit");
  if (points.empty()) throw ConfigError("minimality_diagnostic: need at least one random point");
  MinimalityVerdict verdict;
  verdict.fills = true;
  for (const auto& orbit : orbits) {
    double trial_gap = 0.0;
    for (const auto& point : points) {
      const GridSet cells = omega_limit(orbit, driving, point, grid, burn_in, horizon);
      if (!cells.all_occupied()) verdict.fills = false;
      trial_gap = std::max(trial_gap, cells.max_gap());
    }
    verdict.per_trial_gap.push_back(trial_gap);
    verdict.max_gap = std::max(verdict.max_gap, trial_gap);
  }
  return verdict;
}

std::vector<RandomPoint> default_probe_points() {
  return {RandomPoint::constant(0.0), RandomPoint::constant(0.25),
          RandomPoint::constant(0.5), RandomPoint::constant(1.0 / 3.0)};
}

std::optional<std::int64_t> transitivity_probe(const BaseOrbit& orbit,
                                               const DrivingSystem& driving,
                                               const GridSet& U, const GridSet& V,
                                               std::int64_t horizon) {
  if (U.empty() || V.empty())
    throw ConfigError("transitivity_probe: U and V must be non-empty");
  const int G = U.resolution;
  if (V.resolution != G) throw ConfigError("transitivity_probe: U/V resolution mismatch");

  // Track cell centres and edges of U under the forward driving; a hit is a
  // tracked point landing in V's cells. One-cell slack is inherent to the
  // grid representation.
  std::vector<double> pts;
  for (int c = 0; c < G; ++c) {
    if (!U.cell_occupied(c)) continue;
    pts.push_back((c + 0.5) / G);
    pts.push_back(static_cast<double>(c) / G);
  }
  const auto hits_V = [&](const std::vector<double>& xs) {
    for (double x : xs)
      if (V.cell_occupied(V.cell_of(x))) return true;
    return false;
  };
  if (hits_V(pts)) return 0;
  for (std::int64_t n = 1; n <= horizon; ++n) {
    const auto payload = orbit.payload(n - 1);
    for (double& x : pts) x = driving.apply(payload, x);
    if (hits_V(pts)) return n;
  }
  return std::nullopt;
}

std::vector<std::pair<int, double>> weyl_sums(std::span<const double> points, int max_m) {
  std::vector<std::pair<int, double>> out;
  out.reserve(static_cast<std::size_t>(max_m));
  for (int m = 1; m <= max_m; ++m) {
    std::complex<double> acc(0.0, 0.0);
    for (double x : points) {
      const double arg = 2.0 * std::numbers::pi * m * x;
      acc += std::complex<double>(std::cos(arg), std::sin(arg));
    }
    out.emplace_back(m, std::abs(acc) / static_cast<double>(points.size()));
  }
  return out;
}

}  // namespace skewsim
