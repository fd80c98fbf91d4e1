#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "skewsim/base.hpp"

namespace skewsim {

// Circle [0,1) helpers.
double wrap_circle(double x);
double circle_distance(double a, double b);

// Random homeomorphism g on the circle fibre, driven by the payload at the
// current base time. Builtin kinds are additive shifts (hence isometries with
// exact stored inverses); arbitrary circle homeomorphisms enter via `custom`.
struct DrivingSystem {
  enum class Kind { identity, random_rotation, quasiperiodic_shift, custom };

  Kind kind = Kind::identity;
  double tau = 0.0;  // random_rotation: xi + payload[0] + tau
  double rho = 0.0;  // quasiperiodic_shift: xi + rho

  // Set only for custom systems; both are required.
  std::function<double(std::span<const double>, double)> forward_fn;
  std::function<double(std::span<const double>, double)> inverse_fn;

  static DrivingSystem identity();
  static DrivingSystem random_rotation(double tau);
  static DrivingSystem quasiperiodic_shift(double rho);
  static DrivingSystem custom(std::function<double(std::span<const double>, double)> fwd,
                              std::function<double(std::span<const double>, double)> inv);

  // Additive systems permit O(1)-per-step pullback orbits.
  bool additive() const { return kind != Kind::custom; }
  double shift_amount(std::span<const double> payload) const;

  double apply(std::span<const double> payload, double xi) const;
  double apply_inverse(std::span<const double> payload, double xi) const;

  std::string kind_name() const;
};

// Checks that g(payload,.) is a strictly increasing degree-one circle map on a
// grid and that the stored inverse matches to `tol`, over `payload_samples`
// payloads taken from the orbit window. Throws ConfigError on failure.
struct DrivingValidation {
  double max_inverse_error = 0.0;
  double min_lift_increment = 0.0;
};
DrivingValidation validate_driving(const DrivingSystem& driving, const BaseOrbit& orbit,
                                   int grid = 1000, int payload_samples = 1000,
                                   double tol = 1e-12);

// Measurable assignment omega -> xi, realized through the payload at the
// orbit origin.
struct RandomPoint {
  std::function<double(std::span<const double>)> fn;
  std::string label;

  static RandomPoint constant(double xi);
  static RandomPoint payload_component(int component);

  double eval(std::span<const double> payload) const { return wrap_circle(fn(payload)); }
};

// Occupancy over the uniform G-cell circle partition; the finite surrogate
// for a random closed subset of the fibre.
struct GridSet {
  int resolution = 0;
  std::vector<std::uint8_t> occupied;

  explicit GridSet(int G) : resolution(G), occupied(static_cast<std::size_t>(G), 0) {}
  GridSet() = default;

  int cell_of(double xi) const;
  void mark(double xi);
  void set_cell(int cell) { occupied[static_cast<std::size_t>(cell)] = 1; }
  bool cell_occupied(int cell) const { return occupied[static_cast<std::size_t>(cell)] != 0; }
  bool all_occupied() const;
  std::size_t count() const;
  bool empty() const { return count() == 0; }
  // Longest circular run of empty cells, in circle length (cells / G).
  double max_gap() const;
  void merge(const GridSet& other);
  bool subset_of(const GridSet& other) const;

  void write_csv(std::ostream& os) const;  // cell_index,occupied
};

// n forward driving steps from the orbit origin: g_{theta^{n-1}w} o ... o g_w.
double drive_forward(const BaseOrbit& orbit, const DrivingSystem& driving, double xi0,
                     std::int64_t n);

// n backward steps (preimage chain): the xi with drive_forward(shift(o,-n), xi, n) = xi0.
double drive_backward(const BaseOrbit& orbit, const DrivingSystem& driving, double xi0,
                      std::int64_t n);

// Pullback orbit point xi_n(omega) = g^n_{theta^{-n}omega}(xi(theta^{-n}omega)).
// For additive systems the whole sequence n = 0..horizon costs O(horizon);
// custom systems fall back to one forward pass per n (quadratic).
std::vector<double> pullback_orbit(const BaseOrbit& orbit, const DrivingSystem& driving,
                                   const RandomPoint& point, std::int64_t horizon);

// Cells visited by xi_n(origin) for burn_in <= n <= horizon.
GridSet omega_limit(const BaseOrbit& orbit, const DrivingSystem& driving,
                    const RandomPoint& point, int grid, std::int64_t burn_in,
                    std::int64_t horizon);

// Subsection visits: only times n whose source payload (at time -n) satisfies
// the selector. Fires below ~1% of the horizon deserve suspicion; zero fires
// is an error. Result is the union over the supplied orbits.
struct SubsectionResult {
  GridSet cells;
  std::int64_t fires = 0;
  std::int64_t tested = 0;
};
SubsectionResult subsection_omega_limit(
    std::span<const BaseOrbit> orbits, const DrivingSystem& driving,
    const RandomPoint& point,
    const std::function<bool(std::span<const double>)>& selector, int grid,
    std::int64_t burn_in, std::int64_t horizon);

// Fill diagnostics for the minimality dichotomy. `fills` holds iff every
// (orbit, point) omega-limit occupies all cells; max_gap is the worst empty
// arc seen. Reported as evidence, never as a proof.
struct MinimalityVerdict {
  bool fills = false;
  double max_gap = 0.0;
  std::vector<double> per_trial_gap;
};
MinimalityVerdict minimality_diagnostic(std::span<const BaseOrbit> orbits,
                                        const DrivingSystem& driving,
                                        std::span<const RandomPoint> points, int grid,
                                        std::int64_t burn_in, std::int64_t horizon);

// Default probe points for minimality runs: a few constants. (Payload-driven
// points can have full omega-limits even for non-transitive drivings, so they
// are opt-in.)
std::vector<RandomPoint> default_probe_points();

// Least n <= horizon with (theta x g)^n(U) meeting V; nullopt when none.
std::optional<std::int64_t> transitivity_probe(const BaseOrbit& orbit,
                                               const DrivingSystem& driving,
                                               const GridSet& U, const GridSet& V,
                                               std::int64_t horizon);

// Equidistribution diagnostic: (m, (1/n)|sum_j exp(2 pi i m x_j)|) for m=1..M.
std::vector<std::pair<int, double>> weyl_sums(std::span<const double> points, int max_m);

}  // namespace skewsim
