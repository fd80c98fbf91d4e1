#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "skewsim/errors.hpp"

namespace skewsim {

// Distribution of one noise component per time step.
struct NoiseLaw {
  enum class Kind { uniform, finite };

  Kind kind = Kind::uniform;
  double lo = 0.0, hi = 1.0;        // uniform on [lo, hi)
  std::vector<double> values;       // finite alphabet
  std::vector<double> weights;      // non-negative, not all zero

  static NoiseLaw uniform(double lo, double hi);
  static NoiseLaw finite(std::vector<double> values, std::vector<double> weights);

  void validate() const;            // throws ConfigError
  double sample(double u) const;    // inverse CDF, u in [0,1)
  double mean() const;
  double variance() const;
};

// Driving base (Omega, theta, P), restricted to totally ergodic families so
// every power theta^k is ergodic and no ergodic-component bookkeeping is
// needed downstream.
struct BaseSpec {
  enum class Kind { bernoulli_iid, irrational_rotation, product };

  Kind kind = Kind::bernoulli_iid;
  NoiseLaw noise;                            // bernoulli_iid
  int dimension = 1;                         // payload components (bernoulli)
  double rotation_angle = 0.0;               // in (0,1), irrational by convention
  std::optional<double> rotation_phase;      // phase at t=0; seeded when absent
  std::vector<BaseSpec> factors;             // product

  static BaseSpec bernoulli(NoiseLaw law, int dimension = 1);
  static BaseSpec rotation(double angle, std::optional<double> phase = std::nullopt);
  static BaseSpec product(std::vector<BaseSpec> factors);

  int payload_dimension() const;
  void validate() const;  // throws ConfigError
};

// A finite two-sided sample of the base orbit: payloads for theta^t(omega),
// t in [-N, N], plus the current position ("origin"). Shifting re-indexes a
// shared immutable buffer; it never re-samples. Identical (spec, N, seed)
// reproduce bit-identical payloads.
class BaseOrbit {
 public:
  BaseOrbit() = default;

  std::int64_t window_radius() const { return radius_; }
  std::int64_t origin() const { return origin_; }
  int dimension() const { return dim_; }
  std::uint64_t seed() const { return seed_; }

  // Payload of theta^(origin+rel)(omega). Throws OutOfWindowError.
  std::span<const double> payload(std::int64_t rel = 0) const;

  bool in_window(std::int64_t rel) const {
    const std::int64_t t = origin_ + rel;
    return t >= -radius_ && t <= radius_;
  }

  BaseOrbit shifted(std::int64_t k) const;  // throws OutOfWindowError

  // Raw buffer equality (spec, window and payload bytes).
  bool same_payloads(const BaseOrbit& other) const;

  void write_csv(std::ostream& os) const;  // time_index,c0,...

  friend BaseOrbit sample_orbit(const BaseSpec&, std::int64_t, std::uint64_t);

 private:
  std::shared_ptr<const std::vector<double>> data_;  // (2N+1) * dim, row per t
  std::int64_t radius_ = 0;
  std::int64_t origin_ = 0;
  int dim_ = 0;
  std::uint64_t seed_ = 0;
};

// Samples the full window deterministically from (spec, N, seed).
BaseOrbit sample_orbit(const BaseSpec& spec, std::int64_t window_radius,
                       std::uint64_t seed);

// theta^k as pure re-indexing; shift(shift(o,a),b) == shift(o,a+b).
BaseOrbit shift(const BaseOrbit& orbit, std::int64_t k);

// (1/n) sum_{i=0}^{n-1} f(payload at origin+i).
double birkhoff_average(const BaseOrbit& orbit,
                        const std::function<double(std::span<const double>)>& f,
                        std::int64_t n);

}  // namespace skewsim
