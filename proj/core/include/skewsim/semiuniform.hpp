#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "skewsim/attractor.hpp"

namespace skewsim {

// phi^K_n(t) = max over the time-t fibre clouds (all cells, all points) of
// phi_n started there; entry n-1 of the result holds phi^K_n. All -inf
// fibres yield the -inf sentinel.
std::vector<double> phi_sup_series(const SkewSystem& system, const BaseOrbit& orbit,
                                   const RandomSetApprox& K, std::int64_t t,
                                   std::int64_t n_max,
                                   MatrixNorm norm = MatrixNorm::spectral);

double phi_sup_K(const SkewSystem& system, const BaseOrbit& orbit,
                 const RandomSetApprox& K, std::int64_t t, std::int64_t n,
                 MatrixNorm norm = MatrixNorm::spectral);

// Pointwise maximizing selection on the time-t fibre clouds; ties broken by
// (cell, lexicographic point) order so the selection is deterministic.
struct FibreArgmax {
  int cell = 0;
  double xi = 0.0;
  Vector y;
  double phi = 0.0;
};
FibreArgmax argmax_on_fibre(const SkewSystem& system, const BaseOrbit& orbit,
                            const RandomSetApprox& K, std::int64_t t, std::int64_t n,
                            MatrixNorm norm = MatrixNorm::spectral);

// A bounding variable along the orbit, with per-time flags recording whether
// the truncated sup was attained strictly inside [0, N_max). A boundary
// attainment voids the verdict at that time instead of passing silently.
struct BoundSeries {
  std::int64_t t0 = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> interior;

  std::int64_t t1() const { return t0 + static_cast<std::int64_t>(values.size()) - 1; }
  bool has(std::int64_t t) const { return t >= t0 && t <= t1(); }
  double at(std::int64_t t) const;
  bool interior_at(std::int64_t t) const;
  bool all_interior() const;
};

// C(t) = max_{0 <= n <= N_max} (-lambda'*n + phi^K_n(t)) with phi^K_0 = 0;
// non-negative by construction. phi_sup_by_time[i] is the series at t0+i.
BoundSeries compute_c_values(const std::vector<std::vector<double>>& phi_sup_by_time,
                             std::int64_t t0, double lambda_prime);

// Dense phi^K_k(t) values over a contiguous time range.
struct PhiKByTime {
  std::int64_t t_first = 0;
  std::vector<double> values;
  bool has(std::int64_t t) const {
    return t >= t_first && t < t_first + static_cast<std::int64_t>(values.size());
  }
  double at(std::int64_t t) const;
};

enum class HatVariant { nonneg, nonpos };
const char* hat_variant_name(HatVariant v);

// nonneg: C^_k(t) =  max_{0<=n<=N} (-lambda'*n*k + sum_{j=1}^{n} phi^K_k(t-jk))
// nonpos: C^_k(t) = -max_{0<=n<=N} (-lambda'*n*k + sum_{j=0}^{n-1} phi^K_k(t+jk))
// Requires phi_k at the swept times; throws ConfigError when the range is short.
BoundSeries compute_c_hat_k(const PhiKByTime& phi_k, std::int64_t t_lo, std::int64_t t_hi,
                            int k, double lambda_prime, int n_max, HatVariant variant);

struct Violation {
  std::int64_t t = 0;
  std::int64_t n = 0;
  int cell = 0;
  int point = 0;
  double excess = 0.0;
};

inline constexpr double kVerifyTolerance = 1e-9;

// All (n <= n_max, t, cloud point) with phi_n > C(t) + n*lambda' + tol.
std::vector<Violation> verify_main_estimate(const SkewSystem& system,
                                            const BaseOrbit& orbit,
                                            const RandomSetApprox& K,
                                            const BoundSeries& c, double lambda_prime,
                                            std::int64_t n_max,
                                            MatrixNorm norm = MatrixNorm::spectral,
                                            double tol = kVerifyTolerance);

// Violations of phi_k(t, x) <= C^_k(t+k) - C^_k(t) + k*lambda' + tol over all
// t with both C^_k(t) and C^_k(t+k) available.
std::vector<Violation> verify_complement(const SkewSystem& system, const BaseOrbit& orbit,
                                         const RandomSetApprox& K,
                                         const BoundSeries& c_hat, int k,
                                         double lambda_prime,
                                         MatrixNorm norm = MatrixNorm::spectral,
                                         double tol = kVerifyTolerance);

// Max over t of min{0, lambda' - phi^K_1(t)} - (C(t+1) - C(t)); <= 0 when the
// sups are interior-attained.
double c_increment_violation(const BoundSeries& c,
                             const std::function<double(std::int64_t)>& phi1_at,
                             double lambda_prime);

// Per horizon h: max(|C(+h)|, |C(-h)|)/h, evaluated through the accessor.
std::vector<std::pair<std::int64_t, double>> adjustedness_slopes(
    const std::function<double(std::int64_t)>& c_at,
    std::span<const std::int64_t> horizons);

// Smallest n with (1/m) phi^K_m <= lambda - delta for every m in [n, N_max];
// nullopt when no such n exists within the series.
std::optional<std::int64_t> semiuniform_entry_time(std::span<const double> phi_sup,
                                                   double lambda, double delta);

struct SupLyapEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::int64_t n = 0;
  std::size_t samples = 0;
};
// (1/n) * ensemble mean of phi^K_n; an upper proxy for the exponents of all
// invariant measures supported on K.
SupLyapEstimate sup_lyap_over_K(std::span<const double> per_orbit_phi_sup_n,
                                std::int64_t n);

// Default lambda' midway between the target and the measured sup exponent.
double default_lambda_prime(double lambda, double lambda_sup_hat);

// Smallest k with (1/k) * mean phi^K_k < lambda'; nullopt if none <= k_max.
std::optional<int> default_k(const std::function<double(int)>& mean_phi_k,
                             double lambda_prime, int k_max);

struct EmpiricalMeasurePoint {
  double xi = 0.0;
  Vector y;
  double weight = 0.0;
};
struct EmpiricalFibreMeasure {
  std::vector<EmpiricalMeasurePoint> points;
  // Birkhoff average of phi_1 over the selection sources (times -i); for
  // ergodic bases this tracks the quadrature value of E log ||Dh||.
  double phi1_birkhoff = 0.0;
};

// Finite-n empirical fibre measure: the i-step forward image of the
// maximizing selection at time -i, i = 0..n-1, equal weights 1/n. K must
// cover times [-(n-1), 0].
EmpiricalFibreMeasure empirical_fibre_measure(const SkewSystem& system,
                                              const BaseOrbit& orbit,
                                              const RandomSetApprox& K, std::int64_t n,
                                              std::int64_t argmax_horizon,
                                              MatrixNorm norm = MatrixNorm::spectral);

// Negative controls. `halve` scales the bound by 1/2 (only biting where the
// bound is positive); `halve_shift` additionally subtracts 1, which bites
// even for the all-zero bound the affine family produces at slack lambda';
// `spike` subtracts 2 at the middle time only, so it survives the telescoping
// difference the complement estimate takes.
enum class CorruptMode { halve, halve_shift, spike };
BoundSeries corrupt_bound(const BoundSeries& series, CorruptMode mode);

}  // namespace skewsim
