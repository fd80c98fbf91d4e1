#include "skewsim/semiuniform.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace skewsim {

std::vector<double> phi_sup_series(const SkewSystem& system, const BaseOrbit& orbit,
                                   const RandomSetApprox& K, std::int64_t t,
                                   std::int64_t n_max, MatrixNorm norm) {
  if (n_max < 1) throw ConfigError("phi_sup_series: n_max must be >= 1");
  const BaseOrbit at_t = orbit.shifted(t - orbit.origin());
  std::vector<double> sup(static_cast<std::size_t>(n_max), kMinusInf);
  for (int cell = 0; cell < K.grid; ++cell) {
    const double xi = K.xi_of_cell(cell);
    for (const auto& y : K.cloud(t, cell)) {
      const auto series = phi_series(system, at_t, xi, y, n_max, norm);
      for (std::size_t i = 0; i < series.size(); ++i)
        sup[i] = std::max(sup[i], series[i]);
    }
  }
  return sup;
}

double phi_sup_K(const SkewSystem& system, const BaseOrbit& orbit,
                 const RandomSetApprox& K, std::int64_t t, std::int64_t n,
                 MatrixNorm norm) {
  const auto series = phi_sup_series(system, orbit, K, t, n, norm);
  return series[static_cast<std::size_t>(n - 1)];
}

FibreArgmax argmax_on_fibre(const SkewSystem& system, const BaseOrbit& orbit,
                            const RandomSetApprox& K, std::int64_t t, std::int64_t n,
                            MatrixNorm norm) {
  const BaseOrbit at_t = orbit.shifted(t - orbit.origin());
  bool found = false;
  FibreArgmax best;
  best.phi = kMinusInf;
  for (int cell = 0; cell < K.grid; ++cell) {
    const double xi = K.xi_of_cell(cell);
    for (const auto& y : K.cloud(t, cell)) {
      const CocycleResult res = cocycle(system, at_t, xi, y, n, norm);
      // Strict improvement keeps the first (cell, lexicographic point)
      // attaining the max: clouds are stored sorted.
      if (!found || res.phi > best.phi) {
        found = true;
        best.cell = cell;
        best.xi = xi;
        best.y = y;
        best.phi = res.phi;
      }
    }
  }
  if (!found) throw ConfigError("argmax_on_fibre: no fibre points at time t");
  return best;
}

double BoundSeries::at(std::int64_t t) const {
  if (!has(t)) throw ConfigError("BoundSeries: time index out of range");
  return values[static_cast<std::size_t>(t - t0)];
}

bool BoundSeries::interior_at(std::int64_t t) const {
  if (!has(t)) throw ConfigError("BoundSeries: time index out of range");
  return interior[static_cast<std::size_t>(t - t0)] != 0;
}

bool BoundSeries::all_interior() const {
  return std::all_of(interior.begin(), interior.end(),
                     [](std::uint8_t v) { return v != 0; });
}

BoundSeries compute_c_values(const std::vector<std::vector<double>>& phi_sup_by_time,
                             std::int64_t t0, double lambda_prime) {
  if (phi_sup_by_time.empty()) throw ConfigError("compute_c_values: empty input");
  BoundSeries out;
  out.t0 = t0;
  out.values.reserve(phi_sup_by_time.size());
  out.interior.reserve(phi_sup_by_time.size());
  for (const auto& series : phi_sup_by_time) {
    if (series.empty()) throw ConfigError("compute_c_values: empty phi series");
    double best = 0.0;  // n = 0 term (phi^K_0 = 0)
    std::size_t best_n = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
      if (series[i] == kMinusInf) continue;
      const double candidate = -lambda_prime * static_cast<double>(i + 1) + series[i];
      if (candidate > best) {
        best = candidate;
        best_n = i + 1;
      }
    }
    out.values.push_back(best);
    out.interior.push_back(best_n < series.size() ? 1 : 0);
  }
  return out;
}

double PhiKByTime::at(std::int64_t t) const {
  if (!has(t)) {
    std::ostringstream msg;
    msg << "phi^K_k value at time " << t << " not available (range starts at "
        << t_first << ")";
    throw ConfigError(msg.str());
  }
  return values[static_cast<std::size_t>(t - t_first)];
}

const char* hat_variant_name(HatVariant v) {
  return v == HatVariant::nonneg ? "nonneg" : "nonpos";
}

BoundSeries compute_c_hat_k(const PhiKByTime& phi_k, std::int64_t t_lo, std::int64_t t_hi,
                            int k, double lambda_prime, int n_max, HatVariant variant) {
  if (k < 1) throw ConfigError("compute_c_hat_k: k must be >= 1");
  if (n_max < 1) throw ConfigError("compute_c_hat_k: n_max must be >= 1");
  if (t_hi < t_lo) throw ConfigError("compute_c_hat_k: empty time range");
  // Range check up front so failures name the missing time.
  if (variant == HatVariant::nonneg) {
    (void)phi_k.at(t_lo - static_cast<std::int64_t>(n_max) * k);
    (void)phi_k.at(t_hi - k);
  } else {
    (void)phi_k.at(t_lo);
    (void)phi_k.at(t_hi + static_cast<std::int64_t>(n_max - 1) * k);
  }

  BoundSeries out;
  out.t0 = t_lo;
  for (std::int64_t t = t_lo; t <= t_hi; ++t) {
    double best = 0.0;  // n = 0 term
    int best_n = 0;
    double partial = 0.0;
    for (int n = 1; n <= n_max; ++n) {
      const std::int64_t sample_t = (variant == HatVariant::nonneg)
                                        ? t - static_cast<std::int64_t>(n) * k
                                        : t + static_cast<std::int64_t>(n - 1) * k;
      const double phi = phi_k.at(sample_t);
      if (phi == kMinusInf) {
        partial = kMinusInf;
      } else if (partial != kMinusInf) {
        partial += phi;
      }
      if (partial == kMinusInf) continue;
      const double candidate = -lambda_prime * static_cast<double>(n) * k + partial;
      if (candidate > best) {
        best = candidate;
        best_n = n;
      }
    }
    out.values.push_back(variant == HatVariant::nonneg ? best : -best);
    out.interior.push_back(best_n < n_max ? 1 : 0);
  }
  return out;
}

std::vector<Violation> verify_main_estimate(const SkewSystem& system,
                                            const BaseOrbit& orbit,
                                            const RandomSetApprox& K,
                                            const BoundSeries& c, double lambda_prime,
                                            std::int64_t n_max, MatrixNorm norm,
                                            double tol) {
  std::vector<Violation> violations;
  for (std::int64_t t = std::max(K.t0, c.t0); t <= std::min(K.t1, c.t1()); ++t) {
    const BaseOrbit at_t = orbit.shifted(t - orbit.origin());
    const double c_t = c.at(t);
    for (int cell = 0; cell < K.grid; ++cell) {
      const double xi = K.xi_of_cell(cell);
      const Cloud& cl = K.cloud(t, cell);
      for (std::size_t pt = 0; pt < cl.size(); ++pt) {
        const auto series = phi_series(system, at_t, xi, cl[pt], n_max, norm);
        for (std::size_t i = 0; i < series.size(); ++i) {
          if (series[i] == kMinusInf) continue;
          const double bound = c_t + lambda_prime * static_cast<double>(i + 1);
          if (series[i] > bound + tol) {
            violations.push_back({t, static_cast<std::int64_t>(i + 1), cell,
                                  static_cast<int>(pt), series[i] - bound});
          }
        }
      }
    }
  }
  return violations;
}

std::vector<Violation> verify_complement(const SkewSystem& system, const BaseOrbit& orbit,
                                         const RandomSetApprox& K,
                                         const BoundSeries& c_hat, int k,
                                         double lambda_prime, MatrixNorm norm,
                                         double tol) {
  std::vector<Violation> violations;
  bool any = false;
  for (std::int64_t t = std::max(K.t0, c_hat.t0); t <= K.t1; ++t) {
    if (!c_hat.has(t) || !c_hat.has(t + k)) continue;
    any = true;
    const double bound = c_hat.at(t + k) - c_hat.at(t) +
                         static_cast<double>(k) * lambda_prime;
    const BaseOrbit at_t = orbit.shifted(t - orbit.origin());
    for (int cell = 0; cell < K.grid; ++cell) {
      const double xi = K.xi_of_cell(cell);
      const Cloud& cl = K.cloud(t, cell);
      for (std::size_t pt = 0; pt < cl.size(); ++pt) {
        const CocycleResult res = cocycle(system, at_t, xi, cl[pt], k, norm);
        if (res.phi == kMinusInf) continue;
        if (res.phi > bound + tol) {
          violations.push_back(
              {t, static_cast<std::int64_t>(k), cell, static_cast<int>(pt),
               res.phi - bound});
        }
      }
    }
  }
  if (!any)
    throw ConfigError("verify_complement: no t with both C^_k(t) and C^_k(t+k)");
  return violations;
}

double c_increment_violation(const BoundSeries& c,
                             const std::function<double(std::int64_t)>& phi1_at,
                             double lambda_prime) {
  if (c.values.size() < 2)
    throw ConfigError("c_increment_violation: need at least two times");
  double worst = -std::numeric_limits<double>::infinity();
  for (std::int64_t t = c.t0; t < c.t1(); ++t) {
    const double increment = c.at(t + 1) - c.at(t);
    const double lower = std::min(0.0, lambda_prime - phi1_at(t));
    worst = std::max(worst, lower - increment);
  }
  return worst;
}

std::vector<std::pair<std::int64_t, double>> adjustedness_slopes(
    const std::function<double(std::int64_t)>& c_at,
    std::span<const std::int64_t> horizons) {
  std::vector<std::pair<std::int64_t, double>> out;
  out.reserve(horizons.size());
  for (std::int64_t h : horizons) {
    if (h < 1) throw ConfigError("adjustedness_slopes: horizons must be >= 1");
    const double fwd = std::fabs(c_at(h));
    const double bwd = std::fabs(c_at(-h));
    out.emplace_back(h, std::max(fwd, bwd) / static_cast<double>(h));
  }
  return out;
}

std::optional<std::int64_t> semiuniform_entry_time(std::span<const double> phi_sup,
                                                   double lambda, double delta) {
  if (!(delta > 0.0)) throw ConfigError("semiuniform_entry_time: delta must be positive");
  const double threshold = lambda - delta;
  // Last m violating (1/m) phi_m <= lambda - delta; entry time is m+1.
  std::int64_t last_bad = 0;
  for (std::size_t i = 0; i < phi_sup.size(); ++i) {
    const double m = static_cast<double>(i + 1);
    const double rate = (phi_sup[i] == kMinusInf) ? kMinusInf : phi_sup[i] / m;
    if (rate > threshold) last_bad = static_cast<std::int64_t>(i + 1);
  }
  const std::int64_t entry = last_bad + 1;
  if (entry > static_cast<std::int64_t>(phi_sup.size())) return std::nullopt;
  return entry;
}

SupLyapEstimate sup_lyap_over_K(std::span<const double> per_orbit_phi_sup_n,
                                std::int64_t n) {
  if (per_orbit_phi_sup_n.empty()) throw ConfigError("sup_lyap_over_K: empty ensemble");
  SupLyapEstimate est;
  est.n = n;
  double sum = 0.0, sum_sq = 0.0;
  std::size_t finite = 0;
  for (double phi : per_orbit_phi_sup_n) {
    if (phi == kMinusInf) continue;
    const double v = phi / static_cast<double>(n);
    sum += v;
    sum_sq += v * v;
    ++finite;
  }
  est.samples = finite;
  if (finite == 0) {
    est.mean = kMinusInf;
    return est;
  }
  est.mean = sum / static_cast<double>(finite);
  if (finite > 1) {
    const double var = (sum_sq - static_cast<double>(finite) * est.mean * est.mean) /
                       static_cast<double>(finite - 1);
    est.stderr_ = std::sqrt(std::max(0.0, var) / static_cast<double>(finite));
  }
  return est;
}

double default_lambda_prime(double lambda, double lambda_sup_hat) {
  if (!(lambda_sup_hat < lambda))
    throw ConfigError("default_lambda_prime: requires lambda_sup < lambda");
  return 0.5 * (lambda + lambda_sup_hat);
}

std::optional<int> default_k(const std::function<double(int)>& mean_phi_k,
                             double lambda_prime, int k_max) {
  for (int k = 1; k <= k_max; ++k) {
    if (mean_phi_k(k) / static_cast<double>(k) < lambda_prime) return k;
  }
  return std::nullopt;
}

EmpiricalFibreMeasure empirical_fibre_measure(const SkewSystem& system,
                                              const BaseOrbit& orbit,
                                              const RandomSetApprox& K, std::int64_t n,
                                              std::int64_t argmax_horizon,
                                              MatrixNorm norm) {
  if (n < 1) throw ConfigError("empirical_fibre_measure: n must be >= 1");
  if (K.t0 > -(n - 1) || K.t1 < 0)
    throw ConfigError("empirical_fibre_measure: K must cover times [-(n-1), 0]");
  EmpiricalFibreMeasure out;
  out.points.reserve(static_cast<std::size_t>(n));
  double phi1_sum = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int64_t t = -i;
    const FibreArgmax sel = argmax_on_fibre(system, orbit, K, t, argmax_horizon, norm);
    const BaseOrbit at_t = orbit.shifted(t - orbit.origin());

    // phi_1 at the selection source.
    const Matrix J = system.jacobian(at_t.payload(0), sel.xi, sel.y);
    const double on = operator_norm(J, norm);
    phi1_sum += (on == 0.0) ? kMinusInf : std::log(on);

    // Push the selection i steps forward to land at time 0.
    double xi = sel.xi;
    Vector y = sel.y;
    for (std::int64_t s = 0; s < i; ++s) {
      const auto payload = at_t.payload(s);
      y = system.fibre_map(payload, xi, y);
      xi = system.driving.apply(payload, xi);
    }
    out.points.push_back({xi, std::move(y), 1.0 / static_cast<double>(n)});
  }
  out.phi1_birkhoff = phi1_sum / static_cast<double>(n);
  return out;
}

BoundSeries corrupt_bound(const BoundSeries& series, CorruptMode mode) {
  BoundSeries out = series;
  if (mode == CorruptMode::spike) {
    out.values[out.values.size() / 2] -= 2.0;
    return out;
  }
  for (double& v : out.values) {
    v *= 0.5;
    if (mode == CorruptMode::halve_shift) v -= 1.0;
  }
  return out;
}

}  // namespace skewsim
