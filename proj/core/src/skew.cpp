#include "skewsim/skew.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <sstream>

#include "skewsim/rng.hpp"

namespace skewsim {

const char* norm_name(MatrixNorm norm) {
  return norm == MatrixNorm::spectral ? "spectral" : "frobenius";
}

double operator_norm(const Matrix& m, MatrixNorm norm) {
  if (m.rows() == 1 && m.cols() == 1) return std::fabs(m(0, 0));
  if (norm == MatrixNorm::frobenius) return m.norm();
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

namespace {

void check_finite(const Vector& y, std::int64_t step, const char* what) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y(i))) {
      std::ostringstream msg;
      msg << what << " produced a non-finite value at step " << step;
      throw NumericalDomainError(msg.str());
    }
  }
}

void check_finite(const Matrix& m, std::int64_t step, const char* what) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (!std::isfinite(m.data()[i])) {
      std::ostringstream msg;
      msg << what << " produced a non-finite value at step " << step;
      throw NumericalDomainError(msg.str());
    }
  }
}

constexpr int kRenormPeriod = 32;

// Shared driver: walks the orbit, accumulates the Jacobian product with
// periodic renormalization, optionally records phi after every step.
CocycleResult run_cocycle(const SkewSystem& system, const BaseOrbit& orbit, double xi0,
                          const Vector& y0, std::int64_t n, MatrixNorm norm,
                          std::vector<double>* series) {
  if (n < 0) throw ConfigError("cocycle: n must be >= 0");
  if (y0.size() != system.dim) throw ConfigError("cocycle: y0 dimension mismatch");
  if (!orbit.in_window(n - 1) && n > 0)
    throw OutOfWindowError("cocycle: n steps exceed window",
                           std::llabs(orbit.origin() + n - 1));

  CocycleResult res;
  res.product = Matrix::Identity(system.dim, system.dim);
  res.xi_n = wrap_circle(xi0);
  res.y_n = y0;
  bool dead = false;  // exact zero product; phi stays -inf from here on

  if (series) {
    series->clear();
    series->reserve(static_cast<std::size_t>(n));
  }

  for (std::int64_t i = 0; i < n; ++i) {
    const auto payload = orbit.payload(i);
    if (!dead) {
      const Matrix J = system.jacobian(payload, res.xi_n, res.y_n);
      check_finite(J, i, "jacobian");
      res.product = J * res.product;
    }
    Vector y_next = system.fibre_map(payload, res.xi_n, res.y_n);
    check_finite(y_next, i, "fibre map");
    res.xi_n = system.driving.apply(payload, res.xi_n);
    res.y_n = std::move(y_next);

    if (!dead && (i + 1) % kRenormPeriod == 0) {
      const double scale = res.product.norm();  // Frobenius; any positive factor works
      if (scale == 0.0) {
        dead = true;
      } else {
        res.log_scale += std::log(scale);
        res.product /= scale;
      }
    }
    if (series) {
      double phi = kMinusInf;
      if (!dead) {
        const double on = operator_norm(res.product, norm);
        phi = (on == 0.0) ? kMinusInf : res.log_scale + std::log(on);
      }
      series->push_back(phi);
    }
  }

  if (dead) {
    res.phi = kMinusInf;
    res.product.setZero();
  } else {
    const double on = operator_norm(res.product, norm);
    res.phi = (on == 0.0) ? kMinusInf : res.log_scale + std::log(on);
  }
  return res;
}

}  // namespace

std::pair<BaseOrbit, SkewState> apply_T(const SkewSystem& system, const BaseOrbit& orbit,
                                        const SkewState& state) {
  const auto payload = orbit.payload(0);
  SkewState next;
  next.y = system.fibre_map(payload, state.xi, state.y);
  check_finite(next.y, 0, "fibre map");
  next.xi = system.driving.apply(payload, state.xi);
  return {orbit.shifted(1), std::move(next)};
}

CocycleResult cocycle(const SkewSystem& system, const BaseOrbit& orbit, double xi0,
                      const Vector& y0, std::int64_t n, MatrixNorm norm) {
  return run_cocycle(system, orbit, xi0, y0, n, norm, nullptr);
}

std::vector<double> phi_series(const SkewSystem& system, const BaseOrbit& orbit,
                               double xi0, const Vector& y0, std::int64_t n_max,
                               MatrixNorm norm) {
  std::vector<double> series;
  run_cocycle(system, orbit, xi0, y0, n_max, norm, &series);
  return series;
}

LyapunovEstimate lyapunov_estimate(const SkewSystem& system, std::size_t m,
                                   std::int64_t n,
                                   const std::function<EnsembleMember(std::size_t)>& member,
                                   MatrixNorm norm) {
  if (m == 0) throw ConfigError("lyapunov_estimate: empty ensemble");
  LyapunovEstimate est;
  est.n = n;
  est.samples = m;
  est.norm = norm;
  est.per_sample_phi.reserve(m);
  est.per_sample_lambda.reserve(m);

  double sum = 0.0, sum_sq = 0.0;
  std::size_t finite = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const EnsembleMember mem = member(i);
    const CocycleResult res = cocycle(system, mem.orbit, mem.xi0, mem.y0, n, norm);
    est.per_sample_phi.push_back(res.phi);
    const double lambda = res.minus_inf() ? kMinusInf : res.phi / static_cast<double>(n);
    est.per_sample_lambda.push_back(lambda);
    if (res.minus_inf()) {
      ++est.minus_inf_count;
      continue;
    }
    sum += lambda;
    sum_sq += lambda * lambda;
    ++finite;
  }
  if (finite == 0) {
    est.mean = kMinusInf;
    est.stderr_ = 0.0;
    return est;
  }
  est.mean = sum / static_cast<double>(finite);
  if (finite > 1) {
    const double var =
        (sum_sq - static_cast<double>(finite) * est.mean * est.mean) /
        static_cast<double>(finite - 1);
    est.stderr_ = std::sqrt(std::max(0.0, var) / static_cast<double>(finite));
  }
  return est;
}

double graph_lyapunov(const SkewSystem& system, const BaseOrbit& orbit,
                      const GraphFunction& graph, double xi0, std::int64_t n,
                      MatrixNorm norm) {
  if (n < 1) throw ConfigError("graph_lyapunov: n must be >= 1");
  const Vector y0 = graph(orbit, xi0);
  const CocycleResult res = cocycle(system, orbit, xi0, y0, n, norm);
  return res.minus_inf() ? kMinusInf : res.phi / static_cast<double>(n);
}

std::vector<double> clamp_subadditive(std::span<const double> phi_values,
                                      double lambda_prime) {
  if (!std::isfinite(lambda_prime))
    throw ConfigError("clamp_subadditive: lambda' must be finite");
  std::vector<double> out(phi_values.size());
  for (std::size_t i = 0; i < phi_values.size(); ++i) {
    const double floor_value = static_cast<double>(i + 1) * lambda_prime;
    out[i] = std::max(floor_value, phi_values[i]);
  }
  return out;
}

double subadditivity_check(const SkewSystem& system, const BaseOrbit& orbit, double xi0,
                           const Vector& y0,
                           std::span<const std::pair<std::int64_t, std::int64_t>> pairs,
                           MatrixNorm norm) {
  double worst = kMinusInf;
  for (const auto& [n, m] : pairs) {
    if (n < 1 || m < 1) throw ConfigError("subadditivity_check: pair entries must be >= 1");
    const auto series = phi_series(system, orbit, xi0, y0, n + m, norm);
    const double phi_nm = series[static_cast<std::size_t>(n + m - 1)];
    const double phi_m = series[static_cast<std::size_t>(m - 1)];
    const CocycleResult at_m = cocycle(system, orbit, xi0, y0, m, norm);
    const BaseOrbit shifted_orbit = orbit.shifted(m);
    const CocycleResult tail =
        cocycle(system, shifted_orbit, at_m.xi_n, at_m.y_n, n, norm);
    const double rhs = phi_m + tail.phi;  // -inf propagates cleanly through +
    double violation;
    if (phi_nm == kMinusInf) {
      violation = kMinusInf;  // lhs -inf never violates
    } else if (rhs == kMinusInf) {
      violation = std::numeric_limits<double>::infinity();
    } else {
      violation = phi_nm - rhs;
    }
    worst = std::max(worst, violation);
  }
  return worst;
}

double validate_jacobian(const SkewSystem& system, const BaseOrbit& orbit,
                         const Vector& probe_lo, const Vector& probe_hi,
                         int probes, std::uint64_t seed) {
  if (probe_lo.size() != system.dim || probe_hi.size() != system.dim)
    throw ConfigError("validate_jacobian: probe box dimension mismatch");
  const std::int64_t radius = orbit.window_radius();
  const std::int64_t span = 2 * radius + 1;
  const BaseOrbit at_zero = orbit.shifted(-orbit.origin());

  double worst = 0.0;
  for (int p = 0; p < probes; ++p) {
    const std::int64_t t = -radius + (p % span);
    const auto payload = at_zero.payload(t);
    const double xi = rng::u01(seed, p, 1001);
    Vector y(system.dim);
    for (int j = 0; j < system.dim; ++j) {
      const double u = rng::u01(seed, p, static_cast<std::uint32_t>(j));
      y(j) = probe_lo(j) + u * (probe_hi(j) - probe_lo(j));
    }
    const Matrix J = system.jacobian(payload, xi, y);
    Matrix fd(system.dim, system.dim);
    for (int j = 0; j < system.dim; ++j) {
      const double eps = 1e-6 * std::max(1.0, std::fabs(y(j)));
      Vector yp = y, ym = y;
      yp(j) += eps;
      ym(j) -= eps;
      fd.col(j) =
          (system.fibre_map(payload, xi, yp) - system.fibre_map(payload, xi, ym)) /
          (2.0 * eps);
    }
    const double rel = (fd - J).norm() / std::max(1.0, J.norm());
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace skewsim
