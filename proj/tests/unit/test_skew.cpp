#include <doctest.h>

#include <Eigen/SVD>
#include <cmath>

#include "skewsim/models.hpp"
#include "skewsim/skew.hpp"

using namespace skewsim;

namespace {

BaseOrbit uniform_orbit(std::int64_t radius, std::uint64_t seed) {
  return sample_orbit(BaseSpec::bernoulli(NoiseLaw::uniform(0.0, 1.0), 1), radius, seed);
}

// Scalar affine system y -> a*y + b with constant coefficients.
SkewSystem constant_affine(double a, double b) {
  SkewSystem sys;
  sys.name = "test_affine";
  sys.base = BaseSpec::bernoulli(NoiseLaw::uniform(0.0, 1.0), 1);
  sys.driving = DrivingSystem::identity();
  sys.dim = 1;
  sys.fibre_map = [a, b](std::span<const double>, double, const Vector& y) {
    Vector out(1);
    out(0) = a * y(0) + b;
    return out;
  };
  sys.jacobian = [a](std::span<const double>, double, const Vector&) {
    Matrix j(1, 1);
    j(0, 0) = a;
    return j;
  };
  return sys;
}

// d = 2 cocycle alternating between two fixed matrices (payload-gated).
SkewSystem alternating_matrices(const Matrix& A, const Matrix& B) {
  SkewSystem sys;
  sys.name = "test_alternating";
  sys.base = BaseSpec::rotation(0.5, 0.0);  // payload alternates 0, 0.5
  sys.driving = DrivingSystem::identity();
  sys.dim = 2;
  const auto pick = [A, B](std::span<const double> p) { return p[0] < 0.25 ? A : B; };
  sys.fibre_map = [pick](std::span<const double> p, double, const Vector& y) {
    return Vector(pick(p) * y);
  };
  sys.jacobian = [pick](std::span<const double> p, double, const Vector&) {
    return pick(p);
  };
  return sys;
}

Vector scalar(double v) {
  Vector y(1);
  y(0) = v;
  return y;
}

}  // namespace

TEST_CASE("apply_T: identity maps leave the state, shift advances") {
  SkewSystem sys = constant_affine(1.0, 0.0);
  const BaseOrbit o = uniform_orbit(5, 1);
  const auto [shifted, state] = apply_T(sys, o, {0.3, scalar(2.5)});
  CHECK(shifted.origin() == 1);
  CHECK(state.xi == doctest::Approx(0.3));
  CHECK(state.y(0) == doctest::Approx(2.5));
}

TEST_CASE("apply_T: affine arithmetic and the geometric sum") {
  SkewSystem sys = constant_affine(0.5, 1.0);
  BaseOrbit o = uniform_orbit(5, 1);
  SkewState s{0.0, scalar(0.0)};
  std::tie(o, s) = apply_T(sys, o, s);
  CHECK(s.y(0) == doctest::Approx(1.0));
  std::tie(o, s) = apply_T(sys, o, s);
  std::tie(o, s) = apply_T(sys, o, s);
  CHECK(s.y(0) == doctest::Approx(1.75));
}

TEST_CASE("cocycle: identity derivative gives phi = 0") {
  SkewSystem sys = constant_affine(1.0, 0.0);
  const BaseOrbit o = uniform_orbit(64, 2);
  const auto res = cocycle(sys, o, 0.1, scalar(3.0), 40);
  CHECK(res.phi == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("cocycle: constant scalar product") {
  SkewSystem sys = constant_affine(0.5, 1.0);
  const BaseOrbit o = uniform_orbit(16, 2);
  const auto res = cocycle(sys, o, 0.0, scalar(0.0), 10);
  CHECK(res.phi == doctest::Approx(10.0 * std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("cocycle: renormalization survives deep contraction") {
  // Raw products underflow near exp(-745); phi must still be exact.
  SkewSystem sys = constant_affine(0.5, 0.0);
  const BaseOrbit o = uniform_orbit(4000, 3);
  const auto res = cocycle(sys, o, 0.0, scalar(1.0), 4000);
  CHECK(res.phi == doctest::Approx(4000.0 * std::log(0.5)).epsilon(1e-10));
  CHECK(std::isfinite(res.log_scale));
}

TEST_CASE("cocycle: d=2 alternating product matches the brute-force norm") {
  Matrix A(2, 2), B(2, 2);
  A << 0.8, 0.3, -0.2, 0.5;
  B << 0.4, -0.6, 0.7, 0.1;
  SkewSystem sys = alternating_matrices(A, B);
  const BaseOrbit o = sample_orbit(sys.base, 8, 0);
  const auto res = cocycle(sys, o, 0.0, Vector::Zero(2), 2);
  const Matrix product = B * A;  // payload(0) = 0 picks A first
  Eigen::JacobiSVD<Matrix> svd(product);
  CHECK(res.phi == doctest::Approx(std::log(svd.singularValues()(0))).epsilon(1e-12));
  const Matrix recovered = std::exp(res.log_scale) * res.product;
  CHECK((recovered - product).norm() < 1e-12);
}

TEST_CASE("phi_series agrees with per-n cocycles") {
  const SkewSystem sys = models::build("affine_random");
  const BaseOrbit o = sample_orbit(sys.base, 64, 5);
  const auto series = phi_series(sys, o, 0.2, scalar(0.7), 48);
  for (std::int64_t n : {1, 7, 31, 32, 33, 48}) {
    const auto res = cocycle(sys, o, 0.2, scalar(0.7), n);
    CHECK(series[static_cast<std::size_t>(n - 1)] == doctest::Approx(res.phi).epsilon(1e-12));
  }
}

TEST_CASE("cocycle: a NaN in the fibre map names the failing step") {
  SkewSystem sys = constant_affine(1.0, 0.0);
  sys.fibre_map = [](std::span<const double>, double, const Vector& y) {
    Vector out(1);
    out(0) = y(0) > 2.5 ? std::nan("") : y(0) + 1.0;
    return out;
  };
  const BaseOrbit o = uniform_orbit(16, 2);
  CHECK_THROWS_AS(cocycle(sys, o, 0.0, scalar(0.0), 10), NumericalDomainError);
  try {
    cocycle(sys, o, 0.0, scalar(0.0), 10);
  } catch (const NumericalDomainError& e) {
    CHECK(std::string(e.what()).find("step 3") != std::string::npos);
  }
}

TEST_CASE("cocycle: exactly singular Jacobian carries the -inf sentinel") {
  SkewSystem sys = constant_affine(0.0, 1.0);  // derivative 0 everywhere
  const BaseOrbit o = uniform_orbit(8, 2);
  const auto res = cocycle(sys, o, 0.0, scalar(0.3), 3);
  CHECK(res.minus_inf());
  CHECK(res.phi == kMinusInf);
  CHECK_FALSE(std::isnan(res.phi));
}

TEST_CASE("lyapunov_estimate: identity fibres give exactly zero") {
  SkewSystem sys = constant_affine(1.0, 0.0);
  const auto est = lyapunov_estimate(sys, 8, 100, [&](std::size_t i) {
    EnsembleMember m;
    m.orbit = uniform_orbit(128, i);
    m.xi0 = 0.1;
    m.y0 = scalar(1.0 + static_cast<double>(i));
    return m;
  });
  CHECK(est.mean == 0.0);
  CHECK(est.stderr_ == 0.0);
}

TEST_CASE("lyapunov_estimate: constant contraction to machine precision") {
  SkewSystem sys = constant_affine(0.5, 1.0);
  const auto est = lyapunov_estimate(sys, 4, 200, [&](std::size_t i) {
    return EnsembleMember{uniform_orbit(256, i), 0.0, scalar(0.0)};
  });
  CHECK(est.mean == doctest::Approx(std::log(0.5)).epsilon(1e-13));
}

TEST_CASE("lyapunov_estimate: payload-driven slope matches quadrature") {
  const SkewSystem sys = models::build("affine_random");
  const auto est = lyapunov_estimate(sys, 25, 10000, [&](std::size_t i) {
    return EnsembleMember{sample_orbit(sys.base, 10000, 100 + i), 0.0, scalar(0.0)};
  });
  CHECK(std::fabs(est.mean - models::uniform_log_mean(0.2, 0.6)) < 0.02);
}

TEST_CASE("lyapunov_estimate: -inf samples are excluded and counted") {
  SkewSystem sys = constant_affine(0.5, 1.0);
  sys.jacobian = [](std::span<const double> p, double, const Vector&) {
    Matrix j(1, 1);
    j(0, 0) = p[0] < 0.5 ? 0.0 : 0.5;  // half the orbits go singular
    return j;
  };
  const auto est = lyapunov_estimate(sys, 16, 8, [&](std::size_t i) {
    return EnsembleMember{uniform_orbit(16, i), 0.0, scalar(0.0)};
  });
  CHECK(est.minus_inf_count > 0);
  CHECK(std::isfinite(est.mean));
}

TEST_CASE("lyapunov_estimate: stderr shrinks like 1/sqrt(m)") {
  const SkewSystem sys = models::build("affine_random");
  const auto run = [&](std::size_t m) {
    return lyapunov_estimate(sys, m, 500, [&](std::size_t i) {
      return EnsembleMember{sample_orbit(sys.base, 500, 1000 + i), 0.0, scalar(0.0)};
    });
  };
  const double se25 = run(25).stderr_;
  const double se400 = run(400).stderr_;
  const double ratio = se25 / se400;  // ideal: sqrt(400/25) = 4
  CHECK(ratio > 4.0 / 1.5);
  CHECK(ratio < 4.0 * 1.5);
}

TEST_CASE("graph_lyapunov: exponent on the invariant graph") {
  SUBCASE("constant contraction, exact graph y = 2") {
    SkewSystem sys = constant_affine(0.5, 1.0);
    const BaseOrbit o = uniform_orbit(128, 7);
    const GraphFunction graph = [](const BaseOrbit&, double) { return scalar(2.0); };
    CHECK(graph_lyapunov(sys, o, graph, 0.0, 100) ==
          doctest::Approx(std::log(0.5)).epsilon(1e-13));
  }
  SUBCASE("identity maps on a constant graph") {
    SkewSystem sys = constant_affine(1.0, 0.0);
    const BaseOrbit o = uniform_orbit(64, 7);
    const GraphFunction graph = [](const BaseOrbit&, double) { return scalar(0.4); };
    CHECK(graph_lyapunov(sys, o, graph, 0.0, 50) == doctest::Approx(0.0));
  }
  SUBCASE("pinched family on the zero graph: log(2 sigma) - log 2") {
    const SkewSystem sys = models::build("pinched_sna", {{"sigma", 1.5}});
    const BaseOrbit o = sample_orbit(sys.base, 100000, 3);
    const GraphFunction zero = [](const BaseOrbit&, double) { return scalar(0.0); };
    const double lambda = graph_lyapunov(sys, o, zero, 0.0, 100000);
    CHECK(std::fabs(lambda - std::log(1.5)) < 0.02);
  }
}

TEST_CASE("clamp_subadditive: definition applied") {
  SUBCASE("-inf floors to n*lambda'") {
    const double phi[] = {kMinusInf, -5.0};
    const auto out = clamp_subadditive(phi, -1.0);
    CHECK(out[0] == doctest::Approx(-1.0));
    CHECK(out[1] == doctest::Approx(-2.0));
  }
  SUBCASE("values above the floor pass through") {
    const double phi[] = {1.0, 2.0, 3.0};
    const auto out = clamp_subadditive(phi, -1.0);
    CHECK(out[0] == 1.0);
    CHECK(out[1] == 2.0);
    CHECK(out[2] == 3.0);
  }
  SUBCASE("uniformly slower decay is floored everywhere") {
    // phi_n = -2n with lambda' = -1: every entry becomes -n.
    const double phi[] = {-2.0, -4.0, -6.0};
    const auto out = clamp_subadditive(phi, -1.0);
    CHECK(out[0] == doctest::Approx(-1.0));
    CHECK(out[1] == doctest::Approx(-2.0));
    CHECK(out[2] == doctest::Approx(-3.0));
  }
  SUBCASE("clamped increments stay below lambda' when every step does") {
    // log a <= log 0.6 < -0.5 on this model, so both branches of the max give
    // phi'_{n+1} <= phi'_n + lambda'.
    const SkewSystem sys = models::build("affine_random");
    const BaseOrbit o = sample_orbit(sys.base, 128, 9);
    const auto series = phi_series(sys, o, 0.3, scalar(0.0), 100);
    const auto clamped = clamp_subadditive(series, -0.5);
    for (std::size_t n = 0; n + 1 < clamped.size(); ++n)
      CHECK(clamped[n + 1] <= clamped[n] - 0.5 + 1e-9);
  }
}

TEST_CASE("subadditivity_check: scalar cocycles are exactly additive") {
  const SkewSystem sys = models::build("affine_random");
  const BaseOrbit o = sample_orbit(sys.base, 256, 11);
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
  for (std::int64_t n = 1; n <= 10; ++n)
    for (std::int64_t m = 1; m <= 10; ++m) pairs.emplace_back(n, m);
  const double violation = subadditivity_check(sys, o, 0.4, scalar(0.2), pairs);
  CHECK(violation <= 1e-9);
  CHECK(violation >= -1e-9);  // additive case: equality up to rounding
}

TEST_CASE("subadditivity_check: d=2 matrix products obey submultiplicativity") {
  const SkewSystem sys = models::build("random_matrix_2d");
  const BaseOrbit o = sample_orbit(sys.base, 256, 13);
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
  for (int i = 0; i < 100; ++i)
    pairs.emplace_back(1 + (i * 7) % 40, 1 + (i * 13) % 40);
  const double violation = subadditivity_check(sys, o, 0.1, Vector::Zero(2), pairs);
  CHECK(violation <= 1e-9);
}

TEST_CASE("operator_norm: spectral vs frobenius") {
  Matrix m(2, 2);
  m << 3.0, 0.0, 0.0, 4.0;
  CHECK(operator_norm(m, MatrixNorm::spectral) == doctest::Approx(4.0));
  CHECK(operator_norm(m, MatrixNorm::frobenius) == doctest::Approx(5.0));
  Matrix s(1, 1);
  s << -2.5;
  CHECK(operator_norm(s, MatrixNorm::spectral) == doctest::Approx(2.5));
  CHECK(operator_norm(s, MatrixNorm::frobenius) == doctest::Approx(2.5));
}

TEST_CASE("validate_jacobian: catches a wrong derivative") {
  SkewSystem sys = constant_affine(0.5, 1.0);
  const BaseOrbit o = uniform_orbit(64, 15);
  CHECK(validate_jacobian(sys, o, scalar(-5.0), scalar(5.0)) < 1e-9);
  sys.jacobian = [](std::span<const double>, double, const Vector&) {
    Matrix j(1, 1);
    j(0, 0) = 0.6;  // lies about the slope
    return j;
  };
  CHECK(validate_jacobian(sys, o, scalar(-5.0), scalar(5.0)) > 1e-2);
}
