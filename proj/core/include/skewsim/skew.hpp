#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "skewsim/base.hpp"
#include "skewsim/driving.hpp"

namespace skewsim {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kMinusInf = -std::numeric_limits<double>::infinity();

// Norm choice shifts every log-norm by at most a bounded constant, so reports
// always record which one produced their numbers.
enum class MatrixNorm { spectral, frobenius };
const char* norm_name(MatrixNorm norm);
double operator_norm(const Matrix& m, MatrixNorm norm);

// Double skew product: payload drives the circle fibre xi and the fibre maps
// h(payload, xi, .) on R^d with Jacobian dh/dy.
struct SkewSystem {
  std::string name = "unnamed";
  BaseSpec base;
  DrivingSystem driving;
  int dim = 1;
  std::function<Vector(std::span<const double>, double, const Vector&)> fibre_map;
  std::function<Matrix(std::span<const double>, double, const Vector&)> jacobian;
};

struct SkewState {
  double xi = 0.0;
  Vector y;
};

// One application of the product map: advances the base by one step, the
// fibre point by g, the state by h.
std::pair<BaseOrbit, SkewState> apply_T(const SkewSystem& system, const BaseOrbit& orbit,
                                        const SkewState& state);

// Chain-rule product of fibre Jacobians over n steps. The true product is
// exp(log_scale) * product; the running norm is factored out into log_scale
// every 32 steps so long products neither underflow nor overflow. phi is
// log of the chosen norm of the true product, with exact zero norm carried
// as the -infinity sentinel (never NaN).
struct CocycleResult {
  double phi = 0.0;
  Matrix product;
  double log_scale = 0.0;
  double xi_n = 0.0;
  Vector y_n;
  bool minus_inf() const { return phi == kMinusInf; }
};

CocycleResult cocycle(const SkewSystem& system, const BaseOrbit& orbit, double xi0,
                      const Vector& y0, std::int64_t n,
                      MatrixNorm norm = MatrixNorm::spectral);

// phi_1..phi_n in one sweep (entry k-1 holds phi_k). Shares the cocycle
// renormalization machinery.
std::vector<double> phi_series(const SkewSystem& system, const BaseOrbit& orbit,
                               double xi0, const Vector& y0, std::int64_t n_max,
                               MatrixNorm norm = MatrixNorm::spectral);

struct EnsembleMember {
  BaseOrbit orbit;
  double xi0 = 0.0;
  Vector y0;
};

struct LyapunovEstimate {
  double mean = 0.0;          // over finite samples
  double stderr_ = 0.0;
  std::int64_t n = 0;
  std::size_t samples = 0;
  std::size_t minus_inf_count = 0;
  std::vector<double> per_sample_phi;     // phi_n, -inf possible
  std::vector<double> per_sample_lambda;  // phi_n / n
  MatrixNorm norm = MatrixNorm::spectral;
};

// Finite-time estimate of the maximal Lyapunov exponent over an ensemble of
// m start states, built lazily through `member` so big windows are not all
// resident at once. -inf samples are excluded from the mean and counted.
LyapunovEstimate lyapunov_estimate(const SkewSystem& system, std::size_t m,
                                   std::int64_t n,
                                   const std::function<EnsembleMember(std::size_t)>& member,
                                   MatrixNorm norm = MatrixNorm::spectral);

// Exponent along a graph: the cocycle is started at y0 = graph(orbit, xi0).
using GraphFunction = std::function<Vector(const BaseOrbit&, double)>;
double graph_lyapunov(const SkewSystem& system, const BaseOrbit& orbit,
                      const GraphFunction& graph, double xi0, std::int64_t n,
                      MatrixNorm norm = MatrixNorm::spectral);

// Floor clamp phi'_n = max(n*lambda', phi_n); maps the -inf sentinel to
// n*lambda' and preserves subadditivity. Entry k-1 of the input holds phi_k.
std::vector<double> clamp_subadditive(std::span<const double> phi_values,
                                      double lambda_prime);

// Max over the supplied (n, m) pairs of phi_{n+m} - (phi_n o T^m + phi_m);
// non-positive in exact arithmetic.
double subadditivity_check(const SkewSystem& system, const BaseOrbit& orbit, double xi0,
                           const Vector& y0,
                           std::span<const std::pair<std::int64_t, std::int64_t>> pairs,
                           MatrixNorm norm = MatrixNorm::spectral);

// Central finite-difference validation of the stored Jacobian at probe points
// (payloads swept from the orbit window, xi uniform, y uniform in the probe
// box). Returns the max relative Frobenius error.
double validate_jacobian(const SkewSystem& system, const BaseOrbit& orbit,
                         const Vector& probe_lo, const Vector& probe_hi,
                         int probes = 1000, std::uint64_t seed = 0x7acb);

}  // namespace skewsim
