#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "skewsim/skew.hpp"

namespace skewsim {

using Cloud = std::vector<Vector>;

// Finite extensional approximation of a random compact set: one point cloud
// per (time index, xi-grid cell), clouds kept sorted lexicographically so
// serialization and distance computations are canonical.
struct RandomSetApprox {
  std::int64_t t0 = 0, t1 = 0;
  int grid = 0;
  int depth = 0;  // pullback depth used
  int dim = 1;
  std::vector<std::vector<Cloud>> clouds;  // [t - t0][cell]

  const Cloud& cloud(std::int64_t t, int cell) const;
  Cloud& cloud(std::int64_t t, int cell);
  double xi_of_cell(int cell) const { return (cell + 0.5) / grid; }
  int cell_count() const { return grid; }
  std::int64_t time_count() const { return t1 - t0 + 1; }

  void validate() const;  // every cloud non-empty and finite-valued
  void write_csv(std::ostream& os) const;  // t,cell_index,point_index,y0..
};

struct PullbackParams {
  std::int64_t t0 = 0, t1 = 0;
  int depth = 60;
  int grid = 64;
  Vector seed_lo, seed_hi;     // axis-aligned seed box
  int samples_per_axis = 4;
  double dedupe_radius = 1e-12;  // merge numerically collapsed points; 0 disables
};

// Pullback construction: each (t, cell) cloud is the n-step forward image of
// the seed grid, started at time t-n above the exact xi-preimage of the cell
// centre. Deterministic given (system, orbit, params). Escape to infinity
// aborts with a diagnostic naming the fibre.
RandomSetApprox pullback(const SkewSystem& system, const BaseOrbit& orbit,
                         const PullbackParams& params);

// Scalar affine family h = a(payload) * y + b(payload, xi); closed-form
// invariant graph by backward series, the independent oracle for pullback.
struct AffineFamily {
  std::function<double(std::span<const double>)> a;
  std::function<double(std::span<const double>, double)> b;
  double a_sup = 0.0;  // sup |a| over the payload support; must be < 1
  double b_sup = 0.0;  // sup |b|
};

double affine_oracle_tail_bound(const AffineFamily& family, int truncation);
double affine_graph_oracle(const BaseOrbit& orbit, const DrivingSystem& driving,
                           const AffineFamily& family, double xi, int truncation);

// Exact Hausdorff distance between finite clouds (O(|A||B|)).
double hausdorff_distance(const Cloud& a, const Cloud& b);

// Single-linkage clusters at the given radius (points chained by pairwise
// distance <= radius); returns cluster centroids sorted lexicographically.
std::vector<Vector> cluster_centroids(const Cloud& cloud, double radius);

// Adaptive default: half the minimal centroid separation from a coarse pass,
// floored at 1e-6.
double default_cluster_radius(const RandomSetApprox& K);

struct CardinalityReport {
  std::vector<std::vector<int>> counts;  // [t - t0][cell]
  std::optional<int> global;             // nullopt = "non-constant"
  double cluster_radius = 0.0;
};
CardinalityReport fibre_cardinality(const RandomSetApprox& K, double cluster_radius);

// Minimal pairwise distance among cluster centroids of one fibre; +inf for
// singletons.
double min_separation(const RandomSetApprox& K, std::int64_t t, int cell,
                      double cluster_radius);

// Number of open balls of radius eps*exp(c_value), centred at cloud points,
// needed to cover the cloud. Exact minimal cover for d = 1; greedy
// first-uncovered-point cover (upper bound, within ~2x) for d >= 2.
int covering_number(const Cloud& cloud, double eps, double c_value);

struct CoveringRecord {
  std::int64_t t = 0;
  int cell = 0;
  int p = 0;
  double eps = 0.0;
  int n_source = 0;
  int n_image = 0;
};
struct CoveringCheck {
  int max_violation = 0;  // max of n_image - n_source; <= 0 expected
  std::vector<CoveringRecord> records;
};

// Verifies that covering numbers do not increase along k driving steps, over
// the ladder eps_p = exp(-p*eta) * r, p = 0..p_max. c_values holds the
// adjusted bound per time index (aligned with K.t0..K.t1).
CoveringCheck covering_monotonicity_check(const RandomSetApprox& K,
                                          const SkewSystem& system,
                                          const BaseOrbit& orbit,
                                          std::span<const double> c_values, double r,
                                          double eta, int p_max, int k,
                                          std::int64_t max_steps = 1 << 20);

// Modulus at each refinement: max Hausdorff distance between clouds of
// adjacent cells at time t. Refinements must share seeds and time range.
std::vector<double> continuity_modulus(std::span<const RandomSetApprox> refinements,
                                       std::int64_t t);

// Optional exact fibre evaluator (e.g. the affine oracle); when absent the
// comparison target is the cloud at the nearest grid cell, which adds a
// grid-resolution error floor of (continuity modulus) x (snap distance).
using ExactFibreEval = std::function<Cloud(std::int64_t t, double xi)>;

double invariance_residual(const RandomSetApprox& K, const SkewSystem& system,
                           const BaseOrbit& orbit,
                           const ExactFibreEval* exact = nullptr);

struct ExtraUniformityRecord {
  double r = 0.0;
  double sup_neighbourhood = 0.0;
  double sup_on_set = 0.0;
  bool pass = false;
};
struct ExtraUniformityResult {
  std::optional<double> largest_passing_r;
  std::vector<ExtraUniformityRecord> records;
};

// Tests sup of phi_k over an r-neighbourhood sample of each fibre against the
// on-set sup plus eps; reports the largest tested r passing everywhere.
ExtraUniformityResult extra_uniformity_check(const SkewSystem& system,
                                             const BaseOrbit& orbit,
                                             const RandomSetApprox& K, int k, double eps,
                                             std::span<const double> radii,
                                             MatrixNorm norm = MatrixNorm::spectral);

// Single-valued graph read off cloud centroids.
struct GraphEstimate {
  std::int64_t t0 = 0, t1 = 0;
  int grid = 0;
  int dim = 1;
  std::vector<std::vector<Vector>> values;  // [t - t0][cell]
  double residual = 0.0;

  const Vector& value(std::int64_t t, int cell) const;
  double xi_of_cell(int cell) const { return (cell + 0.5) / grid; }
  void write_csv(std::ostream& os) const;  // t,cell_index,phi0..
};

GraphEstimate graph_from_clouds(const RandomSetApprox& K);
double graph_residual(const GraphEstimate& graph, const SkewSystem& system,
                      const BaseOrbit& orbit, const ExactFibreEval* exact = nullptr);

}  // namespace skewsim
