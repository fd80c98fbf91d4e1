#include "skewsim/attractor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "skewsim/csv.hpp"

namespace skewsim {

namespace {

bool lex_less(const Vector& a, const Vector& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) < b(i)) return true;
    if (a(i) > b(i)) return false;
  }
  return false;
}

void sort_cloud(Cloud& cloud) { std::sort(cloud.begin(), cloud.end(), lex_less); }

void dedupe_cloud(Cloud& cloud, double radius) {
  if (radius <= 0.0 || cloud.size() < 2) return;
  Cloud kept;
  kept.reserve(cloud.size());
  for (const auto& p : cloud) {
    bool dup = false;
    for (const auto& q : kept) {
      if ((p - q).norm() <= radius) {
        dup = true;
        break;
      }
    }
    if (!dup) kept.push_back(p);
  }
  cloud = std::move(kept);
}

}  // namespace

const Cloud& RandomSetApprox::cloud(std::int64_t t, int cell) const {
  if (t < t0 || t > t1) throw ConfigError("RandomSetApprox: time index out of range");
  return clouds[static_cast<std::size_t>(t - t0)][static_cast<std::size_t>(cell)];
}

Cloud& RandomSetApprox::cloud(std::int64_t t, int cell) {
  if (t < t0 || t > t1) throw ConfigError("RandomSetApprox: time index out of range");
  return clouds[static_cast<std::size_t>(t - t0)][static_cast<std::size_t>(cell)];
}

void RandomSetApprox::validate() const {
  for (const auto& per_time : clouds) {
    for (const auto& cloud : per_time) {
      if (cloud.empty()) throw NumericalDomainError("RandomSetApprox: empty fibre cloud");
      for (const auto& p : cloud)
        for (Eigen::Index i = 0; i < p.size(); ++i)
          if (!std::isfinite(p(i)))
            throw NumericalDomainError("RandomSetApprox: non-finite fibre point");
    }
  }
}

void RandomSetApprox::write_csv(std::ostream& os) const {
  csv::Writer w(os);
  std::vector<std::string> header = {"t", "cell_index", "point_index"};
  for (int c = 0; c < dim; ++c) header.push_back("y" + std::to_string(c));
  w.row(header);
  for (std::int64_t t = t0; t <= t1; ++t) {
    for (int cell = 0; cell < grid; ++cell) {
      const Cloud& cl = cloud(t, cell);
      for (std::size_t i = 0; i < cl.size(); ++i) {
        w.field(t).field(cell).field(static_cast<std::int64_t>(i));
        for (int c = 0; c < dim; ++c) w.field(cl[i](c));
        w.end_row();
      }
    }
  }
}

RandomSetApprox pullback(const SkewSystem& system, const BaseOrbit& orbit,
                         const PullbackParams& params) {
  if (params.t1 < params.t0) throw ConfigError("pullback: t1 < t0");
  if (params.depth < 1) throw ConfigError("pullback: depth must be >= 1");
  if (params.grid < 1) throw ConfigError("pullback: grid must be >= 1");
  if (params.seed_lo.size() != system.dim || params.seed_hi.size() != system.dim)
    throw ConfigError("pullback: seed box dimension mismatch");
  for (int j = 0; j < system.dim; ++j)
    if (!(params.seed_lo(j) < params.seed_hi(j)))
      throw ConfigError("pullback: empty seed box");
  if (params.samples_per_axis < 2)
    throw ConfigError("pullback: samples_per_axis must be >= 2");

  // Window must reach depth steps before the earliest target time.
  if (!orbit.in_window(params.t0 - params.depth) || !orbit.in_window(params.t1))
    throw OutOfWindowError(
        "pullback: time range plus depth exceeds window",
        std::max(std::llabs(orbit.origin() + params.t0 - params.depth),
                 std::llabs(orbit.origin() + params.t1)));

  // Seed grid: samples_per_axis points per axis, endpoints included.
  const int per_axis = params.samples_per_axis;
  std::size_t total = 1;
  for (int j = 0; j < system.dim; ++j) total *= static_cast<std::size_t>(per_axis);
  std::vector<Vector> seeds;
  seeds.reserve(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    Vector y(system.dim);
    std::size_t rem = idx;
    for (int j = 0; j < system.dim; ++j) {
      const int q = static_cast<int>(rem % per_axis);
      rem /= per_axis;
      y(j) = params.seed_lo(j) +
             (params.seed_hi(j) - params.seed_lo(j)) * q / (per_axis - 1);
    }
    seeds.push_back(std::move(y));
  }

  RandomSetApprox K;
  K.t0 = params.t0;
  K.t1 = params.t1;
  K.grid = params.grid;
  K.depth = params.depth;
  K.dim = system.dim;
  K.clouds.assign(static_cast<std::size_t>(K.time_count()),
                  std::vector<Cloud>(static_cast<std::size_t>(params.grid)));

  const std::int64_t n = params.depth;
  for (std::int64_t t = params.t0; t <= params.t1; ++t) {
    const BaseOrbit at_t = orbit.shifted(t - orbit.origin());
    for (int cell = 0; cell < params.grid; ++cell) {
      const double xi_target = K.xi_of_cell(cell);
      // Exact xi-preimage, then the xi path forward again (shared by seeds).
      double xi = xi_target;
      for (std::int64_t j = 1; j <= n; ++j)
        xi = system.driving.apply_inverse(at_t.payload(-j), xi);
      std::vector<double> xi_path(static_cast<std::size_t>(n));
      {
        double x = xi;
        for (std::int64_t s = 0; s < n; ++s) {
          xi_path[static_cast<std::size_t>(s)] = x;
          x = system.driving.apply(at_t.payload(s - n), x);
        }
      }
      Cloud cloud;
      cloud.reserve(seeds.size());
      for (const auto& seed : seeds) {
        Vector y = seed;
        for (std::int64_t s = 0; s < n; ++s) {
          y = system.fibre_map(at_t.payload(s - n), xi_path[static_cast<std::size_t>(s)], y);
        }
        for (int c = 0; c < system.dim; ++c) {
          if (!std::isfinite(y(c))) {
            std::ostringstream msg;
            msg << "pullback: fibre escaped at t=" << t << " cell=" << cell
                << "; the seed box likely misses the attractor";
            throw NumericalDomainError(msg.str());
          }
        }
        cloud.push_back(std::move(y));
      }
      sort_cloud(cloud);
      dedupe_cloud(cloud, params.dedupe_radius);
      K.cloud(t, cell) = std::move(cloud);
    }
  }
  return K;
}

double affine_oracle_tail_bound(const AffineFamily& family, int truncation) {
  if (!(family.a_sup < 1.0))
    throw ConfigError("affine oracle: contraction violated (sup|a| >= 1)");
  return std::pow(family.a_sup, truncation) * family.b_sup / (1.0 - family.a_sup);
}

double affine_graph_oracle(const BaseOrbit& orbit, const DrivingSystem& driving,
                           const AffineFamily& family, double xi, int truncation) {
  if (!(family.a_sup < 1.0))
    throw ConfigError("affine oracle: contraction violated (sup|a| >= 1)");
  // phi(omega, xi) = sum_{k>=1} (prod_{j=1}^{k-1} a(-j)) * b(-k) along the
  // backward orbit of (omega, xi).
  double value = 0.0;
  double weight = 1.0;
  double x = wrap_circle(xi);
  for (int k = 1; k <= truncation; ++k) {
    const auto payload = orbit.payload(-k);
    x = driving.apply_inverse(payload, x);
    value += weight * family.b(payload, x);
    weight *= family.a(payload);
  }
  return value;
}

double hausdorff_distance(const Cloud& a, const Cloud& b) {
  if (a.empty() || b.empty())
    throw ConfigError("hausdorff_distance: empty cloud");
  double worst = 0.0;
  const auto one_sided = [&](const Cloud& from, const Cloud& to) {
    for (const auto& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to) best = std::min(best, (p - q).norm());
      worst = std::max(worst, best);
    }
  };
  one_sided(a, b);
  one_sided(b, a);
  return worst;
}

std::vector<Vector> cluster_centroids(const Cloud& cloud, double radius) {
  const std::size_t n = cloud.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if ((cloud[i] - cloud[j]).norm() <= radius) parent[find(i)] = find(j);

  std::vector<Vector> sums;
  std::vector<int> counts;
  std::vector<std::size_t> root_of;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    auto it = std::find(root_of.begin(), root_of.end(), r);
    std::size_t slot;
    if (it == root_of.end()) {
      root_of.push_back(r);
      sums.push_back(cloud[i]);
      counts.push_back(1);
      slot = root_of.size() - 1;
    } else {
      slot = static_cast<std::size_t>(it - root_of.begin());
      sums[slot] += cloud[i];
      ++counts[slot];
    }
  }
  std::vector<Vector> centroids;
  centroids.reserve(sums.size());
  for (std::size_t s = 0; s < sums.size(); ++s) centroids.push_back(sums[s] / counts[s]);
  std::sort(centroids.begin(), centroids.end(), lex_less);
  return centroids;
}

namespace {

double min_pairwise(const std::vector<Vector>& pts) {
  if (pts.size() < 2) return std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      best = std::min(best, (pts[i] - pts[j]).norm());
  return best;
}

}  // namespace

double default_cluster_radius(const RandomSetApprox& K) {
  constexpr double kFloor = 1e-6;
  double min_sep = std::numeric_limits<double>::infinity();
  for (std::int64_t t = K.t0; t <= K.t1; ++t) {
    for (int cell = 0; cell < K.grid; ++cell) {
      const auto coarse = cluster_centroids(K.cloud(t, cell), kFloor);
      min_sep = std::min(min_sep, min_pairwise(coarse));
    }
  }
  if (!std::isfinite(min_sep)) return kFloor;  // all fibres singletons
  return std::max(min_sep / 2.0, kFloor);
}

CardinalityReport fibre_cardinality(const RandomSetApprox& K, double cluster_radius) {
  if (!(cluster_radius > 0.0))
    throw ConfigError("fibre_cardinality: cluster radius must be positive");
  CardinalityReport report;
  report.cluster_radius = cluster_radius;
  report.counts.assign(static_cast<std::size_t>(K.time_count()), {});
  std::optional<int> global;
  bool constant = true;
  for (std::int64_t t = K.t0; t <= K.t1; ++t) {
    auto& row = report.counts[static_cast<std::size_t>(t - K.t0)];
    row.reserve(static_cast<std::size_t>(K.grid));
    for (int cell = 0; cell < K.grid; ++cell) {
      const int n = static_cast<int>(cluster_centroids(K.cloud(t, cell), cluster_radius).size());
      row.push_back(n);
      if (!global) global = n;
      if (*global != n) constant = false;
    }
  }
  if (constant) report.global = global;
  return report;
}

double min_separation(const RandomSetApprox& K, std::int64_t t, int cell,
                      double cluster_radius) {
  const auto centroids = cluster_centroids(K.cloud(t, cell), cluster_radius);
  return min_pairwise(centroids);  // +inf sentinel for singleton fibres
}

int covering_number(const Cloud& cloud, double eps, double c_value) {
  if (!(eps > 0.0)) throw ConfigError("covering_number: eps must be positive");
  if (cloud.empty()) throw ConfigError("covering_number: empty cloud");
  const double radius = eps * std::exp(c_value);

  if (cloud[0].size() == 1) {
    // Exact minimal interval cover: the ball for the leftmost uncovered point
    // is centred at the rightmost admissible cloud point.
    std::vector<double> xs;
    xs.reserve(cloud.size());
    for (const auto& p : cloud) xs.push_back(p(0));
    std::sort(xs.begin(), xs.end());
    int count = 0;
    std::size_t i = 0;
    while (i < xs.size()) {
      const double p = xs[i];
      std::size_t j = i;
      while (j + 1 < xs.size() && xs[j + 1] - p < radius) ++j;
      const double centre = xs[j];
      ++count;
      while (i < xs.size() && xs[i] - centre < radius) ++i;
    }
    return count;
  }

  // Greedy upper bound for d >= 2: ball centred at the first uncovered point.
  std::vector<char> covered(cloud.size(), 0);
  int count = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (covered[i]) continue;
    ++count;
    for (std::size_t j = i; j < cloud.size(); ++j) {
      if (!covered[j] && (cloud[j] - cloud[i]).norm() < radius) covered[j] = 1;
    }
  }
  return count;
}

CoveringCheck covering_monotonicity_check(const RandomSetApprox& K,
                                          const SkewSystem& system,
                                          const BaseOrbit& orbit,
                                          std::span<const double> c_values, double r,
                                          double eta, int p_max, int k,
                                          std::int64_t max_steps) {
  if (k < 1) throw ConfigError("covering_monotonicity_check: k must be >= 1");
  if (static_cast<std::int64_t>(c_values.size()) != K.time_count())
    throw ConfigError("covering_monotonicity_check: c_values must align with K's time range");

  CoveringCheck check;
  check.max_violation = std::numeric_limits<int>::min();
  std::int64_t steps = 0;
  for (std::int64_t t = K.t0; t + k <= K.t1 && steps < max_steps; ++t, ++steps) {
    const BaseOrbit at_t = orbit.shifted(t - orbit.origin());
    const double c_src = c_values[static_cast<std::size_t>(t - K.t0)];
    const double c_img = c_values[static_cast<std::size_t>(t + k - K.t0)];
    for (int cell = 0; cell < K.grid; ++cell) {
      // Image cell: k driving steps forward of the cell centre, snapped.
      double xi = K.xi_of_cell(cell);
      for (int s = 0; s < k; ++s) xi = system.driving.apply(at_t.payload(s), xi);
      int image_cell = static_cast<int>(std::floor(wrap_circle(xi) * K.grid));
      if (image_cell >= K.grid) image_cell = K.grid - 1;

      const Cloud& source = K.cloud(t, cell);
      const Cloud& image = K.cloud(t + k, image_cell);
      for (int p = 0; p <= p_max; ++p) {
        const double eps = std::exp(-p * eta) * r;
        CoveringRecord rec;
        rec.t = t;
        rec.cell = cell;
        rec.p = p;
        rec.eps = eps;
        rec.n_source = covering_number(source, eps, c_src);
        rec.n_image = covering_number(image, eps, c_img);
        check.max_violation = std::max(check.max_violation, rec.n_image - rec.n_source);
        check.records.push_back(rec);
      }
    }
  }
  if (check.records.empty())
    throw ConfigError("covering_monotonicity_check: no (t, t+k) pair inside K's range");
  return check;
}

std::vector<double> continuity_modulus(std::span<const RandomSetApprox> refinements,
                                       std::int64_t t) {
  if (refinements.empty()) throw ConfigError("continuity_modulus: no refinements");
  std::vector<double> moduli;
  moduli.reserve(refinements.size());
  for (const auto& K : refinements) {
    double worst = 0.0;
    for (int cell = 0; cell < K.grid; ++cell) {
      const int next = (cell + 1) % K.grid;
      worst = std::max(worst, hausdorff_distance(K.cloud(t, cell), K.cloud(t, next)));
    }
    moduli.push_back(worst);
  }
  return moduli;
}

double invariance_residual(const RandomSetApprox& K, const SkewSystem& system,
                           const BaseOrbit& orbit, const ExactFibreEval* exact) {
  if (K.t1 <= K.t0)
    throw ConfigError("invariance_residual: K must span at least two times");
  double worst = 0.0;
  for (std::int64_t t = K.t0; t < K.t1; ++t) {
    const BaseOrbit at_t = orbit.shifted(t - orbit.origin());
    const auto payload = at_t.payload(0);
    for (int cell = 0; cell < K.grid; ++cell) {
      const double xi = K.xi_of_cell(cell);
      Cloud image;
      image.reserve(K.cloud(t, cell).size());
      for (const auto& y : K.cloud(t, cell))
        image.push_back(system.fibre_map(payload, xi, y));
      sort_cloud(image);

      const double xi_image = system.driving.apply(payload, xi);
      Cloud target;
      if (exact) {
        target = (*exact)(t + 1, xi_image);
      } else {
        int image_cell = static_cast<int>(std::floor(xi_image * K.grid));
        if (image_cell >= K.grid) image_cell = K.grid - 1;
        target = K.cloud(t + 1, image_cell);
      }
      worst = std::max(worst, hausdorff_distance(image, target));
    }
  }
  return worst;
}

ExtraUniformityResult extra_uniformity_check(const SkewSystem& system,
                                             const BaseOrbit& orbit,
                                             const RandomSetApprox& K, int k, double eps,
                                             std::span<const double> radii,
                                             MatrixNorm norm) {
  if (k < 1) throw ConfigError("extra_uniformity_check: k must be >= 1");
  ExtraUniformityResult result;

  // One shared on-set sup over all times and fibres.
  double sup_on = kMinusInf;
  for (std::int64_t t = K.t0; t <= K.t1; ++t) {
    const BaseOrbit at_t = orbit.shifted(t - orbit.origin());
    for (int cell = 0; cell < K.grid; ++cell) {
      const double xi = K.xi_of_cell(cell);
      for (const auto& y : K.cloud(t, cell)) {
        const CocycleResult res = cocycle(system, at_t, xi, y, k, norm);
        sup_on = std::max(sup_on, res.phi);
      }
    }
  }

  for (double r : radii) {
    double sup_neigh = kMinusInf;
    for (std::int64_t t = K.t0; t <= K.t1; ++t) {
      const BaseOrbit at_t = orbit.shifted(t - orbit.origin());
      for (int cell = 0; cell < K.grid; ++cell) {
        const double xi = K.xi_of_cell(cell);
        for (const auto& y : K.cloud(t, cell)) {
          std::size_t combos = 1;
          for (int j = 0; j < system.dim; ++j) combos *= 3;
          for (int dxi = -1; dxi <= 1; ++dxi) {
            // Product-metric ball: perturb xi and each y axis by {-r, 0, +r}.
            const double xi_pert = wrap_circle(xi + dxi * r);
            for (std::size_t mask = 0; mask < combos; ++mask) {
              Vector y_pert = y;
              std::size_t rem = mask;
              for (int j = 0; j < system.dim; ++j) {
                const int o = static_cast<int>(rem % 3) - 1;
                rem /= 3;
                y_pert(j) += o * r;
              }
              const CocycleResult res = cocycle(system, at_t, xi_pert, y_pert, k, norm);
              sup_neigh = std::max(sup_neigh, res.phi);
            }
          }
        }
      }
    }
    ExtraUniformityRecord rec;
    rec.r = r;
    rec.sup_neighbourhood = sup_neigh;
    rec.sup_on_set = sup_on;
    rec.pass = sup_neigh <= sup_on + eps;
    result.records.push_back(rec);
    if (rec.pass) {
      if (!result.largest_passing_r || r > *result.largest_passing_r)
        result.largest_passing_r = r;
    }
  }
  return result;
}

const Vector& GraphEstimate::value(std::int64_t t, int cell) const {
  if (t < t0 || t > t1) throw ConfigError("GraphEstimate: time index out of range");
  return values[static_cast<std::size_t>(t - t0)][static_cast<std::size_t>(cell)];
}

void GraphEstimate::write_csv(std::ostream& os) const {
  csv::Writer w(os);
  std::vector<std::string> header = {"t", "cell_index"};
  for (int c = 0; c < dim; ++c) header.push_back("phi" + std::to_string(c));
  w.row(header);
  for (std::int64_t t = t0; t <= t1; ++t) {
    for (int cell = 0; cell < grid; ++cell) {
      w.field(t).field(cell);
      const Vector& v = value(t, cell);
      for (int c = 0; c < dim; ++c) w.field(v(c));
      w.end_row();
    }
  }
}

GraphEstimate graph_from_clouds(const RandomSetApprox& K) {
  GraphEstimate g;
  g.t0 = K.t0;
  g.t1 = K.t1;
  g.grid = K.grid;
  g.dim = K.dim;
  g.values.assign(static_cast<std::size_t>(K.time_count()), {});
  for (std::int64_t t = K.t0; t <= K.t1; ++t) {
    auto& row = g.values[static_cast<std::size_t>(t - K.t0)];
    row.reserve(static_cast<std::size_t>(K.grid));
    for (int cell = 0; cell < K.grid; ++cell) {
      const Cloud& cl = K.cloud(t, cell);
      Vector mean = Vector::Zero(K.dim);
      for (const auto& p : cl) mean += p;
      row.push_back(mean / static_cast<double>(cl.size()));
    }
  }
  return g;
}

double graph_residual(const GraphEstimate& graph, const SkewSystem& system,
                      const BaseOrbit& orbit, const ExactFibreEval* exact) {
  if (graph.t1 <= graph.t0)
    throw ConfigError("graph_residual: graph must span at least two times");
  double worst = 0.0;
  for (std::int64_t t = graph.t0; t < graph.t1; ++t) {
    const BaseOrbit at_t = orbit.shifted(t - orbit.origin());
    const auto payload = at_t.payload(0);
    for (int cell = 0; cell < graph.grid; ++cell) {
      const double xi = graph.xi_of_cell(cell);
      const Vector image = system.fibre_map(payload, xi, graph.value(t, cell));
      const double xi_image = system.driving.apply(payload, xi);
      Vector target;
      if (exact) {
        const Cloud c = (*exact)(t + 1, xi_image);
        if (c.empty()) throw ConfigError("graph_residual: exact evaluator returned empty fibre");
        target = c.front();
      } else {
        int image_cell = static_cast<int>(std::floor(xi_image * graph.grid));
        if (image_cell >= graph.grid) image_cell = graph.grid - 1;
        target = graph.value(t + 1, image_cell);
      }
      worst = std::max(worst, (image - target).norm());
    }
  }
  return worst;
}

}  // namespace skewsim
