#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "skewsim/attractor.hpp"
#include "skewsim/skew.hpp"

namespace skewsim::models {

// Each analytic fact carries a provenance note: the closed form or oracle
// procedure that produced it.
struct ModelFacts {
  std::optional<double> exponent;
  std::string exponent_provenance;
  std::optional<int> cardinality;
  std::string cardinality_provenance;
  std::optional<double> separation;
  std::string separation_provenance;
  std::string continuity;  // free-form: "continuous", "discontinuous", ...
};

struct ProbeBox {
  std::vector<double> lo, hi;  // per y-axis
};

struct ModelCatalogEntry {
  std::string name;
  std::string summary;
  int dim = 1;
  std::map<std::string, double> defaults;
  ModelFacts facts;
  std::vector<ProbeBox> probe_boxes;        // Jacobian validation regions
  std::vector<double> seed_lo, seed_hi;     // default pullback seed box
};

const std::vector<ModelCatalogEntry>& catalog();
const ModelCatalogEntry& entry(const std::string& name);  // throws ConfigError

// Instantiates the named model with defaults overridden by `params` and runs
// the load-time validation: driving homeomorphism check and the central
// finite-difference Jacobian check (1e-6 relative) over the probe boxes.
SkewSystem build(const std::string& name,
                 const std::map<std::string, double>& params = {});

// The affine family of "affine_random" as an oracle input (a_sup/b_sup from
// the same parameters); throws for other models.
AffineFamily affine_family(const std::string& name,
                           const std::map<std::string, double>& params = {});

// Closed form E log a over uniform[lo, hi]: (a ln a - a) / (hi - lo) evaluated
// between the bounds.
double uniform_log_mean(double lo, double hi);

inline constexpr double kGoldenMean = 0.6180339887498949;

}  // namespace skewsim::models
