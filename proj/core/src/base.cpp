#include "skewsim/base.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "skewsim/csv.hpp"
#include "skewsim/rng.hpp"

namespace skewsim {

namespace {

double wrap_unit(double x) {
  double r = x - std::floor(x);
  if (r >= 1.0) r -= 1.0;
  return r;
}

// Reserved stream salt so the rotation phase draw cannot collide with the
// payload draws of product factors (those use salts 1..n_factors).
constexpr std::uint64_t kPhaseSalt = 0x9d2c5680aULL;

}  // namespace

NoiseLaw NoiseLaw::uniform(double lo, double hi) {
  NoiseLaw law;
  law.kind = Kind::uniform;
  law.lo = lo;
  law.hi = hi;
  law.validate();
  return law;
}

NoiseLaw NoiseLaw::finite(std::vector<double> values, std::vector<double> weights) {
  NoiseLaw law;
  law.kind = Kind::finite;
  law.values = std::move(values);
  law.weights = std::move(weights);
  law.validate();
  return law;
}

void NoiseLaw::validate() const {
  switch (kind) {
    case Kind::uniform:
      if (!(lo < hi)) throw ConfigError("uniform noise law: empty interval [lo, hi)");
      if (!std::isfinite(lo) || !std::isfinite(hi))
        throw ConfigError("uniform noise law: non-finite bounds");
      return;
    case Kind::finite: {
      if (values.empty()) throw ConfigError("finite noise law: empty alphabet");
      if (values.size() != weights.size())
        throw ConfigError("finite noise law: values/weights size mismatch");
      double total = 0.0;
      for (double w : weights) {
        if (w < 0.0) throw ConfigError("finite noise law: negative weight");
        total += w;
      }
      if (total <= 0.0) throw ConfigError("finite noise law: weights sum to zero");
      return;
    }
  }
  throw ConfigError("noise law: unknown kind");
}

double NoiseLaw::sample(double u) const {
  if (kind == Kind::uniform) return lo + u * (hi - lo);
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    acc += weights[i] / total;
    if (u < acc) return values[i];
  }
  return values.back();
}

double NoiseLaw::mean() const {
  if (kind == Kind::uniform) return 0.5 * (lo + hi);
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double m = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) m += values[i] * weights[i] / total;
  return m;
}

double NoiseLaw::variance() const {
  if (kind == Kind::uniform) {
    const double w = hi - lo;
    return w * w / 12.0;
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double m = mean();
  double v = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - m;
    v += d * d * weights[i] / total;
  }
  return v;
}

BaseSpec BaseSpec::bernoulli(NoiseLaw law, int dimension) {
  BaseSpec spec;
  spec.kind = Kind::bernoulli_iid;
  spec.noise = std::move(law);
  spec.dimension = dimension;
  spec.validate();
  return spec;
}

BaseSpec BaseSpec::rotation(double angle, std::optional<double> phase) {
  BaseSpec spec;
  spec.kind = Kind::irrational_rotation;
  spec.rotation_angle = angle;
  spec.rotation_phase = phase;
  spec.dimension = 1;
  spec.validate();
  return spec;
}

BaseSpec BaseSpec::product(std::vector<BaseSpec> factors) {
  BaseSpec spec;
  spec.kind = Kind::product;
  spec.factors = std::move(factors);
  spec.validate();
  return spec;
}

int BaseSpec::payload_dimension() const {
  switch (kind) {
    case Kind::bernoulli_iid:
      return dimension;
    case Kind::irrational_rotation:
      return 1;
    case Kind::product: {
      int d = 0;
      for (const auto& f : factors) d += f.payload_dimension();
      return d;
    }
  }
  return 0;
}

void BaseSpec::validate() const {
  switch (kind) {
    case Kind::bernoulli_iid:
      if (dimension < 1) throw ConfigError("base spec: dimension must be >= 1");
      noise.validate();
      return;
    case Kind::irrational_rotation:
      // Irrationality is by convention only; a rational angle is not
      // detectable from a double and is not rejected.
      if (!(rotation_angle > 0.0 && rotation_angle < 1.0))
        throw ConfigError("base spec: rotation_angle must lie in (0,1)");
      if (rotation_phase && !(*rotation_phase >= 0.0 && *rotation_phase < 1.0))
        throw ConfigError("base spec: rotation_phase must lie in [0,1)");
      return;
    case Kind::product:
      if (factors.empty()) throw ConfigError("base spec: product of zero factors");
      for (const auto& f : factors) {
        if (f.kind == Kind::product)
          throw ConfigError("base spec: nested products are not supported");
        f.validate();
      }
      return;
  }
  throw ConfigError("base spec: unknown kind");
}

namespace {

void fill_payload(const BaseSpec& spec, std::uint64_t seed, std::int64_t t,
                  double* out) {
  switch (spec.kind) {
    case BaseSpec::Kind::bernoulli_iid:
      for (int c = 0; c < spec.dimension; ++c)
        out[c] = spec.noise.sample(rng::u01(seed, t, static_cast<std::uint32_t>(c)));
      return;
    case BaseSpec::Kind::irrational_rotation: {
      const double phase0 = spec.rotation_phase
                                ? *spec.rotation_phase
                                : rng::u01(rng::derive_stream(seed, kPhaseSalt), 0, 0);
      out[0] = wrap_unit(phase0 + static_cast<double>(t) * spec.rotation_angle);
      return;
    }
    case BaseSpec::Kind::product: {
      int offset = 0;
      for (std::size_t i = 0; i < spec.factors.size(); ++i) {
        fill_payload(spec.factors[i], rng::derive_stream(seed, i + 1), t, out + offset);
        offset += spec.factors[i].payload_dimension();
      }
      return;
    }
  }
}

}  // namespace

BaseOrbit sample_orbit(const BaseSpec& spec, std::int64_t window_radius,
                       std::uint64_t seed) {
  spec.validate();
  if (window_radius < 1) throw ConfigError("sample_orbit: window radius must be >= 1");

  const int dim = spec.payload_dimension();
  auto data = std::make_shared<std::vector<double>>(
      static_cast<std::size_t>(2 * window_radius + 1) * dim);
  for (std::int64_t t = -window_radius; t <= window_radius; ++t) {
    double* row = data->data() + static_cast<std::size_t>(t + window_radius) * dim;
    fill_payload(spec, seed, t, row);
  }

  BaseOrbit orbit;
  orbit.data_ = std::move(data);
  orbit.radius_ = window_radius;
  orbit.origin_ = 0;
  orbit.dim_ = dim;
  orbit.seed_ = seed;
  return orbit;
}

std::span<const double> BaseOrbit::payload(std::int64_t rel) const {
  const std::int64_t t = origin_ + rel;
  if (t < -radius_ || t > radius_) {
    std::ostringstream msg;
    msg << "payload at time " << t << " outside window [-" << radius_ << ", "
        << radius_ << "]";
    throw OutOfWindowError(msg.str(), std::llabs(t));
  }
  return {data_->data() + static_cast<std::size_t>(t + radius_) * dim_,
          static_cast<std::size_t>(dim_)};
}

BaseOrbit BaseOrbit::shifted(std::int64_t k) const {
  const std::int64_t t = origin_ + k;
  if (t < -radius_ || t > radius_) {
    std::ostringstream msg;
    msg << "shift to time " << t << " outside window [-" << radius_ << ", "
        << radius_ << "]; a window radius of " << std::llabs(t) << " is required";
    throw OutOfWindowError(msg.str(), std::llabs(t));
  }
  BaseOrbit out = *this;
  out.origin_ = t;
  return out;
}

bool BaseOrbit::same_payloads(const BaseOrbit& other) const {
  if (radius_ != other.radius_ || dim_ != other.dim_) return false;
  if (data_ == other.data_) return true;
  return *data_ == *other.data_;
}

void BaseOrbit::write_csv(std::ostream& os) const {
  csv::Writer w(os);
  std::vector<std::string> header = {"time_index"};
  for (int c = 0; c < dim_; ++c) header.push_back("c" + std::to_string(c));
  w.row(header);
  for (std::int64_t t = -radius_; t <= radius_; ++t) {
    w.field(t);
    const double* row = data_->data() + static_cast<std::size_t>(t + radius_) * dim_;
    for (int c = 0; c < dim_; ++c) w.field(row[c]);
    w.end_row();
  }
}

BaseOrbit shift(const BaseOrbit& orbit, std::int64_t k) { return orbit.shifted(k); }

double birkhoff_average(const BaseOrbit& orbit,
                        const std::function<double(std::span<const double>)>& f,
                        std::int64_t n) {
  if (n < 1) throw ConfigError("birkhoff_average: n must be >= 1");
  if (!orbit.in_window(n - 1)) {
    throw OutOfWindowError("birkhoff_average: origin+n-1 outside window",
                           std::llabs(orbit.origin() + n - 1));
  }
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i) acc += f(orbit.payload(i));
  return acc / static_cast<double>(n);
}

}  // namespace skewsim
