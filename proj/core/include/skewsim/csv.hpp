#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace skewsim::csv {

// Round-trip-exact float formatting: 17 significant digits, "-inf"/"inf"/"nan"
// spelled literally. All report files go through this so reruns are
// byte-identical.
std::string format_double(double x);

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}

  void row(std::span<const std::string> fields);
  void row(const std::vector<std::string>& fields);

  Writer& field(const std::string& s);
  Writer& field(double x);
  Writer& field(std::int64_t v);
  Writer& field(int v) { return field(static_cast<std::int64_t>(v)); }
  Writer& field(std::uint64_t v);
  void end_row();

 private:
  std::ostream& os_;
  bool line_started_ = false;
};

}  // namespace skewsim::csv
