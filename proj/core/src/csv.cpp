#include "skewsim/csv.hpp"

#include <cmath>
#include <cstdio>

namespace skewsim::csv {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void Writer::row(std::span<const std::string> fields) {
  for (const auto& f : fields) field(f);
  end_row();
}

void Writer::row(const std::vector<std::string>& fields) {
  row(std::span<const std::string>(fields.data(), fields.size()));
}

Writer& Writer::field(const std::string& s) {
  if (line_started_) os_ << ',';
  os_ << s;
  line_started_ = true;
  return *this;
}

Writer& Writer::field(double x) { return field(format_double(x)); }

Writer& Writer::field(std::int64_t v) { return field(std::to_string(v)); }

Writer& Writer::field(std::uint64_t v) { return field(std::to_string(v)); }

void Writer::end_row() {
  os_ << '\n';
  line_started_ = false;
}

}  // namespace skewsim::csv
