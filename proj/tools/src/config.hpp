#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace skewsim::cli {

// Declarative key-value config with [section] headers; '#' and ';' start
// comments. The top of the file (before any header) is the "" section.
//
//   model = affine_random
//   seeds = 1,2,3
//   [semiuniform]
//   lambda = -0.9
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;

  double get_double(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;

  std::int64_t get_int(const std::string& section, const std::string& key) const;
  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) const;

  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

  std::vector<std::int64_t> get_int_list(const std::string& section, const std::string& key) const;
  std::vector<std::int64_t> get_int_list(const std::string& section, const std::string& key,
                                         std::vector<std::int64_t> fallback) const;
  std::vector<double> get_double_list(const std::string& section, const std::string& key,
                                      std::vector<double> fallback) const;

  // All key/value pairs of one section (used for [model_params]).
  std::map<std::string, double> section_doubles(const std::string& section) const;

  void set(const std::string& section, const std::string& key, const std::string& value);

  // Stable content hash (FNV-1a over normalized section/key/value triples).
  std::uint64_t content_hash() const;

  const std::string& origin() const { return origin_; }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
  std::string origin_;
};

std::vector<std::int64_t> parse_int_list(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);

}  // namespace skewsim::cli
