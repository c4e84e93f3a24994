#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace phaselab {

std::uint64_t fnv1a64(std::string_view bytes);

/// Shortest round-trip decimal form of x.
std::string format_number(double x);

/// Flat key = value configuration, one assignment per line, `#` starts a
/// comment. Typed getters with a default record the default, so `resolved()`
/// lists every value a run actually used. Errors are ConfigError naming the key
/// or line.
class Config {
 public:
  static Config parse(const std::string& text, const std::string& source = "config");
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string str(const std::string& key);
  std::string str(const std::string& key, const std::string& fallback);
  double num(const std::string& key);
  double num(const std::string& key, double fallback);
  long integer(const std::string& key, long fallback);
  bool flag(const std::string& key, bool fallback);
  /// Comma-separated numbers; `a:b:step` expands to a, a + step, ..., <= b.
  std::vector<double> list(const std::string& key);
  std::vector<double> list(const std::string& key, const std::vector<double>& fallback);
  /// Points separated by `;`, components by `,`.
  std::vector<std::vector<double>> points(const std::string& key);

  /// Throws ConfigError on the first key (in order) outside `allowed`.
  void reject_unknown(const std::set<std::string>& allowed) const;

  /// Sorted `key = value` lines.
  std::string resolved() const;
  std::uint64_t hash() const { return fnv1a64(resolved()); }
  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace phaselab
