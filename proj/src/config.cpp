#include "phaselab/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "phaselab/error.hpp"

namespace phaselab {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_double(std::string_view s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const char* end = t.data() + t.size();
  const auto r = std::from_chars(t.data(), end, out);
  return r.ec == std::errc() && r.ptr == end && std::isfinite(out);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string format_number(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

Config Config::parse(const std::string& text, const std::string& source) {
  Config c;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = source + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value, got '" + body + "'");
    const std::string key = trim(body.substr(0, eq)), value = trim(body.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (c.has(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    c.values_[key] = value;
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse(os.str(), path);
}

void Config::set(const std::string& key, const std::string& value) { values_[key] = value; }

std::string Config::str(const std::string& key) {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing key '" + key + "'");
  return it->second;
}

std::string Config::str(const std::string& key, const std::string& fallback) {
  if (!has(key)) values_[key] = fallback;
  return values_[key];
}

double Config::num(const std::string& key) {
  double x = 0.0;
  if (!parse_double(str(key), x)) throw ConfigError("key '" + key + "': not a number: '" + values_[key] + "'");
  return x;
}

double Config::num(const std::string& key, double fallback) {
  if (!has(key)) values_[key] = format_number(fallback);
  return num(key);
}

long Config::integer(const std::string& key, long fallback) {
  if (!has(key)) values_[key] = std::to_string(fallback);
  const std::string v = values_[key];
  long x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ConfigError("key '" + key + "': not an integer: '" + v + "'");
  return x;
}

bool Config::flag(const std::string& key, bool fallback) {
  if (!has(key)) values_[key] = fallback ? "true" : "false";
  const std::string v = values_[key];
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("key '" + key + "': not a boolean: '" + v + "'");
}

std::vector<double> Config::list(const std::string& key) {
  const std::string v = str(key);
  std::vector<double> out;
  for (const auto& item : split(v, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() == 3) {
      double a, b, step;
      if (!parse_double(parts[0], a) || !parse_double(parts[1], b) || !parse_double(parts[2], step) || !(step > 0))
        throw ConfigError("key '" + key + "': bad range '" + item + "'");
      const long count = std::lround(std::floor((b - a) / step + 1e-9));
      for (long k = 0; k <= count; ++k) out.push_back(a + k * step);
      continue;
    }
    double x;
    if (parts.size() != 1 || !parse_double(item, x)) throw ConfigError("key '" + key + "': bad number '" + item + "'");
    out.push_back(x);
  }
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

std::vector<double> Config::list(const std::string& key, const std::vector<double>& fallback) {
  if (!has(key)) {
    std::string v;
    for (std::size_t i = 0; i < fallback.size(); ++i) v += (i ? "," : "") + format_number(fallback[i]);
    values_[key] = v;
  }
  return list(key);
}

std::vector<std::vector<double>> Config::points(const std::string& key) {
  const std::string v = str(key);
  std::vector<std::vector<double>> out;
  for (const auto& p : split(v, ';')) {
    std::vector<double> point;
    for (const auto& c : split(p, ',')) {
      double x;
      if (!parse_double(c, x)) throw ConfigError("key '" + key + "': bad point '" + p + "'");
      point.push_back(x);
    }
    out.push_back(std::move(point));
  }
  return out;
}

void Config::reject_unknown(const std::set<std::string>& allowed) const {
  for (const auto& [k, v] : values_)
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "'");
}

std::string Config::resolved() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

}  // namespace phaselab
