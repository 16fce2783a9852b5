#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <variant>

#include "bicomm/czo.hpp"
#include "bicomm/grid.hpp"
#include "bicomm/symbols.hpp"

namespace bicomm {

/// Minimal TOML-subset reader: `key = value` lines, `[section]` headers
/// (flattened to section.key), strings, integers, floats, booleans and flat
/// arrays. Parse errors carry the line number.
class TomlTable {
 public:
  using Value = std::variant<std::string, double, bool, std::vector<double>>;

  static TomlTable parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("parse error: cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
  }

  static TomlTable parse_string(const std::string& text) {
    TomlTable t;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string s = strip(line);
      if (s.empty() || s[0] == '#') continue;
      if (s.front() == '[') {
        if (s.back() != ']') fail(lineno, "unterminated section header");
        section = strip(s.substr(1, s.size() - 2));
        if (section.empty()) fail(lineno, "empty section name");
        continue;
      }
      auto eq = s.find('=');
      if (eq == std::string::npos) fail(lineno, "expected key = value");
      std::string key = strip(s.substr(0, eq));
      std::string val = strip(s.substr(eq + 1));
      if (key.empty()) fail(lineno, "empty key");
      if (val.empty()) fail(lineno, "empty value");
      std::string full = section.empty() ? key : section + "." + key;
      t.values_[full] = parse_value(val, lineno);
    }
    return t;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  double number(const std::string& key, double dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    if (auto* d = std::get_if<double>(&it->second)) return *d;
    throw std::runtime_error("validation error: field '" + key + "' must be a number");
  }
  std::string str(const std::string& key, const std::string& dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    if (auto* s = std::get_if<std::string>(&it->second)) return *s;
    throw std::runtime_error("validation error: field '" + key + "' must be a string");
  }
  bool boolean(const std::string& key, bool dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    if (auto* b = std::get_if<bool>(&it->second)) return *b;
    throw std::runtime_error("validation error: field '" + key + "' must be a boolean");
  }
  std::vector<double> numbers(const std::string& key, std::vector<double> dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    if (auto* v = std::get_if<std::vector<double>>(&it->second)) return *v;
    if (auto* d = std::get_if<double>(&it->second)) return {*d};
    throw std::runtime_error("validation error: field '" + key + "' must be an array");
  }
  const std::map<std::string, Value>& raw() const { return values_; }

  /// Canonical text form (sorted keys); the config hash is derived from this.
  std::string canonical() const {
    std::ostringstream out;
    out.precision(17);
    for (const auto& [k, v] : values_) {
      out << k << "=";
      if (auto* s = std::get_if<std::string>(&v))
        out << '"' << *s << '"';
      else if (auto* d = std::get_if<double>(&v))
        out << *d;
      else if (auto* b = std::get_if<bool>(&v))
        out << (*b ? "true" : "false");
      else {
        out << "[";
        for (double x : std::get<std::vector<double>>(v)) out << x << ",";
        out << "]";
      }
      out << "\n";
    }
    return out.str();
  }

 private:
  std::map<std::string, Value> values_;

  static void fail(int line, const std::string& what) {
    throw std::runtime_error("parse error at line " + std::to_string(line) + ": " + what);
  }
  static std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }
  static Value parse_value(const std::string& v, int line) {
    if (v.front() == '"') {
      if (v.size() < 2 || v.back() != '"') fail(line, "unterminated string");
      return v.substr(1, v.size() - 2);
    }
    if (v == "true") return true;
    if (v == "false") return false;
    if (v.front() == '[') {
      if (v.back() != ']') fail(line, "unterminated array");
      std::vector<double> out;
      std::string inner = v.substr(1, v.size() - 2);
      std::istringstream is(inner);
      std::string item;
      while (std::getline(is, item, ',')) {
        std::string si = strip(item);
        if (si.empty()) continue;
        out.push_back(parse_number(si, line));
      }
      return out;
    }
    return parse_number(v, line);
  }
  static double parse_number(const std::string& s, int line) {
    std::size_t pos = 0;
    double d;
    try {
      d = std::stod(s, &pos);
    } catch (...) {
      fail(line, "not a number: '" + s + "'");
      return 0;
    }
    if (pos != s.size()) fail(line, "trailing characters after number: '" + s + "'");
    return d;
  }
};

/// Validated experiment configuration with spec defaults (N=128, A=8, seed=1).
struct ExperimentConfig {
  std::vector<int> n_list{128};
  double A = 8.0;
  std::vector<double> a_list{4, 8, 16, 32};
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::string symbol = "tensor_holder";
  symbols::SymbolParams symbol_params;
  std::string kernel1 = "hilbert", kernel2 = "hilbert";
  int off_samples = 100;
  int off_iters = 30;
  int boyd_starts = 4;
  int boyd_iters = 60;
  std::vector<ExponentProfile> profiles;
  std::uint64_t config_hash = 0;

  static ExperimentConfig from_toml(const TomlTable& t) {
    ExperimentConfig c;
    auto ns = t.numbers("N", {128});
    c.n_list.clear();
    for (double x : ns) {
      int n = int(x);
      if (n != x || !is_pow2(n))
        throw std::runtime_error("validation error: field 'resolution' (N) must be a power of two");
      c.n_list.push_back(n);
    }
    c.A = t.number("A", 8.0);
    if (!(c.A >= 3.0)) throw std::runtime_error("validation error: field 'A' must be >= 3");
    auto as = t.numbers("A_list", {4, 8, 16, 32});
    c.a_list = as;
    double seed = t.number("seed", 1.0);
    if (!(seed >= 1)) throw std::runtime_error("validation error: field 'seed' must be positive");
    c.seed = std::uint64_t(seed);
    c.out_dir = t.str("out", "out");
    c.symbol = t.str("symbol.name", t.str("symbol", "tensor_holder"));
    c.symbol_params.seed = c.seed;
    for (const char* key : {"alpha", "beta", "r1", "r2", "c", "gamma1", "gamma2", "parts"})
      if (t.has(std::string("symbol.") + key)) c.symbol_params.num[key] = t.number(std::string("symbol.") + key, 0.0);
    c.kernel1 = t.str("kernel1.name", "hilbert");
    c.kernel2 = t.str("kernel2.name", "hilbert");
    c.off_samples = int(t.number("budget.off_samples", 100));
    c.off_iters = int(t.number("budget.off_iters", 30));
    c.boyd_starts = int(t.number("budget.boyd_starts", 4));
    c.boyd_iters = int(t.number("budget.boyd_iters", 60));
    if (c.off_samples <= 0 || c.off_iters <= 0 || c.boyd_starts <= 0 || c.boyd_iters <= 0)
      throw std::runtime_error("validation error: field 'budget' entries must be positive");
    // exponent profiles: either explicit p1/p2/q1/q2 quadruple or the default table
    if (t.has("exponents.p1")) {
      c.profiles.emplace_back(t.number("exponents.p1", 2), t.number("exponents.p2", 2),
                              t.number("exponents.q1", 2), t.number("exponents.q2", 2));
    }
    std::hash<std::string> h;
    c.config_hash = h(t.canonical());
    return c;
  }

  KernelSpec make_kernel(const std::string& name) const {
    if (name == "hilbert") return KernelSpec::hilbert();
    if (name.rfind("riesz", 0) == 0) return KernelSpec::riesz(1);
    if (name.rfind("table:", 0) == 0) return load_kernel_table(name.substr(6));
    throw std::runtime_error("validation error: field 'kernel' has unknown rule '" + name + "'");
  }
};

}  // namespace bicomm
