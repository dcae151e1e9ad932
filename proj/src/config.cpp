#include "homoglab/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <Eigen/Core>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "homoglab/errors.hpp"

#ifndef HOMOGLAB_VERSION
#define HOMOGLAB_VERSION "0.0.0"
#endif

namespace homog {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"experiment", {"name", "seeds", "threads", "tol", "residual_tol", "out"}},
      {"field", {"kind", "n", "lambda", "tensor", "period", "lo", "hi", "beta", "anisotropic", "alpha", "rho"}},
      {"hierarchy", {"k", "r0", "r_max", "doubling"}},
      {"excess", {"r_min", "r_max", "modes", "slope_min"}},
      {"liouville", {"r_min", "r_max", "gram_ratio_min", "residual_max", "continuum_tol", "duplicate", "non_harmonic"}},
      {"approx", {"radii", "factor", "error_max", "modes"}},
      {"counterexample", {"alpha", "n", "rho", "exponent_tol", "log_residual_max"}},
  };
  return s;
}

// The ini parser drops empty sections and merges repeated ones, so headers
// are collected from the raw text.
std::set<std::string> section_headers(const std::string& text, const std::string& source) {
  std::set<std::string> out;
  std::istringstream in(text);
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    const auto a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos || line[a] != '[') continue;
    const auto b = line.find(']', a);
    if (b == std::string::npos) continue;
    const auto name = line.substr(a + 1, b - a - 1);
    if (!out.insert(name).second) throw FormatError(fmt::format("{}: line {}: duplicate section [{}]", source, no, name));
  }
  return out;
}

struct Reader {
  const pt::ptree& tree;
  const std::string& source;
  const std::set<std::string>& headers;

  bool has(const std::string& name) const { return headers.count(name) > 0; }

  const pt::ptree* section(const std::string& name) const {
    const auto it = tree.find(name);
    return it == tree.not_found() ? nullptr : &it->second;
  }

  [[noreturn]] void bad(const std::string& sec, const std::string& key, const std::string& value,
                        const char* want) const {
    throw FormatError(fmt::format("{}: [{}] {} = '{}' is not {}", source, sec, key, value, want));
  }

  template <class T>
  void get(const std::string& sec, const std::string& key, T& out) const {
    const auto* s = section(sec);
    if (!s) return;
    const auto v = s->get_optional<std::string>(key);
    if (!v) return;
    const std::string text = *v;
    try {
      std::size_t used = 0;
      if constexpr (std::is_same_v<T, std::string>) {
        out = text;
        used = text.size();
      } else if constexpr (std::is_same_v<T, bool>) {
        if (text == "true" || text == "1") out = true;
        else if (text == "false" || text == "0") out = false;
        else bad(sec, key, text, "a boolean");
        used = text.size();
      } else if constexpr (std::is_same_v<T, int>) {
        out = std::stoi(text, &used);
      } else if constexpr (std::is_same_v<T, double>) {
        out = std::stod(text, &used);
      }
      if (used != text.size()) throw std::invalid_argument(text);
    } catch (const std::logic_error&) {
      bad(sec, key, text, std::is_same_v<T, int> ? "an integer" : "a number");
    }
  }

  template <class T>
  void list(const std::string& sec, const std::string& key, std::vector<T>& out) const {
    std::string text;
    get(sec, key, text);
    if (text.empty()) return;
    out.clear();
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto a = item.find_first_not_of(" \t"), b = item.find_last_not_of(" \t");
      if (a == std::string::npos) bad(sec, key, text, "a comma-separated list");
      item = item.substr(a, b - a + 1);
      try {
        std::size_t used = 0;
        if constexpr (std::is_same_v<T, std::uint64_t>) {
          if (item.front() == '-') throw std::invalid_argument(item);
          out.push_back(std::stoull(item, &used));
        } else {
          out.push_back(std::stod(item, &used));
        }
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::logic_error&) {
        bad(sec, key, text, "a comma-separated list of numbers");
      }
    }
  }
};

void require(bool ok, const ExperimentConfig& c, const std::string& what) {
  if (!ok) throw ParameterError(fmt::format("{}: {}", c.source, what));
}

bool is_power_of_two_ratio(double a, double b) {
  const double l = std::log2(b / a);
  return a > 0 && std::abs(l - std::round(l)) < 1e-12;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
  return s;
}

std::string b(bool v) { return v ? "true" : "false"; }

}  // namespace

std::string format_double(double v) { return fmt::format("{}", v); }

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw FormatError(fmt::format("{}: line {}: {}", source, e.line(), e.message()));
  }
  const auto headers = section_headers(text, source);
  for (const auto& h : headers)
    if (!schema().count(h)) throw FormatError(fmt::format("{}: unknown section [{}]", source, h));
  for (const auto& [sec, body] : tree) {
    const auto it = schema().find(sec);
    if (it == schema().end() || !headers.count(sec))
      throw FormatError(fmt::format("{}: key '{}' outside any section", source, sec));
    for (const auto& kv : body)
      if (!it->second.count(kv.first))
        throw FormatError(fmt::format("{}: unknown key '{}' in [{}]", source, kv.first, sec));
  }

  ExperimentConfig c;
  c.source = source;
  const Reader r{tree, source, headers};
  if (!r.has("field")) throw FormatError(fmt::format("{}: missing [field] section", source));
  r.get("experiment", "name", c.name);
  r.list("experiment", "seeds", c.seeds);
  r.get("experiment", "threads", c.threads);
  r.get("experiment", "tol", c.tol);
  r.get("experiment", "residual_tol", c.residual_tol);
  r.get("experiment", "out", c.out);

  auto& f = c.field;
  r.get("field", "kind", f.kind);
  r.get("field", "n", f.n);
  r.get("field", "lambda", f.lambda);
  std::vector<double> t;
  r.list("field", "tensor", t);
  if (!t.empty()) {
    if (t.size() != 4) throw FormatError(fmt::format("{}: [field] tensor needs 4 entries", source));
    f.tensor = {t[0], t[1], t[2], t[3]};
  }
  r.get("field", "period", f.period);
  r.get("field", "lo", f.lo);
  r.get("field", "hi", f.hi);
  r.get("field", "beta", f.beta);
  r.get("field", "anisotropic", f.anisotropic);
  r.get("field", "alpha", f.alpha);
  r.get("field", "rho", f.rho);

  r.get("hierarchy", "k", c.hierarchy.k);
  r.get("hierarchy", "r0", c.hierarchy.r0);
  r.get("hierarchy", "r_max", c.hierarchy.r_max);
  r.get("hierarchy", "doubling", c.hierarchy.doubling);

  c.has_excess = r.has("excess");
  r.get("excess", "r_min", c.excess.r_min);
  r.get("excess", "r_max", c.excess.r_max);
  r.get("excess", "modes", c.excess.modes);
  r.get("excess", "slope_min", c.excess.slope_min);

  c.has_liouville = r.has("liouville");
  r.get("liouville", "r_min", c.liouville.r_min);
  r.get("liouville", "r_max", c.liouville.r_max);
  r.get("liouville", "gram_ratio_min", c.liouville.gram_ratio_min);
  r.get("liouville", "residual_max", c.liouville.residual_max);
  r.get("liouville", "continuum_tol", c.liouville.continuum_tol);
  r.get("liouville", "duplicate", c.liouville.duplicate);
  r.get("liouville", "non_harmonic", c.liouville.non_harmonic);

  c.has_approx = r.has("approx");
  r.list("approx", "radii", c.approx.radii);
  r.get("approx", "factor", c.approx.factor);
  r.get("approx", "error_max", c.approx.error_max);
  r.get("approx", "modes", c.approx.modes);

  c.has_counterexample = r.has("counterexample");
  r.get("counterexample", "alpha", c.counterexample.alpha);
  r.get("counterexample", "n", c.counterexample.n);
  r.get("counterexample", "rho", c.counterexample.rho);
  r.get("counterexample", "exponent_tol", c.counterexample.exponent_tol);
  r.get("counterexample", "log_residual_max", c.counterexample.log_residual_max);

  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(fmt::format("cannot open config file '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

void validate(const ExperimentConfig& c) {
  static const std::set<std::string> kinds{"constant", "laminate", "checkerboard", "gaussian", "meyers"};
  const auto& f = c.field;
  require(kinds.count(f.kind) > 0, c, "field kind '" + f.kind + "' is not one of constant, laminate, checkerboard, gaussian, meyers");
  require(f.n >= 16 && (f.n & (f.n - 1)) == 0, c, "field n must be a power of two >= 16");
  require(f.lambda > 0 && f.lambda <= 1, c, "field lambda must lie in (0, 1]");
  if (f.kind == "laminate" || f.kind == "checkerboard") {
    require(f.period >= 2 && f.n % f.period == 0, c, "field period must divide n");
    require(f.lo >= f.lambda && f.hi <= 1 && f.lo <= f.hi, c, "field phases need lambda <= lo <= hi <= 1");
  }
  if (f.kind == "gaussian") require(f.beta > 0 && f.beta < 2, c, "field beta must lie in (0, 2)");
  if (f.kind == "meyers") {
    require(f.alpha > 0.2 && f.alpha < 0.9, c, "field alpha must lie in (0.2, 0.9)");
    require(f.rho >= 0 && f.rho < f.n / 4.0, c, "field rho must lie in [0, n/4)");
  }
  require(c.seeds.size() >= 1 && c.seeds.size() <= 64, c, "between 1 and 64 seeds");
  require(c.threads >= 1, c, "threads must be >= 1");
  require(c.tol > 1e-14 && c.tol < 1e-4, c, "tol must lie in (1e-14, 1e-4)");
  require(c.residual_tol > 0, c, "residual_tol must be positive");
  require(!c.out.empty(), c, "out must not be empty");

  const auto& h = c.hierarchy;
  require(h.k >= 1 && h.k <= 4, c, "hierarchy k must lie in 1..4");
  const double rmax = h.r_max > 0 ? h.r_max : f.n / 4.0;
  require(rmax <= f.n / 4.0, c, "hierarchy r_max must not exceed n/4");
  require(h.k < 2 || is_power_of_two_ratio(h.r0, rmax), c, "hierarchy r0 must divide r_max dyadically");

  if (c.has_excess) {
    require(is_power_of_two_ratio(c.excess.r_min, c.excess.r_max) && c.excess.r_max >= 8 * c.excess.r_min, c,
            "excess radii need r_max / r_min = 2^m with m >= 3 (four radii for the fit)");
    require(c.excess.r_max <= rmax, c, "excess r_max must not exceed the hierarchy radius");
    require(c.excess.modes >= 1 && c.excess.modes <= 32, c, "excess modes must lie in 1..32");
  }
  if (c.has_liouville) {
    require(is_power_of_two_ratio(c.liouville.r_min, c.liouville.r_max), c, "liouville radii must be dyadic");
    require(c.liouville.r_max <= rmax, c, "liouville r_max must not exceed the hierarchy radius");
  }
  if (c.has_approx) {
    require(!c.approx.radii.empty(), c, "approx radii must not be empty");
    for (double R : c.approx.radii) require(R >= 8 && R <= f.n / 2.0 - 1, c, "approx radii must lie in [8, n/2 - 1]");
    require(c.approx.factor >= 1, c, "approx factor must be >= 1");
  }
  if (c.has_counterexample) {
    const auto& x = c.counterexample;
    require(x.alpha > 0.2 && x.alpha < 0.9, c, "counterexample alpha must lie in (0.2, 0.9)");
    require(x.n >= 1024 && (x.n & (x.n - 1)) == 0, c, "counterexample n must be a power of two >= 1024");
    require(x.rho >= 0 && x.rho < x.n / 4.0, c, "counterexample rho must lie in [0, n/4)");
  }
}

std::string resolved_text(const ExperimentConfig& c) {
  std::string s;
  std::string seeds;
  for (std::size_t i = 0; i < c.seeds.size(); ++i) seeds += (i ? ", " : "") + std::to_string(c.seeds[i]);
  const auto& f = c.field;
  s += fmt::format("[experiment]\nname = {}\nseeds = {}\nthreads = {}\ntol = {}\nresidual_tol = {}\nout = {}\n\n", c.name,
                   seeds, c.threads, format_double(c.tol), format_double(c.residual_tol), c.out);
  s += fmt::format("[field]\nkind = {}\nn = {}\nlambda = {}\ntensor = {}\nperiod = {}\nlo = {}\nhi = {}\nbeta = {}\n"
                   "anisotropic = {}\nalpha = {}\nrho = {}\n\n",
                   f.kind, f.n, format_double(f.lambda), join({f.tensor.begin(), f.tensor.end()}), f.period,
                   format_double(f.lo), format_double(f.hi), format_double(f.beta), b(f.anisotropic),
                   format_double(f.alpha), format_double(f.rho));
  s += fmt::format("[hierarchy]\nk = {}\nr0 = {}\nr_max = {}\ndoubling = {}\n", c.hierarchy.k,
                   format_double(c.hierarchy.r0), format_double(c.hierarchy.r_max), b(c.hierarchy.doubling));
  if (c.has_excess)
    s += fmt::format("\n[excess]\nr_min = {}\nr_max = {}\nmodes = {}\nslope_min = {}\n", format_double(c.excess.r_min),
                     format_double(c.excess.r_max), c.excess.modes, format_double(c.excess.slope_min));
  if (c.has_liouville) {
    const auto& l = c.liouville;
    s += fmt::format("\n[liouville]\nr_min = {}\nr_max = {}\ngram_ratio_min = {}\nresidual_max = {}\ncontinuum_tol = {}\n"
                     "duplicate = {}\nnon_harmonic = {}\n",
                     format_double(l.r_min), format_double(l.r_max), format_double(l.gram_ratio_min),
                     format_double(l.residual_max), format_double(l.continuum_tol), b(l.duplicate),
                     b(l.non_harmonic));
  }
  if (c.has_approx)
    s += fmt::format("\n[approx]\nradii = {}\nfactor = {}\nerror_max = {}\nmodes = {}\n", join(c.approx.radii),
                     format_double(c.approx.factor), format_double(c.approx.error_max), c.approx.modes);
  if (c.has_counterexample) {
    const auto& x = c.counterexample;
    s += fmt::format("\n[counterexample]\nalpha = {}\nn = {}\nrho = {}\nexponent_tol = {}\nlog_residual_max = {}\n",
                     format_double(x.alpha), x.n, format_double(x.rho), format_double(x.exponent_tol),
                     format_double(x.log_residual_max));
  }
  return s;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string config_hash(const ExperimentConfig& c) {
  // where and how many threads a run uses does not change its payload
  ExperimentConfig id = c;
  id.out = "-";
  id.threads = 1;
  return fmt::format("{:016x}", fnv1a64(resolved_text(id)));
}

bool RunManifest::passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

std::string version_string() {
  return fmt::format("homoglab {}; eigen {}.{}.{}; compiler {}", HOMOGLAB_VERSION, EIGEN_WORLD_VERSION,
                     EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION, __VERSION__);
}

void write_manifest(const RunManifest& m, const std::string& path) {
  if (const auto dir = std::filesystem::path(path).parent_path(); !dir.empty()) std::filesystem::create_directories(dir);
  std::ofstream out(path);
  if (!out) throw FormatError(fmt::format("cannot write manifest '{}'", path));
  std::string seeds;
  for (std::size_t i = 0; i < m.seeds.size(); ++i) seeds += (i ? ", " : "") + std::to_string(m.seeds[i]);
  out << fmt::format("[run]\ncommand = {}\nconfig_hash = {}\nseeds = {}\npassed = {}\n\n", m.command, m.config_hash,
                     seeds, b(m.passed()));
  out << fmt::format("[versions]\nbuild = {}\n\n", version_string());
  out << "[eps]\n";
  for (std::size_t i = 0; i < m.eps.size(); ++i)
    out << fmt::format("r_{} = {:.17g}\n", format_double(m.eps_radii[i]), m.eps[i]);
  out << "\n[checks]\n";
  for (const auto& c : m.checks) {
    out << fmt::format("{} = {}; value {:.6e}; threshold {:.6e}", c.name, c.passed ? "PASS" : "FAIL", c.value, c.threshold);
    if (!c.detail.empty()) out << "; " << c.detail;
    out << "\n";
  }
  out << "\n[timing]\n";
  for (const auto& t : m.times) out << fmt::format("{}_seconds = {:.3f}\n", t.stage, t.seconds);
}

void write_resolved_config(const ExperimentConfig& c, const std::string& path) {
  if (const auto dir = std::filesystem::path(path).parent_path(); !dir.empty()) std::filesystem::create_directories(dir);
  std::ofstream out(path);
  if (!out) throw FormatError(fmt::format("cannot write config '{}'", path));
  out << resolved_text(c);
}

}  // namespace homog
