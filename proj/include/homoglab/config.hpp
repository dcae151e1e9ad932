#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "homoglab/coeff.hpp"

namespace homog {

struct FieldRecipe {
  std::string kind = "constant";  // constant, laminate, checkerboard, gaussian, meyers
  int n = 128;
  double lambda = 0.25;
  Tensor2 tensor{1, 0, 0, 1};     // constant
  int period = 8;                 // laminate, checkerboard
  double lo = 0.25, hi = 1.0;     // laminate, checkerboard
  double beta = 1.0;              // gaussian
  bool anisotropic = false;       // gaussian
  double alpha = 0.5;             // meyers
  double rho = 4.0;               // meyers mollification radius (0: unsmoothed)
};

struct HierarchyConfig {
  int k = 2;
  double r0 = 8;
  double r_max = 0;  // 0: N/4
  bool doubling = true;
};

struct ExcessConfig {
  double r_min = 16, r_max = 128;  // dyadic radii, also the fit range
  int modes = 8;
  double slope_min = 3.8;
};

struct LiouvilleConfig {
  double r_min = 32, r_max = 256;
  double gram_ratio_min = 0.1;
  double residual_max = 1e-6;
  double continuum_tol = 0.05;     // constant fields: Gram min-eig vs the continuum value
  bool duplicate = false;          // negative control: inject a duplicated member
  bool non_harmonic = false;       // negative control: inject the uncorrected x1^2
};

struct ApproxConfig {
  std::vector<double> radii{64, 128, 256};
  double factor = 10;
  double error_max = 1e-10;        // normalized error bound for constant fields
  int modes = 8;
};

struct CounterexampleConfig {
  double alpha = 0.5;
  int n = 2048;
  double rho = 4;
  double exponent_tol = 0.05;
  double log_residual_max = 0.1;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string source;              // path it was read from
  std::vector<std::uint64_t> seeds{1};
  int threads = 1;
  double tol = 1e-10;
  double residual_tol = 1e-6;
  std::string out = "out";
  FieldRecipe field;
  HierarchyConfig hierarchy;
  ExcessConfig excess;
  LiouvilleConfig liouville;
  ApproxConfig approx;
  CounterexampleConfig counterexample;
  bool has_excess = false, has_liouville = false, has_approx = false, has_counterexample = false;
};

/// Reads and validates an INI config. Unknown sections or keys, malformed
/// values and out-of-range parameters raise FormatError / ParameterError
/// naming the path.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<string>");
void validate(const ExperimentConfig& c);

/// Canonical INI text of the config with every default spelled out.
std::string resolved_text(const ExperimentConfig& c);
/// FNV-1a 64-bit hash of resolved_text with out and threads neutralized, as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);
std::uint64_t fnv1a64(const std::string& s);

struct Check {
  std::string name;
  bool passed = false;
  double value = 0;
  double threshold = 0;
  std::string detail;
};

struct StageTime {
  std::string stage;
  double seconds = 0;
};

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
  std::vector<StageTime> times;
  std::vector<double> eps_radii, eps;
  std::vector<Check> checks;
  bool passed() const;
  void add(Check c) { checks.push_back(std::move(c)); }
};

std::string version_string();
/// Structured text: [run], [versions], [eps], [checks], [timing]. Only the
/// timing section differs between reruns of one config.
void write_manifest(const RunManifest& m, const std::string& path);
void write_resolved_config(const ExperimentConfig& c, const std::string& path);

/// Doubles in the shortest round-trip form ('.' decimal point).
std::string format_double(double v);

}  // namespace homog
