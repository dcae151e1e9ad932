#include "homoglab/experiments.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "homoglab/errors.hpp"
#include "homoglab/field_io.hpp"

namespace homog {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Seeds fan out over the worker pool; results land in per-seed slots so the
// output order does not depend on scheduling.
template <class F>
void for_each_seed(const ExperimentConfig& c, F&& fn) {
  const int ns = static_cast<int>(c.seeds.size());
  std::vector<std::exception_ptr> errors(ns);
#pragma omp parallel for schedule(dynamic, 1) num_threads(c.threads) if (c.threads > 1 && ns > 1)
  for (int s = 0; s < ns; ++s) {
    try {
      fn(s, c.seeds[s]);
    } catch (...) {
      errors[s] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream f(dir + "/" + name);
  if (!f) throw FormatError(fmt::format("cannot write '{}/{}'", dir, name));
  return f;
}

std::vector<std::pair<std::string, std::string>> provenance(const ExperimentConfig& c, std::uint64_t seed) {
  return {{"seed", std::to_string(seed)},
          {"config_hash", config_hash(c)},
          {"tol", format_double(c.tol)},
          {"residual_tol", format_double(c.residual_tol)}};
}

std::string provenance_header() { return "seed,config_hash,tol,residual_tol"; }
std::string provenance_row(const ExperimentConfig& c, std::uint64_t seed) {
  return fmt::format("{},{},{},{}", seed, config_hash(c), format_double(c.tol), format_double(c.residual_tol));
}

double built_radius(const ExperimentConfig& c) {
  return c.hierarchy.r_max > 0 ? c.hierarchy.r_max : c.field.n / 4.0;
}

void set_eps(StageResult& r, const CorrectorSet& cs) {
  const auto prof = sublinearity_profile(cs);
  r.eps_radii = prof.radii;
  r.eps = prof.eps;
}

Check make_check(std::string name, bool passed, double value, double threshold, std::string detail = {}) {
  return Check{std::move(name), passed, value, threshold, std::move(detail)};
}

double min_sym_eig(const Tensor2& t) {
  Eigen::Matrix2d m;
  m << t[0], 0.5 * (t[1] + t[2]), 0.5 * (t[1] + t[2]), t[3];
  return Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(m).eigenvalues()(0);
}

// Largest cell-centre distance over cells carrying a nonzero value.
double centre_support(const DiscreteField& f) {
  const Grid& g = f.grid();
  const int per = static_cast<int>(f.values().size() / g.cell_count());
  double r = 0;
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i) {
      const std::size_t c = g.cell_index(i, j);
      bool nz = false;
      for (int k = 0; k < per; ++k) nz = nz || f[c * per + k] != 0.0;
      if (nz) {
        const auto x = g.cell_center(i, j);
        r = std::max(r, std::hypot(x[0], x[1]));
      }
    }
  return r;
}

}  // namespace

bool StageResult::passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

CoefficientField make_field(const FieldRecipe& r, std::uint64_t seed) {
  const Grid g(r.n, Topology::periodic);
  if (r.kind == "constant") return constant_field(g, r.tensor, r.lambda);
  if (r.kind == "laminate") return laminate_field(g, two_phase_profile(r.n, r.period, r.lo, r.hi), r.lambda);
  if (r.kind == "checkerboard") return checkerboard_field(g, r.period, r.lo, r.hi, r.lambda);
  if (r.kind == "gaussian") return gaussian_field(g, r.beta, r.lambda, seed, r.anisotropic);
  if (r.kind == "meyers") {
    auto m = meyers_field(Grid(r.n, Topology::box), r.alpha);
    return r.rho > 0 ? smooth_inside_unit_ball(m.a, r.rho) : m.a;
  }
  throw ParameterError("make_field: unknown field kind '" + r.kind + "'");
}

DiscreteField coefficient_tensor_field(const CoefficientField& a) {
  DiscreteField f(a.grid, Rank::tensor, Location::cell);
  for (std::size_t c = 0; c < a.grid.cell_count(); ++c)
    for (int k = 0; k < 4; ++k) f[4 * c + k] = a[c][k];
  return f;
}

SolveOptions solve_options(const ExperimentConfig& c) {
  SolveOptions o;
  o.tol = c.tol;
  return o;
}

PsiOptions psi_options(const ExperimentConfig& c) {
  PsiOptions o;
  o.r0 = c.hierarchy.r0;
  o.r_max = c.hierarchy.r_max;
  o.doubling = c.hierarchy.doubling;
  o.keep_increments = false;
  return o;
}

std::unique_ptr<Pipeline> build_pipeline(const ExperimentConfig& c, std::uint64_t seed, int k) {
  if (c.field.kind == "meyers") throw ParameterError("correctors need a periodic field; kind 'meyers' is a box field");
  auto p = std::make_unique<Pipeline>();
  p->seed = seed;
  auto t0 = Clock::now();
  p->a = make_field(c.field, seed);
  p->times.push_back({"field", since(t0)});
  t0 = Clock::now();
  const auto so = solve_options(c);
  p->correctors = compute_correctors(p->a, so);
  p->ctx = std::make_unique<HigherOrderContext>(p->a, p->correctors, so);
  p->times.push_back({"correctors", since(t0)});
  if (k >= 2) {
    t0 = Clock::now();
    p->hierarchy = build_hierarchy(*p->ctx, k, psi_options(c));
    p->times.push_back({"psi", since(t0)});
  }
  if (k >= 1) p->basis = corrected_basis(*p->ctx, p->hierarchy, k);
  return p;
}

std::vector<double> member_residuals(const Pipeline& p, double R) {
  const auto mask = node_ball_mask(p.ctx->grid(), R / 2);
  std::vector<double> out;
  for (const auto& m : p.basis.members) out.push_back(relative_residual(p.ctx->op(), m, mask));
  return out;
}

Eigen::MatrixXd continuum_gram(const std::vector<Polynomial>& polys) {
  const auto n = static_cast<Eigen::Index>(polys.size());
  Eigen::MatrixXd G(n, n);
  std::vector<double> sup;
  for (const auto& p : polys) sup.push_back(sup_norm_B1(p));
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index l = 0; l <= j; ++l) {
      double v = 0;
      for (int i = 0; i < 2; ++i) v += ball_inner(polys[j].derivative(i), polys[l].derivative(i));
      G(j, l) = G(l, j) = v / (sup[j] * sup[l]);
    }
  return G;
}

StageResult run_gen_field(const ExperimentConfig& c, const std::string& out) {
  StageResult res;
  std::vector<EllipticityReport> reps(c.seeds.size());
  const auto t0 = Clock::now();
  for_each_seed(c, [&](int s, std::uint64_t seed) {
    const auto a = make_field(c.field, seed);
    reps[s] = check_ellipticity(a, 10000, seed);
    if (!out.empty()) {
      std::filesystem::create_directories(out);
      serialize_field(coefficient_tensor_field(a), fmt::format("{}/field_s{}.hlf", out, seed));
    }
  });
  res.times.push_back({"gen_field", since(t0)});
  for (std::size_t s = 0; s < reps.size(); ++s)
    res.checks.push_back(make_check(fmt::format("ellipticity_s{}", c.seeds[s]), reps[s].ok, reps[s].min_margin, 0.0,
                                    fmt::format("max |a xi|/|xi| = {:.6g}", reps[s].max_norm)));
  return res;
}

StageResult run_correctors(const ExperimentConfig& c, const std::string& out) {
  StageResult res;
  struct Slot {
    CorrectorSet cs;
    std::array<SigmaCheck, 2> sigma;
    double seconds = 0;
  };
  std::vector<Slot> slots(c.seeds.size());
  for_each_seed(c, [&](int s, std::uint64_t seed) {
    if (c.field.kind == "meyers") throw ParameterError("correctors need a periodic field; kind 'meyers' is a box field");
    const auto t0 = Clock::now();
    const auto a = make_field(c.field, seed);
    slots[s].cs = compute_correctors(a, solve_options(c));
    for (int i = 0; i < 2; ++i)
      slots[s].sigma[i] = check_sigma(slots[s].cs.q[i], slots[s].cs.s[i], std::abs(slots[s].cs.a_hom[3 * i]));
    slots[s].seconds = since(t0);
    if (!out.empty()) write_corrector_set(slots[s].cs, fmt::format("{}/correctors_s{}", out, seed));
  });
  set_eps(res, slots.front().cs);
  std::string eps_csv = "radius,eps,eps2,raw," + provenance_header() + "\n";
  for (std::size_t s = 0; s < slots.size(); ++s) {
    const auto& cs = slots[s].cs;
    const auto seed = c.seeds[s];
    res.times.push_back({fmt::format("correctors_s{}", seed), slots[s].seconds});
    bool conv = true;
    double worst = 0;
    for (const auto& r : cs.reports) conv = conv && r.converged, worst = std::max(worst, r.residual);
    res.checks.push_back(make_check(fmt::format("corrector_solves_s{}", seed), conv && worst <= c.tol, worst, c.tol));
    const double sig = std::max(slots[s].sigma[0].relative_error, slots[s].sigma[1].relative_error);
    res.checks.push_back(make_check(fmt::format("sigma_potential_s{}", seed), sig <= 1e-6, sig, 1e-6));
    const auto& t = cs.a_hom;
    const double asym = std::abs(t[1] - t[2]) / std::max(std::abs(t[0]), std::abs(t[3]));
    const double emin = min_sym_eig(t);
    res.checks.push_back(make_check(fmt::format("ahom_symmetric_s{}", seed), asym <= 1e-8, asym, 1e-8,
                                    fmt::format("a_hom = [{:.12g} {:.12g}; {:.12g} {:.12g}]", t[0], t[1], t[2], t[3])));
    res.checks.push_back(make_check(fmt::format("ahom_elliptic_s{}", seed), emin >= c.field.lambda * (1 - 1e-9), emin,
                                    c.field.lambda));
    const auto prof = sublinearity_profile(cs);
    for (std::size_t k = 0; k < prof.radii.size(); ++k)
      eps_csv += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{}\n", prof.radii[k], prof.eps[k], prof.eps2[k],
                             prof.raw[k], provenance_row(c, seed));
  }
  if (!out.empty()) open_out(out, "eps.csv") << eps_csv;
  return res;
}

StageResult run_psi(const ExperimentConfig& c, const std::string& out) {
  StageResult res;
  const double R = built_radius(c);
  std::vector<std::string> rows(c.seeds.size());
  std::vector<std::vector<double>> residuals(c.seeds.size());
  std::vector<std::vector<StageTime>> times(c.seeds.size());
  std::vector<double> eps_r, eps_v;
  for_each_seed(c, [&](int s, std::uint64_t seed) {
    const auto p = build_pipeline(c, seed, c.hierarchy.k);
    residuals[s] = member_residuals(*p, R);
    times[s] = p->times;
    if (s == 0) {
      const auto prof = sublinearity_profile(p->correctors);
      eps_r = prof.radii, eps_v = prof.eps;
    }
    for (int d = 1; d <= c.hierarchy.k; ++d) {
      const PsiFamily* fam = d >= 2 ? p->hierarchy.family(d) : nullptr;
      for (std::size_t j = 0; j < p->basis.size(); ++j) {
        if (p->basis.degree[j] != d) continue;
        double growth = 0, ratio = 0, iters = 0;
        if (fam) {
          // members of a family follow the basis order of its degree
          std::size_t pos = 0;
          for (std::size_t l = 0; l < j; ++l) pos += p->basis.degree[l] == d;
          const auto& pc = fam->members[pos];
          growth = pc.growth.max_value();
          ratio = pc.growth_ratio.max_value();
          for (const auto& r : pc.reports) iters += r.iterations;
        }
        rows[s] += fmt::format("{},\"{}\",{:.17g},{:.17g},{:.17g},{},{}\n", d, p->basis.poly[j].to_string(),
                               residuals[s][j], growth, ratio, static_cast<int>(iters), provenance_row(c, seed));
      }
    }
  });
  res.eps_radii = eps_r, res.eps = eps_v;
  for (std::size_t s = 0; s < c.seeds.size(); ++s) {
    for (const auto& t : times[s]) res.times.push_back({fmt::format("{}_s{}", t.stage, c.seeds[s]), t.seconds});
    double worst = 0;
    for (double r : residuals[s]) worst = std::max(worst, r);
    res.checks.push_back(make_check(fmt::format("corrected_residual_s{}", c.seeds[s]), worst <= c.residual_tol, worst,
                                    c.residual_tol, fmt::format("{} members on B_{}", residuals[s].size(), R / 2)));
  }
  if (!out.empty()) {
    auto f = open_out(out, "psi.csv");
    f << "degree,polynomial,residual,growth,growth_ratio,iterations," << provenance_header() << "\n";
    for (const auto& r : rows) f << r;
  }
  return res;
}

ExcessDecayResult run_excess_decay(const ExperimentConfig& c, const std::string& out) {
  if (!c.has_excess) throw ParameterError(c.source + ": no [excess] section");
  ExcessDecayResult res;
  const auto& ec = c.excess;
  const auto radii = dyadic_radii(ec.r_min, ec.r_max);
  res.runs.resize(c.seeds.size());
  std::vector<std::vector<StageTime>> times(c.seeds.size());
  std::vector<double> eps_r, eps_v;
  for_each_seed(c, [&](int s, std::uint64_t seed) {
    const auto p = build_pipeline(c, seed, c.hierarchy.k);
    if (s == 0) {
      const auto prof = sublinearity_profile(p->correctors);
      eps_r = prof.radii, eps_v = prof.eps;
    }
    auto t0 = Clock::now();
    const auto so = solve_options(c);
    DiscreteField u = random_a_harmonic(p->ctx->op(), seed, ec.modes, so);
    // remove the corrected-basis component at the largest radius
    const auto top = excess_k(u, ec.r_max, p->basis);
    u = subtract_members(u, p->basis, top.coeff);
    auto& run = res.runs[s];
    run.seed = seed;
    run.report = excess_report(u, p->basis, radii);
    run.fit = decay_fit(run.report.radii, run.report.excess, ec.r_min, ec.r_max);
    run.report.fit = run.fit;
    // exact control: a corrected polynomial of degree <= k
    DiscreteField v = DiscreteField::zeros_like(u);
    for (const auto& m : p->basis.members) v += m;
    const auto ctl = excess_report(v, p->basis, radii);
    for (double x : ctl.normalized) run.control = std::max(run.control, x);
    times[s] = p->times;
    times[s].push_back({"excess", since(t0)});
  });
  res.eps_radii = eps_r, res.eps = eps_v;
  std::string csv, fits;
  for (std::size_t s = 0; s < res.runs.size(); ++s) {
    const auto& run = res.runs[s];
    for (const auto& t : times[s]) res.times.push_back({fmt::format("{}_s{}", t.stage, run.seed), t.seconds});
    res.mean_slope += run.fit.slope / res.runs.size();
    res.checks.push_back(make_check(fmt::format("excess_control_s{}", run.seed), run.control <= 1e-12, run.control,
                                    1e-12, "corrected polynomial of degree <= k"));
    csv += excess_csv(run.report, provenance(c, run.seed), s == 0);
    fits += fmt::format("[seed_{}]\n{}\n", run.seed, fit_summary(run.fit, ec.r_min, ec.r_max));
  }
  std::string slopes;
  for (const auto& run : res.runs) slopes += fmt::format("{}{:.4f}", slopes.empty() ? "" : " ", run.fit.slope);
  res.checks.push_back(make_check("excess_slope", res.mean_slope >= ec.slope_min, res.mean_slope, ec.slope_min,
                                  fmt::format("radii {}..{}, per-seed slopes {}", ec.r_min, ec.r_max, slopes)));
  if (!out.empty()) {
    open_out(out, "excess.csv") << csv;
    open_out(out, "excess_fit.txt") << fits;
  }
  return res;
}

LiouvilleResult run_liouville_dimension(const ExperimentConfig& c, const std::string& out) {
  if (!c.has_liouville) throw ParameterError(c.source + ": no [liouville] section");
  const auto& lc = c.liouville;
  const int k = c.hierarchy.k;
  const double R = built_radius(c);
  const auto t0 = Clock::now();
  const auto p = build_pipeline(c, c.seeds.front(), k);
  LiouvilleResult res;
  set_eps(res, p->correctors);
  for (const auto& t : p->times) res.times.push_back(t);

  CorrectedBasis basis = p->basis;
  const auto nominal = basis.poly;
  if (lc.duplicate) basis.add(basis.members.front(), basis.degree.front(), basis.poly.front());
  if (lc.non_harmonic) {
    const auto x1sq = Polynomial::monomial({2, 0});
    basis.add(evaluate(p->ctx->grid(), x1sq), 2, x1sq);
  }

  res.expected = 1 + 2;
  for (int d = 2; d <= k; ++d) res.expected += homogeneous_dimension(2, d) - homogeneous_dimension(2, d - 2);
  res.family = 1 + static_cast<int>(basis.size());
  const auto mask = node_ball_mask(p->ctx->grid(), R / 2);
  for (const auto& m : basis.members) res.residuals.push_back(relative_residual(p->ctx->op(), m, mask));

  res.reference = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(continuum_gram(nominal)).eigenvalues()(0);
  int rank = static_cast<int>(basis.size());
  for (double r : dyadic_radii(lc.r_min, lc.r_max)) {
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(scaled_gram(basis, r)).eigenvalues();
    int rk = 0;
    for (Eigen::Index j = 0; j < ev.size(); ++j) rk += ev[j] > 1e-10 * ev[ev.size() - 1];
    rank = std::min(rank, rk);
    res.radii.push_back(r);
    res.min_eig.push_back(ev[0]);
    res.spectra.push_back(ev);
  }
  res.rank = 1 + rank;
  res.times.push_back({"liouville", since(t0)});

  res.checks.push_back(make_check("liouville_count", res.family == res.expected && res.rank == res.expected, res.rank,
                                  res.expected, fmt::format("family {}, independent {}, expected {}", res.family,
                                                            res.rank, res.expected)));
  double worst = 0;
  for (double r : res.residuals) worst = std::max(worst, r);
  res.checks.push_back(make_check("liouville_residual", worst <= lc.residual_max, worst, lc.residual_max,
                                  fmt::format("on B_{}", R / 2)));
  double ratio_min = HUGE_VAL, dev = 0;
  for (double e : res.min_eig) {
    ratio_min = std::min(ratio_min, e / res.reference);
    dev = std::max(dev, std::abs(e / res.reference - 1));
  }
  res.checks.push_back(make_check("liouville_gram", ratio_min >= lc.gram_ratio_min, ratio_min, lc.gram_ratio_min,
                                  fmt::format("continuum reference {:.6g}", res.reference)));
  if (c.field.kind == "constant")
    res.checks.push_back(make_check("liouville_continuum", dev <= lc.continuum_tol, dev, lc.continuum_tol));

  if (!out.empty()) {
    auto f = open_out(out, "liouville.csv");
    f << "radius,gram_min_eig,reference,ratio,spectrum," << provenance_header() << "\n";
    for (std::size_t i = 0; i < res.radii.size(); ++i) {
      std::string spec;
      for (Eigen::Index j = 0; j < res.spectra[i].size(); ++j) spec += fmt::format("{}{:.17g}", j ? " " : "", res.spectra[i][j]);
      f << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{},{}\n", res.radii[i], res.min_eig[i], res.reference,
                       res.min_eig[i] / res.reference, spec, provenance_row(c, c.seeds.front()));
    }
    auto g = open_out(out, "liouville_members.csv");
    g << "index,degree,polynomial,residual," << provenance_header() << "\n";
    for (std::size_t j = 0; j < basis.size(); ++j)
      g << fmt::format("{},{},\"{}\",{:.17g},{}\n", j, basis.degree[j], basis.poly[j].to_string(), res.residuals[j],
                       provenance_row(c, c.seeds.front()));
  }
  return res;
}

ApproxLawResult run_approximation_law(const ExperimentConfig& c, const std::string& out) {
  if (!c.has_approx) throw ParameterError(c.source + ": no [approx] section");
  const auto& ac = c.approx;
  ApproxLawResult res;
  std::vector<std::vector<ApproxRow>> rows(c.seeds.size());
  std::vector<double> seconds(c.seeds.size());
  std::vector<double> eps_r, eps_v;
  for_each_seed(c, [&](int s, std::uint64_t seed) {
    const auto t0 = Clock::now();
    const auto p = build_pipeline(c, seed, 0);
    if (s == 0) {
      const auto prof = sublinearity_profile(p->correctors);
      eps_r = prof.radii, eps_v = prof.eps;
    }
    ApproximationOptions o;
    o.solve = solve_options(c);
    o.residual_tol = c.residual_tol;
    const auto u = random_a_harmonic(p->ctx->op(), seed, ac.modes, o.solve);
    for (double R : ac.radii) {
      ApproxRow row;
      row.seed = seed;
      if (p->ctx->eps(R) > 1) {
        row.skipped = true;
        row.r.R = R;
        row.r.eps = p->ctx->eps(R);
      } else {
        row.r = homogenized_approximation(u, R, *p->ctx, o);
        row.r.u_hom = {};
        row.r.two_scale = {};
      }
      rows[s].push_back(std::move(row));
    }
    seconds[s] = since(t0);
  });
  res.eps_radii = eps_r, res.eps = eps_v;
  const bool constant = c.field.kind == "constant";
  double worst_error = 0, worst_spread = 0, worst_growth = 0;
  bool finite = true;
  int skipped = 0;
  for (std::size_t s = 0; s < rows.size(); ++s) {
    res.times.push_back({fmt::format("approx_s{}", c.seeds[s]), seconds[s]});
    double lo = HUGE_VAL, hi = 0, first = -1;
    for (const auto& row : rows[s]) {
      if (row.skipped) {
        ++skipped;
        continue;
      }
      const auto& r = row.r;
      finite = finite && std::isfinite(r.ratio) && std::isfinite(r.error);
      worst_error = std::max(worst_error, r.energy > 0 ? r.error / r.energy : r.error);
      lo = std::min(lo, r.ratio);
      hi = std::max(hi, r.ratio);
      if (first < 0) first = r.ratio;
    }
    const double spread = hi > 0 ? hi / lo : 1.0;
    const double growth = hi > 0 ? hi / first : 1.0;
    res.spread.push_back(spread);
    res.growth.push_back(growth);
    worst_spread = std::max(worst_spread, spread);
    worst_growth = std::max(worst_growth, growth);
    for (auto& row : rows[s]) res.rows.push_back(std::move(row));
  }
  res.checks.push_back(make_check("approx_finite", finite, finite ? 1.0 : 0.0, 1.0,
                                  fmt::format("{} rows skipped with eps_R > 1", skipped)));
  if (constant) {
    res.checks.push_back(make_check("approx_constant_error", worst_error <= ac.error_max, worst_error, ac.error_max,
                                    "error / energy"));
  } else {
    res.checks.push_back(make_check("approx_ratio_spread", worst_spread <= ac.factor, worst_spread, ac.factor,
                                    fmt::format("max/min ratio across R; max/ratio(R_min) = {:.4g}", worst_growth)));
  }
  if (!out.empty()) {
    auto f = open_out(out, "approx.csv");
    f << "R,R_prime,eps,rho,energy,error,ratio,energy_constant,boundary_constant,skipped," << provenance_header() << "\n";
    for (const auto& row : res.rows) {
      const auto& r = row.r;
      f << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{},{}\n", r.R,
                       r.R_prime, r.eps, r.rho, r.energy, r.error, r.ratio, r.energy_constant, r.boundary_constant,
                       row.skipped ? 1 : 0, provenance_row(c, row.seed));
    }
  }
  return res;
}

CounterexampleResult run_counterexample(const ExperimentConfig& c, const std::string& out) {
  if (!c.has_counterexample) throw ParameterError(c.source + ": no [counterexample] section");
  const auto& xc = c.counterexample;
  CounterexampleResult res;
  auto t0 = Clock::now();
  const Grid g(xc.n, Topology::box);
  const auto m = meyers_field(g, xc.alpha);
  const CoefficientField a = xc.rho > 0 ? smooth_inside_unit_ball(m.a, xc.rho) : m.a;
  const auto grad = discrete_gradient(m.u0);
  DiscreteField F = apply_tensor(a, grad);
  F -= apply_tensor(m.a, grad);
  res.support = centre_support(F);
  res.times.push_back({"field", since(t0)});

  t0 = Clock::now();
  const DiscreteOperator op(a);
  DiscreteField w = DiscreteField::zeros_like(m.u0);
  if (res.support > 0) {
    TruncationOptions topts;
    topts.r0 = c.hierarchy.r0;
    w = solve_truncated_whole_space(op, F, topts, solve_options(c));
  }
  res.times.push_back({"solve", since(t0)});

  const double rlo = 8, rhi = xc.n / 4.0;
  for (double R : dyadic_radii(rlo, rhi)) {
    res.radii.push_back(R);
    res.u0_mean.push_back(ball_average(m.u0, Ball{R}));
    res.w_mean.push_back(ball_average(w, Ball{R}));
    res.w_energy.push_back(gradient_energy(w, R) * static_cast<double>(cells_in_ball(g, Ball{R}).size()));
  }
  const auto nr = static_cast<Eigen::Index>(res.radii.size());
  Eigen::MatrixXd X(nr, 2);
  Eigen::VectorXd yu(nr), yw(nr);
  for (Eigen::Index i = 0; i < nr; ++i) {
    X(i, 0) = 1;
    X(i, 1) = std::log(res.radii[i]);
    yu[i] = std::log(res.u0_mean[i]);
    yw[i] = res.w_mean[i];
  }
  res.exponent = X.colPivHouseholderQr().solve(yu)[1];
  const Eigen::Vector2d lw = X.colPivHouseholderQr().solve(yw);
  res.log_a = lw[0], res.log_b = lw[1];
  const double wmax = yw.cwiseAbs().maxCoeff();
  res.log_residual = wmax > 0 ? (X * lw - yw).cwiseAbs().maxCoeff() / wmax : 0.0;
  {
    std::vector<unsigned char> mask = node_annulus_mask(g, 2 * std::max(xc.rho, 1.0), rhi);
    res.residual = relative_residual(op, m.u0 + w, mask);
  }

  const std::size_t top = res.radii.size() - 1;
  bool finite = w.all_finite();
  for (double e : res.w_energy) finite = finite && std::isfinite(e);
  const double sat = res.w_energy[top - 1] > 0 ? res.w_energy[top] / res.w_energy[top - 1] : 1.0;
  bool decreasing = true;
  for (std::size_t i = top - 1; i <= top; ++i)
    decreasing = decreasing && res.w_mean[i] / std::pow(res.radii[i], xc.alpha) <
                                   res.w_mean[i - 1] / std::pow(res.radii[i - 1], xc.alpha);

  res.checks.push_back(make_check("counterexample_exponent", std::abs(res.exponent - xc.alpha) <= xc.exponent_tol,
                                  res.exponent, xc.alpha, fmt::format("tolerance {}", xc.exponent_tol)));
  res.checks.push_back(make_check("counterexample_support", xc.rho == 0 ? res.support == 0 : res.support < xc.rho,
                                  res.support, xc.rho, "largest |cell centre| where (a - a0) grad u0 != 0"));
  res.checks.push_back(make_check("counterexample_energy", finite && sat <= 1.1, res.w_energy[top], 1.1,
                                  fmt::format("int_B_R |grad w|^2 ratio between the top two radii {:.6g}", sat)));
  res.checks.push_back(make_check("counterexample_log_envelope", res.log_residual <= xc.log_residual_max,
                                  res.log_residual, xc.log_residual_max,
                                  fmt::format("w mean ~ {:.6g} + {:.6g} log R", res.log_a, res.log_b)));
  res.checks.push_back(make_check("counterexample_decreasing", decreasing,
                                  res.w_mean[top] / std::pow(res.radii[top], xc.alpha), 0.0,
                                  "(avg w^2)^(1/2) / R^alpha over the top three radii"));
  if (!out.empty()) {
    auto f = open_out(out, "counterexample.csv");
    f << "R,u0_mean,w_mean,w_energy,w_mean_over_R_alpha,config_hash\n";
    for (std::size_t i = 0; i < res.radii.size(); ++i)
      f << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", res.radii[i], res.u0_mean[i], res.w_mean[i],
                       res.w_energy[i], res.w_mean[i] / std::pow(res.radii[i], xc.alpha), config_hash(c));
  }
  return res;
}

}  // namespace homog
