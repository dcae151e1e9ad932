#include "homoglab/psi.hpp"

#include <cmath>

#include <fmt/format.h>

#include "homoglab/errors.hpp"

namespace homog {

HigherOrderContext::HigherOrderContext(const CoefficientField& a, const CorrectorSet& c,
                                       const SolveOptions& opts)
    : box_(a.with_topology(Topology::box)), c_(&c), opts_(opts) {
  if (!a.grid.periodic()) throw DomainError("HigherOrderContext: coefficients must be periodic");
  check_same_grid(a.grid, c.grid, "HigherOrderContext");
  op_ = std::make_unique<DiscreteOperator>(box_);
  solver_ = std::make_unique<LinearSolver>(*op_, boundary_mask(box_.grid), opts);
  for (int i = 0; i < 2; ++i) phi_[i] = to_box(c.phi[i]);
  profile_ = sublinearity_profile(c);
}

DiscreteField HigherOrderContext::solve(const DiscreteField& f, double r0, SolveReport* report) const {
  return solve_truncated_whole_space(*solver_, f, r0, report);
}

DiscreteField HigherOrderContext::corrected(const Polynomial& p, const DiscreteField* psi) const {
  const Grid& g = grid();
  DiscreteField u(g, Rank::scalar, Location::node);
  const int m = g.nodes_per_axis();
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      const auto x = g.node_coord(i, j);
      const std::size_t k = g.node_index(i, j);
      double grad[2];
      p.gradient(x.data(), grad);
      u[k] = p(x.data()) + phi_[0][k] * grad[0] + phi_[1][k] * grad[1];
    }
  if (psi && psi->size() > 0) u += *psi;
  return u;
}

double HigherOrderContext::eps2(double r) const {
  double e = profile_.eps2.empty() ? 0.0 : profile_.eps2.front();
  for (std::size_t k = 0; k < profile_.radii.size(); ++k)
    if (profile_.radii[k] <= r * (1 + 1e-12)) e = profile_.eps2[k];
  return e;
}

double HigherOrderContext::eps(double r) const {
  double e = profile_.eps.empty() ? 0.0 : profile_.eps.front();
  for (std::size_t k = 0; k < profile_.radii.size(); ++k)
    if (profile_.radii[k] <= r * (1 + 1e-12)) e = profile_.eps[k];
  return e;
}

namespace {

// phi_i at the Gauss points of cell (i, j), bilinear interpolation.
void phi_at_gauss(const HigherOrderContext& ctx, int i, int j, double out[2][4]) {
  const auto nd = ctx.grid().cell_nodes(i, j);
  for (int c = 0; c < 2; ++c) {
    const DiscreteField& f = ctx.phi(c);
    for (int q = 0; q < 4; ++q) {
      const auto x = gauss_point(q);
      out[c][q] = (1 - x[0]) * (1 - x[1]) * f[nd[0]] + x[0] * (1 - x[1]) * f[nd[1]] +
                  (1 - x[0]) * x[1] * f[nd[2]] + x[0] * x[1] * f[nd[3]];
    }
  }
}

PsiMeasure measure(const std::vector<double>& radii, const std::function<double(double)>& fn) {
  PsiMeasure m;
  for (double r : radii) {
    m.radii.push_back(r);
    m.values.push_back(fn(r));
  }
  return m;
}

double resolve_rmax(const HigherOrderContext& ctx, const PsiOptions& opts) {
  const double rmax = opts.r_max > 0 ? opts.r_max : ctx.grid().n() / 4.0;
  if (!(opts.r0 >= 1)) throw ParameterError("psi: r0 must be at least one lattice unit");
  if (rmax > ctx.grid().n() / 4.0 + 1e-9)
    throw ParameterError(fmt::format("psi: R_max = {} exceeds N/4 = {}", rmax, ctx.grid().n() / 4.0));
  const double ratio = rmax / opts.r0;
  const double m = std::round(std::log2(ratio));
  if (!(ratio >= 1) || std::abs(std::exp2(m) - ratio) > 1e-9)
    throw ParameterError(fmt::format("psi: r0 = {} does not divide R_max = {} dyadically", opts.r0, rmax));
  return rmax;
}

void check_harmonic(const Polynomial& p, int kappa, const Tensor2& a_hom, const char* who) {
  if (!p.is_homogeneous(kappa, 1e-12))
    throw PreconditionError(fmt::format("{}: polynomial is not homogeneous of degree {}", who, kappa));
  if (kappa < 2) return;
  const double c = ahom_contraction(to_matrix(a_hom), p).coefficient_norm();
  if (c > 1e-9 * std::max(p.coefficient_norm(), 1e-300))
    throw PreconditionError(fmt::format("{}: a_hom:grad^2 P = {:.3g} != 0, P = {}", who, c, p.to_string()));
}

void record_growth(const HigherOrderContext& ctx, PsiCorrector& pc, const std::vector<double>& radii) {
  const int k = pc.degree;
  const double pn = sup_norm_B1(pc.P);
  std::vector<double> raw;
  for (double r : radii) raw.push_back(std::pow(r, -(k - 1)) * std::sqrt(gradient_energy(pc.psi, r)));
  pc.growth.radii = radii;
  pc.growth.values.assign(radii.size(), 0.0);
  double sup = 0;
  for (std::size_t m = radii.size(); m-- > 0;) {
    sup = std::max(sup, raw[m]);
    pc.growth.values[m] = sup;
  }
  pc.growth_ratio.radii = radii;
  pc.growth_ratio.values.clear();
  for (std::size_t m = 0; m < radii.size(); ++m) {
    const double den = pn * ctx.eps2(radii[m]);
    pc.growth_ratio.values.push_back(den > 0 ? pc.growth.values[m] / den : 0.0);
  }
}

}  // namespace

double PsiMeasure::max_value() const {
  double m = 0;
  for (double v : values) m = std::max(m, v);
  return m;
}

const PsiFamily* PsiHierarchy::family(int degree) const {
  for (const auto& f : families)
    if (f.degree == degree) return &f;
  return nullptr;
}

DiscreteField psi_rhs(const Polynomial& p, const HigherOrderContext& ctx) {
  const Grid& g = ctx.grid();
  const int n = g.n();
  const CoefficientField& a = ctx.coefficients();
  Polynomial H[2][2];
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) H[i][k] = p.derivative(i).derivative(k);
  DiscreteField F(g, Rank::vector, Location::quadrature);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const std::size_t c = g.cell_index(i, j);
      const Tensor2& t = a[c];
      double ph[2][4];
      phi_at_gauss(ctx, i, j, ph);
      const auto x0 = g.node_coord(i, j);
      for (int q = 0; q < 4; ++q) {
        const auto xi = gauss_point(q);
        const double x[2] = {x0[0] + xi[0], x0[1] + xi[1]};
        for (int l = 0; l < 2; ++l) {
          double v = 0;
          for (int ii = 0; ii < 2; ++ii)
            for (int k = 0; k < 2; ++k) {
              const double h = H[ii][k](x);
              v += (ph[ii][q] * t[2 * l + k] - ctx.sigma(ii, l, k, c)) * h;
            }
          F[8 * c + 2 * q + l] = v;
        }
      }
    }
  return F;
}

DiscreteField psi_rhs_symmetric(const Tensor2& E, const HigherOrderContext& ctx) {
  const Grid& g = ctx.grid();
  const int n = g.n();
  const CoefficientField& a = ctx.coefficients();
  DiscreteField F(g, Rank::vector, Location::quadrature);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const std::size_t c = g.cell_index(i, j);
      const Tensor2& t = a[c];
      double ph[2][4];
      phi_at_gauss(ctx, i, j, ph);
      for (int q = 0; q < 4; ++q)
        for (int l = 0; l < 2; ++l) {
          double v = 0;
          for (int ii = 0; ii < 2; ++ii)
            for (int jj = 0; jj < 2; ++jj) {
              const double e = E[2 * ii + jj];
              v += e * (ctx.sigma(ii, jj, l, c) + ctx.sigma(jj, ii, l, c) + t[2 * l + jj] * ph[ii][q] +
                        t[2 * l + ii] * ph[jj][q]);
            }
          F[8 * c + 2 * q + l] = v;
        }
    }
  return F;
}

namespace {

// P(x + d) - P(x) as long double coefficients c[p][q] of x^p y^q.
using Diff = std::vector<std::vector<long double>>;

Diff difference(const Polynomial& p, int dx, int dy) {
  const int k = p.degree();
  Diff c(k + 1, std::vector<long double>(k + 1, 0.0L));
  auto binom = [](int n, int r) {
    long double b = 1;
    for (int t = 1; t <= r; ++t) b = b * (n - r + t) / t;
    return b;
  };
  const auto& ex = p.exponents();
  for (std::size_t m = 0; m < ex.size(); ++m) {
    const long double cm = p.coeff()[m];
    if (cm == 0) continue;
    const int a = ex[m][0], b = ex[m][1];
    for (int pp = 0; pp <= a; ++pp)
      for (int qq = 0; qq <= b; ++qq) {
        if (pp == a && qq == b) continue;
        long double t = cm * binom(a, pp) * binom(b, qq);
        for (int e = 0; e < a - pp; ++e) t *= dx;
        for (int e = 0; e < b - qq; ++e) t *= dy;
        c[pp][qq] += t;
      }
  }
  return c;
}

long double eval_diff(const Diff& c, const long double* px, const long double* py) {
  long double s = 0;
  for (std::size_t pp = 0; pp < c.size(); ++pp)
    for (std::size_t qq = 0; pp + qq < c.size(); ++qq)
      if (c[pp][qq] != 0) s += c[pp][qq] * px[pp] * py[qq];
  return s;
}

}  // namespace

DiscreteField psi_rhs_nodal(const Polynomial& p, const HigherOrderContext& ctx) {
  // Row sums of the interior stencil vanish, so A u = sum_k c_k (u_k - u_n);
  // the polynomial differences are expanded exactly and summed in long double
  // to keep the roundoff well below the size of grad P.
  const Grid& g = ctx.grid();
  const Stencil9& st = ctx.op().stencil();
  const int m = g.nodes_per_axis();
  const int k = p.degree();
  const Polynomial dp[2] = {p.derivative(0), p.derivative(1)};
  Diff D[9], G[9][2];
  for (int dj = -1; dj <= 1; ++dj)
    for (int di = -1; di <= 1; ++di) {
      const int s = (dj + 1) * 3 + (di + 1);
      D[s] = difference(p, di, dj);
      for (int i = 0; i < 2; ++i) G[s][i] = difference(dp[i], di, dj);
    }
  DiscreteField out(g, Rank::scalar, Location::node);
  const DiscreteField& f0 = ctx.phi(0);
  const DiscreteField& f1 = ctx.phi(1);
#pragma omp parallel for schedule(static)
  for (int j = 1; j < m - 1; ++j) {
    std::vector<long double> px(k + 1), py(k + 1);
    for (int i = 1; i < m - 1; ++i) {
      const std::size_t r = g.node_index(i, j);
      const auto x = g.node_coord(i, j);
      px[0] = py[0] = 1;
      for (int e = 1; e <= k; ++e) {
        px[e] = px[e - 1] * x[0];
        py[e] = py[e - 1] * x[1];
      }
      double grad_r[2];
      p.gradient(x.data(), grad_r);
      long double acc = 0;
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          if (di == 0 && dj == 0) continue;
          const double c = st.at(r, di, dj);
          if (c == 0) continue;
          const int s = (dj + 1) * 3 + (di + 1);
          const std::size_t q = g.node_index(i + di, j + dj);
          long double d = eval_diff(D[s], px.data(), py.data());
          const long double g0 = grad_r[0] + eval_diff(G[s][0], px.data(), py.data());
          const long double g1 = grad_r[1] + eval_diff(G[s][1], px.data(), py.data());
          d += static_cast<long double>(f0[q] - f0[r]) * g0 + f0[r] * eval_diff(G[s][0], px.data(), py.data());
          d += static_cast<long double>(f1[q] - f1[r]) * g1 + f1[r] * eval_diff(G[s][1], px.data(), py.data());
          acc += c * d;
        }
      out[r] = static_cast<double>(-acc);
    }
  }
  return out;
}

DiscreteField truncate_rhs(const DiscreteField& g, double inner, double outer) {
  if (g.location() != Location::node || g.rank() != Rank::scalar)
    throw DomainError("truncate_rhs: expects a node functional");
  const auto mask = node_annulus_mask(g.grid(), inner, outer);
  DiscreteField out = g;
  for (std::size_t k = 0; k < mask.size(); ++k)
    if (!mask[k]) out[k] = 0.0;
  return out;
}

PsiFamily psi_initial(const HigherOrderContext& ctx, const PolySpace& space, const PsiOptions& opts) {
  const double rmax = resolve_rmax(ctx, opts);
  if (space.degree < 2) throw ParameterError("psi_initial: degree must be at least 2");
  PsiFamily fam;
  fam.degree = space.degree;
  fam.space = space;
  const int k = space.degree;
  const auto radii = dyadic_radii(opts.r0, rmax);
  const double e0 = ctx.eps(opts.r0);
  for (const auto& P : space.basis) {
    check_harmonic(P, k, ctx.a_hom(), "psi_initial");
    PsiCorrector pc;
    pc.P = P;
    pc.degree = k;
    pc.r0 = opts.r0;
    pc.R = opts.r0;
    SolveReport rep;
    pc.psi = ctx.solve(truncate_rhs(psi_rhs_nodal(P, ctx), 0.0, opts.r0), opts.r0, &rep);
    pc.reports.push_back(rep);
    const double pn = sup_norm_B1(P);
    pc.initial_ratio = measure(radii, [&](double r) {
      const double den = pn * pn * std::pow(r, 2 * (k - 1)) * std::min(1.0, std::pow(opts.r0 / r, 2)) * e0 * e0;
      const double num = gradient_energy(pc.psi, r);
      return den > 0 ? num / den : 0.0;
    });
    fam.members.push_back(std::move(pc));
  }
  return fam;
}

CorrectedBasis projection_basis(const HigherOrderContext& ctx, const PsiHierarchy& lower,
                                const PsiFamily* current, int k) {
  CorrectedBasis b;
  b.grid = ctx.grid();
  for (const auto& P : ahom_harmonic_basis(ctx.a_hom(), 1).basis) b.add(ctx.corrected(P), 1, P);
  for (int kappa = 2; kappa < k; ++kappa) {
    const PsiFamily* f = lower.family(kappa);
    if (!f) throw ParameterError(fmt::format("projection basis: degree {} correctors not built", kappa));
    for (const auto& m : f->members) b.add(ctx.corrected(m.P, &m.psi), kappa, m.P);
  }
  if (current) {
    if (current->degree != k) throw DomainError("projection basis: current family has the wrong degree");
    for (const auto& m : current->members) b.add(ctx.corrected(m.P, &m.psi), k, m.P);
  }
  return b;
}

Ck11Result ck11_projection(const DiscreteField& u, int k, const HigherOrderContext& ctx,
                           const CorrectedBasis& basis, double r0, double R) {
  Ck11Result out;
  const ExcessResult e = excess_k(u, r0, basis);
  out.coeff = e.coeff;
  out.excess = e.normalized;
  out.correction = DiscreteField(ctx.grid(), Rank::scalar, Location::node);
  for (std::size_t j = 0; j < basis.size(); ++j)
    if (basis.degree[j] <= k - 1 && e.coeff[j] != 0) out.correction.axpy(e.coeff[j], basis.members[j]);
  double bound = 0;
  for (int kappa = 0; kappa <= k - 1; ++kappa) {
    out.P.push_back(kappa < static_cast<int>(e.minimizer.size()) ? e.minimizer[kappa] : Polynomial(2, kappa));
    if (kappa >= 1) bound += std::pow(R, 2 * (kappa - 1)) * std::pow(sup_norm_B1(out.P.back()), 2);
  }
  out.P[0] = Polynomial(2, 0);
  const double en = gradient_energy(u, R);
  out.coefficient_bound = en > 0 ? bound / en : 0.0;
  return out;
}

void psi_double(const HigherOrderContext& ctx, const PsiHierarchy& lower, PsiFamily& fam, double R,
                const PsiOptions& opts) {
  const double rmax = resolve_rmax(ctx, opts);
  if (2 * R > rmax * (1 + 1e-12))
    throw ParameterError(fmt::format("psi_double: 2R = {} exceeds R_max = {}", 2 * R, rmax));
  const int k = fam.degree;
  const CorrectedBasis basis = projection_basis(ctx, lower, &fam, k);
  const auto radii = dyadic_radii(opts.r0, rmax);
  const double e2R = ctx.eps(2 * R);
  std::vector<DiscreteField> next;
  std::vector<Ck11Result> proj;
  std::vector<SolveReport> reps;
  for (const auto& m : fam.members) {
    SolveReport rep;
    const DiscreteField xi = ctx.solve(truncate_rhs(psi_rhs_nodal(m.P, ctx), R, 2 * R), opts.r0, &rep);
    Ck11Result p = ck11_projection(xi, k, ctx, basis, opts.r0, R);
    DiscreteField nv = m.psi + xi - p.correction;
    normalize_mean_zero(nv, opts.r0);
    next.push_back(std::move(nv));
    proj.push_back(std::move(p));
    reps.push_back(rep);
  }
  for (std::size_t j = 0; j < fam.members.size(); ++j) {
    PsiCorrector& m = fam.members[j];
    DiscreteField inc = next[j] - m.psi;
    const double pn = sup_norm_B1(m.P);
    m.increment_ratio.push_back(measure(radii, [&](double r) {
      const double den = pn * e2R;
      const double num = std::pow(r, -(k - 1)) * std::sqrt(gradient_energy(inc, r));
      return den > 0 ? num / den : 0.0;
    }));
    m.coefficient_ratio.push_back(proj[j].coefficient_bound);
    m.stage_radii.push_back(R);
    if (opts.keep_increments) m.increments.push_back(std::move(inc));
    m.reports.push_back(reps[j]);
    m.psi = std::move(next[j]);
    m.R = 2 * R;
  }
}

PsiFamily build_psi_family(const HigherOrderContext& ctx, const PsiHierarchy& lower, int k,
                           const PsiOptions& opts) {
  if (k < 2) throw ParameterError("build_psi_family: degree must be at least 2");
  if (lower.k < k - 1) throw ParameterError(fmt::format("build_psi_family: degrees up to {} must be built first", k - 1));
  const double rmax = resolve_rmax(ctx, opts);
  const PolySpace space = ahom_harmonic_basis(ctx.a_hom(), k);
  PsiFamily fam;
  if (opts.doubling) {
    fam = psi_initial(ctx, space, opts);
    for (double R = opts.r0; 2 * R <= rmax * (1 + 1e-12); R *= 2) psi_double(ctx, lower, fam, R, opts);
  } else {
    fam.degree = k;
    fam.space = space;
    for (const auto& P : space.basis) {
      PsiCorrector pc;
      pc.P = P;
      pc.degree = k;
      pc.r0 = opts.r0;
      pc.R = rmax;
      SolveReport rep;
      pc.psi = ctx.solve(truncate_rhs(psi_rhs_nodal(P, ctx), 0.0, rmax), opts.r0, &rep);
      pc.reports.push_back(rep);
      fam.members.push_back(std::move(pc));
    }
  }
  const auto radii = dyadic_radii(opts.r0, rmax);
  for (auto& m : fam.members) record_growth(ctx, m, radii);
  return fam;
}

PsiHierarchy build_hierarchy(const HigherOrderContext& ctx, int k, const PsiOptions& opts) {
  PsiHierarchy h;
  for (int kappa = 2; kappa <= k; ++kappa) {
    PsiFamily f = build_psi_family(ctx, h, kappa, opts);
    h.families.push_back(std::move(f));
    h.k = kappa;
  }
  return h;
}

DiscreteField psi_direct(const Polynomial& p, const HigherOrderContext& ctx, double R, double r0) {
  return ctx.solve(truncate_rhs(psi_rhs_nodal(p, ctx), 0.0, R), r0);
}

PsiCorrector psi_for(const Polynomial& p, const PsiFamily& fam) {
  if (fam.members.empty()) throw ParameterError("psi_for: empty family");
  Polynomial rest = p.homogeneous_part(fam.degree);
  if (!p.is_homogeneous(fam.degree, 1e-12))
    throw PreconditionError(fmt::format("psi_for: polynomial is not homogeneous of degree {}", fam.degree));
  std::vector<double> alpha;
  for (const auto& b : fam.space.basis) {
    alpha.push_back(ball_inner(p, b));
    rest -= alpha.back() * b;
  }
  if (std::sqrt(std::abs(ball_inner(rest, rest))) > 1e-9 * std::sqrt(ball_inner(p, p)))
    throw PreconditionError("psi_for: polynomial is not a_hom-harmonic");
  PsiCorrector out;
  out.P = p.homogeneous_part(fam.degree);
  out.degree = fam.degree;
  const PsiCorrector& f0 = fam.members.front();
  out.r0 = f0.r0;
  out.R = f0.R;
  out.stage_radii = f0.stage_radii;
  out.psi = DiscreteField::zeros_like(f0.psi);
  for (std::size_t j = 0; j < alpha.size(); ++j) out.psi.axpy(alpha[j], fam.members[j].psi);
  for (std::size_t s = 0; s < f0.increments.size(); ++s) {
    DiscreteField inc = DiscreteField::zeros_like(f0.psi);
    for (std::size_t j = 0; j < alpha.size(); ++j) inc.axpy(alpha[j], fam.members[j].increments[s]);
    out.increments.push_back(std::move(inc));
  }
  return out;
}

CorrectedFunction corrected_polynomial(const std::vector<Polynomial>& parts, const HigherOrderContext& ctx,
                                       const PsiHierarchy& h) {
  CorrectedFunction out;
  out.u = DiscreteField(ctx.grid(), Rank::scalar, Location::node);
  for (std::size_t kappa = 0; kappa < parts.size(); ++kappa) {
    const int k = static_cast<int>(kappa);
    check_harmonic(parts[kappa], k, ctx.a_hom(), "corrected_polynomial");
    const Polynomial P = parts[kappa].homogeneous_part(k);
    out.parts.push_back(P);
    if (P.coefficient_norm() == 0) continue;
    if (k == 0) {
      for (double& v : out.u.values()) v += P.coeff()[0];
    } else if (k == 1) {
      out.u += ctx.corrected(P);
    } else {
      const PsiFamily* f = h.family(k);
      if (!f) throw ParameterError(fmt::format("corrected_polynomial: degree {} correctors not built", k));
      const PsiCorrector pc = psi_for(P, *f);
      out.u += ctx.corrected(P, &pc.psi);
    }
  }
  return out;
}

CorrectedBasis corrected_basis(const HigherOrderContext& ctx, const PsiHierarchy& h, int max_degree) {
  if (max_degree < 1) throw ParameterError("corrected_basis: degree must be at least 1");
  if (max_degree == 1) return projection_basis(ctx, h, nullptr, 1);
  const PsiFamily* top = h.family(max_degree);
  if (!top) throw ParameterError(fmt::format("corrected_basis: degree {} correctors not built", max_degree));
  return projection_basis(ctx, h, top, max_degree);
}

}  // namespace homog
