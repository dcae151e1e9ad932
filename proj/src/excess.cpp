#include "homoglab/excess.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "homoglab/errors.hpp"

namespace homog {

void CorrectedBasis::add(DiscreteField u, int deg, Polynomial p) {
  if (u.rank() != Rank::scalar || u.location() != Location::node)
    throw DomainError("CorrectedBasis: members must be scalar node fields");
  if (members.empty() && grid.n() == 0) grid = u.grid();
  check_same_grid(grid, u.grid(), "CorrectedBasis::add");
  members.push_back(std::move(u));
  degree.push_back(deg);
  poly.push_back(std::move(p));
}

int CorrectedBasis::max_degree() const {
  int m = 0;
  for (int d : degree) m = std::max(m, d);
  return m;
}

namespace {

struct CellGrad {
  // Gauss-point gradients (x, y) of one node field on one cell
  double g[8];
};

inline void cell_gradient(const double* u, const std::array<std::size_t, 4>& nd, double* g) {
  const double u00 = u[nd[0]], u10 = u[nd[1]], u01 = u[nd[2]], u11 = u[nd[3]];
  for (int q = 0; q < 4; ++q) {
    const auto x = gauss_point(q);
    g[2 * q] = (1 - x[1]) * (u10 - u00) + x[1] * (u11 - u01);
    g[2 * q + 1] = (1 - x[0]) * (u01 - u00) + x[0] * (u11 - u10);
  }
}

std::vector<int> members_up_to(const CorrectedBasis& b, int max_degree) {
  std::vector<int> used;
  for (std::size_t j = 0; j < b.size(); ++j)
    if (max_degree < 0 || b.degree[j] <= max_degree) used.push_back(static_cast<int>(j));
  return used;
}

void check_field(const DiscreteField& u, const CorrectedBasis& b, const char* who) {
  if (u.rank() != Rank::scalar || u.location() != Location::node)
    throw DomainError(fmt::format("{}: expects a scalar node field", who));
  check_same_grid(b.grid, u.grid(), who);
}

// Loops over the cells of B_r, handing the Gauss-point gradients of u (if any)
// and of the selected members to fn.
template <class F>
void for_each_cell(const Grid& g, double r, const DiscreteField* u, const CorrectedBasis& b,
                   const std::vector<int>& used, F&& fn) {
  const auto cells = cells_in_ball(g, Ball{r});
  const int n = g.n();
  std::vector<CellGrad> gb(used.size());
  CellGrad gu{};
  for (std::size_t c : cells) {
    const int i = static_cast<int>(c % n), j = static_cast<int>(c / n);
    const auto nd = g.cell_nodes(i, j);
    if (u) cell_gradient(u->data(), nd, gu.g);
    for (std::size_t m = 0; m < used.size(); ++m) cell_gradient(b.members[used[m]].data(), nd, gb[m].g);
    fn(gu, gb);
  }
}

}  // namespace

GramData gram_data(const DiscreteField* u, const CorrectedBasis& basis, double r, int max_degree) {
  if (u) check_field(*u, basis, "gram_data");
  GramData d;
  d.used = members_up_to(basis, max_degree);
  const int m = static_cast<int>(d.used.size());
  d.G = Eigen::MatrixXd::Zero(m, m);
  d.h = Eigen::VectorXd::Zero(m);
  const std::size_t cells = cells_in_ball(basis.grid, Ball{r}).size();
  for_each_cell(basis.grid, r, u, basis, d.used, [&](const CellGrad& gu, const std::vector<CellGrad>& gb) {
    for (int a = 0; a < m; ++a) {
      for (int b = a; b < m; ++b) {
        double s = 0;
        for (int k = 0; k < 8; ++k) s += gb[a].g[k] * gb[b].g[k];
        d.G(a, b) += s;
      }
      if (u) {
        double s = 0;
        for (int k = 0; k < 8; ++k) s += gb[a].g[k] * gu.g[k];
        d.h[a] += s;
      }
    }
    if (u)
      for (int k = 0; k < 8; ++k) d.energy += gu.g[k] * gu.g[k];
  });
  const double w = kGaussWeight / static_cast<double>(cells);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < a; ++b) d.G(a, b) = d.G(b, a);
  d.G *= w;
  d.h *= w;
  d.energy *= w;
  return d;
}

double excess_objective(const DiscreteField& u, double r, const CorrectedBasis& basis,
                        const Eigen::VectorXd& coeff) {
  check_field(u, basis, "excess_objective");
  if (coeff.size() != static_cast<Eigen::Index>(basis.size()))
    throw DomainError("excess_objective: one coefficient per member expected");
  std::vector<int> used;
  for (std::size_t j = 0; j < basis.size(); ++j)
    if (coeff[j] != 0) used.push_back(static_cast<int>(j));
  const std::size_t cells = cells_in_ball(basis.grid, Ball{r}).size();
  double s = 0;
  for_each_cell(basis.grid, r, &u, basis, used, [&](const CellGrad& gu, const std::vector<CellGrad>& gb) {
    for (int k = 0; k < 8; ++k) {
      double v = gu.g[k];
      for (std::size_t m = 0; m < used.size(); ++m) v -= coeff[used[m]] * gb[m].g[k];
      s += v * v;
    }
  });
  return s * kGaussWeight / static_cast<double>(cells);
}

double pointwise_deviation(const DiscreteField& u, double r, const CorrectedBasis& basis,
                           const Eigen::VectorXd& coeff) {
  check_field(u, basis, "pointwise_deviation");
  std::vector<int> used = members_up_to(basis, -1);
  double dev = 0, top = 0;
  for_each_cell(basis.grid, r, &u, basis, used, [&](const CellGrad& gu, const std::vector<CellGrad>& gb) {
    for (int q = 0; q < 4; ++q) {
      double vx = gu.g[2 * q], vy = gu.g[2 * q + 1];
      top = std::max(top, std::hypot(vx, vy));
      for (std::size_t m = 0; m < used.size(); ++m) {
        vx -= coeff[used[m]] * gb[m].g[2 * q];
        vy -= coeff[used[m]] * gb[m].g[2 * q + 1];
      }
      dev = std::max(dev, std::hypot(vx, vy));
    }
  });
  return top > 0 ? dev / top : dev;
}

DiscreteField subtract_members(const DiscreteField& u, const CorrectedBasis& basis,
                               const Eigen::VectorXd& coeff, int max_degree) {
  check_field(u, basis, "subtract_members");
  DiscreteField out = u;
  for (std::size_t j = 0; j < basis.size(); ++j)
    if ((max_degree < 0 || basis.degree[j] <= max_degree) && coeff[j] != 0)
      out.axpy(-coeff[j], basis.members[j]);
  return out;
}

ExcessResult excess_k(const DiscreteField& u, double r, const CorrectedBasis& basis,
                      const ExcessOptions& opts) {
  const GramData d = gram_data(&u, basis, r, opts.max_degree);
  const int m = static_cast<int>(d.used.size());
  ExcessResult res;
  res.radius = r;
  res.energy = d.energy;
  res.coeff = Eigen::VectorXd::Zero(basis.size());
  const int top = opts.max_degree < 0 ? basis.max_degree() : opts.max_degree;
  for (int k = 0; k <= top; ++k) res.minimizer.emplace_back(basis.grid.dim(), k);
  if (m > 0) {
    Eigen::VectorXd D(m);
    for (int a = 0; a < m; ++a) {
      if (!(d.G(a, a) > 0))
        throw DegenerateBasisError(fmt::format("excess_k: member {} has zero gradient on B_{}", d.used[a], r),
                                   std::numeric_limits<double>::infinity());
      D[a] = 1.0 / std::sqrt(d.G(a, a));
    }
    const Eigen::MatrixXd S = D.asDiagonal() * d.G * D.asDiagonal();
    const Eigen::VectorXd hs = D.asDiagonal() * d.h;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    const double lmax = es.eigenvalues().maxCoeff(), lmin = es.eigenvalues().minCoeff();
    res.condition = lmin > 0 ? lmax / lmin : std::numeric_limits<double>::infinity();
    if (!(res.condition <= opts.max_condition))
      throw DegenerateBasisError(fmt::format("excess_k: scaled Gram condition {:.3g} on B_{} exceeds {:.3g}",
                                             res.condition, r, opts.max_condition),
                                 res.condition);
    Eigen::VectorXd y;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
    if (ldlt.info() == Eigen::Success && res.condition < 1e8) {
      y = ldlt.solve(hs);
    } else {
      res.fallback = true;
      const Eigen::MatrixXd& V = es.eigenvectors();
      Eigen::VectorXd t = V.transpose() * hs;
      for (int a = 0; a < m; ++a)
        t[a] = es.eigenvalues()[a] > 1e-12 * lmax ? t[a] / es.eigenvalues()[a] : 0.0;
      y = V * t;
    }
    for (int a = 0; a < m; ++a) {
      const int j = d.used[a];
      res.coeff[j] = D[a] * y[a];
      res.minimizer[basis.degree[j]] += res.coeff[j] * basis.poly[j];
    }
  }
  res.value = m > 0 ? excess_objective(u, r, basis, res.coeff) : d.energy;
  res.normalized = d.energy > 0 ? res.value / d.energy : 0.0;
  return res;
}

double gradient_energy(const DiscreteField& u, double r) {
  if (u.rank() != Rank::scalar || u.location() != Location::node)
    throw DomainError("gradient_energy: expects a scalar node field");
  CorrectedBasis none;
  none.grid = u.grid();
  const std::size_t cells = cells_in_ball(u.grid(), Ball{r}).size();
  double s = 0;
  for_each_cell(u.grid(), r, &u, none, {}, [&](const CellGrad& gu, const std::vector<CellGrad>&) {
    for (int k = 0; k < 8; ++k) s += gu.g[k] * gu.g[k];
  });
  return s * kGaussWeight / static_cast<double>(cells);
}

Eigen::MatrixXd scaled_gram(const CorrectedBasis& basis, double r, int max_degree) {
  const GramData d = gram_data(nullptr, basis, r, max_degree);
  const int m = static_cast<int>(d.used.size());
  Eigen::VectorXd D(m);
  for (int a = 0; a < m; ++a) {
    const int j = d.used[a];
    const double nrm = sup_norm_B1(basis.poly[j]);
    D[a] = std::pow(r, -(basis.degree[j] - 1)) / (nrm > 0 ? nrm : 1.0);
  }
  return D.asDiagonal() * d.G * D.asDiagonal();
}

double gram_min_eigenvalue(const CorrectedBasis& basis, double r, int max_degree) {
  const Eigen::MatrixXd S = scaled_gram(basis, r, max_degree);
  if (S.rows() == 0) return 0.0;
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

DecayFit decay_fit(const std::vector<double>& radii, const std::vector<double>& values,
                   double r_min, double r_max) {
  if (radii.size() != values.size()) throw DomainError("decay_fit: radii and values differ in length");
  std::vector<double> lx, ly;
  DecayFit f;
  int in_range = 0;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (radii[k] < r_min * (1 - 1e-12) || radii[k] > r_max * (1 + 1e-12)) continue;
    ++in_range;
    if (!(values[k] > 0)) {
      f.flagged = true;
      f.excluded.push_back(radii[k]);
      continue;
    }
    lx.push_back(std::log(radii[k]));
    ly.push_back(std::log(values[k]));
  }
  if (in_range < 4) throw ParameterError(fmt::format("decay_fit: {} radii in [{}, {}], need 4", in_range, r_min, r_max));
  f.points = static_cast<int>(lx.size());
  if (f.points < 2) throw NumericalError("decay_fit: fewer than two positive excess values");
  double mx = 0, my = 0;
  for (int k = 0; k < f.points; ++k) {
    mx += lx[k];
    my += ly[k];
  }
  mx /= f.points;
  my /= f.points;
  double sxx = 0, sxy = 0;
  for (int k = 0; k < f.points; ++k) {
    sxx += (lx[k] - mx) * (lx[k] - mx);
    sxy += (lx[k] - mx) * (ly[k] - my);
  }
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0;
  for (int k = 0; k < f.points; ++k) ssr += std::pow(ly[k] - f.intercept - f.slope * lx[k], 2);
  f.residual = std::sqrt(ssr / f.points);
  f.slope_stderr = f.points > 2 ? std::sqrt(ssr / (f.points - 2) / sxx) : 0.0;
  return f;
}

std::vector<double> dyadic_radii(double lo, double hi) {
  if (!(lo > 0)) throw ParameterError("dyadic_radii: lower radius must be positive");
  std::vector<double> r;
  for (double x = lo; x <= hi * (1 + 1e-12); x *= 2) r.push_back(x);
  return r;
}

ExcessReport excess_report(const DiscreteField& u, const CorrectedBasis& basis,
                           const std::vector<double>& radii, const ExcessOptions& opts) {
  ExcessReport rep;
  for (double r : radii) {
    const ExcessResult e = excess_k(u, r, basis, opts);
    rep.radii.push_back(r);
    rep.excess.push_back(e.value);
    rep.normalized.push_back(e.normalized);
    rep.gram_min_eig.push_back(gram_min_eigenvalue(basis, r, opts.max_degree));
    rep.coeff.push_back(e.coeff);
    rep.minimizer.push_back(e.minimizer);
  }
  return rep;
}

std::string excess_csv(const ExcessReport& rep, const std::vector<std::pair<std::string, std::string>>& provenance,
                       bool header) {
  std::string out;
  const std::size_t nc = rep.coeff.empty() ? 0 : static_cast<std::size_t>(rep.coeff.front().size());
  if (header) {
    out += "radius,excess,gram_min_eig";
    for (std::size_t j = 0; j < nc; ++j) out += fmt::format(",c{}", j);
    for (const auto& p : provenance) out += ',' + p.first;
    out += '\n';
  }
  for (std::size_t k = 0; k < rep.radii.size(); ++k) {
    out += fmt::format("{:.17g},{:.17g},{:.17g}", rep.radii[k], rep.excess[k], rep.gram_min_eig[k]);
    for (std::size_t j = 0; j < nc; ++j) out += fmt::format(",{:.17g}", rep.coeff[k][j]);
    for (const auto& p : provenance) out += ',' + p.second;
    out += '\n';
  }
  return out;
}

void write_excess_csv(const ExcessReport& rep, const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& provenance) {
  std::ofstream out(path);
  if (!out) throw Error("write_excess_csv: cannot open " + path);
  out << excess_csv(rep, provenance, true);
}

std::string fit_summary(const DecayFit& fit, double r_min, double r_max) {
  std::string s = fmt::format("r_min = {:.17g}\nr_max = {:.17g}\nslope = {:.17g}\nslope_stderr = {:.17g}\n"
                              "intercept = {:.17g}\nresidual = {:.17g}\npoints = {}\nflagged = {}\n",
                              r_min, r_max, fit.slope, fit.slope_stderr, fit.intercept, fit.residual,
                              fit.points, fit.flagged ? "true" : "false");
  for (double r : fit.excluded) s += fmt::format("excluded = {:.17g}\n", r);
  return s;
}

}  // namespace homog
