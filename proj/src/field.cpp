#include "homoglab/field.hpp"

#include <cmath>

#include "homoglab/errors.hpp"

namespace homog {

int component_count(Rank rank, int dim) {
  switch (rank) {
    case Rank::scalar: return 1;
    case Rank::vector: return dim;
    case Rank::tensor: return dim * dim;
    case Rank::tensor3: return dim * dim * dim;
  }
  return 1;
}

DiscreteField::DiscreteField(const Grid& grid, Rank rank, Location location)
    : grid_(grid), rank_(rank), location_(location) {
  values_.assign(sites() * components(), 0.0);
}

DiscreteField::DiscreteField(const Grid& grid, Rank rank, Location location,
                             std::vector<double> values)
    : grid_(grid), rank_(rank), location_(location), values_(std::move(values)) {
  if (values_.size() != sites() * components())
    throw DomainError("field: value count does not match grid and rank");
}

std::size_t DiscreteField::sites() const {
  switch (location_) {
    case Location::node: return grid_.node_count();
    case Location::cell: return grid_.cell_count();
    case Location::quadrature: return 4 * grid_.cell_count();
  }
  return 0;
}

namespace {

void check_compatible(const DiscreteField& a, const DiscreteField& b, const char* what) {
  check_same_grid(a.grid(), b.grid(), what);
  if (a.rank() != b.rank() || a.location() != b.location())
    throw DomainError(std::string(what) + ": mismatched rank or location");
}

}  // namespace

DiscreteField& DiscreteField::operator+=(const DiscreteField& o) {
  check_compatible(*this, o, "field +=");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
  return *this;
}

DiscreteField& DiscreteField::operator-=(const DiscreteField& o) {
  check_compatible(*this, o, "field -=");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
  return *this;
}

DiscreteField& DiscreteField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

DiscreteField& DiscreteField::axpy(double s, const DiscreteField& o) {
  check_compatible(*this, o, "field axpy");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += s * o.values_[k];
  return *this;
}

bool DiscreteField::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

DiscreteField operator+(DiscreteField a, const DiscreteField& b) { return a += b; }
DiscreteField operator-(DiscreteField a, const DiscreteField& b) { return a -= b; }
DiscreteField operator*(double s, DiscreteField a) { return a *= s; }

DiscreteField discrete_gradient(const DiscreteField& u) {
  if (u.location() != Location::node || u.rank() != Rank::scalar)
    throw DomainError("gradient: expects a node scalar");
  const Grid& g = u.grid();
  DiscreteField out(g, Rank::vector, Location::quadrature);
  const int n = g.n();
#pragma omp parallel for schedule(static)
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const auto nd = g.cell_nodes(i, j);
      const double u00 = u[nd[0]], u10 = u[nd[1]], u01 = u[nd[2]], u11 = u[nd[3]];
      double* o = out.data() + 8 * g.cell_index(i, j);
      for (int q = 0; q < 4; ++q) {
        const auto p = gauss_point(q);
        o[2 * q] = (1 - p[1]) * (u10 - u00) + p[1] * (u11 - u01);
        o[2 * q + 1] = (1 - p[0]) * (u01 - u00) + p[0] * (u11 - u10);
      }
    }
  }
  return out;
}

DiscreteField discrete_divergence(const DiscreteField& F) {
  if (F.rank() != Rank::vector || F.location() == Location::node)
    throw DomainError("divergence: expects a cell or quadrature vector field");
  const Grid& g = F.grid();
  DiscreteField out(g, Rank::scalar, Location::node);
  const int n = g.n();
  const bool quad = F.location() == Location::quadrature;
  // Serial scatter keeps the summation order fixed.
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const auto nd = g.cell_nodes(i, j);
      const std::size_t c = g.cell_index(i, j);
      double acc[4] = {0, 0, 0, 0};
      for (int q = 0; q < 4; ++q) {
        const auto p = gauss_point(q);
        const double* f = quad ? F.data() + 8 * c + 2 * q : F.data() + 2 * c;
        const double fx = f[0], fy = f[1];
        const double xi = p[0], eta = p[1];
        acc[0] += fx * (-(1 - eta)) + fy * (-(1 - xi));
        acc[1] += fx * (1 - eta) + fy * (-xi);
        acc[2] += fx * (-eta) + fy * (1 - xi);
        acc[3] += fx * eta + fy * xi;
      }
      for (int a = 0; a < 4; ++a) out[nd[a]] -= kGaussWeight * acc[a];
    }
  }
  return out;
}

DiscreteField cell_average(const DiscreteField& f) {
  if (f.location() != Location::quadrature)
    throw DomainError("cell_average: expects a quadrature field");
  DiscreteField out(f.grid(), f.rank(), Location::cell);
  const int nc = f.components();
  const std::size_t cells = f.grid().cell_count();
  for (std::size_t c = 0; c < cells; ++c)
    for (int k = 0; k < nc; ++k) {
      double s = 0;
      for (int q = 0; q < 4; ++q) s += f[(4 * c + q) * nc + k];
      out[c * nc + k] = 0.25 * s;
    }
  return out;
}

double interpolate(const DiscreteField& u, int i, int j, double xi, double eta) {
  const auto nd = u.grid().cell_nodes(i, j);
  return (1 - xi) * (1 - eta) * u[nd[0]] + xi * (1 - eta) * u[nd[1]] +
         (1 - xi) * eta * u[nd[2]] + xi * eta * u[nd[3]];
}

namespace {

// Sum over the Gauss points of cell c of the squared norm (or the plain value).
template <bool Square>
double cell_integral(const DiscreteField& f, std::size_t c) {
  const int nc = f.components();
  const Grid& g = f.grid();
  switch (f.location()) {
    case Location::cell: {
      double s = 0;
      for (int k = 0; k < nc; ++k) s += Square ? f[c * nc + k] * f[c * nc + k] : f[c * nc + k];
      return s;
    }
    case Location::quadrature: {
      double s = 0;
      for (int q = 0; q < 4; ++q)
        for (int k = 0; k < nc; ++k) {
          const double v = f[(4 * c + q) * nc + k];
          s += Square ? v * v : v;
        }
      return 0.25 * s;
    }
    case Location::node: {
      const int i = static_cast<int>(c % g.n()), j = static_cast<int>(c / g.n());
      const auto nd = g.cell_nodes(i, j);
      double s = 0;
      for (int k = 0; k < nc; ++k)
        for (int q = 0; q < 4; ++q) {
          const auto p = gauss_point(q);
          const double v = (1 - p[0]) * (1 - p[1]) * f[nd[0] * nc + k] +
                           p[0] * (1 - p[1]) * f[nd[1] * nc + k] +
                           (1 - p[0]) * p[1] * f[nd[2] * nc + k] + p[0] * p[1] * f[nd[3] * nc + k];
          s += Square ? v * v : v;
        }
      return 0.25 * s;
    }
  }
  return 0;
}

}  // namespace

double mean_square(const DiscreteField& f, const std::vector<std::size_t>& cells) {
  if (cells.empty()) throw DomainError("mean_square: empty cell list");
  double s = 0;
  for (std::size_t c : cells) s += cell_integral<true>(f, c);
  return s / static_cast<double>(cells.size());
}

double mean_value(const DiscreteField& f, const std::vector<std::size_t>& cells) {
  if (f.rank() != Rank::scalar) throw DomainError("mean_value: expects a scalar field");
  if (cells.empty()) throw DomainError("mean_value: empty cell list");
  double s = 0;
  for (std::size_t c : cells) s += cell_integral<false>(f, c);
  return s / static_cast<double>(cells.size());
}

double ball_average(const DiscreteField& f, const Ball& ball, Mean mean) {
  const auto cells = cells_in_ball(f.grid(), ball);
  if (mean == Mean::raw) return mean_value(f, cells);
  return std::sqrt(mean_square(f, cells));
}

DiscreteField to_box(const DiscreteField& f) {
  const Grid& g = f.grid();
  if (!g.periodic()) return f;
  const Grid box = g.with_topology(Topology::box);
  if (f.location() != Location::node)
    return DiscreteField(box, f.rank(), f.location(), f.values());
  DiscreteField out(box, f.rank(), Location::node);
  const int nc = f.components();
  const int n = g.n();
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      const std::size_t src = g.node_index(i % n, j % n), dst = box.node_index(i, j);
      for (int k = 0; k < nc; ++k) out[dst * nc + k] = f[src * nc + k];
    }
  return out;
}

}  // namespace homog
