#include "homoglab/poly.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include <fmt/format.h>

#include "homoglab/errors.hpp"

namespace homog {

namespace {

void append_degree(int d, int k, MultiIndex& cur, int pos, std::vector<MultiIndex>& out) {
  if (pos == d - 1) {
    cur[pos] = k;
    out.push_back(cur);
    return;
  }
  for (int e = k; e >= 0; --e) {
    cur[pos] = e;
    append_degree(d, k - e, cur, pos + 1, out);
  }
}

const std::vector<MultiIndex>& cached_monomials(int d, int k) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::vector<MultiIndex>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find({d, k});
  if (it == cache.end()) it = cache.emplace(std::make_pair(d, k), monomials(d, 0, k)).first;
  return it->second;
}

int total_degree(const MultiIndex& a) {
  int s = 0;
  for (int e : a) s += e;
  return s;
}

std::size_t index_of(int d, const MultiIndex& alpha) {
  const int k = total_degree(alpha);
  std::size_t off = 0;
  for (int j = 0; j < k; ++j) off += static_cast<std::size_t>(homogeneous_dimension(d, j));
  std::vector<MultiIndex> deg;
  MultiIndex cur(d);
  append_degree(d, k, cur, 0, deg);
  for (std::size_t p = 0; p < deg.size(); ++p)
    if (deg[p] == alpha) return off + p;
  throw DomainError("Polynomial: bad multi-index");
}

double halton(std::size_t i, int base) {
  double f = 1, r = 0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

}  // namespace

std::vector<MultiIndex> monomials(int d, int lo, int hi) {
  if (d < 1) throw ParameterError("monomials: dimension must be positive");
  std::vector<MultiIndex> out;
  for (int k = std::max(lo, 0); k <= hi; ++k) {
    MultiIndex cur(d);
    append_degree(d, k, cur, 0, out);
  }
  return out;
}

int homogeneous_dimension(int d, int k) {
  if (k < 0) return 0;
  // C(k+d-1, d-1)
  long r = 1;
  for (int j = 1; j <= d - 1; ++j) r = r * (k + j) / j;
  return static_cast<int>(r);
}

Polynomial::Polynomial(int dim, int degree)
    : dim_(dim), degree_(degree), coeff_(cached_monomials(dim, degree).size(), 0.0) {
  if (degree < 0) throw ParameterError("Polynomial: negative degree");
}

Polynomial::Polynomial(int dim, int degree, std::vector<double> coeff) : Polynomial(dim, degree) {
  if (coeff.size() != coeff_.size()) throw DomainError("Polynomial: coefficient count mismatch");
  coeff_ = std::move(coeff);
}

Polynomial Polynomial::monomial(const MultiIndex& alpha, double c) {
  Polynomial p(static_cast<int>(alpha.size()), total_degree(alpha));
  p.coefficient(alpha) = c;
  return p;
}

Polynomial Polynomial::coordinate(int dim, int i) {
  MultiIndex a(dim, 0);
  a[i] = 1;
  return monomial(a);
}

const std::vector<MultiIndex>& Polynomial::exponents() const { return cached_monomials(dim_, degree_); }

double Polynomial::coefficient(const MultiIndex& alpha) const {
  if (total_degree(alpha) > degree_) return 0.0;
  return coeff_[index_of(dim_, alpha)];
}

double& Polynomial::coefficient(const MultiIndex& alpha) {
  if (static_cast<int>(alpha.size()) != dim_ || total_degree(alpha) > degree_)
    throw DomainError("Polynomial: multi-index outside the coefficient table");
  return coeff_[index_of(dim_, alpha)];
}

double Polynomial::operator()(const double* x) const {
  const auto& ex = exponents();
  double s = 0;
  for (std::size_t m = 0; m < ex.size(); ++m) {
    if (coeff_[m] == 0) continue;
    double t = coeff_[m];
    for (int i = 0; i < dim_; ++i)
      for (int e = 0; e < ex[m][i]; ++e) t *= x[i];
    s += t;
  }
  return s;
}

double Polynomial::operator()(double x, double y) const {
  if (dim_ != 2) throw DomainError("Polynomial: two-argument evaluation needs dim 2");
  const double p[2] = {x, y};
  return (*this)(p);
}

void Polynomial::gradient(const double* x, double* g) const {
  const auto& ex = exponents();
  for (int i = 0; i < dim_; ++i) g[i] = 0;
  for (std::size_t m = 0; m < ex.size(); ++m) {
    if (coeff_[m] == 0) continue;
    for (int i = 0; i < dim_; ++i) {
      if (ex[m][i] == 0) continue;
      double t = coeff_[m] * ex[m][i];
      for (int l = 0; l < dim_; ++l) {
        const int e = ex[m][l] - (l == i ? 1 : 0);
        for (int r = 0; r < e; ++r) t *= x[l];
      }
      g[i] += t;
    }
  }
}

Polynomial Polynomial::derivative(int i) const {
  Polynomial out(dim_, std::max(degree_ - 1, 0));
  const auto& ex = exponents();
  for (std::size_t m = 0; m < ex.size(); ++m) {
    if (ex[m][i] == 0 || coeff_[m] == 0) continue;
    MultiIndex a = ex[m];
    const int e = a[i]--;
    out.coefficient(a) += e * coeff_[m];
  }
  return out;
}

Polynomial Polynomial::homogeneous_part(int k) const {
  Polynomial out(dim_, std::max(k, 0));
  if (k < 0 || k > degree_) return out;
  const auto& ex = exponents();
  for (std::size_t m = 0; m < ex.size(); ++m)
    if (total_degree(ex[m]) == k) out.coeff_[m] = coeff_[m];
  return out;
}

Polynomial Polynomial::padded(int degree) const {
  if (degree <= degree_) return *this;
  Polynomial out(dim_, degree);
  std::copy(coeff_.begin(), coeff_.end(), out.coeff_.begin());
  return out;
}

int Polynomial::min_degree() const {
  const auto& ex = exponents();
  for (std::size_t m = 0; m < ex.size(); ++m)
    if (coeff_[m] != 0) return total_degree(ex[m]);
  return -1;
}

bool Polynomial::is_homogeneous(int k, double tol) const {
  const auto& ex = exponents();
  const double scale = tol * std::max(coefficient_norm(), 1e-300);
  for (std::size_t m = 0; m < ex.size(); ++m)
    if (total_degree(ex[m]) != k && std::abs(coeff_[m]) > scale) return false;
  return true;
}

double Polynomial::coefficient_norm() const {
  double s = 0;
  for (double c : coeff_) s += c * c;
  return std::sqrt(s);
}

std::string Polynomial::to_string() const {
  const auto& ex = exponents();
  std::string out;
  for (std::size_t m = 0; m < ex.size(); ++m) {
    if (coeff_[m] == 0) continue;
    if (!out.empty()) out += " + ";
    out += fmt::format("{:.17g}", coeff_[m]);
    for (int i = 0; i < dim_; ++i)
      if (ex[m][i] > 0) out += ex[m][i] == 1 ? fmt::format("*x{}", i + 1) : fmt::format("*x{}^{}", i + 1, ex[m][i]);
  }
  return out.empty() ? "0" : out;
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
  if (o.dim_ != dim_) throw DomainError("Polynomial: dimension mismatch");
  if (o.degree_ > degree_) *this = padded(o.degree_);
  for (std::size_t m = 0; m < o.coeff_.size(); ++m) coeff_[m] += o.coeff_[m];
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& o) {
  if (o.dim_ != dim_) throw DomainError("Polynomial: dimension mismatch");
  if (o.degree_ > degree_) *this = padded(o.degree_);
  for (std::size_t m = 0; m < o.coeff_.size(); ++m) coeff_[m] -= o.coeff_[m];
  return *this;
}

Polynomial& Polynomial::operator*=(double s) {
  for (double& c : coeff_) c *= s;
  return *this;
}

Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
Polynomial operator*(double s, Polynomial a) { return a *= s; }

Polynomial multiply(const Polynomial& a, const Polynomial& b) {
  if (a.dim() != b.dim()) throw DomainError("multiply: dimension mismatch");
  Polynomial out(a.dim(), a.degree() + b.degree());
  const auto& ea = a.exponents();
  const auto& eb = b.exponents();
  for (std::size_t i = 0; i < ea.size(); ++i) {
    if (a.coeff()[i] == 0) continue;
    for (std::size_t j = 0; j < eb.size(); ++j) {
      if (b.coeff()[j] == 0) continue;
      MultiIndex e = ea[i];
      for (int l = 0; l < a.dim(); ++l) e[l] += eb[j][l];
      out.coefficient(e) += a.coeff()[i] * b.coeff()[j];
    }
  }
  return out;
}

PolySpace homogeneous_basis(int d, int k) {
  if (k < 0) throw ParameterError("homogeneous_basis: degree must be non-negative");
  PolySpace s;
  s.degree = k;
  for (const auto& a : monomials(d, k, k)) s.basis.push_back(Polynomial::monomial(a));
  return s;
}

Eigen::MatrixXd to_matrix(const Tensor2& a) {
  Eigen::MatrixXd m(2, 2);
  m << a[0], a[1], a[2], a[3];
  return m;
}

Polynomial ahom_contraction(const Eigen::MatrixXd& a, const Polynomial& p) {
  const int d = p.dim();
  if (a.rows() != d || a.cols() != d) throw DomainError("ahom_contraction: tensor size mismatch");
  Polynomial out(d, std::max(p.degree() - 2, 0));
  for (int i = 0; i < d; ++i) {
    const Polynomial pi = p.derivative(i);
    for (int j = 0; j < d; ++j)
      if (a(i, j) != 0) out += a(i, j) * pi.derivative(j);
  }
  return out;
}

double ball_moment(const MultiIndex& alpha) {
  const int d = static_cast<int>(alpha.size());
  int k = 0;
  for (int e : alpha) {
    if (e % 2) return 0.0;
    k += e;
  }
  // sphere integral 2 prod Gamma((a_i+1)/2) / Gamma((k+d)/2), radial factor 1/(k+d),
  // divided by the ball volume pi^{d/2}/Gamma(d/2+1)
  double lg = std::log(2.0) - std::lgamma(0.5 * (k + d)) - std::log(static_cast<double>(k + d));
  for (int e : alpha) lg += std::lgamma(0.5 * (e + 1));
  lg -= 0.5 * d * std::log(M_PI) - std::lgamma(0.5 * d + 1);
  return std::exp(lg);
}

double ball_inner(const Polynomial& p, const Polynomial& q) {
  const auto& ep = p.exponents();
  const auto& eq = q.exponents();
  double s = 0;
  for (std::size_t i = 0; i < ep.size(); ++i) {
    if (p.coeff()[i] == 0) continue;
    for (std::size_t j = 0; j < eq.size(); ++j) {
      if (q.coeff()[j] == 0) continue;
      MultiIndex e = ep[i];
      for (std::size_t l = 0; l < e.size(); ++l) e[l] += eq[j][l];
      s += p.coeff()[i] * q.coeff()[j] * ball_moment(e);
    }
  }
  return s;
}

PolySpace ahom_harmonic_basis(const Eigen::MatrixXd& a, int k) {
  const int d = static_cast<int>(a.rows());
  if (a.cols() != d) throw ParameterError("ahom_harmonic_basis: tensor must be square");
  const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (!(es.eigenvalues().minCoeff() > 0))
    throw PreconditionError("ahom_harmonic_basis: a_hom is not elliptic");
  const PolySpace mono = homogeneous_basis(d, k);
  const int n = static_cast<int>(mono.size());
  PolySpace out;
  out.harmonic = true;
  out.degree = k;
  if (k < 2) {
    out.basis = mono.basis;
  } else {
    const int rows = homogeneous_dimension(d, k - 2);
    Eigen::MatrixXd L(rows, n);
    for (int c = 0; c < n; ++c) {
      const Polynomial img = ahom_contraction(a, mono.basis[c]).homogeneous_part(k - 2);
      const auto ex = monomials(d, k - 2, k - 2);
      for (int r = 0; r < rows; ++r) L(r, c) = img.coefficient(ex[r]);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(L, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv[i] > 1e-10 * sv[0]) ++rank;
    if (n - rank != n - rows)
      throw NumericalError(fmt::format("ahom_harmonic_basis: null space of dimension {} (expected {})",
                                       n - rank, n - rows));
    const Eigen::MatrixXd N = svd.matrixV().rightCols(n - rank);
    // B1 moment matrix of the degree-k monomials
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) M(i, j) = ball_inner(mono.basis[i], mono.basis[j]);
    const Eigen::MatrixXd G = N.transpose() * M * N;
    const Eigen::MatrixXd proj = N * G.ldlt().solve(N.transpose() * M);
    std::vector<Eigen::VectorXd> kept;
    for (int m = 0; m < n && static_cast<int>(kept.size()) < n - rank; ++m) {
      Eigen::VectorXd v = proj.col(m);
      for (const auto& w : kept) v -= (w.transpose() * M * v)(0) * w;
      const double nv = std::sqrt((v.transpose() * M * v)(0));
      if (nv < 1e-8 * std::sqrt(M(m, m))) continue;
      kept.push_back(v / nv);
    }
    for (const auto& v : kept) {
      Polynomial p(d, k);
      for (int c = 0; c < n; ++c) p += v[c] * mono.basis[c];
      out.basis.push_back(p);
    }
    return out;
  }
  // degrees 0 and 1: orthonormalize the monomials
  for (auto& p : out.basis) p *= 1.0 / std::sqrt(ball_inner(p, p));
  return out;
}

PolySpace ahom_harmonic_basis(const Tensor2& a, int k) { return ahom_harmonic_basis(to_matrix(a), k); }

const std::vector<std::vector<double>>& sup_norm_samples(int d) {
  static std::mutex mu;
  static std::map<int, std::vector<std::vector<double>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(d);
  if (it != cache.end()) return it->second;
  static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19};
  if (d < 1 || d > 8) throw ParameterError("sup_norm_B1: unsupported dimension");
  std::vector<std::vector<double>> pts;
  for (std::size_t i = 1; pts.size() < 512; ++i) {
    std::vector<double> x(d);
    double r2 = 0;
    for (int l = 0; l < d; ++l) {
      x[l] = 2 * halton(i, primes[l]) - 1;
      r2 += x[l] * x[l];
    }
    if (r2 < 1) pts.push_back(x);
  }
  for (int i = 0; i < 256; ++i) {
    std::vector<double> x(d, 0.0);
    if (d == 1) {
      x[0] = i % 2 ? 1 : -1;
    } else if (d == 2) {
      const double t = 2 * M_PI * i / 256;
      x[0] = std::cos(t);
      x[1] = std::sin(t);
    } else {
      // Fibonacci points on the sphere, remaining coordinates zero
      const double z = 1 - (2 * i + 1) / 256.0;
      const double r = std::sqrt(1 - z * z), t = M_PI * (3 - std::sqrt(5.0)) * i;
      x[0] = r * std::cos(t);
      x[1] = r * std::sin(t);
      x[2] = z;
    }
    pts.push_back(x);
  }
  return cache.emplace(d, std::move(pts)).first->second;
}

double sup_norm_B1(const Polynomial& p) {
  double m = std::abs(p.coeff()[0]);
  for (const auto& x : sup_norm_samples(p.dim())) m = std::max(m, std::abs(p(x.data())));
  return m;
}

DiscreteField evaluate(const Grid& grid, const Polynomial& p) {
  if (p.dim() != grid.dim()) throw DomainError("evaluate: dimension mismatch");
  return sample_nodes(grid, [&](double x, double y) { return p(x, y); });
}

DiscreteField evaluate_gradient(const Grid& grid, const Polynomial& p) {
  if (p.dim() != grid.dim()) throw DomainError("evaluate_gradient: dimension mismatch");
  DiscreteField g(grid, Rank::vector, Location::quadrature);
  const int n = grid.n();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const auto x0 = grid.node_coord(i, j);
      const std::size_t c = grid.cell_index(i, j);
      for (int q = 0; q < 4; ++q) {
        const auto xi = gauss_point(q);
        const double x[2] = {x0[0] + xi[0], x0[1] + xi[1]};
        p.gradient(x, &g[8 * c + 2 * q]);
      }
    }
  return g;
}

std::vector<Polynomial> taylor_extract(const DiscreteField& u, int k, double fit_radius,
                                       double max_condition) {
  if (u.rank() != Rank::scalar || u.location() != Location::node)
    throw DomainError("taylor_extract: expects a scalar node field");
  if (k < 0) throw ParameterError("taylor_extract: degree must be non-negative");
  const Grid& g = u.grid();
  const int m = g.nodes_per_axis();
  const auto ex = monomials(2, 0, k);
  std::vector<std::array<double, 2>> pts;
  std::vector<double> vals;
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      const auto x = g.node_coord(i, j);
      if (x[0] * x[0] + x[1] * x[1] < fit_radius * fit_radius) {
        pts.push_back({x[0] / fit_radius, x[1] / fit_radius});
        vals.push_back(u[g.node_index(i, j)]);
      }
    }
  if (pts.size() < ex.size())
    throw NumericalError(fmt::format("taylor_extract: {} nodes in the fit ball for {} unknowns",
                                     pts.size(), ex.size()));
  Eigen::MatrixXd V(pts.size(), ex.size());
  Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(vals.data(), vals.size());
  for (std::size_t r = 0; r < pts.size(); ++r)
    for (std::size_t c = 0; c < ex.size(); ++c)
      V(r, c) = std::pow(pts[r][0], ex[c][0]) * std::pow(pts[r][1], ex[c][1]);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(V, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cond = sv[0] / sv[sv.size() - 1];
  if (!(cond <= max_condition))
    throw NumericalError(fmt::format("taylor_extract: fit condition {:.3g} exceeds {:.3g}", cond, max_condition));
  const Eigen::VectorXd c = svd.solve(b);
  std::vector<Polynomial> parts;
  for (int d = 0; d <= k; ++d) parts.emplace_back(2, d);
  for (std::size_t i = 0; i < ex.size(); ++i) {
    const int d = ex[i][0] + ex[i][1];
    parts[d].coefficient(ex[i]) = c[i] / std::pow(fit_radius, d);
  }
  return parts;
}

}  // namespace homog
