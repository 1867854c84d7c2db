#pragma once

// Step-2 Carnot tangent cone of a foliation point, the density constant J and
// Monte Carlo estimates of the small-time density of V_t at the origin.

#include <Eigen/Dense>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "hcgb/chen.hpp"
#include "hcgb/errors.hpp"
#include "hcgb/foliation.hpp"
#include "hcgb/rng.hpp"
#include "hcgb/tensor.hpp"

namespace hcgb {

class CarnotGroup {
 public:
  CarnotGroup(int n, int m, Tensor3 bracket) : n_(n), m_(m), bracket_(std::move(bracket)) {}

  int n() const { return n_; }
  int m() const { return m_; }
  int dimension() const { return n_ + m_; }
  int homogeneous_dimension() const { return n_ + 2 * m_; }
  // Structure constants: [[X_i, X_j]] = sum_r bracket(i,j,r) Z_r = -T_ij^r Z_r.
  const Tensor3& structure() const { return bracket_; }

  Eigen::VectorXd bracket(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    if (x.size() != n_ || y.size() != n_) throw ArgumentError("bracket takes two first-layer vectors");
    Eigen::VectorXd z = Eigen::VectorXd::Zero(m_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        for (int r = 0; r < m_; ++r) z(r) += x(i) * y(j) * bracket_(i, j, r);
    return z;
  }

  // Exponential coordinates: (x, z)(x', z') = (x + x', z + z' + [[x, x']] / 2).
  Eigen::VectorXd multiply(const Eigen::VectorXd& g, const Eigen::VectorXd& h) const {
    if (g.size() != dimension() || h.size() != dimension()) throw ArgumentError("group element has wrong size");
    Eigen::VectorXd out = g + h;
    out.tail(m_) += 0.5 * bracket(g.head(n_), h.head(n_));
    return out;
  }

  Eigen::VectorXd inverse(const Eigen::VectorXd& g) const { return -g; }

  Eigen::VectorXd dilate(const Eigen::VectorXd& g, double lambda) const {
    if (g.size() != dimension()) throw ArgumentError("group element has wrong size");
    Eigen::VectorXd out = g;
    out.head(n_) *= lambda;
    out.tail(m_) *= lambda * lambda;
    return out;
  }

  int bracket_rank() const {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m_, n_ * n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        for (int r = 0; r < m_; ++r) M(r, i * n_ + j) = bracket_(i, j, r);
    if (M.size() == 0) return 0;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
    qr.setThreshold(1e-10);
    return static_cast<int>(qr.rank());
  }

 private:
  int n_, m_;
  Tensor3 bracket_;
};

inline CarnotGroup tangent_cone(const FoliationPoint& fp) {
  const auto sym = check_symmetry(fp);
  if (!sym.passes)
    throw StateError("symmetry condition fails (residual " + std::to_string(sym.residual) +
                     "); tangent cone is not step 2");
  Tensor3 b({fp.n, fp.n, fp.m});
  for (int i = 0; i < fp.n; ++i)
    for (int j = 0; j < fp.n; ++j)
      for (int r = 0; r < fp.m; ++r) b(i, j, r) = -fp.T(i, j, r);
  CarnotGroup g(fp.n, fp.m, std::move(b));
  if (g.bracket_rank() != fp.m)
    throw StateError("bracket is not onto the second layer (rank " + std::to_string(g.bracket_rank()) + " < " +
                     std::to_string(fp.m) + "): not bracket-generating");
  return g;
}

// ---------------------------------------------------------------------------
// Density constant
//   J = 2^m / (2 pi)^{n/2+m} int_{R^m} det( sqrt(J_z^* J_z) / sinh sqrt(J_z^* J_z) )^{1/2} dz

namespace detail {

// log(x / sinh x) for x >= 0
inline double log_x_over_sinh(double x) {
  if (x < 1e-4) return -x * x / 6.0;
  if (x > 20.0) return std::log(2.0 * x) - x - std::log1p(-std::exp(-2.0 * x));
  return std::log(x / std::sinh(x));
}

inline double sphere_area(int m) {  // Vol(S^{m-1})
  return 2.0 * std::pow(std::numbers::pi, 0.5 * m) / std::tgamma(0.5 * m);
}

}  // namespace detail

inline double j_prefactor(int n, int m) { return std::pow(2.0, m) / std::pow(2.0 * std::numbers::pi, 0.5 * n + m); }

// det(sqrt(J_z^* J_z)/sinh sqrt(J_z^* J_z))^{1/2} at a vertical vector z.
inline double j_integrand(const std::vector<Eigen::MatrixXd>& J, const Eigen::VectorXd& z) {
  const Eigen::Index n = J.empty() ? 0 : J.front().rows();
  Eigen::MatrixXd Jz = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t r = 0; r < J.size(); ++r) Jz += z(static_cast<Eigen::Index>(r)) * J[r];
  const Eigen::MatrixXd S = Jz.transpose() * Jz;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  double logv = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) logv += detail::log_x_over_sinh(std::sqrt(std::max(0.0, es.eigenvalues()(k))));
  return std::exp(0.5 * logv);
}

struct JConstantOptions {
  double tolerance = 1e-8;
  double initial_radius = 4.0;
  double max_radius = 1024.0;
  // Panels per unit radius: each stage splits its cube into panels of width
  // radius / 4, so far shells are covered by wide panels where the
  // integrand is tiny.
  int panels_per_radius = 4;
};

struct JConstantReport {
  double value = 0.0;
  double radius = 0.0;            // truncation radius of the cube [-R, R]^m
  double last_shell = 0.0;        // contribution of the final doubling, in units of J
  std::size_t evaluations = 0;
  bool htype = false;
  std::optional<double> radial;   // 1-D radial reduction for H-type inputs
};

// True when J_z^2 = -|z|^2 Id for all z.
inline bool is_htype(const FoliationPoint& fp, double tol = 1e-12) {
  if (fp.m < 1) return false;
  const auto J = j_matrices(fp);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(fp.n, fp.n);
  for (int r = 0; r < fp.m; ++r) {
    if (((J[r] * J[r]) + I).cwiseAbs().maxCoeff() > tol) return false;
    for (int s = r + 1; s < fp.m; ++s)
      if ((J[r] * J[s] + J[s] * J[r]).cwiseAbs().maxCoeff() > tol) return false;
  }
  return true;
}

// Vol(S^{m-1}) int_0^inf r^{m-1} (r / sinh r)^{n/2} dr, times the prefactor.
inline double j_constant_radial(int n, int m) {
  if (m < 1) throw ArgumentError("radial reduction needs m >= 1");
  boost::math::quadrature::exp_sinh<double> integrator;
  auto f = [&](double r) { return std::exp((m - 1) * std::log(r) + 0.5 * n * detail::log_x_over_sinh(r)); };
  const double I = integrator.integrate(f, 1e-14);
  return j_prefactor(n, m) * detail::sphere_area(m) * I;
}

namespace detail {

struct GaussRule {
  std::vector<double> x, w;  // on [-1, 1]
};

inline const GaussRule& gauss_rule() {
  static const GaussRule rule = [] {
    using G = boost::math::quadrature::gauss<double, 10>;
    GaussRule g;
    const auto& a = G::abscissa();
    const auto& wt = G::weights();
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (a[k] == 0.0) {
        g.x.push_back(0.0);
        g.w.push_back(wt[k]);
        continue;
      }
      g.x.push_back(a[k]);
      g.w.push_back(wt[k]);
      g.x.push_back(-a[k]);
      g.w.push_back(wt[k]);
    }
    return g;
  }();
  return rule;
}

// Integral of f over the cube [-outer, outer]^m minus (-inner, inner)^m, using
// a product Gauss rule on panels of width h (inner and outer multiples of h).
template <class F>
double cube_shell(int m, double inner, double outer, double h, F&& f, std::size_t& evals) {
  const auto& g = gauss_rule();
  const int panels = static_cast<int>(std::lround(2.0 * outer / h));
  const int q = static_cast<int>(g.x.size());
  std::vector<int> pidx(static_cast<std::size_t>(m), 0), nidx(static_cast<std::size_t>(m), 0);
  Eigen::VectorXd z(m);
  double total = 0.0;
  for (;;) {
    bool inside = inner > 0.0;
    for (int d = 0; d < m && inside; ++d) {
      const double lo = -outer + pidx[static_cast<std::size_t>(d)] * h;
      if (lo < -inner - 1e-9 * h || lo + h > inner + 1e-9 * h) inside = false;
    }
    if (!inside) {
      std::fill(nidx.begin(), nidx.end(), 0);
      double panel = 0.0;
      for (;;) {
        double w = 1.0;
        for (int d = 0; d < m; ++d) {
          const double c = -outer + (pidx[static_cast<std::size_t>(d)] + 0.5) * h;
          z(d) = c + 0.5 * h * g.x[static_cast<std::size_t>(nidx[static_cast<std::size_t>(d)])];
          w *= 0.5 * h * g.w[static_cast<std::size_t>(nidx[static_cast<std::size_t>(d)])];
        }
        panel += w * f(z);
        ++evals;
        int d = 0;
        while (d < m && ++nidx[static_cast<std::size_t>(d)] == q) nidx[static_cast<std::size_t>(d++)] = 0;
        if (d == m) break;
      }
      total += panel;
    }
    int d = 0;
    while (d < m && ++pidx[static_cast<std::size_t>(d)] == panels) pidx[static_cast<std::size_t>(d++)] = 0;
    if (d == m) break;
  }
  return total;
}

}  // namespace detail

inline JConstantReport j_constant(const FoliationPoint& fp, const JConstantOptions& opt = {}) {
  validate(fp);
  if (!(opt.tolerance > 0.0) || !(opt.initial_radius > 0.0) || opt.panels_per_radius < 1)
    throw ArgumentError("invalid quadrature options");
  JConstantReport rep;
  const double pref = j_prefactor(fp.n, fp.m);
  rep.htype = is_htype(fp);
  if (fp.m == 0) {
    rep.value = pref;
    return rep;
  }
  const auto J = j_matrices(fp);
  auto f = [&](const Eigen::VectorXd& z) { return j_integrand(J, z); };

  double R = opt.initial_radius;
  double value = pref * detail::cube_shell(fp.m, 0.0, R, R / opt.panels_per_radius, f, rep.evaluations);
  const double target = 1e-2 * opt.tolerance;
  double shell = std::numeric_limits<double>::infinity();
  while (true) {
    if (2.0 * R > opt.max_radius)
      throw NumericError("density-constant quadrature did not converge by radius " + std::to_string(opt.max_radius) +
                             " (integrand does not decay; torsion not surjective?)",
                         std::abs(shell));
    shell = pref * detail::cube_shell(fp.m, R, 2.0 * R, R / opt.panels_per_radius, f, rep.evaluations);
    value += shell;
    R *= 2.0;
    if (std::abs(shell) < target) break;
  }
  rep.value = value;
  rep.radius = R;
  rep.last_shell = shell;
  if (rep.htype) rep.radial = j_constant_radial(fp.n, fp.m);
  return rep;
}

// ---------------------------------------------------------------------------
// Density of V_t = (sqrt(2) B_t, -sum_{i<j} T_ij Area_ij(t)) at the origin

struct DensityOptions {
  std::size_t samples = 1000000;
  std::uint64_t seed = 1;
  int grid = 256;
  int workers = 1;
  int bootstrap = 64;
  // Richardson step over bandwidths h and h/sqrt(2): 2 f(h/sqrt2) - f(h)
  // cancels the h^2 smoothing bias, which at Scott's h is several percent
  // here because the area marginal is sharply peaked.
  bool bias_correction = true;
  double bandwidth_scale = 1.5;  // multiplies Scott's rule
};

struct DensityReport {
  double estimate = 0.0;
  double stderr_ = 0.0;
  double t = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::vector<double> bandwidth;
};

inline constexpr std::size_t kMinDensitySamples = 10000;

// Draws V_t for one sample: n horizontal then m vertical components.
inline std::vector<double> sample_vt(const FoliationPoint& fp, double t, int grid, std::uint64_t seed,
                                     std::uint64_t sample) {
  const auto p = simulate_brownian(fp.n, grid, t, seed, sample);
  std::vector<double> v(static_cast<std::size_t>(fp.n + fp.m), 0.0);
  for (int i = 0; i < fp.n; ++i) v[static_cast<std::size_t>(i)] = std::sqrt(2.0) * p(grid, i);
  for (int i = 0; i < fp.n; ++i)
    for (int j = i + 1; j < fp.n; ++j) {
      bool any = false;
      for (int r = 0; r < fp.m; ++r) any = any || fp.T(i, j, r) != 0.0;
      if (!any) continue;
      const double a = levy_area(p, i + 1, j + 1);
      for (int r = 0; r < fp.m; ++r) v[static_cast<std::size_t>(fp.n + r)] -= fp.T(i, j, r) * a;
    }
  return v;
}

inline DensityReport density_mc(const FoliationPoint& fp, double t, const DensityOptions& opt) {
  if (opt.samples < kMinDensitySamples)
    throw ArgumentError("density estimate needs at least " + std::to_string(kMinDensitySamples) + " samples");
  if (!(t > 0.0)) throw ArgumentError("t must be positive");
  if (opt.grid < 1 || opt.bootstrap < 2 || !(opt.bandwidth_scale > 0.0)) throw ArgumentError("invalid density options");
  tangent_cone(fp);
  const int D = fp.n + fp.m;
  const auto draws = rng::parallel_map(opt.samples, opt.workers,
                                       [&](std::size_t s) { return sample_vt(fp, t, opt.grid, opt.seed, s); });
  const double N = static_cast<double>(opt.samples);
  DensityReport rep;
  rep.t = t;
  rep.samples = opt.samples;
  rep.seed = opt.seed;
  // Scott's rule per coordinate.
  for (int d = 0; d < D; ++d) {
    double mean = 0.0, ss = 0.0;
    for (const auto& v : draws) mean += v[static_cast<std::size_t>(d)];
    mean /= N;
    for (const auto& v : draws) ss += (v[static_cast<std::size_t>(d)] - mean) * (v[static_cast<std::size_t>(d)] - mean);
    const double sd = std::sqrt(ss / (N - 1.0));
    rep.bandwidth.push_back(opt.bandwidth_scale * sd * std::pow(N, -1.0 / (D + 4)));
  }
  double norm = 1.0;
  for (double h : rep.bandwidth) norm *= std::sqrt(2.0 * std::numbers::pi) * h;
  std::vector<double> k(draws.size());
  for (std::size_t s = 0; s < draws.size(); ++s) {
    double q = 0.0;
    for (int d = 0; d < D; ++d) {
      const double u = draws[s][static_cast<std::size_t>(d)] / rep.bandwidth[static_cast<std::size_t>(d)];
      q += u * u;
    }
    k[s] = std::exp(-0.5 * q) / norm;
    // Halving h^2 doubles q and multiplies the normalisation by 2^{D/2}.
    if (opt.bias_correction) k[s] = 2.0 * std::pow(2.0, 0.5 * D) * std::exp(-q) / norm - k[s];
  }
  double sum = 0.0;
  for (double x : k) sum += x;
  rep.estimate = sum / N;
  // Bootstrap over samples with the bandwidth held fixed.
  auto eng = rng::make_engine(opt.seed, opt.samples, 0xb0075742ULL);
  std::uniform_int_distribution<std::size_t> pick(0, draws.size() - 1);
  std::vector<double> boot(static_cast<std::size_t>(opt.bootstrap));
  for (auto& b : boot) {
    double acc = 0.0;
    for (std::size_t s = 0; s < draws.size(); ++s) acc += k[pick(eng)];
    b = acc / N;
  }
  double bm = 0.0;
  for (double b : boot) bm += b;
  bm /= opt.bootstrap;
  double bv = 0.0;
  for (double b : boot) bv += (b - bm) * (b - bm);
  rep.stderr_ = std::sqrt(bv / (opt.bootstrap - 1));
  return rep;
}

// n = 2, m = 1: characteristic-function evaluation of d_t(0) for the
// variable (sqrt(2) B_t, c A_t) with c = -T_12^1. Given B_t = 0 the area has
// characteristic function lambda t / sinh(lambda t).
inline double heisenberg_density_oracle(const FoliationPoint& fp, double t) {
  if (fp.n != 2 || fp.m != 1) throw ArgumentError("oracle applies to n = 2, m = 1 only");
  if (!(t > 0.0)) throw ArgumentError("t must be positive");
  const double c = std::abs(fp.T(0, 1, 0));
  if (c == 0.0) throw ArgumentError("zero torsion: the density at 0 is infinite");
  boost::math::quadrature::exp_sinh<double> integrator;
  const double I = integrator.integrate([&](double l) { return std::exp(detail::log_x_over_sinh(l * t)); }, 1e-14);
  const double area_density = 2.0 * I / (2.0 * std::numbers::pi * c);
  return area_density / (4.0 * std::numbers::pi * t);
}

}  // namespace hcgb
