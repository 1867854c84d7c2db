#pragma once

// Horizontal Chern-Gauss-Bonnet integrand, two ways: a closed form (Fermionic
// horizontal Euler form times the analytic vertical determinant factor) and a
// Monte Carlo supertrace over Brownian bridges.

#include <Eigen/Dense>
#include <boost/math/special_functions/zeta.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "hcgb/carnot.hpp"
#include "hcgb/chen.hpp"
#include "hcgb/errors.hpp"
#include "hcgb/fermion.hpp"
#include "hcgb/foliation.hpp"
#include "hcgb/model.hpp"
#include "hcgb/rng.hpp"

namespace hcgb {

// ---------------------------------------------------------------------------
// Building blocks

// Q(i,j,k,l) = R_{kli}^j + (1/eps) sum_r T_kl^r T_ij^r, the coefficient of
// a*_i a*_j a_l a_k in the quartic horizontal term.
inline double quartic_coefficient(const FoliationPoint& fp, int i, int j, int k, int l) {
  double q = fp.R(k, l, i, j);
  for (int r = 0; r < fp.m; ++r) q += fp.T(k, l, r) * fp.T(i, j, r) / fp.epsilon;
  return q;
}

// sum Q(i,j,k,l) a*_i a*_j a_l a_k on `d` generators (horizontal ones first).
inline FermionOp quartic_operator(const FoliationPoint& fp, int d) {
  FermionOp::Terms terms;
  for (int i = 0; i < fp.n; ++i)
    for (int j = 0; j < fp.n; ++j) {
      if (i == j) continue;
      for (int k = 0; k < fp.n; ++k)
        for (int l = 0; l < fp.n; ++l) {
          if (k == l) continue;
          const double q = quartic_coefficient(fp, i, j, k, l);
          if (q != 0.0) accumulate_word(terms, d, {i + 1, j + 1}, {l + 1, k + 1}, q);
        }
    }
  return FermionOp::from_terms(d, terms);
}

// sum_{r,s} T_{ij;r}^s b*_r b_s for one horizontal pair, on n + m generators.
inline FermionOp vertical_pair_operator(const FoliationPoint& fp, int i, int j) {
  const int d = fp.n + fp.m;
  FermionOp::Terms terms;
  for (int r = 0; r < fp.m; ++r)
    for (int s = 0; s < fp.m; ++s) {
      const double c = fp.Tcov_v(i, j, r, s);
      if (c != 0.0) accumulate_word(terms, d, {fp.n + r + 1}, {fp.n + s + 1}, c);
    }
  return FermionOp::from_terms(d, terms);
}

// (-1)^{n/2} / (2^{n/2} (n/2)!) * form_part((sum Q a*a*aa)^{n/2}, n): the
// horizontal Euler coefficient before the factor J.
inline double horizontal_euler_coefficient(const FoliationPoint& fp) {
  if (fp.n % 2) return 0.0;
  const int p = fp.n / 2;
  const FermionOp top = power(quartic_operator(fp, fp.n), p);
  double fact = 1.0;
  for (int k = 2; k <= p; ++k) fact *= k;
  return ((p % 2) ? -1.0 : 1.0) / (std::pow(2.0, p) * fact) * form_part(top, fp.n);
}

// Same coefficient from the double permutation sum with the pairing
// convention prod over odd i of Q(sigma(i), sigma(i+1), tau(i), tau(i+1)).
inline double permutation_euler_coefficient(const FoliationPoint& fp) {
  if (fp.n % 2) throw ArgumentError("permutation form needs n even");
  if (fp.n > 6) throw ArgumentError("permutation form limited to n <= 6");
  const int n = fp.n, p = n / 2;
  auto sign_of = [](const std::vector<int>& v) {
    int inv = 0;
    for (std::size_t a = 0; a < v.size(); ++a)
      for (std::size_t b = a + 1; b < v.size(); ++b) inv += v[a] > v[b];
    return (inv & 1) ? -1.0 : 1.0;
  };
  std::vector<int> sigma(static_cast<std::size_t>(n));
  std::iota(sigma.begin(), sigma.end(), 0);
  double total = 0.0;
  do {
    const double ss = sign_of(sigma);
    std::vector<int> tau(static_cast<std::size_t>(n));
    std::iota(tau.begin(), tau.end(), 0);
    do {
      double prod = ss * sign_of(tau);
      for (int q = 0; q < n && prod != 0.0; q += 2) {
        const auto u = static_cast<std::size_t>(q);
        prod *= quartic_coefficient(fp, sigma[u], sigma[u + 1], tau[u], tau[u + 1]);
      }
      total += prod;
    } while (std::next_permutation(tau.begin(), tau.end()));
  } while (std::next_permutation(sigma.begin(), sigma.end()));
  double fact = 1.0;
  for (int k = 2; k <= p; ++k) fact *= k;
  return ((p % 2) ? -1.0 : 1.0) / (std::pow(2.0, p) * fact) * total;
}

// ---------------------------------------------------------------------------
// Bridge moments of Levy areas

// Coefficients c_j of log(z / sin z) = sum_{j>=1} c_j z^{2j}: zeta(2j) / (j pi^{2j}).
inline double log_z_over_sin_coeff(int j) {
  return boost::math::zeta(2.0 * j) / (j * std::pow(std::numbers::pi, 2 * j));
}

// E[(sum_{i<j} Y_ij A_ij)^k | B_1 = 0] for antisymmetric Y, from
// log E exp(s l) = (1/2) sum_j c_j tr((-Y^2)^j) s^{2j}.
inline double area_linear_moment(const Eigen::MatrixXd& Y, int k) {
  if (k < 0) throw ArgumentError("negative moment order");
  if (k % 2) return 0.0;
  const int K = k / 2;
  std::vector<double> g(static_cast<std::size_t>(K + 1), 0.0);  // cumulant series in w = s^2
  const Eigen::MatrixXd S = -(Y * Y);
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(Y.rows(), Y.cols());
  for (int j = 1; j <= K; ++j) {
    P = P * S;
    g[static_cast<std::size_t>(j)] = 0.5 * log_z_over_sin_coeff(j) * P.trace();
  }
  // exp of a power series with zero constant term: e' = g' e.
  std::vector<double> e(static_cast<std::size_t>(K + 1), 0.0);
  e[0] = 1.0;
  for (int q = 1; q <= K; ++q) {
    double acc = 0.0;
    for (int j = 1; j <= q; ++j) acc += j * g[static_cast<std::size_t>(j)] * e[static_cast<std::size_t>(q - j)];
    e[static_cast<std::size_t>(q)] = acc / q;
  }
  double fact = 1.0;
  for (int q = 2; q <= k; ++q) fact *= q;
  return fact * e[static_cast<std::size_t>(K)];
}

// E[prod_r l_r(A)] for linear forms given as antisymmetric matrices, by
// polarization: prod l_r = (1/k!) sum_{S} (-1)^{k-|S|} (sum_{r in S} l_r)^k.
inline double area_product_moment(const std::vector<Eigen::MatrixXd>& forms) {
  const int k = static_cast<int>(forms.size());
  if (k == 0) return 1.0;
  if (k > 16) throw ArgumentError("too many factors");
  double total = 0.0;
  for (std::uint32_t S = 1; S < (1u << k); ++S) {
    Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(forms[0].rows(), forms[0].cols());
    for (int r = 0; r < k; ++r)
      if (S & (1u << r)) Y += forms[static_cast<std::size_t>(r)];
    const int sz = std::popcount(S);
    total += (((k - sz) % 2) ? -1.0 : 1.0) * area_linear_moment(Y, k);
  }
  double fact = 1.0;
  for (int q = 2; q <= k; ++q) fact *= q;
  return total / fact;
}

// E[det M(A) | B_1 = 0] with M_rs = sum_{i<j} A_ij T_{ij;r}^s.
inline double det_factor(const FoliationPoint& fp) {
  const int m = fp.m;
  if (m == 0) return 1.0;
  if (m > 6) throw ArgumentError("determinant factor limited to m <= 6");
  // Entry (r,s) as an antisymmetric matrix in (i,j).
  std::vector<Eigen::MatrixXd> entry(static_cast<std::size_t>(m * m), Eigen::MatrixXd::Zero(fp.n, fp.n));
  for (int r = 0; r < m; ++r)
    for (int s = 0; s < m; ++s)
      for (int i = 0; i < fp.n; ++i)
        for (int j = 0; j < fp.n; ++j) entry[static_cast<std::size_t>(r * m + s)](i, j) = fp.Tcov_v(i, j, r, s);
  std::vector<int> pi(static_cast<std::size_t>(m));
  std::iota(pi.begin(), pi.end(), 0);
  double total = 0.0;
  do {
    int inv = 0;
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b) inv += pi[static_cast<std::size_t>(a)] > pi[static_cast<std::size_t>(b)];
    std::vector<Eigen::MatrixXd> forms;
    bool zero = false;
    for (int r = 0; r < m && !zero; ++r) {
      const auto& f = entry[static_cast<std::size_t>(r * m + pi[static_cast<std::size_t>(r)])];
      zero = f.isZero(0);
      forms.push_back(f);
    }
    if (!zero) total += ((inv & 1) ? -1.0 : 1.0) * area_product_moment(forms);
  } while (std::next_permutation(pi.begin(), pi.end()));
  return total;
}

// ---------------------------------------------------------------------------
// Reports

struct IntegrandReport {
  int n = 0, m = 0;
  double epsilon = 1.0;
  std::optional<double> J_const;
  double euler_form_coeff = 0.0;
  double det_factor_m_part = 0.0;
  double integrand = 0.0;
  std::optional<double> chi_raw;
  std::optional<long long> chi_rounded;
  bool parity_shortcut = false;
  bool script_T_zero = false;
  std::string reason;
};

struct McSupertraceReport {
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  int grid = kDefaultGrid;
  double estimate = 0.0;
  double stderr_ = 0.0;
  double mean_supertrace = 0.0;  // E[Str A^N] before the J / N! factor
  std::optional<double> J_const;
  bool pathwise_zero = false;
};

inline constexpr std::size_t kMinSupertraceSamples = 1000;

// ---------------------------------------------------------------------------
// Closed form

inline IntegrandReport closed_form_integrand(const FoliationPoint& fp, std::optional<double> J = std::nullopt) {
  validate(fp);
  const auto sym = check_symmetry(fp);
  if (!sym.passes) throw StateError("symmetry condition fails (residual " + std::to_string(sym.residual) + ")");
  IntegrandReport rep;
  rep.n = fp.n;
  rep.m = fp.m;
  rep.epsilon = fp.epsilon;
  if (fp.n % 2 || fp.m % 2) {
    rep.parity_shortcut = true;
    rep.reason = fp.n % 2 ? "n odd" : "m odd";
    return rep;
  }
  rep.script_T_zero = script_T(fp).is_zero();
  if (rep.script_T_zero && fp.m >= 1) {
    // No top vertical degree without T_{ij;r}^s; J is not needed (and for
    // flat torsion it does not exist).
    rep.reason = "script T vanishes";
    return rep;
  }
  rep.J_const = J ? *J : j_constant(fp).value;
  rep.euler_form_coeff = *rep.J_const * horizontal_euler_coefficient(fp);
  rep.det_factor_m_part = det_factor(fp);
  rep.integrand = rep.euler_form_coeff * rep.det_factor_m_part;
  return rep;
}

// ---------------------------------------------------------------------------
// Monte Carlo supertrace:  (J / N!) E[Str A^N | B_1 = 0],  N = n/2 + m,
//   A = -(1/2) sum Q a*_i a*_j a_l a_k + sum_{i<j} sum_{r,s} T_{ij;r}^s b*_r b_s Area_ij.

struct SupertraceOptions {
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  int grid = kDefaultGrid;
  int workers = 1;
};

inline McSupertraceReport mc_supertrace(const FoliationPoint& fp, const SupertraceOptions& opt,
                                        std::optional<double> J = std::nullopt) {
  validate(fp);
  const auto sym = check_symmetry(fp);
  if (!sym.passes) throw StateError("symmetry condition fails (residual " + std::to_string(sym.residual) + ")");
  if (opt.samples < kMinSupertraceSamples)
    throw ArgumentError("supertrace estimate needs at least " + std::to_string(kMinSupertraceSamples) + " samples");
  if (fp.n % 2) throw ArgumentError("N = n/2 + m needs n even; the supertrace vanishes for odd n");
  const int d = fp.n + fp.m;
  if (d > 8) throw ArgumentError("n + m limited to 8 for the dense supertrace");
  const int N = fp.n / 2 + fp.m;

  const Eigen::MatrixXd H = (-0.5 * quartic_operator(fp, d)).matrix();
  struct Pair {
    int i, j;
    Eigen::MatrixXd V;
  };
  std::vector<Pair> pairs;
  for (int i = 0; i < fp.n; ++i)
    for (int j = i + 1; j < fp.n; ++j) {
      auto V = vertical_pair_operator(fp, i, j).matrix();
      if (!V.isZero(0)) pairs.push_back({i, j, std::move(V)});
    }

  const auto values = rng::parallel_map(opt.samples, opt.workers, [&](std::size_t s) {
    Eigen::MatrixXd A = H;
    if (!pairs.empty()) {
      const auto p = simulate_bridge(fp.n, opt.grid, opt.seed, s);
      for (const auto& pr : pairs) A += levy_area(p, pr.i + 1, pr.j + 1) * pr.V;
    }
    if (N == 0) return supertrace(FermionOp::identity(d));
    // Str(A^N) = Str(A^{ceil} A^{floor}).
    const int lo = N / 2, hi = N - lo;
    Eigen::MatrixXd Plo = Eigen::MatrixXd::Identity(A.rows(), A.cols());
    for (int q = 0; q < lo; ++q) Plo = Plo * A;
    Eigen::MatrixXd Phi = Plo;
    if (hi > lo) Phi = Phi * A;
    return supertrace_product(Phi, Plo);
  });

  McSupertraceReport rep;
  rep.samples = opt.samples;
  rep.seed = opt.seed;
  rep.grid = opt.grid;
  rep.pathwise_zero = std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
  if (rep.pathwise_zero) return rep;
  const auto me = rng::mean_and_error(values);
  rep.mean_supertrace = me.mean;
  rep.J_const = J ? *J : j_constant(fp).value;
  double fact = 1.0;
  for (int q = 2; q <= N; ++q) fact *= q;
  rep.estimate = *rep.J_const / fact * me.mean;
  rep.stderr_ = std::abs(*rep.J_const / fact) * me.stderr_;
  return rep;
}

// ---------------------------------------------------------------------------
// Euler characteristic of a homogeneous model

struct EulerReport {
  double chi_raw = 0.0;
  long long chi_rounded = 0;
  bool parity_shortcut = false;
  IntegrandReport integrand;
};

inline EulerReport euler_characteristic(const ModelGeometry& model) {
  if (!model.volume) throw ArgumentError("model '" + model.name + "' has no volume");
  EulerReport out;
  out.integrand = closed_form_integrand(model.fp);
  out.parity_shortcut = out.integrand.parity_shortcut;
  out.chi_raw = out.integrand.integrand * *model.volume;
  out.chi_rounded = std::llround(out.chi_raw);
  out.integrand.chi_raw = out.chi_raw;
  out.integrand.chi_rounded = out.chi_rounded;
  return out;
}

// Euler form from the permutation sum, J included.
inline double permutation_euler_form(const FoliationPoint& fp, std::optional<double> J = std::nullopt) {
  const double c = permutation_euler_coefficient(fp);
  return (J ? *J : j_constant(fp).value) * c;
}

}  // namespace hcgb
