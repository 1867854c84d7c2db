#pragma once

// Brownian paths on a dyadic grid, iterated Stratonovich integrals of the
// piecewise-linear interpolant, Chen-series coefficients and Levy areas.
//
// Letters of a word are 0..d: letter 0 is time, integrated against ds/2 so
// that the time coefficient Lambda_(0) equals t; letters 1..d are the
// Brownian coordinates.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "hcgb/errors.hpp"
#include "hcgb/rng.hpp"

namespace hcgb {

inline constexpr int kMaxWordLength = 4;
inline constexpr int kDefaultGrid = 1024;

struct BrownianPath {
  int dim = 0;
  int steps = 0;
  double horizon = 1.0;
  bool pinned = false;  // bridge: B_0 = B_horizon = 0
  std::uint64_t seed = 0;
  std::uint64_t sample = 0;
  std::vector<double> values;  // (steps + 1) x dim, row-major

  double operator()(int k, int i) const { return values[static_cast<std::size_t>(k) * dim + i]; }
  double& operator()(int k, int i) { return values[static_cast<std::size_t>(k) * dim + i]; }
  double dt() const { return horizon / steps; }
};

using BridgePath = BrownianPath;

namespace detail {
inline bool is_power_of_two(int n) { return n >= 2 && (n & (n - 1)) == 0; }
}  // namespace detail

// Brownian bridge on [0,1] by midpoint bisection. Coordinate i draws from
// substream (seed, sample, i) one dyadic level at a time, so the path on a
// grid of N/2 steps is exactly the even-indexed subsample of the N-step path.
inline BrownianPath simulate_bridge(int dim, int steps, std::uint64_t seed, std::uint64_t sample = 0) {
  if (dim < 1) throw ArgumentError("bridge dimension must be >= 1");
  if (!detail::is_power_of_two(steps)) throw ArgumentError("grid size must be a power of two >= 2");
  BrownianPath p{dim, steps, 1.0, true, seed, sample, std::vector<double>(static_cast<std::size_t>(steps + 1) * dim, 0.0)};
  for (int i = 0; i < dim; ++i) {
    // Fresh distribution per coordinate: it caches a spare variate.
    std::normal_distribution<double> normal(0.0, 1.0);
    auto eng = rng::make_engine(seed, sample, static_cast<std::uint64_t>(i));
    for (int h = steps / 2; h >= 1; h /= 2) {
      // Midpoint of a bridge over an interval of length 2h/steps has
      // conditional variance h / (2 steps).
      const double sd = std::sqrt(static_cast<double>(h) / (2.0 * steps));
      for (int k = h; k < steps; k += 2 * h) p(k, i) = 0.5 * (p(k - h, i) + p(k + h, i)) + sd * normal(eng);
    }
  }
  return p;
}

// Free Brownian motion on [0, horizon] from independent increments.
inline BrownianPath simulate_brownian(int dim, int steps, double horizon, std::uint64_t seed, std::uint64_t sample = 0) {
  if (dim < 1) throw ArgumentError("path dimension must be >= 1");
  if (steps < 1) throw ArgumentError("need at least one step");
  if (!(horizon > 0.0)) throw ArgumentError("horizon must be positive");
  BrownianPath p{dim, steps, horizon, false, seed, sample, std::vector<double>(static_cast<std::size_t>(steps + 1) * dim, 0.0)};
  const double sd = std::sqrt(horizon / steps);
  for (int i = 0; i < dim; ++i) {
    std::normal_distribution<double> normal(0.0, 1.0);
    auto eng = rng::make_engine(seed, sample, static_cast<std::uint64_t>(i));
    for (int k = 1; k <= steps; ++k) p(k, i) = p(k - 1, i) + sd * normal(eng);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Words

struct Word {
  std::vector<int> letters;

  Word() = default;
  Word(std::initializer_list<int> l) : letters(l) {}
  explicit Word(std::vector<int> l) : letters(std::move(l)) {}

  int length() const { return static_cast<int>(letters.size()); }
  int zeros() const { return static_cast<int>(std::count(letters.begin(), letters.end(), 0)); }
  int weight() const { return length() + zeros(); }
};

namespace detail {

inline int grid_index(const BrownianPath& p, double t) {
  if (!(t >= 0.0) || t > p.horizon * (1.0 + 1e-12)) throw ArgumentError("time outside the path horizon");
  const double x = t / p.dt();
  const double k = std::round(x);
  if (std::abs(x - k) > 1e-9 * std::max(1.0, x)) throw ArgumentError("time is not a grid point");
  return static_cast<int>(k);
}

inline void check_word(const BrownianPath& p, const Word& w) {
  if (w.length() < 1) throw ArgumentError("empty word");
  if (w.length() > kMaxWordLength) throw ArgumentError("word longer than " + std::to_string(kMaxWordLength));
  for (int l : w.letters)
    if (l < 0 || l > p.dim) throw ArgumentError("letter " + std::to_string(l) + " outside 0.." + std::to_string(p.dim));
}

}  // namespace detail

// Stratonovich integral over the simplex 0 < s_1 < ... < s_k < t of
// dB^{w_1} ... dB^{w_k} for the piecewise-linear path, by Chen's relation:
// each linear segment contributes the tensor exponential of its increment.
inline double iterated_integral(const BrownianPath& p, const Word& w, double t = -1.0) {
  detail::check_word(p, w);
  const int K = t < 0.0 ? p.steps : detail::grid_index(p, t);
  const int k = w.length();
  std::array<double, kMaxWordLength + 1> S{};
  S[0] = 1.0;
  std::array<double, kMaxWordLength> d{};
  const double half_dt = 0.5 * p.dt();
  for (int step = 0; step < K; ++step) {
    for (int q = 0; q < k; ++q) {
      const int l = w.letters[static_cast<std::size_t>(q)];
      d[static_cast<std::size_t>(q)] = l == 0 ? half_dt : p(step + 1, l - 1) - p(step, l - 1);
    }
    // S_j <- sum_i S_i * d_{i+1} ... d_j / (j - i)!, highest j first.
    for (int j = k; j >= 1; --j) {
      double acc = 0.0, prod = 1.0;
      for (int i = j - 1; i >= 0; --i) {
        prod *= d[static_cast<std::size_t>(i)] / (j - i);
        acc += S[static_cast<std::size_t>(i)] * prod;
      }
      S[static_cast<std::size_t>(j)] += acc;
    }
  }
  return S[static_cast<std::size_t>(k)];
}

// Lambda_I(B)_t = 2^{d(I)/2} sum_sigma (-1)^{e(sigma)} / (k^2 C(k-1, e(sigma)))
//                 * int dB^{sigma^{-1}(I)},  e = number of descents of sigma.
inline double lambda_coeff(const BrownianPath& p, const Word& w, double t = -1.0) {
  detail::check_word(p, w);
  const int k = w.length();
  std::vector<int> sigma(static_cast<std::size_t>(k));
  std::iota(sigma.begin(), sigma.end(), 0);
  auto binom = [](int n, int r) {
    double b = 1.0;
    for (int i = 1; i <= r; ++i) b = b * (n - r + i) / i;
    return b;
  };
  double total = 0.0;
  do {
    int descents = 0;
    for (int q = 0; q + 1 < k; ++q) descents += sigma[static_cast<std::size_t>(q)] > sigma[static_cast<std::size_t>(q + 1)];
    std::vector<int> inv(static_cast<std::size_t>(k));
    for (int q = 0; q < k; ++q) inv[static_cast<std::size_t>(sigma[static_cast<std::size_t>(q)])] = q;
    Word permuted;
    for (int q = 0; q < k; ++q) permuted.letters.push_back(w.letters[static_cast<std::size_t>(inv[static_cast<std::size_t>(q)])]);
    const double c = ((descents & 1) ? -1.0 : 1.0) / (k * k * binom(k - 1, descents));
    total += c * iterated_integral(p, permuted, t);
  } while (std::next_permutation(sigma.begin(), sigma.end()));
  return std::pow(2.0, 0.5 * w.weight()) * total;
}

// int_0^t B^i dB^j - B^j dB^i (1-based coordinates) for the polygonal path.
// Computed in canonical order so that swapping i and j negates exactly.
inline double levy_area(const BrownianPath& p, int i, int j, double t = -1.0) {
  if (i == j) throw ArgumentError("Levy area needs i != j");
  if (i < 1 || j < 1 || i > p.dim || j > p.dim) throw ArgumentError("coordinate outside 1..dim");
  const int K = t < 0.0 ? p.steps : detail::grid_index(p, t);
  const int a = std::min(i, j) - 1, b = std::max(i, j) - 1;
  double s = 0.0;
  for (int k = 0; k < K; ++k) s += p(k, a) * (p(k + 1, b) - p(k, b)) - p(k, b) * (p(k + 1, a) - p(k, a));
  return i < j ? s : -s;
}

// All areas A_ij, i < j, of a path at its horizon, ordered (1,2),(1,3),...
inline std::vector<double> all_levy_areas(const BrownianPath& p) {
  std::vector<double> out;
  for (int i = 1; i <= p.dim; ++i)
    for (int j = i + 1; j <= p.dim; ++j) out.push_back(levy_area(p, i, j));
  return out;
}

// ---------------------------------------------------------------------------
// Conditional Levy-area moment generating functions

struct McEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

struct LevyMgfReport {
  McEstimate mgf;
  double closed_form = 0.0;
  double area_mean = 0.0;
  double area_variance = 0.0;
  double area_variance_stderr = 0.0;
};

// prod mu_k / sin(mu_k) over the eigenvalue pairs +-i mu_k of an
// antisymmetric generator Y; the bridge expectation of exp(sum_{i<j} Y_ij A_ij).
inline double levy_mgf_closed_form(const Eigen::MatrixXd& Y) {
  const Eigen::MatrixXd S = -(Y * Y);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
  double logv = 0.0;
  for (Eigen::Index q = 0; q < es.eigenvalues().size(); ++q) {
    const double mu = std::sqrt(std::max(0.0, es.eigenvalues()(q)));
    if (mu >= std::numbers::pi) throw ArgumentError("generator eigenvalue at or beyond pi: expectation diverges");
    if (mu > 1e-8) logv += 0.5 * std::log(mu / std::sin(mu));  // each mu appears twice
  }
  return std::exp(logv);
}

struct MonteCarloOptions {
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  int grid = kDefaultGrid;
  int workers = 1;
};

// E[exp(sum_{i<j} Y_ij A_ij) | B_1 = 0] over d-dimensional bridges.
inline LevyMgfReport mgf_levy_matrix(const Eigen::MatrixXd& Y, const MonteCarloOptions& opt) {
  const int d = static_cast<int>(Y.rows());
  if (d < 2 || Y.cols() != d) throw ArgumentError("generator must be square with size >= 2");
  if (!(Y + Y.transpose()).isZero(0)) throw ArgumentError("generator must be antisymmetric");
  if (opt.samples < 2) throw ArgumentError("need at least two samples");
  LevyMgfReport rep;
  rep.closed_form = levy_mgf_closed_form(Y);
  struct PerSample {
    double e = 0.0, a = 0.0;
  };
  const auto vals = rng::parallel_map(opt.samples, opt.workers, [&](std::size_t s) {
    const auto p = simulate_bridge(d, opt.grid, opt.seed, s);
    double lin = 0.0, first = 0.0;
    bool have_first = false;
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) {
        if (Y(i, j) == 0.0) continue;
        const double a = levy_area(p, i + 1, j + 1);
        if (!have_first) {
          first = a;
          have_first = true;
        }
        lin += Y(i, j) * a;
      }
    return PerSample{std::exp(lin), first};
  });
  std::vector<double> e(vals.size()), a(vals.size()), a2(vals.size());
  for (std::size_t s = 0; s < vals.size(); ++s) {
    e[s] = vals[s].e;
    a[s] = vals[s].a;
  }
  const auto me = rng::mean_and_error(e);
  const auto ma = rng::mean_and_error(a);
  for (std::size_t s = 0; s < vals.size(); ++s) a2[s] = (a[s] - ma.mean) * (a[s] - ma.mean);
  const auto mv = rng::mean_and_error(a2);
  rep.mgf = {me.mean, me.stderr_, opt.samples, opt.seed};
  rep.area_mean = ma.mean;
  rep.area_variance = ma.variance;
  rep.area_variance_stderr = mv.stderr_;
  return rep;
}

// Scalar case: E[exp(lambda A_12) | B_1 = 0] = lambda / sin(lambda), |lambda| < pi.
inline LevyMgfReport mgf_levy(double lambda, const MonteCarloOptions& opt) {
  if (!(std::abs(lambda) < std::numbers::pi)) throw ArgumentError("|lambda| must be below pi");
  Eigen::Matrix2d Y;
  Y << 0.0, lambda, -lambda, 0.0;
  return mgf_levy_matrix(Y, opt);
}

// ---------------------------------------------------------------------------
// Leading-order Chen parametrix for L = d^2/dx^2 + c on the line:
// p_t(0,0) ~ density at 0 of Lambda_(1) times E[exp(c Lambda_(0))].

struct ScalarPotentialReport {
  double estimate = 0.0;
  double exact = 0.0;
  double lambda1_variance = 0.0;
  double lambda0_mean = 0.0;
  std::size_t samples = 0;
};

inline ScalarPotentialReport scalar_potential_kernel(double c, double t, const MonteCarloOptions& opt) {
  if (!(t > 0.0)) throw ArgumentError("t must be positive");
  if (opt.samples < 2) throw ArgumentError("need at least two samples");
  struct PerSample {
    double l1 = 0.0, l0 = 0.0;
  };
  const auto vals = rng::parallel_map(opt.samples, opt.workers, [&](std::size_t s) {
    const auto p = simulate_brownian(1, opt.grid, t, opt.seed, s);
    return PerSample{lambda_coeff(p, Word{1}), lambda_coeff(p, Word{0})};
  });
  std::vector<double> l1(vals.size()), w(vals.size());
  double l0 = 0.0;
  for (std::size_t s = 0; s < vals.size(); ++s) {
    l1[s] = vals[s].l1;
    w[s] = std::exp(c * vals[s].l0);
    l0 += vals[s].l0;
  }
  ScalarPotentialReport rep;
  // Lambda_(1) = sqrt(2) B_t is centred Gaussian: density at 0 from its variance.
  double ss = 0.0;
  for (double v : l1) ss += v * v;
  rep.lambda1_variance = ss / static_cast<double>(l1.size());
  rep.lambda0_mean = l0 / static_cast<double>(vals.size());
  rep.estimate = rng::mean_and_error(w).mean / std::sqrt(2.0 * std::numbers::pi * rep.lambda1_variance);
  rep.exact = std::exp(c * t) / std::sqrt(4.0 * std::numbers::pi * t);
  rep.samples = opt.samples;
  return rep;
}

}  // namespace hcgb
