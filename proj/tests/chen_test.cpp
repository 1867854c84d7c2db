#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <vector>
#include <numbers>

#include "hcgb/chen.hpp"

using namespace hcgb;

namespace {

// Direct discrete sums for the polygonal path, written without Chen's relation.
double oracle_level1(const BrownianPath& p, int letter, int K) {
  if (letter == 0) return 0.5 * p.dt() * K;
  return p(K, letter - 1) - p(0, letter - 1);
}

double oracle_level2(const BrownianPath& p, int a, int b, int K) {
  auto x = [&](int k, int l) { return l == 0 ? 0.5 * p.dt() * k : p(k, l - 1); };
  double s = 0.0;
  for (int k = 0; k < K; ++k) {
    const double da = x(k + 1, a) - x(k, a), db = x(k + 1, b) - x(k, b);
    s += (x(k, a) - x(0, a)) * db + 0.5 * da * db;
  }
  return s;
}

}  // namespace

TEST(Bridge, PinnedEndpointsAndDeterminism) {
  const auto p = simulate_bridge(3, 64, 7, 11);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(p(0, i), 0.0);
    EXPECT_EQ(p(64, i), 0.0);
  }
  const auto q = simulate_bridge(3, 64, 7, 11);
  EXPECT_EQ(p.values, q.values);
  const auto r = simulate_bridge(3, 64, 7, 12);
  EXPECT_NE(p.values, r.values);
}

TEST(Bridge, CoarseGridIsSubsampleOfFine) {
  const auto fine = simulate_bridge(2, 256, 3, 5);
  const auto coarse = simulate_bridge(2, 128, 3, 5);
  for (int k = 0; k <= 128; ++k)
    for (int i = 0; i < 2; ++i) EXPECT_EQ(coarse(k, i), fine(2 * k, i));
}

TEST(Bridge, RejectsBadGrid) {
  EXPECT_THROW(simulate_bridge(2, 100, 1), ArgumentError);
  EXPECT_THROW(simulate_bridge(0, 64, 1), ArgumentError);
  EXPECT_THROW(simulate_brownian(1, 10, -1.0, 1), ArgumentError);
}

TEST(Bridge, MarginalVarianceAtMidpoint) {
  // Var B_{1/2} = 1/4 for the pinned path.
  const int S = 20000;
  double ss = 0.0;
  for (int s = 0; s < S; ++s) {
    const auto p = simulate_bridge(1, 8, 99, static_cast<std::uint64_t>(s));
    ss += p(4, 0) * p(4, 0);
  }
  const double v = ss / S;
  EXPECT_NEAR(v, 0.25, 4.0 * 0.25 * std::sqrt(2.0 / S));
}

TEST(IteratedIntegral, LowLevelsMatchDirectSums) {
  const auto p = simulate_brownian(2, 50, 2.0, 4, 0);
  for (int K : {10, 37, 50}) {
    const double t = K * p.dt();
    for (int a = 0; a <= 2; ++a) {
      EXPECT_NEAR(iterated_integral(p, Word{a}, t), oracle_level1(p, a, K), 1e-12);
      for (int b = 0; b <= 2; ++b) EXPECT_NEAR(iterated_integral(p, Word{a, b}, t), oracle_level2(p, a, b, K), 1e-12);
    }
  }
}

TEST(IteratedIntegral, ShuffleIdentities) {
  const auto p = simulate_bridge(3, 128, 21, 2);
  const auto p2 = simulate_brownian(3, 100, 1.0, 21, 3);
  for (const auto* path : {&p, &p2}) {
    const auto& q = *path;
    auto I = [&](Word w) { return iterated_integral(q, w); };
    // (i) sh (j) = (ij) + (ji)
    EXPECT_NEAR(I({1}) * I({2}), I({1, 2}) + I({2, 1}), 1e-12);
    EXPECT_NEAR(I({3, 3}), 0.5 * I({3}) * I({3}), 1e-12);
    // (i) sh (jk) = (ijk) + (jik) + (jki)
    EXPECT_NEAR(I({1}) * I({2, 3}), I({1, 2, 3}) + I({2, 1, 3}) + I({2, 3, 1}), 1e-12);
    EXPECT_NEAR(I({0}) * I({1, 2}), I({0, 1, 2}) + I({1, 0, 2}) + I({1, 2, 0}), 1e-12);
    // (ij) sh (kl) has six terms
    const double lhs = I({1, 2}) * I({3, 1});
    const double rhs = I({1, 2, 3, 1}) + I({1, 3, 2, 1}) + I({1, 3, 1, 2}) + I({3, 1, 2, 1}) + I({3, 1, 1, 2}) +
                       I({3, 1, 1, 2});
    EXPECT_NEAR(lhs, rhs, 1e-12);
    // a single letter repeated: B^4 / 4!
    EXPECT_NEAR(I({2, 2, 2, 2}), std::pow(I({2}), 4) / 24.0, 1e-12);
  }
}

TEST(IteratedIntegral, Errors) {
  const auto p = simulate_bridge(2, 16, 1);
  EXPECT_THROW(iterated_integral(p, Word{}), ArgumentError);
  EXPECT_THROW(iterated_integral(p, Word{1, 2, 1, 2, 1}), ArgumentError);
  EXPECT_THROW(iterated_integral(p, Word{3}), ArgumentError);
  EXPECT_THROW(iterated_integral(p, Word{1}, 0.3), ArgumentError);
  EXPECT_THROW(iterated_integral(p, Word{1}, 1.5), ArgumentError);
}

TEST(LambdaCoeff, LowOrderClosedForms) {
  const auto p = simulate_brownian(2, 64, 0.5, 8, 1);
  const double t = 0.5;
  EXPECT_NEAR(lambda_coeff(p, Word{0}), t, 1e-14);
  EXPECT_NEAR(lambda_coeff(p, Word{1}), std::sqrt(2.0) * p(64, 0), 1e-13);
  EXPECT_NEAR(lambda_coeff(p, Word{1, 2}), 0.5 * levy_area(p, 1, 2), 1e-13);
  EXPECT_NEAR(lambda_coeff(p, Word{1, 1}), 0.0, 1e-13);
  // Antisymmetric in the two letters at level 2.
  EXPECT_NEAR(lambda_coeff(p, Word{0, 1}), -lambda_coeff(p, Word{1, 0}), 1e-13);
  // Level 3 for a single repeated letter is zero: log of exp(x) has no cubic part.
  EXPECT_NEAR(lambda_coeff(p, Word{2, 2, 2}), 0.0, 1e-12);
  EXPECT_NEAR(lambda_coeff(p, Word{1, 1, 1, 1}), 0.0, 1e-12);
}

// Expands the right-nested bracket [e_{w0},[e_{w1},...]] into words.
void expand_bracket(const std::vector<int>& w, std::size_t from, std::map<std::vector<int>, double>& out, double c) {
  if (from + 1 == w.size()) {
    out[{w[from]}] += c;
    return;
  }
  std::map<std::vector<int>, double> inner;
  expand_bracket(w, from + 1, inner, 1.0);
  for (const auto& [word, v] : inner) {
    std::vector<int> left{w[from]};
    left.insert(left.end(), word.begin(), word.end());
    std::vector<int> right = word;
    right.push_back(w[from]);
    out[left] += c * v;
    out[right] -= c * v;
  }
}

TEST(LambdaCoeff, Level3MatchesBakerCampbellHausdorff) {
  // Two-segment path with increments u, v: the log-signature is
  // u + v + [u,v]/2 + ([u,[u,v]] + [v,[v,u]])/12.
  BrownianPath p{2, 2, 1.0, false, 0, 0, {0.0, 0.0, 0.7, -0.2, 0.3, 0.9}};
  const double u1 = 0.7, u2 = -0.2, v1 = -0.4, v2 = 1.1;
  const double uv = u1 * v2 - u2 * v1;
  const double c1 = uv * (u1 - v1) / 12.0;  // on [e1,[e1,e2]]
  const double c2 = uv * (u2 - v2) / 12.0;  // on [e2,[e1,e2]]
  std::map<std::vector<int>, double> expected;
  expand_bracket({1, 1, 2}, 0, expected, c1);
  expand_bracket({2, 1, 2}, 0, expected, c2);

  std::map<std::vector<int>, double> got;
  const double norm = std::pow(2.0, 1.5);
  for (int a = 1; a <= 2; ++a)
    for (int b = 1; b <= 2; ++b)
      for (int c = 1; c <= 2; ++c) expand_bracket({a, b, c}, 0, got, lambda_coeff(p, Word{a, b, c}) / norm);
  for (int a = 1; a <= 2; ++a)
    for (int b = 1; b <= 2; ++b)
      for (int c = 1; c <= 2; ++c) {
        const std::vector<int> w{a, b, c};
        EXPECT_NEAR(got[w], expected[w], 1e-12) << a << b << c;
      }
  EXPECT_NEAR(lambda_coeff(p, Word{1, 2}), 0.5 * uv, 1e-12);
}

TEST(LevyArea, ExactAntisymmetryAndConsistency) {
  const auto p = simulate_bridge(4, 128, 5, 0);
  for (int i = 1; i <= 4; ++i)
    for (int j = 1; j <= 4; ++j) {
      if (i == j) continue;
      EXPECT_EQ(levy_area(p, i, j), -levy_area(p, j, i));
      EXPECT_NEAR(levy_area(p, i, j), iterated_integral(p, Word{i, j}) - iterated_integral(p, Word{j, i}), 1e-12);
    }
  EXPECT_THROW(levy_area(p, 2, 2), ArgumentError);
  EXPECT_THROW(levy_area(p, 1, 5), ArgumentError);
  EXPECT_EQ(all_levy_areas(p).size(), 6u);
}

TEST(LevyMgf, ClosedForm) {
  Eigen::Matrix2d Y;
  Y << 0, 1, -1, 0;
  EXPECT_NEAR(levy_mgf_closed_form(Y), 1.0 / std::sin(1.0), 1e-14);
  Eigen::Matrix4d Z = Eigen::Matrix4d::Zero();
  Z(0, 1) = 0.5, Z(1, 0) = -0.5, Z(2, 3) = 2.0, Z(3, 2) = -2.0;
  EXPECT_NEAR(levy_mgf_closed_form(Z), (0.5 / std::sin(0.5)) * (2.0 / std::sin(2.0)), 1e-12);
  Y *= 3.2;
  EXPECT_THROW(levy_mgf_closed_form(Y), ArgumentError);
}

TEST(LevyMgf, ScalarMonteCarloReduced) {
  MonteCarloOptions opt;
  opt.samples = 20000;
  opt.grid = 256;
  opt.seed = 17;
  const auto rep = mgf_levy(1.0, opt);
  EXPECT_NEAR(rep.mgf.estimate, 1.0 / std::sin(1.0), 4.0 * rep.mgf.stderr_);
  EXPECT_NEAR(rep.area_variance, 1.0 / 3.0, 4.0 * rep.area_variance_stderr + 1.0 / 256);
  EXPECT_NEAR(rep.area_mean, 0.0, 4.0 * std::sqrt(rep.area_variance / opt.samples));
  EXPECT_THROW(mgf_levy(std::numbers::pi, opt), ArgumentError);
  EXPECT_THROW(mgf_levy(-4.0, opt), ArgumentError);
}

TEST(LevyMgf, PolygonAreaVarianceHasOneOverNBias) {
  // Writing the bridge as chord plus independent sub-bridges X_k per segment,
  // A - A_N = sum_k [area(X_k) + 2 (int X_k) x chord slope]. The two pieces
  // have variances h^2/3 and (2/3) h (1 - h) per segment, h = 1/N, so
  // Var A_N = 1/3 - 1/N + 2/(3 N^2). At N = 4 this is 1/8.
  MonteCarloOptions opt;
  opt.samples = 40000;
  opt.grid = 4;
  opt.seed = 2;
  const auto rep = mgf_levy(0.5, opt);
  EXPECT_NEAR(rep.area_variance, 0.125, 4.0 * rep.area_variance_stderr);
  EXPECT_GT(std::abs(rep.area_variance - 1.0 / 3.0), 10.0 * rep.area_variance_stderr);
}

TEST(LevyMgf, WorkerCountDoesNotChangeResult) {
  MonteCarloOptions opt;
  opt.samples = 2000;
  opt.grid = 64;
  opt.seed = 9;
  opt.workers = 1;
  const auto a = mgf_levy(1.0, opt);
  opt.workers = 3;
  const auto b = mgf_levy(1.0, opt);
  EXPECT_EQ(a.mgf.estimate, b.mgf.estimate);
  EXPECT_EQ(a.area_variance, b.area_variance);
}

TEST(LevyMgf, MatrixGeneratorReduced) {
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(3, 3);
  Y(0, 1) = 0.6, Y(1, 0) = -0.6, Y(1, 2) = 0.8, Y(2, 1) = -0.8;
  MonteCarloOptions opt;
  opt.samples = 20000;
  opt.grid = 128;
  opt.seed = 4;
  const auto rep = mgf_levy_matrix(Y, opt);
  EXPECT_NEAR(rep.closed_form, 1.0 / std::sin(1.0), 1e-12);  // single eigenvalue pair +-i
  EXPECT_NEAR(rep.mgf.estimate, rep.closed_form, 4.0 * rep.mgf.stderr_);
  Eigen::MatrixXd bad = Y;
  bad(0, 1) = 1.0;
  EXPECT_THROW(mgf_levy_matrix(bad, opt), ArgumentError);
}

TEST(GridRefinement, LevelTwoChangesShrinkLikeInverseSqrtN) {
  // A_N is the conditional expectation of A_{2N} given the coarse points, so
  // E(A_{2N} - A_N)^2 = Var A_{2N} - Var A_N = (1 - 1/N) / (2N).
  const int S = 1000;
  for (int N : {64, 256}) {
    double ss = 0.0;
    for (int s = 0; s < S; ++s) {
      const auto fine = simulate_bridge(2, 2 * N, 31, static_cast<std::uint64_t>(s));
      const auto coarse = simulate_bridge(2, N, 31, static_cast<std::uint64_t>(s));
      const double d = levy_area(fine, 1, 2) - levy_area(coarse, 1, 2);
      ss += d * d;
    }
    const double rms = std::sqrt(ss / S);
    const double expected = std::sqrt((1.0 - 1.0 / N) / (2.0 * N));
    EXPECT_NEAR(rms / expected, 1.0, 0.1) << "N=" << N;
  }
}

TEST(ScalarPotential, ReproducesHeatKernelWithPotential) {
  MonteCarloOptions opt;
  opt.samples = 200000;
  opt.grid = 2;
  opt.seed = 5;
  const auto rep = scalar_potential_kernel(1.0, 0.01, opt);
  EXPECT_NEAR(rep.exact, std::exp(0.01) / std::sqrt(4.0 * std::numbers::pi * 0.01), 1e-14);
  EXPECT_NEAR(rep.estimate / rep.exact, 1.0, 0.01);
  EXPECT_NEAR(rep.lambda0_mean, 0.01, 1e-12);
}
