#pragma once

// Simplicial complexes, graded Hodge Laplacians and the heat supertrace.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hcgb/errors.hpp"
#include "hcgb/rng.hpp"

namespace hcgb {

using Simplex = std::vector<int>;

class Complex {
 public:
  Complex() = default;

  // All faces of the given simplices; vertex labels are arbitrary ints.
  static Complex from_maximal(const std::vector<Simplex>& maximal) {
    std::vector<std::set<Simplex>> faces;
    for (Simplex s : maximal) {
      if (s.empty()) throw ArgumentError("empty simplex");
      std::sort(s.begin(), s.end());
      if (std::adjacent_find(s.begin(), s.end()) != s.end()) throw ArgumentError("repeated vertex in a simplex");
      if (s.size() > 16) throw ArgumentError("simplex dimension above 15");
      const auto k = s.size();
      if (faces.size() < k) faces.resize(k);
      for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
        Simplex f;
        for (std::size_t q = 0; q < k; ++q)
          if (mask & (1u << q)) f.push_back(s[q]);
        faces[f.size() - 1].insert(f);
      }
    }
    Complex c;
    for (const auto& level : faces) c.simplices_.emplace_back(level.begin(), level.end());
    c.build_boundaries();
    return c;
  }

  // Explicit construction; rejects boundary maps that do not square to zero.
  static Complex from_boundaries(std::vector<std::vector<Simplex>> simplices, std::vector<Eigen::MatrixXd> boundary) {
    Complex c;
    c.simplices_ = std::move(simplices);
    c.boundary_ = std::move(boundary);
    c.check();
    return c;
  }

  int top_dimension() const { return static_cast<int>(simplices_.size()) - 1; }
  int count(int k) const {
    return k < 0 || k > top_dimension() ? 0 : static_cast<int>(simplices_[static_cast<std::size_t>(k)].size());
  }
  const std::vector<Simplex>& simplices(int k) const { return simplices_.at(static_cast<std::size_t>(k)); }

  // d_k : C_k -> C_{k-1} as a count(k-1) x count(k) matrix; zero-size outside range.
  Eigen::MatrixXd boundary(int k) const {
    if (k >= 1 && k <= top_dimension()) return boundary_[static_cast<std::size_t>(k - 1)];
    return Eigen::MatrixXd::Zero(count(k - 1), count(k));
  }

  long long euler_characteristic() const {
    long long chi = 0;
    for (int k = 0; k <= top_dimension(); ++k) chi += (k % 2 ? -1 : 1) * static_cast<long long>(count(k));
    return chi;
  }

  int total_size() const {
    int s = 0;
    for (int k = 0; k <= top_dimension(); ++k) s += count(k);
    return s;
  }

  int offset(int k) const {
    int s = 0;
    for (int q = 0; q < k; ++q) s += count(q);
    return s;
  }

  void check() const {
    if (static_cast<int>(boundary_.size()) != std::max(0, top_dimension()))
      throw StateError("need one boundary map per positive degree");
    for (int k = 1; k <= top_dimension(); ++k) {
      const auto& b = boundary_[static_cast<std::size_t>(k - 1)];
      if (b.rows() != count(k - 1) || b.cols() != count(k)) throw StateError("boundary map has the wrong shape");
    }
    for (int k = 2; k <= top_dimension(); ++k) {
      const double r = (boundary(k - 1) * boundary(k)).cwiseAbs().maxCoeff();
      if (r != 0.0) throw StateError("boundary of a boundary is nonzero in degree " + std::to_string(k));
    }
  }

 private:
  void build_boundaries() {
    boundary_.clear();
    for (int k = 1; k <= top_dimension(); ++k) {
      const auto& lower = simplices_[static_cast<std::size_t>(k - 1)];
      std::map<Simplex, int> index;
      for (std::size_t q = 0; q < lower.size(); ++q) index[lower[q]] = static_cast<int>(q);
      const auto& upper = simplices_[static_cast<std::size_t>(k)];
      Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(lower.size()), static_cast<Eigen::Index>(upper.size()));
      for (std::size_t c = 0; c < upper.size(); ++c)
        for (int drop = 0; drop <= k; ++drop) {
          Simplex f = upper[c];
          f.erase(f.begin() + drop);
          b(index.at(f), static_cast<Eigen::Index>(c)) = (drop % 2) ? -1.0 : 1.0;
        }
      boundary_.push_back(std::move(b));
    }
    check();
  }

  std::vector<std::vector<Simplex>> simplices_;
  std::vector<Eigen::MatrixXd> boundary_;
};

// Text format: one maximal simplex per line, vertex labels separated by
// whitespace; '#' starts a comment.
inline Complex parse_complex(std::istream& in) {
  std::vector<Simplex> maximal;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    Simplex s;
    std::string tok;
    while (ls >> tok) {
      std::size_t used = 0;
      int v = 0;
      try {
        v = std::stoi(tok, &used);
      } catch (...) {
        used = 0;
      }
      if (used != tok.size()) throw ParseError("line " + std::to_string(lineno) + ": bad vertex '" + tok + "'");
      s.push_back(v);
    }
    if (s.empty()) continue;
    try {
      maximal.push_back(s);
      Complex::from_maximal({s});
    } catch (const ArgumentError& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (maximal.empty()) throw ParseError("complex has no simplices");
  return Complex::from_maximal(maximal);
}

inline Complex load_complex(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open complex file '" + path + "'");
  return parse_complex(in);
}

// Erdos-Renyi graph on `vertices` vertices with edge probability p, filled
// in to its clique complex up to dimension max_dim.
inline Complex random_flag_complex(int vertices, double p, std::uint64_t seed, int max_dim = 2) {
  if (vertices < 1 || !(p >= 0.0 && p <= 1.0) || max_dim < 0) throw ArgumentError("invalid random complex parameters");
  auto eng = rng::make_engine(seed, 0, 0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<bool>> adj(static_cast<std::size_t>(vertices), std::vector<bool>(static_cast<std::size_t>(vertices), false));
  for (int a = 0; a < vertices; ++a)
    for (int b = a + 1; b < vertices; ++b)
      if (u(eng) < p) adj[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = adj[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = true;
  std::vector<Simplex> cliques;
  std::vector<Simplex> frontier;
  for (int a = 0; a < vertices; ++a) frontier.push_back({a});
  cliques = frontier;
  for (int k = 1; k <= max_dim; ++k) {
    std::vector<Simplex> next;
    for (const auto& s : frontier)
      for (int v = s.back() + 1; v < vertices; ++v) {
        bool ok = true;
        for (int w : s) ok = ok && adj[static_cast<std::size_t>(w)][static_cast<std::size_t>(v)];
        if (!ok) continue;
        Simplex t = s;
        t.push_back(v);
        next.push_back(t);
      }
    cliques.insert(cliques.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return Complex::from_maximal(cliques);
}

// ---------------------------------------------------------------------------
// Laplacians

struct GradedLaplacian {
  std::vector<int> offsets;              // start of degree k in the total space
  Eigen::MatrixXd D;                     // d + d^*, total space
  Eigen::MatrixXd Delta;                 // -D^2
  std::vector<Eigen::MatrixXd> blocks;   // Delta restricted to degree k
};

// d : C_k -> C_{k+1} is the transpose of the boundary. D = d + d^T and
// Delta = -D^2 is negative semidefinite and preserves degree.
inline GradedLaplacian hodge_laplacian(const Complex& c) {
  GradedLaplacian L;
  const int N = c.total_size();
  L.D = Eigen::MatrixXd::Zero(N, N);
  for (int k = 0; k <= c.top_dimension(); ++k) L.offsets.push_back(c.offset(k));
  for (int k = 1; k <= c.top_dimension(); ++k) {
    const auto b = c.boundary(k);
    L.D.block(c.offset(k - 1), c.offset(k), b.rows(), b.cols()) = b;
    L.D.block(c.offset(k), c.offset(k - 1), b.cols(), b.rows()) = b.transpose();
  }
  L.Delta = -(L.D * L.D);
  for (int k = 0; k <= c.top_dimension(); ++k)
    L.blocks.push_back(L.Delta.block(c.offset(k), c.offset(k), c.count(k), c.count(k)));
  return L;
}

inline constexpr double kSpectralTolerance = 1e-8;

// Dimension of the kernel of Delta_k per degree.
inline std::vector<int> harmonic_dimensions(const Complex& c, double rel_tol = kSpectralTolerance) {
  const auto L = hodge_laplacian(c);
  std::vector<int> out;
  for (const auto& B : L.blocks) {
    if (B.size() == 0) {
      out.push_back(0);
      continue;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B, Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    int z = 0;
    for (Eigen::Index q = 0; q < es.eigenvalues().size(); ++q) z += std::abs(es.eigenvalues()(q)) <= rel_tol * scale;
    out.push_back(z);
  }
  return out;
}

// sum_k (-1)^k tr exp(t Delta_k)
inline double supertrace_heat(const Complex& c, double t) {
  if (!(t > 0.0)) throw ArgumentError("t must be positive");
  const auto L = hodge_laplacian(c);
  double s = 0.0;
  for (std::size_t k = 0; k < L.blocks.size(); ++k) {
    if (L.blocks[k].size() == 0) continue;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L.blocks[k], Eigen::EigenvaluesOnly);
    double tr = 0.0;
    for (Eigen::Index q = 0; q < es.eigenvalues().size(); ++q) tr += std::exp(t * es.eigenvalues()(q));
    s += (k % 2 ? -1.0 : 1.0) * tr;
  }
  return s;
}

struct EigenPairing {
  double lambda = 0.0;
  int even_dim = 0;
  int odd_dim = 0;
  int rank_even_to_odd = 0;  // rank of D from the even eigenspace into the odd one
  int rank_odd_to_even = 0;
  bool passes = false;
};

struct PairingReport {
  std::vector<EigenPairing> eigenvalues;  // nonzero eigenvalues only
  std::vector<int> harmonic;              // zero-eigenspace dimension per degree
  long long harmonic_euler = 0;           // alternating sum of `harmonic`
  bool passes = true;
};

inline PairingReport eigenspace_pairing(const Complex& c, double rel_tol = kSpectralTolerance) {
  const auto L = hodge_laplacian(c);
  struct Vec {
    double lambda;
    int degree;
    Eigen::VectorXd v;  // in the total space
  };
  std::vector<Vec> all;
  const int N = c.total_size();
  double scale = 1.0;
  for (std::size_t k = 0; k < L.blocks.size(); ++k) {
    if (L.blocks[k].size() == 0) continue;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L.blocks[k]);
    for (Eigen::Index q = 0; q < es.eigenvalues().size(); ++q) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(N);
      v.segment(L.offsets[k], L.blocks[k].rows()) = es.eigenvectors().col(q);
      all.push_back({es.eigenvalues()(q), static_cast<int>(k), std::move(v)});
      scale = std::max(scale, std::abs(es.eigenvalues()(q)));
    }
  }
  std::sort(all.begin(), all.end(), [](const Vec& a, const Vec& b) { return a.lambda < b.lambda; });
  const double tol = rel_tol * scale;
  PairingReport rep;
  rep.harmonic.assign(static_cast<std::size_t>(c.top_dimension() + 1), 0);
  std::size_t q = 0;
  while (q < all.size()) {
    std::size_t e = q + 1;
    while (e < all.size() && all[e].lambda - all[e - 1].lambda <= tol) ++e;
    const double lambda = all[q].lambda;
    if (std::abs(lambda) <= tol) {
      for (std::size_t r = q; r < e; ++r) ++rep.harmonic[static_cast<std::size_t>(all[r].degree)];
      q = e;
      continue;
    }
    std::vector<const Eigen::VectorXd*> even, odd;
    for (std::size_t r = q; r < e; ++r) (all[r].degree % 2 ? odd : even).push_back(&all[r].v);
    EigenPairing p;
    p.lambda = lambda;
    p.even_dim = static_cast<int>(even.size());
    p.odd_dim = static_cast<int>(odd.size());
    auto rank_between = [&](const std::vector<const Eigen::VectorXd*>& from, const std::vector<const Eigen::VectorXd*>& to) {
      if (from.empty() || to.empty()) return 0;
      Eigen::MatrixXd F(N, static_cast<Eigen::Index>(from.size())), T(N, static_cast<Eigen::Index>(to.size()));
      for (std::size_t a = 0; a < from.size(); ++a) F.col(static_cast<Eigen::Index>(a)) = *from[a];
      for (std::size_t a = 0; a < to.size(); ++a) T.col(static_cast<Eigen::Index>(a)) = *to[a];
      const Eigen::MatrixXd M = T.transpose() * L.D * F;
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
      const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
      int r = 0;
      for (Eigen::Index s = 0; s < svd.singularValues().size(); ++s)
        r += svd.singularValues()(s) > rel_tol * std::max(smax, std::sqrt(std::abs(lambda)));
      return r;
    };
    p.rank_even_to_odd = rank_between(even, odd);
    p.rank_odd_to_even = rank_between(odd, even);
    p.passes = p.even_dim == p.odd_dim && p.rank_even_to_odd == p.even_dim && p.rank_odd_to_even == p.odd_dim;
    rep.passes = rep.passes && p.passes;
    rep.eigenvalues.push_back(p);
    q = e;
  }
  for (std::size_t k = 0; k < rep.harmonic.size(); ++k) rep.harmonic_euler += (k % 2 ? -1 : 1) * rep.harmonic[k];
  return rep;
}

// ---------------------------------------------------------------------------
// Deformation family: Delta_theta = -(d delta_theta + delta_theta d) with
// delta_theta = (1 - theta) d^T + theta W^{-1} d^T W interpolating between the
// standard adjoint and the adjoint for a diagonal weighted inner product W.
// Delta_theta commutes with d, so Str exp(t Delta_theta) = Str Id = chi.

inline Eigen::MatrixXd deformed_laplacian(const Complex& c, const Eigen::VectorXd& weights, double theta) {
  const int N = c.total_size();
  if (weights.size() != N) throw ArgumentError("one weight per simplex");
  if ((weights.array() <= 0.0).any()) throw ArgumentError("weights must be positive");
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(N, N);
  for (int k = 1; k <= c.top_dimension(); ++k) {
    const auto b = c.boundary(k);
    d.block(c.offset(k), c.offset(k - 1), b.cols(), b.rows()) = b.transpose();
  }
  const Eigen::MatrixXd dT = d.transpose();
  const Eigen::MatrixXd dw = weights.cwiseInverse().asDiagonal() * dT * weights.asDiagonal();
  const Eigen::MatrixXd delta = (1.0 - theta) * dT + theta * dw;
  return -(d * delta + delta * d);
}

inline double deformation_supertrace(const Complex& c, const Eigen::VectorXd& weights, double theta, double t) {
  if (!(t > 0.0)) throw ArgumentError("t must be positive");
  const Eigen::MatrixXd H = (t * deformed_laplacian(c, weights, theta)).exp();
  double s = 0.0;
  for (int k = 0; k <= c.top_dimension(); ++k)
    s += (k % 2 ? -1.0 : 1.0) * H.diagonal().segment(c.offset(k), c.count(k)).sum();
  return s;
}

}  // namespace hcgb
