#pragma once

// Creation/annihilation calculus on the exterior algebra of R^d.
//
// Basis vectors of the 2^d-dimensional exterior algebra are indexed by
// bitmasks: bit (i-1) set means theta_i is a factor, factors written in
// increasing index order. Generators are 1-based in the public API.
//
// An operator keeps its dense matrix on that basis and, when it was built
// from monomials, the normal-ordered expansion
//   sum c_{IJ} a*_{i1}...a*_{ik} a_{j1}...a_{jl}   (i's and j's increasing).

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hcgb/errors.hpp"

namespace hcgb {

using Mask = std::uint32_t;

inline constexpr int kMaxFermionDim = 12;

namespace detail {

inline int popcount(Mask m) { return std::popcount(m); }

// Bits of m strictly below position p (0-based).
inline int count_below(Mask m, int p) { return std::popcount(m & ((Mask{1} << p) - 1)); }

inline double parity_sign(int k) { return (k & 1) ? -1.0 : 1.0; }

// Sign of sorting the concatenation of two increasing sequences A then B:
// one transposition per pair (a in A, b in B) with a > b.
inline int merge_inversions(Mask a, Mask b) {
  int inv = 0;
  while (b) {
    const int p = std::countr_zero(b);
    inv += std::popcount(a >> (p + 1));
    b &= b - 1;
  }
  return inv;
}

// Applies a*_I a_J (normal ordered) to basis vector e_S. Returns false when
// the result is zero.
inline bool apply_normal(Mask I, Mask J, Mask S, Mask& out, int& sign) {
  if ((S & J) != J) return false;
  int s = 0;
  Mask cur = S;
  // a_{j1}...a_{jl}: rightmost (largest index) acts first.
  for (Mask rest = J; rest;) {
    const int p = 31 - std::countl_zero(rest);
    s += count_below(cur, p);
    cur &= ~(Mask{1} << p);
    rest &= ~(Mask{1} << p);
  }
  if (cur & I) return false;
  for (Mask rest = I; rest;) {
    const int p = 31 - std::countl_zero(rest);
    s += count_below(cur, p);
    cur |= Mask{1} << p;
    rest &= ~(Mask{1} << p);
  }
  out = cur;
  sign = (s & 1) ? -1 : 1;
  return true;
}

}  // namespace detail

class FermionOp {
 public:
  using Key = std::pair<Mask, Mask>;  // (creators, annihilators)
  using Terms = std::map<Key, double>;

  FermionOp() : FermionOp(0) {}

  explicit FermionOp(int d) : d_(check_dim(d)), mat_(Eigen::MatrixXd::Zero(size_of(d), size_of(d))), terms_(Terms{}) {}

  static FermionOp identity(int d) {
    FermionOp op(d);
    op.mat_.setIdentity();
    (*op.terms_)[{0, 0}] = 1.0;
    return op;
  }

  static FermionOp from_terms(int d, const Terms& terms) {
    FermionOp op(d);
    const Mask full = full_mask(d);
    for (const auto& [key, c] : terms) {
      if ((key.first & ~full) || (key.second & ~full))
        throw ArgumentError("monomial index outside 1.." + std::to_string(d));
      if (c == 0.0) continue;
      (*op.terms_)[key] += c;
      op.add_monomial_matrix(key.first, key.second, c);
    }
    op.prune();
    return op;
  }

  // Matrix-only operator; the normal-ordered form is recovered on demand.
  static FermionOp from_matrix(int d, Eigen::MatrixXd m) {
    FermionOp op(d);
    if (m.rows() != op.mat_.rows() || m.cols() != op.mat_.cols())
      throw ArgumentError("matrix size does not match 2^d");
    op.mat_ = std::move(m);
    op.terms_.reset();
    return op;
  }

  int dim() const { return d_; }
  Eigen::Index size() const { return mat_.rows(); }
  const Eigen::MatrixXd& matrix() const { return mat_; }

  bool has_terms() const { return terms_.has_value(); }

  const Terms& terms() const {
    if (!terms_) throw StateError("operator has no cached monomial expansion");
    return *terms_;
  }

  // Normal-ordered coefficients; recovered from the matrix when not cached.
  // The recovery is O(8^d).
  Terms normal_ordered() const {
    if (terms_) return *terms_;
    return terms_from_matrix(d_, mat_);
  }

  double coefficient(Mask I, Mask J) const {
    if (terms_) {
      auto it = terms_->find({I, J});
      return it == terms_->end() ? 0.0 : it->second;
    }
    const Terms t = terms_from_matrix(d_, mat_);
    auto it = t.find({I, J});
    return it == t.end() ? 0.0 : it->second;
  }

  FermionOp& operator+=(const FermionOp& o) {
    require_same_dim(o);
    mat_ += o.mat_;
    if (terms_ && o.terms_) {
      for (const auto& [k, c] : *o.terms_) (*terms_)[k] += c;
      prune();
    } else {
      terms_.reset();
    }
    return *this;
  }

  FermionOp& operator-=(const FermionOp& o) { return *this += (-1.0) * o; }

  FermionOp& operator*=(double s) {
    mat_ *= s;
    if (terms_) {
      for (auto& [k, c] : *terms_) c *= s;
      prune();
    }
    return *this;
  }

  friend FermionOp operator+(FermionOp a, const FermionOp& b) { return a += b; }
  friend FermionOp operator-(FermionOp a, const FermionOp& b) { return a -= b; }
  friend FermionOp operator*(double s, FermionOp a) { return a *= s; }
  friend FermionOp operator*(FermionOp a, double s) { return a *= s; }

  static FermionOp compose(const FermionOp& a, const FermionOp& b) {
    a.require_same_dim(b);
    FermionOp out(a.d_);
    out.mat_.noalias() = a.mat_ * b.mat_;
    if (a.terms_ && b.terms_) {
      Terms t;
      for (const auto& [ka, ca] : *a.terms_)
        for (const auto& [kb, cb] : *b.terms_) multiply_monomials(ka, kb, ca * cb, t);
      out.terms_ = std::move(t);
      out.prune();
    } else {
      out.terms_.reset();
    }
    return out;
  }

  friend FermionOp operator*(const FermionOp& a, const FermionOp& b) { return compose(a, b); }

  // Product of two normal-ordered monomials, accumulated into `out`.
  // a*_I a_J a*_K a_L: each annihilator of J (largest first) either passes
  // every remaining creator of K or contracts with its partner in K.
  static void multiply_monomials(Key left, Key right, double coeff, Terms& out) {
    const auto [I, J] = left;
    const auto [K, L] = right;
    struct Branch {
      Mask K;
      Mask passed;
      int sign;
    };
    std::vector<Branch> cur{{K, 0, 0}}, next;
    for (Mask rest = J; rest;) {
      const int p = 31 - std::countl_zero(rest);
      const Mask bit = Mask{1} << p;
      rest &= ~bit;
      next.clear();
      for (const Branch& br : cur) {
        next.push_back({br.K, br.passed | bit, br.sign + detail::popcount(br.K)});
        if (br.K & bit) next.push_back({br.K & ~bit, br.passed, br.sign + detail::count_below(br.K, p)});
      }
      std::swap(cur, next);
    }
    for (const Branch& br : cur) {
      if (I & br.K) continue;
      if (br.passed & L) continue;
      const int s = br.sign + detail::merge_inversions(I, br.K) + detail::merge_inversions(br.passed, L);
      out[{I | br.K, br.passed | L}] += detail::parity_sign(s) * coeff;
    }
  }

  static Terms terms_from_matrix(int d, const Eigen::MatrixXd& m) {
    const Mask n = Mask{1} << d;
    Eigen::MatrixXd residual = m;
    Terms out;
    std::vector<Mask> order(n);
    for (Mask s = 0; s < n; ++s) order[s] = s;
    std::stable_sort(order.begin(), order.end(),
                     [](Mask a, Mask b) { return detail::popcount(a) < detail::popcount(b); });
    int level = -1;
    std::vector<std::pair<Key, double>> pending;
    auto flush = [&] {
      for (const auto& [k, c] : pending) subtract_monomial(residual, k.first, k.second, c);
      pending.clear();
    };
    for (Mask J : order) {
      const int l = detail::popcount(J);
      if (l != level) {
        flush();
        level = l;
      }
      const double sgn = detail::parity_sign(l * (l - 1) / 2);
      for (Mask I = 0; I < n; ++I) {
        const double v = residual(I, J);
        if (v != 0.0) {
          const double c = sgn * v;
          out[{I, J}] = c;
          pending.push_back({{I, J}, c});
        }
      }
    }
    flush();
    return out;
  }

  static Mask full_mask(int d) { return d == 0 ? 0 : (Mask{1} << d) - 1; }

 private:
  static int check_dim(int d) {
    if (d < 0 || d > kMaxFermionDim)
      throw ArgumentError("fermion dimension must be in 0.." + std::to_string(kMaxFermionDim));
    return d;
  }
  static Eigen::Index size_of(int d) { return Eigen::Index{1} << d; }

  void require_same_dim(const FermionOp& o) const {
    if (o.d_ != d_) throw ArgumentError("fermion operators of different dimension");
  }

  void add_monomial_matrix(Mask I, Mask J, double c) { subtract_monomial(mat_, I, J, -c); }

  static void subtract_monomial(Eigen::MatrixXd& m, Mask I, Mask J, double c) {
    const Mask n = static_cast<Mask>(m.rows());
    for (Mask S = 0; S < n; ++S) {
      Mask out;
      int sign;
      if (detail::apply_normal(I, J, S, out, sign)) m(out, S) -= sign * c;
    }
  }

  void prune() {
    if (!terms_) return;
    for (auto it = terms_->begin(); it != terms_->end();) {
      if (it->second == 0.0)
        it = terms_->erase(it);
      else
        ++it;
    }
  }

  int d_;
  Eigen::MatrixXd mat_;
  std::optional<Terms> terms_;
};

// ---------------------------------------------------------------------------
// Construction helpers

// Adds coeff * a*_{creators[0]} a*_{creators[1]} ... a_{annihilators[0]} ...
// to `terms` after sorting each group (with its permutation sign). Indices are
// 1-based and need not be sorted; repeated indices contribute nothing.
inline void accumulate_word(FermionOp::Terms& terms, int d, const std::vector<int>& creators,
                            const std::vector<int>& annihilators, double coeff) {
  auto to_mask = [d](const std::vector<int>& idx, Mask& m, int& inv) -> bool {
    m = 0;
    inv = 0;
    bool ok = true;
    for (int i : idx) {
      if (i < 1 || i > d) throw ArgumentError("generator index " + std::to_string(i) + " outside 1.." + std::to_string(d));
      const Mask bit = Mask{1} << (i - 1);
      if (m & bit) ok = false;
      inv += std::popcount(m >> i);  // earlier entries with larger index
      m |= bit;
    }
    return ok;
  };
  Mask I, J;
  int si, sj;
  const bool ok_i = to_mask(creators, I, si);
  const bool ok_j = to_mask(annihilators, J, sj);
  if (ok_i && ok_j && coeff != 0.0) terms[{I, J}] += detail::parity_sign(si + sj) * coeff;
}

inline FermionOp monomial(int d, const std::vector<int>& creators, const std::vector<int>& annihilators,
                          double coeff = 1.0) {
  FermionOp::Terms t;
  accumulate_word(t, d, creators, annihilators, coeff);
  return FermionOp::from_terms(d, t);
}

inline FermionOp wedge(int d, int i) { return monomial(d, {i}, {}); }
inline FermionOp contract(int d, int i) { return monomial(d, {}, {i}); }

inline FermionOp compose(const FermionOp& a, const FermionOp& b) { return FermionOp::compose(a, b); }

inline FermionOp power(const FermionOp& x, int k) {
  if (k < 0) throw ArgumentError("negative operator power");
  FermionOp out = FermionOp::identity(x.dim());
  for (int i = 0; i < k; ++i) out = compose(out, x);
  return out;
}

// ---------------------------------------------------------------------------
// Supertrace and form extraction

// Even-degree diagonal minus odd-degree diagonal.
inline double supertrace(const FermionOp& x) {
  const auto& m = x.matrix();
  double s = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    s += detail::parity_sign(detail::popcount(static_cast<Mask>(i))) * m(i, i);
  return s;
}

// Graded trace of a product without forming it.
inline double supertrace_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    s += detail::parity_sign(detail::popcount(static_cast<Mask>(i))) * a.row(i).dot(b.col(i));
  return s;
}

// (-1)^{k(k-1)/2} c_{GG} for the generator set G, read off the diagonal by
// Moebius inversion: only diagonal monomials a*_K a_K reach diagonal entries,
// and a*_K a_K = (-1)^{k(k-1)/2} n_{k1}...n_{kk}.
inline double form_part_mask(const FermionOp& x, Mask G) {
  if (G & ~FermionOp::full_mask(x.dim())) throw ArgumentError("generator set outside 1..d");
  const auto& m = x.matrix();
  const int g = detail::popcount(G);
  double s = 0.0;
  // Enumerate subsets of G.
  Mask S = G;
  while (true) {
    s += detail::parity_sign(g - detail::popcount(S)) * m(S, S);
    if (S == 0) break;
    S = (S - 1) & G;
  }
  return s;
}

// Coefficient of the degree-k volume monomial a*_1..a*_k a_1..a_k with the
// (-1)^{k(k-1)/2} sign.
inline double form_part(const FermionOp& x, int k) {
  if (k < 0 || k > x.dim()) throw ArgumentError("form degree outside 0..d");
  return form_part_mask(x, FermionOp::full_mask(k));
}

// Same quantity read from the normal-ordered expansion.
inline double form_part_from_terms(const FermionOp& x, int k) {
  if (k < 0 || k > x.dim()) throw ArgumentError("form degree outside 0..d");
  const Mask G = FermionOp::full_mask(k);
  return detail::parity_sign(k * (k - 1) / 2) * x.coefficient(G, G);
}

// Closed-form supertrace: (-1)^{d(d-1)/2} times the coefficient of the full
// monomial. Agrees with supertrace() for even d only.
inline double supertrace_closed_form(const FermionOp& x) { return form_part_from_terms(x, x.dim()); }

// ---------------------------------------------------------------------------
// Exponential

namespace detail {
// True when every nonzero entry strictly raises (or strictly lowers) degree.
inline bool degree_shifting(const Eigen::MatrixXd& m) {
  bool up = true, down = true;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (m(i, j) == 0.0) continue;
      const int di = popcount(static_cast<Mask>(i)), dj = popcount(static_cast<Mask>(j));
      if (di <= dj) up = false;
      if (di >= dj) down = false;
      if (!up && !down) return false;
    }
  return true;
}
}  // namespace detail

// Nilpotent (degree-shifting) inputs use the terminating series; everything
// else goes through Eigen's scaling-and-squaring Pade exponential.
inline FermionOp exp(const FermionOp& x) {
  if (detail::degree_shifting(x.matrix())) {
    FermionOp out = FermionOp::identity(x.dim());
    FermionOp term = out;
    for (int k = 1; k <= x.dim(); ++k) {
      term = (1.0 / k) * compose(term, x);
      out += term;
    }
    return out;
  }
  Eigen::MatrixXd e = x.matrix().exp();
  return FermionOp::from_matrix(x.dim(), std::move(e));
}

}  // namespace hcgb
