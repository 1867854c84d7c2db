#pragma once

// Pointwise data of a totally geodesic Riemannian foliation in an
// orthonormal frame X_1..X_n (horizontal), Z_1..Z_m (vertical).
//
// Index conventions (0-based in code):
//   T(i,j,r)        = <T(X_i,X_j), Z_r>,           T(X,Y) = -pi_V [X,Y]
//   R(i,j,k,l)      = <R(X_i,X_j) X_k, X_l>         Bott curvature
//   Tcov_h(i,j,k,r) = <(nabla_{X_k} T)(X_i,X_j), Z_r>
//   Tcov_v(i,j,r,s) = <(nabla_{Z_r} T)(X_i,X_j), Z_s>
// J is the metric dual of T: <J_Z X_i, X_j> = <Z, T(X_i,X_j)>.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hcgb/errors.hpp"
#include "hcgb/fermion.hpp"
#include "hcgb/tensor.hpp"

namespace hcgb {

inline constexpr double kSymmetryTolerance = 1e-12;

struct FoliationPoint {
  int n = 0;
  int m = 0;
  double epsilon = 1.0;
  Tensor3 T;
  Tensor4 R;
  Tensor4 Tcov_h;
  Tensor4 Tcov_v;

  FoliationPoint() = default;
  FoliationPoint(int n_, int m_, double eps)
      : n(n_), m(m_), epsilon(eps), T({n_, n_, m_}), R({n_, n_, n_, n_}), Tcov_h({n_, n_, n_, m_}),
        Tcov_v({n_, n_, m_, m_}) {
    if (n_ < 1 || m_ < 0) throw ArgumentError("need n >= 1 and m >= 0");
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ArgumentError("epsilon must be positive");
  }
};

// Exact structural checks; throws ArgumentError naming the first violation.
inline void validate(const FoliationPoint& fp) {
  const int n = fp.n, m = fp.m;
  if (n < 1 || m < 0) throw ArgumentError("need n >= 1 and m >= 0");
  if (!(fp.epsilon > 0.0) || !std::isfinite(fp.epsilon)) throw ArgumentError("epsilon must be positive");
  if (fp.T.dims() != std::array<int, 3>{n, n, m} || fp.R.dims() != std::array<int, 4>{n, n, n, n} ||
      fp.Tcov_h.dims() != std::array<int, 4>{n, n, n, m} || fp.Tcov_v.dims() != std::array<int, 4>{n, n, m, m})
    throw ArgumentError("tensor shapes do not match (n, m)");
  auto fail = [](const std::string& what, std::initializer_list<int> idx) {
    std::string s = what + " at (";
    bool first = true;
    for (int i : idx) {
      s += (first ? "" : ",") + std::to_string(i + 1);
      first = false;
    }
    throw ArgumentError(s + ")");
  };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      for (int r = 0; r < m; ++r) {
        if (fp.T(i, j, r) != -fp.T(j, i, r)) fail("T not antisymmetric in i,j", {i, j, r});
        for (int k = 0; k < n; ++k)
          if (fp.Tcov_h(i, j, k, r) != -fp.Tcov_h(j, i, k, r)) fail("Tcov_h not antisymmetric in i,j", {i, j, k, r});
        for (int s = 0; s < m; ++s)
          if (fp.Tcov_v(i, j, r, s) != -fp.Tcov_v(j, i, r, s)) fail("Tcov_v not antisymmetric in i,j", {i, j, r, s});
        if (fp.Tcov_v(i, j, r, r) != 0.0) fail("Tcov_v has nonzero T_{ij;r}^r", {i, j, r});
      }
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          if (fp.R(i, j, k, l) != -fp.R(j, i, k, l)) fail("R not antisymmetric in i,j", {i, j, k, l});
          if (fp.R(i, j, k, l) != -fp.R(i, j, l, k)) fail("R not antisymmetric in k,l", {i, j, k, l});
        }
    }
}

// ---------------------------------------------------------------------------
// J map

inline Eigen::MatrixXd j_map(const FoliationPoint& fp, const Eigen::VectorXd& z) {
  if (z.size() != fp.m) throw ArgumentError("vertical vector must have m components");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(fp.n, fp.n);
  // Column i is J_z X_i.
  for (int i = 0; i < fp.n; ++i)
    for (int j = 0; j < fp.n; ++j)
      for (int r = 0; r < fp.m; ++r) J(j, i) += z(r) * fp.T(i, j, r);
  return J;
}

inline std::vector<Eigen::MatrixXd> j_matrices(const FoliationPoint& fp) {
  std::vector<Eigen::MatrixXd> out;
  for (int r = 0; r < fp.m; ++r) out.push_back(j_map(fp, Eigen::VectorXd::Unit(fp.m, r)));
  return out;
}

// C(i,j,r,s) = <[J_r, J_s] X_i, X_j> = sum_k T_ik^s T_kj^r - T_ik^r T_kj^s.
inline Tensor4 j_commutators(const FoliationPoint& fp) {
  Tensor4 C({fp.n, fp.n, fp.m, fp.m});
  for (int i = 0; i < fp.n; ++i)
    for (int j = 0; j < fp.n; ++j)
      for (int r = 0; r < fp.m; ++r)
        for (int s = 0; s < fp.m; ++s) {
          double acc = 0.0;
          for (int k = 0; k < fp.n; ++k) acc += fp.T(i, k, s) * fp.T(k, j, r) - fp.T(i, k, r) * fp.T(k, j, s);
          C(i, j, r, s) = acc;
        }
  return C;
}

// ---------------------------------------------------------------------------
// Symmetry condition

struct SymmetryReport {
  bool passes = false;
  double residual = 0.0;
  double horizontal_residual = 0.0;  // max |T_{ij;k}^r|
  double vertical_residual = 0.0;    // eps * max |(2/eps) T_{ij;r}^s + (1/eps^2) sum_k ...|
};

inline SymmetryReport check_symmetry(const FoliationPoint& fp) {
  SymmetryReport rep;
  rep.horizontal_residual = fp.Tcov_h.max_abs();
  const double e = fp.epsilon;
  double v = 0.0;
  for (int i = 0; i < fp.n; ++i)
    for (int j = 0; j < fp.n; ++j)
      for (int r = 0; r < fp.m; ++r)
        for (int s = 0; s < fp.m; ++s) {
          double acc = 0.0;
          for (int k = 0; k < fp.n; ++k) acc += fp.T(k, j, r) * fp.T(i, k, s) - fp.T(k, j, s) * fp.T(i, k, r);
          const double cond = (2.0 / e) * fp.Tcov_v(i, j, r, s) + acc / (e * e);
          v = std::max(v, std::abs(e * cond));
        }
  rep.vertical_residual = v;
  rep.residual = std::max(rep.horizontal_residual, rep.vertical_residual);
  rep.passes = rep.residual <= kSymmetryTolerance;
  return rep;
}

// ---------------------------------------------------------------------------
// Curvature of the connection nabla + (1/eps) J

struct HatCurvature {
  Tensor4 hhhh;  // (i,j,k,l): <Rhat(X_i,X_j)X_k, X_l>
  Tensor4 hvhh;  // (i,r,k,l): <Rhat(X_i,Z_r)X_k, X_l>
  Tensor4 vvhh;  // (r,s,k,l): <Rhat(Z_r,Z_s)X_k, X_l>
  Tensor4 hhvv;  // (i,j,r,s): <Rhat(X_i,X_j)Z_r, Z_s>
};

inline HatCurvature hat_curvature(const FoliationPoint& fp) {
  const int n = fp.n, m = fp.m;
  const double e = fp.epsilon;
  HatCurvature h{Tensor4({n, n, n, n}), Tensor4({n, m, n, n}), Tensor4({m, m, n, n}), fp.Tcov_v};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double tt = 0.0;
          for (int s = 0; s < m; ++s) tt += fp.T(i, j, s) * fp.T(k, l, s);
          h.hhhh(i, j, k, l) = fp.R(i, j, k, l) + tt / e;
        }
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < m; ++r)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) h.hvhh(i, r, k, l) = fp.Tcov_h(k, l, i, r) / e;
  for (int r = 0; r < m; ++r)
    for (int s = 0; s < m; ++s)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double acc = 0.0;
          for (int i = 0; i < n; ++i) acc += fp.T(i, l, r) * fp.T(k, i, s) - fp.T(i, l, s) * fp.T(k, i, r);
          h.vvhh(r, s, k, l) = (2.0 / e) * fp.Tcov_v(k, l, r, s) + acc / (e * e);
        }
  return h;
}

// Rhat evaluated from the connection formula
//   Rhat(X,Y) = R(X,Y) + (1/e)(nabla_X J)_Y - (1/e)(nabla_Y J)_X + (1/e) J_{T(X,Y)} + (1/e^2)[J_X, J_Y]
// with everything assembled as (n+m)x(n+m) matrices. Used to cross-check
// hat_curvature; the vertical-vertical Bott block is taken as zero.
inline HatCurvature hat_curvature_from_connection(const FoliationPoint& fp) {
  const int n = fp.n, m = fp.m, N = n + m;
  const double e = fp.epsilon;
  using Mat = Eigen::MatrixXd;
  std::vector<Mat> J(N, Mat::Zero(N, N));  // J_{e_a}
  for (int r = 0; r < m; ++r)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) J[n + r](j, i) = fp.T(i, j, r);
  // (nabla_{e_a} J)_{e_b}
  auto dJ = [&](int a, int b) {
    Mat M = Mat::Zero(N, N);
    if (b < n) return M;
    const int r = b - n;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) M(j, i) = a < n ? fp.Tcov_h(i, j, a, r) : fp.Tcov_v(i, j, a - n, r);
    return M;
  };
  // Bott curvature operator R(e_a, e_b) as a matrix.
  auto bott = [&](int a, int b) {
    Mat M = Mat::Zero(N, N);
    if (a < n && b < n) {
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) M(l, k) = fp.R(a, b, k, l);
      for (int r = 0; r < m; ++r)
        for (int s = 0; s < m; ++s) M(n + s, n + r) = fp.Tcov_v(a, b, r, s);
    }
    return M;
  };
  auto torsion = [&](int a, int b) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(N);
    if (a < n && b < n)
      for (int r = 0; r < m; ++r) v(n + r) = fp.T(a, b, r);
    return v;
  };
  auto rhat = [&](int a, int b) {
    Mat JT = Mat::Zero(N, N);
    const Eigen::VectorXd t = torsion(a, b);
    for (int c = 0; c < N; ++c) JT += t(c) * J[c];
    return Mat(bott(a, b) + dJ(a, b) / e - dJ(b, a) / e + JT / e + (J[a] * J[b] - J[b] * J[a]) / (e * e));
  };
  HatCurvature h{Tensor4({n, n, n, n}), Tensor4({n, m, n, n}), Tensor4({m, m, n, n}), Tensor4({n, n, m, m})};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Mat M = rhat(i, j);
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) h.hhhh(i, j, k, l) = M(l, k);
      for (int r = 0; r < m; ++r)
        for (int s = 0; s < m; ++s) h.hhvv(i, j, r, s) = M(n + s, n + r);
    }
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < m; ++r) {
      const Mat M = rhat(i, n + r);
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) h.hvhh(i, r, k, l) = M(l, k);
    }
  for (int r = 0; r < m; ++r)
    for (int s = 0; s < m; ++s) {
      const Mat M = rhat(n + r, n + s);
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) h.vvhh(r, s, k, l) = M(l, k);
    }
  return h;
}

// ---------------------------------------------------------------------------
// Weitzenboeck remainder as an operator on forms over d = n+m generators:
// a_1..a_n are generators 1..n, b_1..b_m are n+1..n+m.

inline FermionOp weitzenbock_remainder(const FoliationPoint& fp, bool symmetric_form) {
  const int n = fp.n, m = fp.m, d = n + m;
  const double e = fp.epsilon;
  auto a = [](int i) { return i + 1; };
  auto b = [n](int r) { return n + r + 1; };
  FermionOp::Terms t;
  // sum (R_kji^k + (1/e) sum_r T_ik^r T_jk^r) a*_i a_j
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double c = 0.0;
      for (int k = 0; k < n; ++k) {
        c += fp.R(k, j, i, k);
        for (int r = 0; r < m; ++r) c += fp.T(i, k, r) * fp.T(j, k, r) / e;
      }
      accumulate_word(t, d, {a(i)}, {a(j)}, c);
    }
  // (1/2) sum (R_kli^j + (1/e) sum_r T_kl^r T_ij^r) a*_i a*_j a_l a_k
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double c = fp.R(k, l, i, j);
          for (int r = 0; r < m; ++r) c += fp.T(k, l, r) * fp.T(i, j, r) / e;
          accumulate_word(t, d, {a(i), a(j)}, {a(l), a(k)}, 0.5 * c);
        }
  if (!symmetric_form) {
    // - sum T_{ij;i}^r a*_j b_r
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int r = 0; r < m; ++r) accumulate_word(t, d, {a(j)}, {b(r)}, -fp.Tcov_h(i, j, i, r));
    // sum (1/e) T_{ij;k}^r a*_i a*_j b_r a_k
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int r = 0; r < m; ++r) accumulate_word(t, d, {a(i), a(j)}, {b(r), a(k)}, fp.Tcov_h(i, j, k, r) / e);
    // (1/2) sum ((2/e) T_{ij;r}^s + (1/e^2) sum_k (...)) a*_i a*_j b_s b_r
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int r = 0; r < m; ++r)
          for (int s = 0; s < m; ++s) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k) acc += fp.T(k, j, r) * fp.T(i, k, s) - fp.T(k, j, s) * fp.T(i, k, r);
            const double c = (2.0 / e) * fp.Tcov_v(i, j, r, s) + acc / (e * e);
            accumulate_word(t, d, {a(i), a(j)}, {b(s), b(r)}, 0.5 * c);
          }
  }
  return FermionOp::from_terms(d, t);
}

// ---------------------------------------------------------------------------
// The tensor script-T: m x m matrices T_ij with (T_ij)(s, r) = T_{ij;r}^s,
// i.e. script-T(X_i, X_j) Z_r = sum_s T_{ij;r}^s Z_s.

struct ScriptT {
  int n = 0;
  int m = 0;
  std::vector<Eigen::MatrixXd> blocks;  // index i*n + j
  double identity_residual = 0.0;

  const Eigen::MatrixXd& operator()(int i, int j) const { return blocks[static_cast<std::size_t>(i * n + j)]; }

  bool is_zero() const {
    return std::all_of(blocks.begin(), blocks.end(), [](const Eigen::MatrixXd& b) { return b.isZero(0.0); });
  }
};

inline ScriptT script_T(const FoliationPoint& fp) {
  const auto sym = check_symmetry(fp);
  if (!sym.passes)
    throw StateError("symmetry condition fails (residual " + std::to_string(sym.residual) + "); script-T identity unavailable");
  const int n = fp.n, m = fp.m;
  const double e = fp.epsilon;
  ScriptT out{n, m, {}, 0.0};
  const auto J = j_matrices(fp);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Eigen::MatrixXd B(m, m);
      for (int r = 0; r < m; ++r)
        for (int s = 0; s < m; ++s) B(s, r) = fp.Tcov_v(i, j, r, s);
      // (1/2e)(T(J_r X_i, X_j) + T(X_i, J_r X_j)), s-component.
      for (int r = 0; r < m; ++r) {
        const Eigen::VectorXd JXi = J[static_cast<std::size_t>(r)].col(i);
        const Eigen::VectorXd JXj = J[static_cast<std::size_t>(r)].col(j);
        for (int s = 0; s < m; ++s) {
          double v = 0.0;
          for (int k = 0; k < n; ++k) v += JXi(k) * fp.T(k, j, s) + JXj(k) * fp.T(i, k, s);
          v /= 2.0 * e;
          out.identity_residual = std::max(out.identity_residual, std::abs(v - B(s, r)));
        }
      }
      out.blocks.push_back(std::move(B));
    }
  return out;
}

// ---------------------------------------------------------------------------
// Torsion as a linear map Lambda^2 H -> V: m x C(n,2) matrix.

inline Eigen::MatrixXd torsion_matrix(const FoliationPoint& fp) {
  const int pairs = fp.n * (fp.n - 1) / 2;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(fp.m, pairs);
  int c = 0;
  for (int i = 0; i < fp.n; ++i)
    for (int j = i + 1; j < fp.n; ++j, ++c)
      for (int r = 0; r < fp.m; ++r) M(r, c) = fp.T(i, j, r);
  return M;
}

inline int torsion_rank(const FoliationPoint& fp) {
  const Eigen::MatrixXd M = torsion_matrix(fp);
  if (M.size() == 0) return 0;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
  qr.setThreshold(1e-10);
  return static_cast<int>(qr.rank());
}

inline bool torsion_surjective(const FoliationPoint& fp) { return torsion_rank(fp) == fp.m; }

// ---------------------------------------------------------------------------
// Identity suite for the check command.

struct IdentityResidual {
  std::string name;
  double residual;
  bool passes;
};

inline std::vector<IdentityResidual> curvature_identities(const FoliationPoint& fp, double tol = 1e-12) {
  const int n = fp.n, m = fp.m;
  std::vector<IdentityResidual> out;
  auto add = [&](std::string name, double r) { out.push_back({std::move(name), r, r <= tol}); };

  double pair = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) pair = std::max(pair, std::abs(fp.R(i, j, k, l) - fp.R(k, l, i, j)));
  add("bott_pair_symmetry", pair);

  const auto hat = hat_curvature(fp);
  const auto conn = hat_curvature_from_connection(fp);
  add("hhvv_equals_Tcov_v", max_abs_diff(hat.hhvv, fp.Tcov_v));
  add("hhvv_connection", max_abs_diff(conn.hhvv, fp.Tcov_v));

  double diag = 0.0, rs_antisym = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int r = 0; r < m; ++r) {
        diag = std::max(diag, std::abs(fp.Tcov_v(i, j, r, r)));
        for (int s = 0; s < m; ++s)
          rs_antisym = std::max(rs_antisym, std::abs(fp.Tcov_v(i, j, r, s) + fp.Tcov_v(i, j, s, r)));
      }
  add("Tcov_v_trace_free", diag);
  add("Tcov_v_antisymmetric_rs", rs_antisym);

  add("hat_hhhh_connection", max_abs_diff(hat.hhhh, conn.hhhh));
  add("hat_hvhh_connection", max_abs_diff(hat.hvhh, conn.hvhh));
  add("hat_vvhh_connection", max_abs_diff(hat.vvhh, conn.vvhh));

  if (check_symmetry(fp).passes) {
    add("hvhh_vanishes", hat.hvhh.max_abs());
    add("vvhh_vanishes", hat.vvhh.max_abs());
    add("script_T_identity", script_T(fp).identity_residual);
  }
  return out;
}

}  // namespace hcgb
