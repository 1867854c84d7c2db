#pragma once

// Named models: built-in presets and the config-file loader.
//
// Config format (TOML subset or JSON, chosen by file extension):
//   name = "my-model"
//   n = 2
//   m = 1
//   epsilon = 1.0
//   volume = 1.0             # optional
//   expected_chi = 0         # optional
//   T = [[1, 2, 1, -1.0]]    # [i, j, r, value], 1-based
//   R = [[i, j, k, l, value], ...]
//   Tcov_h = [[i, j, k, r, value], ...]
//   Tcov_v = [[i, j, r, s, value], ...]
// Entries implied by antisymmetry in the first index pair (and in the last
// pair for R) are filled in; a listed entry contradicting an implied one is an
// error.

#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hcgb/errors.hpp"
#include "hcgb/foliation.hpp"
#include "hcgb/rng.hpp"

namespace hcgb {

struct ModelGeometry {
  std::string name;
  FoliationPoint fp;
  std::optional<double> volume;
  std::optional<double> expected_chi;
};

// ---------------------------------------------------------------------------
// Entry assignment with antisymmetric completion

namespace detail {

template <std::size_t Rank>
class AntisymFiller {
 public:
  explicit AntisymFiller(Tensor<Rank>& t, std::string label) : t_(t), label_(std::move(label)) {}

  // Sets t[idx] = v and every image under the listed index swaps with the
  // matching sign. `swaps` holds pairs of positions to transpose.
  void set(const std::array<int, Rank>& idx, double v, const std::vector<std::pair<int, int>>& swaps) {
    std::vector<std::pair<std::array<int, Rank>, double>> orbit{{idx, v}};
    for (std::size_t q = 0; q < orbit.size(); ++q)
      for (auto [a, b] : swaps) {
        auto img = orbit[q].first;
        std::swap(img[a], img[b]);
        const double w = -orbit[q].second;
        bool seen = false;
        for (const auto& [k, val] : orbit)
          if (k == img) {
            seen = true;
            if (val != w) fail(idx, "is forced to vanish by antisymmetry");
          }
        if (!seen) orbit.push_back({img, w});
      }
    for (const auto& [k, val] : orbit) {
      auto it = assigned_.find(k);
      if (it != assigned_.end() && it->second != val) fail(idx, "conflicts with an antisymmetric partner");
      assigned_[k] = val;
      t_.at(k) = val;
    }
  }

 private:
  [[noreturn]] void fail(const std::array<int, Rank>& idx, const std::string& why) const {
    std::string s = label_ + " entry (";
    for (std::size_t k = 0; k < Rank; ++k) s += (k ? "," : "") + std::to_string(idx[k] + 1);
    throw ArgumentError(s + ") " + why);
  }

  Tensor<Rank>& t_;
  std::string label_;
  std::map<std::array<int, Rank>, double> assigned_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Presets

namespace detail {

// Left multiplication by a quaternion on the basis (1, i, j, k).
inline Eigen::Matrix4d quaternion_left(const Eigen::Vector4d& q) {
  auto mul = [](const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
    Eigen::Vector4d c;
    c(0) = a(0) * b(0) - a(1) * b(1) - a(2) * b(2) - a(3) * b(3);
    c(1) = a(0) * b(1) + a(1) * b(0) + a(2) * b(3) - a(3) * b(2);
    c(2) = a(0) * b(2) - a(1) * b(3) + a(2) * b(0) + a(3) * b(1);
    c(3) = a(0) * b(3) + a(1) * b(2) - a(2) * b(1) + a(3) * b(0);
    return c;
  };
  Eigen::Matrix4d L;
  for (int b = 0; b < 4; ++b) L.col(b) = mul(q, Eigen::Vector4d::Unit(b));
  return L;
}

inline Eigen::Matrix4d quaternion_right(const Eigen::Vector4d& q) {
  Eigen::Matrix4d Rm;
  for (int b = 0; b < 4; ++b) {
    const Eigen::Vector4d e = Eigen::Vector4d::Unit(b);
    // e * q
    Eigen::Vector4d c;
    c(0) = e(0) * q(0) - e(1) * q(1) - e(2) * q(2) - e(3) * q(3);
    c(1) = e(0) * q(1) + e(1) * q(0) + e(2) * q(3) - e(3) * q(2);
    c(2) = e(0) * q(2) - e(1) * q(3) + e(2) * q(0) + e(3) * q(1);
    c(3) = e(0) * q(3) + e(1) * q(2) - e(2) * q(1) + e(3) * q(0);
    Rm.col(b) = c;
  }
  return Rm;
}

}  // namespace detail

// Torsion from antisymmetric J matrices: T_ij^r = <J_r X_i, X_j> = J_r(j, i).
inline FoliationPoint foliation_from_j(const std::vector<Eigen::MatrixXd>& J, double epsilon) {
  if (J.empty()) throw ArgumentError("need at least one J matrix");
  const int n = static_cast<int>(J.front().rows());
  const int m = static_cast<int>(J.size());
  FoliationPoint fp(n, m, epsilon);
  for (int r = 0; r < m; ++r)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) fp.T(i, j, r) = J[static_cast<std::size_t>(r)](j, i);
  return fp;
}

// Vertical covariant derivative forced by the symmetry condition at fp.epsilon:
// T_{ij;r}^s = -(1/2 eps) <[J_r, J_s] X_i, X_j>.
inline void set_symmetric_Tcov_v(FoliationPoint& fp) {
  const Tensor4 C = j_commutators(fp);
  for (int i = 0; i < fp.n; ++i)
    for (int j = 0; j < fp.n; ++j)
      for (int r = 0; r < fp.m; ++r)
        for (int s = 0; s < fp.m; ++s) fp.Tcov_v(i, j, r, s) = -C(i, j, r, s) / (2.0 * fp.epsilon);
}

inline ModelGeometry preset_heisenberg() {
  FoliationPoint fp(2, 1, 1.0);
  fp.T(0, 1, 0) = -1.0;
  fp.T(1, 0, 0) = 1.0;
  validate(fp);
  return {"heisenberg", fp, 1.0, 0.0};
}

// H-type with J_r the left multiplications by i, j, k on the quaternions;
// kappa = 1, eps = 1/kappa, (nabla_Z J) fixed by the Clifford relation.
inline ModelGeometry preset_quaternionic_heisenberg() {
  std::vector<Eigen::MatrixXd> J;
  for (int q = 1; q <= 3; ++q) J.push_back(detail::quaternion_left(Eigen::Vector4d::Unit(q)));
  FoliationPoint fp = foliation_from_j(J, 1.0);
  set_symmetric_Tcov_v(fp);
  validate(fp);
  return {"quaternionic-heisenberg", fp, 1.0, 0.0};
}

// n = 4, m = 2 H-type with anticommuting J_1 = L_i, J_2 = L_j. The Clifford
// relation (nabla_u J)_v = -(kappa/2)[J_u, J_v] is built in; eps = 1/kappa.
// Volume 1 is synthetic, so no Euler characteristic is claimed.
inline ModelGeometry preset_htype_m2(double kappa = 1.0) {
  if (!(kappa > 0.0)) throw ArgumentError("kappa must be positive");
  std::vector<Eigen::MatrixXd> J{detail::quaternion_left(Eigen::Vector4d::Unit(1)),
                                 detail::quaternion_left(Eigen::Vector4d::Unit(2))};
  FoliationPoint fp = foliation_from_j(J, 1.0 / kappa);
  set_symmetric_Tcov_v(fp);
  validate(fp);
  return {"htype-m2", fp, 1.0, std::nullopt};
}

inline ModelGeometry preset_flat_torus_product() {
  FoliationPoint fp(2, 2, 1.0);
  return {"flat-torus-product", fp, 1.0, 0.0};
}

inline std::vector<std::string> preset_names() {
  return {"heisenberg", "quaternionic-heisenberg", "htype-m2", "flat-torus-product"};
}

inline ModelGeometry preset(const std::string& name, double kappa = 1.0) {
  if (name == "heisenberg") return preset_heisenberg();
  if (name == "quaternionic-heisenberg") return preset_quaternionic_heisenberg();
  if (name == "htype-m2") return preset_htype_m2(kappa);
  if (name == "flat-torus-product") return preset_flat_torus_product();
  throw ArgumentError("unknown preset '" + name + "'");
}

// Canonical variation of a model by a factor delta > 0 in the vertical
// directions: Z -> sqrt(delta) Z rescales the frame so T -> T / sqrt(delta),
// eps -> eps / delta, the vertical volume factor by delta^{-m/2}. Tcov_v and R
// are unchanged and the symmetry condition is preserved.
inline ModelGeometry canonical_variation(const ModelGeometry& g, double delta) {
  if (!(delta > 0.0)) throw ArgumentError("delta must be positive");
  ModelGeometry out = g;
  const double s = 1.0 / std::sqrt(delta);
  out.fp.T *= s;
  out.fp.Tcov_h *= s;
  out.fp.epsilon = g.fp.epsilon / delta;
  if (out.volume) *out.volume *= std::pow(delta, -0.5 * g.fp.m);
  return out;
}

// Random model satisfying the symmetry condition at eps: Gaussian torsion,
// Tcov_v from the Clifford relation, Tcov_h = 0, and a pair-symmetric Bott
// curvature R = sum_a S_a (x) S_a with antisymmetric S_a.
inline ModelGeometry random_symmetric_model(int n, int m, std::uint64_t seed, double epsilon = 1.0,
                                            double curvature_scale = 0.5) {
  auto eng = rng::make_engine(seed, 0, 0);
  std::normal_distribution<double> g(0.0, 1.0);
  FoliationPoint fp(n, m, epsilon);
  for (int r = 0; r < m; ++r)
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        fp.T(i, j, r) = g(eng);
        fp.T(j, i, r) = -fp.T(i, j, r);
      }
  set_symmetric_Tcov_v(fp);
  for (int a = 0; a < 2; ++a) {
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        S(i, j) = curvature_scale * g(eng);
        S(j, i) = -S(i, j);
      }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) fp.R(i, j, k, l) += S(i, j) * S(k, l);
  }
  validate(fp);
  return {"random-" + std::to_string(n) + "x" + std::to_string(m) + "-" + std::to_string(seed), fp, 1.0, std::nullopt};
}

// ---------------------------------------------------------------------------
// Config loading

namespace detail {

inline std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

// TOML values used by model files are JSON-compatible after dropping trailing
// commas and leading '+' signs.
inline nlohmann::json parse_toml_value(std::string v, int line) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const char c = v[i];
    if (c == '+') {
      const std::size_t p = out.find_last_not_of(" \t\r\n");
      if (p == std::string::npos || out[p] == '[' || out[p] == ',') continue;
    }
    if (c == ']') {
      std::size_t p = out.find_last_not_of(" \t\r\n");
      if (p != std::string::npos && out[p] == ',') out.erase(p, 1);
    }
    out += c;
  }
  if (out == "true" || out == "false") return out == "true";
  try {
    return nlohmann::json::parse(out);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("line " + std::to_string(line) + ": cannot parse value '" + trim(v) + "'");
  }
}

inline nlohmann::json parse_toml(std::istream& in) {
  nlohmann::json root = nlohmann::json::object();
  std::string table;
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[' && line.find('=') == std::string::npos) {
      if (line.back() != ']') throw ParseError("line " + std::to_string(lineno) + ": malformed table header");
      table = trim(line.substr(1, line.size() - 2));
      if (table.empty()) throw ParseError("line " + std::to_string(lineno) + ": empty table name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("line " + std::to_string(lineno) + ": empty key");
    const int start = lineno;
    auto depth = [](const std::string& s) {
      int d = 0;
      for (char c : s) d += (c == '[') - (c == ']');
      return d;
    };
    while (depth(value) > 0) {
      if (!std::getline(in, raw)) throw ParseError("line " + std::to_string(start) + ": unterminated array");
      ++lineno;
      value += " " + trim(strip_comment(raw));
    }
    nlohmann::json& target = table.empty() ? root : root[table];
    if (target.contains(key)) throw ParseError("line " + std::to_string(start) + ": duplicate key '" + key + "'");
    target[key] = parse_toml_value(value, start);
  }
  return root;
}

}  // namespace detail

inline ModelGeometry model_from_json(const nlohmann::json& j, const std::string& fallback_name = "model") {
  auto need_int = [&](const char* k) {
    if (!j.contains(k) || !j[k].is_number_integer()) throw ParseError(std::string("missing integer field '") + k + "'");
    return j[k].get<int>();
  };
  const int n = need_int("n");
  const int m = need_int("m");
  double eps = 1.0;
  if (j.contains("epsilon")) {
    if (!j["epsilon"].is_number()) throw ParseError("field 'epsilon' must be a number");
    eps = j["epsilon"].get<double>();
  }
  ModelGeometry g{fallback_name, FoliationPoint(n, m, eps), std::nullopt, std::nullopt};
  if (j.contains("name")) {
    if (!j["name"].is_string()) throw ParseError("field 'name' must be a string");
    g.name = j["name"].get<std::string>();
  }
  if (j.contains("volume")) {
    if (!j["volume"].is_number()) throw ParseError("field 'volume' must be a number");
    g.volume = j["volume"].get<double>();
  }
  if (j.contains("expected_chi") && !j["expected_chi"].is_null()) {
    if (!j["expected_chi"].is_number()) throw ParseError("field 'expected_chi' must be a number");
    g.expected_chi = j["expected_chi"].get<double>();
  }

  auto entries = [&](const char* key, std::size_t arity, const std::array<int, 4>& bounds, auto&& apply) {
    if (!j.contains(key)) return;
    const auto& list = j[key];
    if (!list.is_array()) throw ParseError(std::string("field '") + key + "' must be a list of entries");
    for (const auto& e : list) {
      if (!e.is_array() || e.size() != arity + 1)
        throw ParseError(std::string("entry of '") + key + "' must have " + std::to_string(arity) + " indices and a value");
      std::array<int, 4> idx{};
      for (std::size_t q = 0; q < arity; ++q) {
        if (!e[q].is_number_integer()) throw ParseError(std::string("non-integer index in '") + key + "'");
        const int v = e[q].get<int>();
        if (v < 1 || v > bounds[q])
          throw ArgumentError(std::string("index ") + std::to_string(v) + " out of range in '" + key + "'");
        idx[q] = v - 1;
      }
      if (!e[arity].is_number()) throw ParseError(std::string("non-numeric value in '") + key + "'");
      apply(idx, e[arity].get<double>());
    }
  };

  detail::AntisymFiller<3> fT(g.fp.T, "T");
  entries("T", 3, {n, n, m, 0}, [&](auto idx, double v) { fT.set({idx[0], idx[1], idx[2]}, v, {{0, 1}}); });
  detail::AntisymFiller<4> fR(g.fp.R, "R");
  entries("R", 4, {n, n, n, n}, [&](auto idx, double v) { fR.set(idx, v, {{0, 1}, {2, 3}}); });
  detail::AntisymFiller<4> fH(g.fp.Tcov_h, "Tcov_h");
  entries("Tcov_h", 4, {n, n, n, m}, [&](auto idx, double v) { fH.set(idx, v, {{0, 1}}); });
  detail::AntisymFiller<4> fV(g.fp.Tcov_v, "Tcov_v");
  entries("Tcov_v", 4, {n, n, m, m}, [&](auto idx, double v) { fV.set(idx, v, {{0, 1}}); });

  validate(g.fp);
  return g;
}

inline ModelGeometry load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file '" + path + "'");
  std::string stem = path.substr(path.find_last_of("/\\") + 1);
  stem = stem.substr(0, stem.find('.'));
  const bool is_json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  nlohmann::json j;
  if (is_json) {
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what());
    }
  } else {
    j = detail::parse_toml(in);
  }
  if (j.contains("model") && j["model"].is_object()) j = j["model"];
  return model_from_json(j, stem);
}

}  // namespace hcgb
