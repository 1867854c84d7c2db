#pragma once

// Command-line front end. run_cli() parses argv-style arguments, runs one
// command and writes a JSON (or CSV) report. Exit codes: 0 success,
// 1 computation error or failed check, 2 input error.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "hcgb/carnot.hpp"
#include "hcgb/cgb.hpp"
#include "hcgb/chen.hpp"
#include "hcgb/errors.hpp"
#include "hcgb/foliation.hpp"
#include "hcgb/mckean_singer.hpp"
#include "hcgb/model.hpp"
#include "hcgb/rng.hpp"

namespace hcgb::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCompute = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kSchemaVersion = 1;

struct RunConfig {
  std::string command;
  std::string preset;
  std::string model_path;
  std::optional<double> epsilon;
  std::optional<double> kappa;
  std::vector<std::string> perturb;
  std::optional<std::size_t> samples;  // per-command default when unset
  std::uint64_t seed = 1;
  std::optional<int> grid;
  int workers = rng::default_workers();
  std::string output;
  std::string format = "json";
  std::string mode = "closed";
  double lambda = 1.0;
  std::string t = "1";
  std::string complex_path;
};

// Input problems found after parsing; mapped to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

inline std::vector<double> parse_list(const std::string& s, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (...) {
      used = 0;
    }
    if (used == 0 || used != tok.size()) throw InputError(flag + ": cannot parse '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw InputError(flag + ": empty list");
  return out;
}

// NAME=value or NAME[i,j,...]=value; adds value to one entry and its
// antisymmetric images. The default entry is (1,2,1,...).
inline void apply_perturbation(FoliationPoint& fp, const std::string& arg) {
  static const std::regex re(R"(^\s*([A-Za-z_]+)\s*(?:\[\s*([0-9,\s]+)\])?\s*=\s*(\S+)\s*$)");
  std::smatch mt;
  if (!std::regex_match(arg, mt, re)) throw InputError("--perturb: expected NAME=value or NAME[i,j,...]=value, got '" + arg + "'");
  std::string name = mt[1].str();
  name.erase(std::remove(name.begin(), name.end(), '_'), name.end());
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(mt[3].str(), &used);
  } catch (...) {
    used = 0;
  }
  if (used == 0 || used != mt[3].str().size() || !std::isfinite(v)) throw InputError("--perturb: bad value '" + mt[3].str() + "'");

  std::array<int, 4> bounds{};
  std::size_t rank = 0;
  if (name == "T") {
    rank = 3;
    bounds = {fp.n, fp.n, fp.m, 0};
  } else if (name == "R") {
    rank = 4;
    bounds = {fp.n, fp.n, fp.n, fp.n};
  } else if (name == "Tcovh") {
    rank = 4;
    bounds = {fp.n, fp.n, fp.n, fp.m};
  } else if (name == "Tcovv") {
    rank = 4;
    bounds = {fp.n, fp.n, fp.m, fp.m};
  } else {
    throw InputError("--perturb: unknown tensor '" + mt[1].str() + "' (use T, R, T_cov_h, T_cov_v)");
  }
  std::array<int, 4> idx{1, 2, 1, name == "R" ? 2 : 1};
  if (mt[2].matched) {
    const auto list = parse_list(mt[2].str(), "--perturb index");
    if (list.size() != rank) throw InputError("--perturb: " + mt[1].str() + " takes " + std::to_string(rank) + " indices");
    for (std::size_t q = 0; q < rank; ++q) idx[q] = static_cast<int>(list[q]);
  }
  for (std::size_t q = 0; q < rank; ++q)
    if (idx[q] < 1 || idx[q] > bounds[q]) throw InputError("--perturb: index out of range for this model");
  int i = idx[0] - 1, j = idx[1] - 1, a = idx[2] - 1, b = idx[3] - 1;
  if (i == j) throw InputError("--perturb: the first two indices must differ");
  if (name == "T") {
    fp.T(i, j, a) += v;
    fp.T(j, i, a) -= v;
  } else if (name == "Tcovh") {
    fp.Tcov_h(i, j, a, b) += v;
    fp.Tcov_h(j, i, a, b) -= v;
  } else if (name == "Tcovv") {
    fp.Tcov_v(i, j, a, b) += v;
    fp.Tcov_v(j, i, a, b) -= v;
  } else {
    if (a == b) throw InputError("--perturb: R needs distinct last two indices");
    fp.R(i, j, a, b) += v;
    fp.R(j, i, a, b) -= v;
    fp.R(i, j, b, a) -= v;
    fp.R(j, i, b, a) += v;
  }
}

inline ModelGeometry load_from_config(const RunConfig& cfg) {
  if (cfg.preset.empty() == cfg.model_path.empty()) throw InputError("give exactly one of --preset or --model");
  if (cfg.kappa && cfg.preset != "htype-m2") throw InputError("--kappa applies to the htype-m2 preset only");
  if (cfg.kappa && !(*cfg.kappa > 0.0)) throw InputError("--kappa must be positive");
  ModelGeometry g = cfg.preset.empty() ? load_model(cfg.model_path) : preset(cfg.preset, cfg.kappa.value_or(1.0));
  if (cfg.epsilon) {
    if (!(*cfg.epsilon > 0.0) || !std::isfinite(*cfg.epsilon)) throw InputError("--epsilon must be positive");
    g.fp.epsilon = *cfg.epsilon;
  }
  for (const auto& p : cfg.perturb) apply_perturbation(g.fp, p);
  validate(g.fp);
  return g;
}

inline nlohmann::json header(const RunConfig& cfg, std::size_t samples, std::optional<double> stderr_) {
  nlohmann::json j;
  j["schema"] = kSchemaVersion;
  j["command"] = cfg.command;
  j["seed"] = cfg.seed;
  j["samples"] = samples;
  j["stderr"] = opt_json(stderr_);
  j["timestamp"] = utc_timestamp();
  return j;
}

inline nlohmann::json model_json(const ModelGeometry& g) {
  return {{"name", g.name}, {"n", g.fp.n}, {"m", g.fp.m}, {"epsilon", g.fp.epsilon}, {"volume", opt_json(g.volume)}};
}

// ---------------------------------------------------------------------------
// Commands. Each returns the report and sets `passed` false on a failed check.

inline nlohmann::json cmd_check(const RunConfig& cfg, const ModelGeometry& g, bool& passed) {
  auto j = header(cfg, 0, std::nullopt);
  j["model"] = model_json(g);
  const auto sym = check_symmetry(g.fp);
  j["symmetry"] = {{"passes", sym.passes},
                   {"residual", sym.residual},
                   {"horizontal_residual", sym.horizontal_residual},
                   {"vertical_residual", sym.vertical_residual}};
  bool ok = sym.passes;
  nlohmann::json ids = nlohmann::json::array();
  for (const auto& r : curvature_identities(g.fp)) {
    ids.push_back({{"name", r.name}, {"residual", r.residual}, {"passes", r.passes}});
    ok = ok && r.passes;
  }
  j["identities"] = ids;
  const int rank = torsion_rank(g.fp);
  j["torsion"] = {{"rank", rank}, {"surjective", rank == g.fp.m}};
  ok = ok && rank == g.fp.m;
  j["passes"] = ok;
  passed = ok;
  return j;
}

inline nlohmann::json integrand_json(const IntegrandReport& r) {
  nlohmann::json j = {{"J_const", opt_json(r.J_const)},
                      {"euler_form_coeff", r.euler_form_coeff},
                      {"det_factor_m_part", r.det_factor_m_part},
                      {"integrand", r.integrand},
                      {"parity_shortcut", r.parity_shortcut},
                      {"script_T_zero", r.script_T_zero},
                      {"reason", r.reason}};
  j["chi_raw"] = opt_json(r.chi_raw);
  j["chi_rounded"] = r.chi_rounded ? nlohmann::json(*r.chi_rounded) : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json cmd_euler(const RunConfig& cfg, const ModelGeometry& g) {
  if (cfg.mode != "closed" && cfg.mode != "mc" && cfg.mode != "both") throw InputError("--mode must be closed, mc or both");
  const bool closed = cfg.mode != "mc", mc = cfg.mode != "closed";
  std::optional<IntegrandReport> cf;
  if (closed) {
    if (g.volume) {
      cf = euler_characteristic(g).integrand;
    } else {
      cf = closed_form_integrand(g.fp);
    }
  }
  std::optional<McSupertraceReport> mr;
  if (mc) {
    SupertraceOptions opt;
    opt.samples = cfg.samples.value_or(100000);
    opt.seed = cfg.seed;
    opt.grid = cfg.grid.value_or(kDefaultGrid);
    opt.workers = cfg.workers;
    // Reuse the closed-form J when both routes run.
    mr = mc_supertrace(g.fp, opt, cf ? cf->J_const : std::nullopt);
  }
  auto j = header(cfg, mr ? mr->samples : 0, mr ? std::optional<double>(mr->stderr_) : std::nullopt);
  j["model"] = model_json(g);
  j["mode"] = cfg.mode;
  if (cf) j["closed_form"] = integrand_json(*cf);
  if (mr) {
    j["mc"] = {{"estimate", mr->estimate},
               {"stderr", mr->stderr_},
               {"mean_supertrace", mr->mean_supertrace},
               {"grid", mr->grid},
               {"J_const", opt_json(mr->J_const)},
               {"pathwise_zero", mr->pathwise_zero}};
    if (g.volume) j["mc"]["chi_estimate"] = mr->estimate * *g.volume;
  }
  if (cf && mr) {
    const double diff = mr->estimate - cf->integrand;
    if (mr->stderr_ > 0.0)
      j["z_score"] = diff / mr->stderr_;
    else
      j["z_score"] = diff == 0.0 ? nlohmann::json(0.0) : nlohmann::json(nullptr);
  }
  return j;
}

inline nlohmann::json cmd_levy(const RunConfig& cfg) {
  MonteCarloOptions opt;
  opt.samples = cfg.samples.value_or(100000);
  opt.seed = cfg.seed;
  opt.grid = cfg.grid.value_or(kDefaultGrid);
  opt.workers = cfg.workers;
  if (!(std::abs(cfg.lambda) < std::numbers::pi)) throw InputError("--lambda must satisfy |lambda| < pi");
  const auto r = mgf_levy(cfg.lambda, opt);
  auto j = header(cfg, r.mgf.samples, r.mgf.stderr_);
  j["lambda"] = cfg.lambda;
  j["grid"] = opt.grid;
  j["estimate"] = r.mgf.estimate;
  j["closed_form"] = r.closed_form;
  j["z_score"] = r.mgf.stderr_ > 0.0 ? nlohmann::json((r.mgf.estimate - r.closed_form) / r.mgf.stderr_) : nlohmann::json(nullptr);
  j["area_mean"] = r.area_mean;
  j["area_variance"] = r.area_variance;
  j["area_variance_stderr"] = r.area_variance_stderr;
  return j;
}

inline nlohmann::json cmd_density(const RunConfig& cfg, const ModelGeometry& g) {
  const auto ts = parse_list(cfg.t, "--t");
  if (ts.size() != 1) throw InputError("density takes a single --t");
  DensityOptions opt;
  opt.samples = cfg.samples.value_or(1000000);
  opt.seed = cfg.seed;
  opt.grid = cfg.grid.value_or(256);
  opt.workers = cfg.workers;
  const auto r = density_mc(g.fp, ts[0], opt);
  auto j = header(cfg, r.samples, r.stderr_);
  j["model"] = model_json(g);
  j["t"] = r.t;
  j["grid"] = opt.grid;
  j["estimate"] = r.estimate;
  j["bandwidth"] = r.bandwidth;
  j["scaled_estimate"] = std::pow(2.0 * r.t, 0.5 * g.fp.n + g.fp.m) * r.estimate;
  try {
    j["oracle"] = heisenberg_density_oracle(g.fp, r.t);
  } catch (const ArgumentError&) {
    j["oracle"] = nullptr;
  }
  return j;
}

inline nlohmann::json cmd_jconst(const RunConfig& cfg, const ModelGeometry& g) {
  const auto r = j_constant(g.fp);
  auto j = header(cfg, 0, std::nullopt);
  j["model"] = model_json(g);
  j["value"] = r.value;
  j["radius"] = r.radius;
  j["last_shell"] = r.last_shell;
  j["evaluations"] = r.evaluations;
  j["htype"] = r.htype;
  j["radial"] = opt_json(r.radial);
  return j;
}

inline nlohmann::json cmd_ms(const RunConfig& cfg) {
  if (cfg.complex_path.empty()) throw InputError("ms needs --complex");
  const auto ts = parse_list(cfg.t, "--t");
  for (double t : ts)
    if (!(t > 0.0)) throw InputError("--t values must be positive");
  const auto c = load_complex(cfg.complex_path);
  const auto pairing = eigenspace_pairing(c);
  auto j = header(cfg, 0, std::nullopt);
  j["complex"] = cfg.complex_path;
  std::vector<int> counts;
  for (int k = 0; k <= c.top_dimension(); ++k) counts.push_back(c.count(k));
  j["simplex_counts"] = counts;
  j["chi"] = c.euler_characteristic();
  j["harmonic"] = pairing.harmonic;
  j["pairing_passes"] = pairing.passes;
  j["nonzero_eigenvalues"] = pairing.eigenvalues.size();
  nlohmann::json rows = nlohmann::json::array();
  double lo = 1e300, hi = -1e300;
  for (double t : ts) {
    const double s = supertrace_heat(c, t);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
    rows.push_back({{"t", t}, {"supertrace", s}});
  }
  j["rows"] = rows;
  j["variation"] = hi - lo;
  return j;
}

// ---------------------------------------------------------------------------
// Output

inline void flatten(const nlohmann::json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (prefix.empty() && it.key() == "rows") continue;
      flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    }
  } else if (j.is_array()) {
    for (std::size_t q = 0; q < j.size(); ++q) flatten(j[q], prefix + "." + std::to_string(q), out);
  } else if (j.is_string()) {
    out.emplace_back(prefix, j.get<std::string>());
  } else if (j.is_null()) {
    out.emplace_back(prefix, "");
  } else {
    out.emplace_back(prefix, j.dump());
  }
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

// One row per entry of "rows" when present, otherwise one row.
inline std::string to_csv(const nlohmann::json& j) {
  std::vector<std::pair<std::string, std::string>> base;
  flatten(j, "", base);
  std::vector<std::vector<std::pair<std::string, std::string>>> rows;
  if (j.contains("rows") && !j["rows"].empty()) {
    for (const auto& r : j["rows"]) {
      auto row = base;
      flatten(r, "", row);
      rows.push_back(std::move(row));
    }
  } else {
    rows.push_back(base);
  }
  std::ostringstream os;
  for (std::size_t q = 0; q < rows[0].size(); ++q) os << (q ? "," : "") << csv_field(rows[0][q].first);
  os << "\n";
  for (const auto& row : rows) {
    for (std::size_t q = 0; q < row.size(); ++q) os << (q ? "," : "") << csv_field(row[q].second);
    os << "\n";
  }
  return os.str();
}

inline std::string render(const nlohmann::json& j, const std::string& format) {
  return format == "csv" ? to_csv(j) : j.dump(2) + "\n";
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Horizontal Chern-Gauss-Bonnet toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "hcgb 0.1.0");

  auto model_opts = [&](CLI::App* s) {
    s->add_option("--preset", cfg.preset, "built-in model")
        ->check(CLI::IsMember(preset_names()));
    s->add_option("--model", cfg.model_path, "model config file (.toml or .json)");
    s->add_option("--epsilon", cfg.epsilon, "override epsilon");
    s->add_option("--kappa", cfg.kappa, "htype-m2 parameter");
    s->add_option("--perturb", cfg.perturb, "NAME=value or NAME[i,j,...]=value, added to one tensor entry")->take_all();
  };
  auto mc_opts = [&](CLI::App* s) {
    s->add_option("--samples", cfg.samples, "Monte Carlo sample count");
    s->add_option("--seed", cfg.seed, "64-bit seed")->capture_default_str();
    s->add_option("--grid", cfg.grid, "bridge grid size (power of two)");
    s->add_option("--workers", cfg.workers, "worker threads (default HCGB_WORKERS or 1)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  };
  auto out_opts = [&](CLI::App* s) {
    s->add_option("--output,-o", cfg.output, "write the report here instead of stdout");
    s->add_option("--format", cfg.format, "json or csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  };

  auto* check = app.add_subcommand("check", "symmetry condition, curvature identities and torsion rank");
  model_opts(check);
  out_opts(check);
  check->add_option("--seed", cfg.seed, "recorded only");
  auto* euler = app.add_subcommand("euler", "Euler integrand, closed form and/or Monte Carlo");
  model_opts(euler);
  mc_opts(euler);
  out_opts(euler);
  euler->add_option("--mode", cfg.mode, "closed, mc or both")->check(CLI::IsMember({"closed", "mc", "both"}))->capture_default_str();
  auto* levy = app.add_subcommand("levy", "conditional Levy area moment generating function");
  mc_opts(levy);
  out_opts(levy);
  levy->add_option("--lambda", cfg.lambda, "exponent, |lambda| < pi")->capture_default_str();
  auto* density = app.add_subcommand("density", "density of the tangent-cone process at the origin");
  model_opts(density);
  mc_opts(density);
  out_opts(density);
  density->add_option("--t", cfg.t, "time")->capture_default_str();
  auto* jconst = app.add_subcommand("jconst", "the constant J by quadrature");
  model_opts(jconst);
  out_opts(jconst);
  jconst->add_option("--seed", cfg.seed, "recorded only");
  auto* ms = app.add_subcommand("ms", "heat supertrace of a simplicial complex");
  ms->add_option("--complex", cfg.complex_path, "file of maximal simplices")->required();
  ms->add_option("--t", cfg.t, "comma-separated times")->capture_default_str();
  ms->add_option("--seed", cfg.seed, "recorded only");
  out_opts(ms);

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  cfg.command = app.get_subcommands().front()->get_name();

  std::optional<ModelGeometry> model;
  try {
    if (cfg.command != "levy" && cfg.command != "ms") model = detail::load_from_config(cfg);
    if (cfg.grid && !hcgb::detail::is_power_of_two(*cfg.grid)) throw InputError("--grid must be a power of two >= 2");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }

  nlohmann::json report;
  bool passed = true;
  try {
    if (cfg.command == "check") report = detail::cmd_check(cfg, *model, passed);
    else if (cfg.command == "euler") report = detail::cmd_euler(cfg, *model);
    else if (cfg.command == "levy") report = detail::cmd_levy(cfg);
    else if (cfg.command == "density") report = detail::cmd_density(cfg, *model);
    else if (cfg.command == "jconst") report = detail::cmd_jconst(cfg, *model);
    else report = detail::cmd_ms(cfg);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << " (achieved " << e.achieved() << ")\n";
    return kExitCompute;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitCompute;
  }

  const std::string text = detail::render(report, cfg.format);
  if (cfg.output.empty()) {
    out << text;
  } else {
    std::ofstream f(cfg.output);
    if (!f || !(f << text)) {
      err << "error: cannot write '" << cfg.output << "'\n";
      return kExitInput;
    }
  }
  if (!passed) err << "check failed\n";
  return passed ? kExitOk : kExitCompute;
}

}  // namespace hcgb::cli
