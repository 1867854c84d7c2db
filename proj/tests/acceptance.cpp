// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Full sample sizes; expect a few minutes on one core.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "hcgb/carnot.hpp"
#include "hcgb/cgb.hpp"
#include "hcgb/chen.hpp"
#include "hcgb/cli.hpp"
#include "hcgb/fermion.hpp"
#include "hcgb/foliation.hpp"
#include "hcgb/mckean_singer.hpp"
#include "hcgb/model.hpp"

using namespace hcgb;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream note;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      note << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void criterion(int id, const std::string& title, const std::function<void(Outcome&)>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.note << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("C%-2d %s  %s:%s (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", title.c_str(), o.note.str().c_str(), secs);
  std::fflush(stdout);
}

FermionOp random_even_op(int d, std::mt19937_64& eng) {
  std::uniform_int_distribution<Mask> mask(0, (Mask{1} << d) - 1);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  FermionOp::Terms t;
  for (int q = 0; q < 8; ++q) t[{mask(eng), mask(eng)}] += u(eng);
  const Mask full = (Mask{1} << d) - 1;
  t[{full, full}] += u(eng);
  return FermionOp::from_terms(d, t);
}

nlohmann::json cli_json(const std::vector<std::string>& args, int& code) {
  std::ostringstream out, err;
  code = cli::run_cli(args, out, err);
  if (code != 0) return nullptr;
  auto j = nlohmann::json::parse(out.str());
  j.erase("timestamp");
  return j;
}

}  // namespace

int main() {
  std::cout << std::scientific;

  criterion(1, "closed-form supertrace vs graded trace", [](Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 eng(2024);
    double worst = 0.0;
    int count = 0;
    for (int d : {2, 4, 6})
      for (int k = 0; k < 1000; ++k, ++count) {
        const auto x = random_even_op(d, eng);
        worst = std::max(worst, std::abs(supertrace_closed_form(x) - supertrace(x)));
      }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.note << " " << count << " operators, max |diff| " << worst;
    o.require(worst <= 1e-12, "difference above 1e-12");
    o.require(secs < 10.0, "runtime above 10 s");
  });

  criterion(2, "curvature identities on presets", [](Outcome& o) {
    double worst = 0.0, hvhh = 0.0;
    for (const auto& name : preset_names()) {
      const auto fp = preset(name).fp;
      for (const auto& r : curvature_identities(fp)) {
        worst = std::max(worst, r.residual);
        o.require(r.passes, name + ":" + r.name);
      }
      if (check_symmetry(fp).passes) hvhh = std::max(hvhh, hat_curvature(fp).hvhh.max_abs());
    }
    o.note << " max residual " << worst << ", symmetric hvhh max " << hvhh;
    o.require(worst < 1e-12, "residual");
    o.require(hvhh < 1e-12, "hvhh block");
  });

  criterion(3, "symmetry gate on the H-type preset", [](Outcome& o) {
    for (double kappa : {0.5, 1.0, 2.0, 3.0}) {
      auto fp = preset("htype-m2", kappa).fp;
      fp.epsilon = 1.0 / kappa;
      const auto good = check_symmetry(fp);
      fp.epsilon = 2.0 / kappa;
      const auto bad = check_symmetry(fp);
      o.note << " k=" << kappa << ":" << good.residual << "/" << bad.residual;
      o.require(good.passes, "fails at 1/kappa");
      o.require(!bad.passes && bad.residual >= kappa / 2.0 - 1e-12, "residual at 2/kappa below kappa/2");
    }
  });

  criterion(4, "Levy area MGF at lambda = 1", [](Outcome& o) {
    MonteCarloOptions opt;
    opt.samples = 1000000;
    opt.grid = 1024;
    opt.seed = 1;
    const auto r = mgf_levy(1.0, opt);
    const double z = (r.mgf.estimate - r.closed_form) / r.mgf.stderr_;
    const double zv = (r.area_variance - 1.0 / 3.0) / r.area_variance_stderr;
    o.note << " est " << r.mgf.estimate << " vs " << r.closed_form << " (z " << z << ", stderr " << r.mgf.stderr_
           << "), var " << r.area_variance << " (z " << zv << ")";
    o.require(std::abs(z) <= 3.0, "MGF beyond 3 stderr");
    o.require(r.mgf.stderr_ <= 0.002, "stderr above 0.002");
    o.require(std::abs(zv) <= 3.0, "variance beyond 3 stderr");
  });

  criterion(5, "J constant of the Heisenberg preset", [](Outcome& o) {
    const auto r = j_constant(preset("heisenberg").fp);
    boost::math::quadrature::tanh_sinh<double> ts;
    const double I = ts.integrate([](double u) {
      if (u <= 0.0) return 1.0;
      if (u >= 1.0) return 0.0;
      const double x = u / (1.0 - u);
      return x / std::sinh(x) / ((1.0 - u) * (1.0 - u));
    }, 0.0, 1.0);
    o.note << " J " << r.value << ", radial integral " << I;
    o.require(std::abs(r.value - 0.25) <= 1e-8, "J off 0.25");
    o.require(std::abs(I - std::numbers::pi * std::numbers::pi / 4.0) <= 1e-10, "radial integral");
  });

  criterion(6, "tangent-cone density at the origin", [](Outcome& o) {
    const auto fp = preset("heisenberg").fp;
    DensityOptions opt;
    opt.samples = 1000000;
    opt.seed = 1;
    const auto r = density_mc(fp, 1.0, opt);
    const double rel = r.estimate / 0.0625 - 1.0;
    o.note << " d_1 " << r.estimate << " +- " << r.stderr_ << " (" << 100.0 * rel << "%)";
    o.require(std::abs(rel) <= 0.05, "more than 5% from 1/16");
    opt.samples = 200000;
    std::vector<double> v, e;
    for (double t : {0.5, 1.0, 2.0}) {
      opt.seed = static_cast<std::uint64_t>(10 + 4 * t);
      const auto d = density_mc(fp, t, opt);
      v.push_back(4.0 * t * t * d.estimate);
      e.push_back(4.0 * t * t * d.stderr_);
    }
    o.note << "; (2t)^2 d_t = " << v[0] << ", " << v[1] << ", " << v[2];
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t b = a + 1; b < 3; ++b)
        o.require(std::abs(v[a] - v[b]) <= 3.0 * std::hypot(e[a], e[b]), "dilation identity");
  });

  criterion(7, "closed form vs Monte Carlo supertrace", [](Outcome& o) {
    std::vector<ModelGeometry> models{preset("htype-m2")};
    for (std::uint64_t seed : {1, 2, 3}) models.push_back(random_symmetric_model(4, 2, seed));
    SupertraceOptions opt;
    opt.samples = 100000;
    opt.seed = 7;
    for (const auto& g : models) {
      const auto cf = closed_form_integrand(g.fp);
      const auto mc = mc_supertrace(g.fp, opt, cf.J_const);
      const double z = (mc.estimate - cf.integrand) / mc.stderr_;
      const double rel = mc.stderr_ / std::abs(cf.integrand);
      o.note << " " << g.name << ": z " << z << ", rel stderr " << rel << ";";
      o.require(std::abs(z) <= 3.0, g.name + " beyond 3 stderr");
      o.require(rel <= 0.05, g.name + " relative stderr");
    }
  });

  criterion(8, "parity vanishing for odd m", [](Outcome& o) {
    for (const auto& [name, samples] : {std::pair<std::string, std::size_t>{"heisenberg", 100000},
                                        {"quaternionic-heisenberg", 2000}}) {
      const auto g = preset(name);
      const auto e = euler_characteristic(g);
      SupertraceOptions opt;
      opt.samples = samples;
      opt.seed = 3;
      const auto mc = mc_supertrace(g.fp, opt);
      o.note << " " << name << ": closed " << e.integrand.integrand << ", mc " << mc.estimate << " +- " << mc.stderr_
             << (mc.pathwise_zero ? " (pathwise 0)" : "") << ";";
      o.require(e.integrand.integrand == 0.0 && e.chi_rounded == 0, name + " closed form");
      o.require(mc.pathwise_zero || std::abs(mc.estimate) <= 3.0 * mc.stderr_, name + " mc");
    }
  });

  criterion(9, "vanishing script T gives chi = 0", [](Outcome& o) {
    int hits = 0;
    for (const auto& name : preset_names()) {
      const auto g = preset(name);
      if (!check_symmetry(g.fp).passes || !script_T(g.fp).is_zero()) continue;
      ++hits;
      const auto e = euler_characteristic(g);
      o.note << " " << name << " chi " << e.chi_raw << ";";
      o.require(e.chi_raw == 0.0, name);
    }
    o.require(hits > 0, "no preset with vanishing script T");
  });

  criterion(10, "heat supertrace on simplicial complexes", [](Outcome& o) {
    double var = 0.0, dev = 0.0, def = 0.0;
    bool pairing = true;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto c = random_flag_complex(20, 0.3, seed);
      const double chi = static_cast<double>(c.euler_characteristic());
      double lo = 1e300, hi = -1e300;
      for (double t : {0.1, 1.0, 10.0}) {
        const double s = supertrace_heat(c, t);
        lo = std::min(lo, s);
        hi = std::max(hi, s);
        dev = std::max(dev, std::abs(s - chi));
      }
      var = std::max(var, hi - lo);
      const auto rep = eigenspace_pairing(c);
      pairing = pairing && rep.passes && rep.harmonic_euler == c.euler_characteristic();
      auto eng = rng::make_engine(seed, 0, 1);
      std::uniform_real_distribution<double> u(0.5, 2.0);
      Eigen::VectorXd w(c.total_size());
      for (Eigen::Index q = 0; q < w.size(); ++q) w(q) = u(eng);
      for (double theta : {0.0, 0.25, 0.5, 0.75, 1.0})
        def = std::max(def, std::abs(deformation_supertrace(c, w, theta, 1.0) - chi));
    }
    o.note << " max variation " << var << ", max |Str - chi| " << dev << ", deformation max dev " << def;
    o.require(var < 1e-10, "t variation");
    o.require(dev < 1e-9, "supertrace vs chi");
    o.require(pairing, "eigenspace pairing");
    o.require(def < 1e-9, "deformation");
  });

  criterion(11, "Chen coefficients and scalar-potential parametrix", [](Outcome& o) {
    double lin = 0.0, area = 0.0;
    for (std::uint64_t s = 0; s < 50; ++s) {
      const auto p = simulate_brownian(3, 256, 0.7, 11, s);
      for (int k : {32, 128, 256}) {
        const double t = k * p.dt();
        for (int i = 1; i <= 3; ++i) {
          lin = std::max(lin, std::abs(lambda_coeff(p, Word{i}, t) - std::sqrt(2.0) * p(k, i - 1)));
          for (int j = i + 1; j <= 3; ++j) {
            const double a = iterated_integral(p, Word{i, j}, t) - iterated_integral(p, Word{j, i}, t);
            area = std::max(area, std::abs(2.0 * lambda_coeff(p, Word{i, j}, t) - a));
          }
        }
      }
    }
    // Grid error: mean square change of the area between N and 2N points.
    std::vector<double> ratio;
    for (int N : {64, 256}) {
      double ss = 0.0;
      const int S = 2000;
      for (int s = 0; s < S; ++s) {
        const double d = levy_area(simulate_bridge(2, 2 * N, 31, s), 1, 2) - levy_area(simulate_bridge(2, N, 31, s), 1, 2);
        ss += d * d;
      }
      ratio.push_back((ss / S) / ((1.0 - 1.0 / N) / (2.0 * N)));
    }
    MonteCarloOptions opt;
    opt.samples = 200000;
    opt.grid = 2;
    opt.seed = 5;
    const auto sp = scalar_potential_kernel(1.0, 0.01, opt);
    const double rel = sp.estimate / sp.exact - 1.0;
    o.note << " |Lambda_i - sqrt2 B| " << lin << ", |2 Lambda_ij - Area| " << area << ", mean-square grid error / (1-1/N)/(2N) = "
           << ratio[0] << ", " << ratio[1] << "; parametrix " << 100.0 * rel << "%";
    o.require(lin < 1e-12, "linear coefficient");
    o.require(area < 1e-12, "area coefficient");
    for (double r : ratio) o.require(std::abs(r - 1.0) < 0.15, "grid error rate");
    o.require(std::abs(rel) <= 0.01, "parametrix beyond 1%");
  });

  criterion(12, "CLI determinism across worker counts", [](Outcome& o) {
    const std::string dir = HCGB_DATA_DIR;
    const std::vector<std::vector<std::string>> commands = {
        {"check", "--preset", "htype-m2"},
        {"euler", "--preset", "htype-m2", "--mode", "both", "--samples", "2000", "--grid", "64"},
        {"levy", "--samples", "20000", "--grid", "64"},
        {"density", "--preset", "heisenberg", "--samples", "20000", "--grid", "32"},
        {"jconst", "--preset", "heisenberg"},
        {"ms", "--complex", dir + "/complexes/torus.txt", "--t", "0.1,1,10"},
    };
    for (const auto& base : commands) {
      std::vector<std::string> reference;
      nlohmann::json first;
      bool same = true;
      for (const char* w : {"1", "1", "2", "4"}) {
        auto args = base;
        args.insert(args.end(), {"--seed", "42"});
        if (base[0] != "ms" && base[0] != "check" && base[0] != "jconst") args.insert(args.end(), {"--workers", w});
        int code = 0;
        const auto j = cli_json(args, code);
        if (code != 0) {
          o.note << " " << base[0] << " exit " << code;
          same = false;
          break;
        }
        if (first.is_null())
          first = j;
        else
          same = same && j.dump() == first.dump();
      }
      o.note << " " << base[0] << (same ? " ok" : " DIFF");
      o.require(same, base[0]);
    }
  });

  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
