#include "soapbubble/constants.hpp"
#include "soapbubble/lemmas.hpp"
#include "soapbubble/moving_planes.hpp"
#include "soapbubble/report.hpp"
#include "soapbubble/surface_io.hpp"
#include "soapbubble/symmetry_fit.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <numbers>
#include <optional>

using namespace soapbubble;

namespace {

enum ExitCode { kOk = 0, kInput = 2, kNumerical = 3, kViolation = 4 };

struct RunConfig {
  std::string surface;
  std::size_t samples = 20000;
  std::uint64_t seed = 0;
  double tol = 0.0;
  std::optional<double> k1, k2, k3;
  std::string out;
  std::string csv;
};

void add_common(CLI::App* cmd, RunConfig& cfg, bool with_surface) {
  if (with_surface) cmd->add_option("--surface", cfg.surface, "surface spec (JSON)");
  cmd->add_option("--samples", cfg.samples, "sample budget")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", cfg.seed, "random seed");
  cmd->add_option("--tol", cfg.tol, "plane bisection tolerance (0 = 1e-8 x diameter)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", cfg.out, "write the JSON report here instead of stdout");
}

void add_k(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--k1", cfg.k1, "elliptic constant K1 (placeholder 1 when absent)");
  cmd->add_option("--k2", cfg.k2, "elliptic constant K2");
  cmd->add_option("--k3", cfg.k3, "elliptic constant K3");
}

void apply_k(const RunConfig& cfg, ConstantsInput& in) {
  if (cfg.k1) in.K1 = *cfg.k1;
  if (cfg.k2) in.K2 = *cfg.k2;
  if (cfg.k3) in.K3 = *cfg.k3;
  in.k_user_supplied = cfg.k1 || cfg.k2 || cfg.k3;
}

std::unique_ptr<Surface> need_surface(const RunConfig& cfg) {
  if (cfg.surface.empty()) throw InputError("--surface is required");
  return load_surface(cfg.surface);
}

void emit(const RunConfig& cfg, const nlohmann::json& doc) {
  const std::string text = dump_report(doc);
  if (cfg.out.empty()) {
    std::cout << text;
  } else {
    write_text(cfg.out, text);
  }
}

int cmd_analyze(const RunConfig& cfg, std::size_t rays, std::size_t robust) {
  const auto surface = need_surface(cfg);
  StabilityOptions opt;
  opt.samples = cfg.samples;
  opt.seed = cfg.seed;
  opt.tol = cfg.tol;
  opt.rays = rays;
  opt.robust_directions = robust;
  apply_k(cfg, opt.constants);
  const StabilityReport rep = stability_ratio(*surface, opt);
  emit(cfg, to_json(rep));
  if (!cfg.out.empty()) {
    std::cout << "verdict: " << rep.verdict << "\n";
    std::cout << "r_e - r_i = " << rep.r_e - rep.r_i << ", osc(H) = " << rep.osc.osc;
    if (!rep.ratio_indeterminate) std::cout << ", ratio = " << rep.ratio;
    std::cout << "\n";
  }
  return kOk;
}

int cmd_sweep(const RunConfig& cfg, double t_min, double t_max, std::size_t steps) {
  StabilityOptions opt;
  opt.samples = cfg.samples;
  opt.seed = cfg.seed;
  opt.tol = cfg.tol;
  opt.rays = 200;
  const SweepResult res = sweep_ellipsoid(t_min, t_max, steps, opt);
  const std::string csv = sweep_csv(res);
  if (cfg.csv.empty()) {
    std::cout << csv;
  } else {
    write_text(cfg.csv, csv);
    std::cout << "slope = " << res.slope << ", ratio spread = " << res.ratio_spread << "\n";
  }
  if (!cfg.out.empty()) write_text(cfg.out, dump_report(to_json(res)));
  return kOk;
}

int cmd_constants(const RunConfig& cfg, int n, double rho, double area, std::optional<double> osc) {
  ConstantsInput in;
  in.n = n;
  in.rho = rho;
  in.area = area;
  apply_k(cfg, in);
  const ConstantsReport rep = compute_constants(in);
  nlohmann::json doc = to_json(rep);
  std::cout << constants_table(rep);
  if (osc) {
    const Smallness s = check_smallness(*osc, rep);
    doc["smallness"] = {{"osc", *osc}, {"applicable", s.applicable}, {"margin", s.margin}};
    std::cout << "osc(H) = " << *osc << (s.applicable ? " is" : " is not") << " below eps (margin " << s.margin << ")\n";
  }
  if (!cfg.out.empty()) write_text(cfg.out, dump_report(doc));
  return kOk;
}

int cmd_verify(const RunConfig& cfg, const std::string& id, std::size_t trials, double rho) {
  VerifyOptions opt;
  opt.trials = trials;
  opt.seed = cfg.seed;
  std::vector<std::string> ids;
  if (id == "all") {
    ids = lemma_ids();
  } else {
    const std::string canon = canonical_lemma_id(id);
    if (canon.empty()) throw InputError("unknown lemma id '" + id + "'");
    ids.push_back(canon);
  }
  std::unique_ptr<Surface> surface;
  auto surface_free = [](const std::string& s) { return s == "fig1" || s == "normal-difference"; };
  for (const auto& s : ids) {
    if (!surface_free(s)) {
      surface = need_surface(cfg);
      break;
    }
  }
  // fig1 and normal-difference ignore the surface argument
  if (!surface) surface = std::make_unique<Sphere>(zeros(3), 1.0);
  std::vector<LemmaVerdict> verdicts;
  for (const auto& s : ids) verdicts.push_back(run_lemma(s, *surface, opt, rho));
  std::cout << verdict_table(verdicts);
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& v : verdicts) doc.push_back(to_json(v));
  if (!cfg.out.empty()) write_text(cfg.out, dump_report(doc));
  bool violated = false, rejected = false;
  for (const auto& v : verdicts) {
    violated = violated || v.violations > 0;
    if (v.rejected) {
      rejected = true;
      std::cerr << v.id << " rejected: " << v.reject_reason << "\n";
    }
  }
  if (violated) return kViolation;
  return rejected ? kInput : kOk;
}

int cmd_moving_plane(const RunConfig& cfg, const std::vector<double>& omega) {
  const auto surface = need_surface(cfg);
  if (static_cast<int>(omega.size()) != surface->dim()) throw InputError("--omega must have one entry per coordinate");
  Vec w(surface->dim());
  for (int i = 0; i < surface->dim(); ++i) w[i] = omega[i];
  const SampleSet samples = surface->sample(cfg.samples, cfg.seed);
  const CriticalPlane cp = critical_position(*surface, samples, UnitVector(w), cfg.tol);
  const CapContainment at_m = reflected_cap_inside(*surface, samples, cp.omega, cp.m, cp.tol);
  nlohmann::json doc = to_json(cp);
  doc["cap_size"] = at_m.cap_size;
  doc["worst_violation"] = std::isfinite(at_m.worst_violation) ? nlohmann::json(at_m.worst_violation) : nlohmann::json(nullptr);
  emit(cfg, doc);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moving-plane symmetry analysis of closed surfaces: curvature oscillation, radii and constants"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto* analyze = app.add_subcommand("analyze", "stability report for one surface");
  add_common(analyze, cfg, true);
  add_k(analyze, cfg);
  std::size_t rays = 1000, robust = 0;
  analyze->add_option("--rays", rays, "rays cast from O in the radial map check");
  analyze->add_option("--robust-directions", robust, "extra random directions for a least-squares center");

  auto* sweep = app.add_subcommand("sweep-ellipsoid", "ellipsoids (1, 1, 1 + t) over a range of t");
  add_common(sweep, cfg, false);
  double t_min = 0.02, t_max = 0.2;
  std::size_t steps = 10;
  sweep->add_option("--t-min", t_min, "smallest t")->check(CLI::PositiveNumber);
  sweep->add_option("--t-max", t_max, "largest t")->check(CLI::PositiveNumber);
  sweep->add_option("--steps", steps, "number of rows")->check(CLI::PositiveNumber);
  sweep->add_option("--csv", cfg.csv, "write the CSV here instead of stdout");

  auto* constants = app.add_subcommand("constants", "explicit constants for (n, rho, |S|)");
  int n = 2;
  double rho = 1.0, area = 4.0 * std::numbers::pi;
  std::optional<double> osc;
  constants->add_option("--n", n, "intrinsic dimension")->check(CLI::PositiveNumber);
  constants->add_option("--rho", rho, "touching-ball radius");
  constants->add_option("--area", area, "surface area |S|");
  constants->add_option("--osc", osc, "also check the smallness condition for this osc(H)");
  constants->add_option("--out", cfg.out, "write the JSON ledger here");
  add_k(constants, cfg);

  auto* verify = app.add_subcommand("verify", "stress-test a lemma (or 'all')");
  std::string lemma;
  std::size_t trials = 10000;
  double verify_rho = 0.0;
  verify->add_option("lemma", lemma, "lemma id: " + [] {
    std::string s;
    for (const auto& id : lemma_ids()) s += (s.empty() ? "" : ", ") + id;
    return s + ", all";
  }())->required();
  add_common(verify, cfg, true);
  verify->add_option("--trials", trials, "trials per suite")->check(CLI::PositiveNumber);
  verify->add_option("--rho", verify_rho, "touching radius to test with (default: estimated)");

  auto* plane = app.add_subcommand("moving-plane", "critical plane in a single direction");
  add_common(plane, cfg, true);
  std::vector<double> omega;
  plane->add_option("--omega", omega, "direction, e.g. --omega 0 0 1")->required()->expected(2, 3);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInput;
  }

  try {
    if (*analyze) return cmd_analyze(cfg, rays, robust);
    if (*sweep) return cmd_sweep(cfg, t_min, t_max, steps);
    if (*constants) return cmd_constants(cfg, n, rho, area, osc);
    if (*verify) return cmd_verify(cfg, lemma, trials, verify_rho);
    if (*plane) return cmd_moving_plane(cfg, omega);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure in stage '" << e.stage() << "': " << e.what() << "\n";
    return kNumerical;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInput;
  }
  return kOk;
}
