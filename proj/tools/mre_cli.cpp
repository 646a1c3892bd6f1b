// Command-line front end for the layered shear-modulus inversion.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mre/mre.hpp"

namespace {

using namespace mre;

struct Overrides {
  std::string config;
  std::string example;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<int> grid;
  std::optional<double> noise;
  std::string data_source;
  std::string flux_row;
  std::optional<int> refinement;
  std::string norm;
  std::string mass;
  std::optional<double> q;
  std::optional<double> tau;
  std::optional<int> max_iter;
};

void add_common(CLI::App* cmd, Overrides& o, const std::string& default_example) {
  o.example = default_example;
  cmd->add_option("--config", o.config, "experiment JSON; values override the example preset")
      ->check(CLI::ExistingFile);
  cmd->add_option("--example", o.example, "preset to start from: 1.1, 1.2, 2.1 or 2.2")->capture_default_str();
  cmd->add_option("--seed", o.seed, "noise seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--grid", o.grid, "data grid size NX NY")->expected(2);
  cmd->add_option("--noise", o.noise, "relative L2 noise level");
  cmd->add_option("--data-source", o.data_source, "analytic or fd")->check(CLI::IsMember({"analytic", "fd"}));
  cmd->add_option("--flux-row", o.flux_row, "interface flux row of the analytic solution: physical or unweighted")
      ->check(CLI::IsMember({"physical", "unweighted"}));
  cmd->add_option("--refinement", o.refinement, "solver grid refinement factor");
  cmd->add_option("--norm", o.norm, "data norm: h1 or l2")->check(CLI::IsMember({"h1", "l2"}));
  cmd->add_option("--mass", o.mass, "inertia stencil: corrected or lumped")
      ->check(CLI::IsMember({"corrected", "lumped"}));
  cmd->add_option("--q", o.q, "Morozov ratio q in (0, 1)");
  cmd->add_option("--tau", o.tau, "discrepancy factor tau > 1/q");
  cmd->add_option("--max-iter", o.max_iter, "iteration limit");
}

ExperimentSpec resolve(const Overrides& o, const std::string& example) {
  ExperimentSpec s = preset(example);
  if (!o.config.empty()) s = load_spec(o.config, s);
  if (o.seed) s.seed = *o.seed;
  if (!o.out.empty()) s.out_dir = o.out;
  if (o.grid.size() == 2) {
    s.nx = o.grid[0];
    s.ny = o.grid[1];
  }
  if (o.noise) s.noise_level = *o.noise;
  if (!o.data_source.empty()) s.source = parse_data_source(o.data_source);
  if (!o.flux_row.empty()) s.flux = parse_flux_row(o.flux_row);
  if (o.refinement) s.refinement = *o.refinement;
  if (!o.norm.empty()) s.lm.norm = parse_norm(o.norm);
  if (!o.mass.empty()) s.mass = parse_mass(o.mass);
  if (o.q) s.lm.q = *o.q;
  if (o.tau) s.lm.tau = *o.tau;
  if (o.max_iter) s.lm.max_iter = *o.max_iter;
  s.validate();
  return s;
}

std::string out_path(const std::string& dir, const char* file) {
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / file).string();
}

void print_comparison(const ExperimentReport& r) {
  std::printf("%-20s %12s %12s %12s %10s %10s %6s\n", "parameter", "recovered", "truth", "reference", "err_true",
              "tolerance", "");
  for (const auto& row : r.comparison.rows) {
    std::printf("%-20s %12.6g %12.6g %12s %9.3f%% %9.3f%% %6s\n", row.name.c_str(), row.recovered, row.truth,
                row.reference ? std::to_string(*row.reference).c_str() : "-", 100 * row.rel_error_truth,
                100 * row.tolerance, row.pass ? "ok" : "FAIL");
  }
  std::printf("stop=%s k*=%d delta=%.4g residual=%.4g time=%.2fs\n", std::string(to_string(r.run.stop_reason)).c_str(),
              r.run.k_star, r.delta_used, r.run.residuals.back(), r.runtime_seconds);
}

int cmd_forward(const ExperimentSpec& s) {
  const Grid g = s.grid();
  const LayeredParams truth = s.truth();
  const LayeredForwardModel model(g, s.physics(), {s.refinement, s.mass});
  const WaveField fd = model(truth);
  const WaveField exact = evaluate(solve_transmission(truth, s.rho, s.omega(), s.geometry(), s.flux, s.dispersion), g);
  std::printf("grid %dx%d refinement %d mass %s\n", s.nx, s.ny, s.refinement, to_string(s.mass).c_str());
  std::printf("relative L2 error %.6e  relative H1 error %.6e\n", l2_norm(fd - exact) / l2_norm(exact),
              h1_norm(fd - exact) / h1_norm(exact));
  if (!s.out_dir.empty()) {
    write_field(out_path(s.out_dir, "forward.csv"), fd);
    write_field(out_path(s.out_dir, "analytic.csv"), exact);
    write_profiles(out_path(s.out_dir, "profile.csv"), {{"forward", &fd}, {"analytic", &exact}}, s.profile_x1_mm * 1e-3);
  }
  return 0;
}

int cmd_generate(const ExperimentSpec& s) {
  const SyntheticData d = synthesize(s);
  std::printf("source %s, noise %.4g (realized %.15g), delta_h1 %.6e, delta_l2 %.6e\n", to_string(s.source).c_str(),
              s.noise_level, d.realized_level, d.delta_h1, d.delta_l2);
  if (!s.out_dir.empty()) {
    write_field(out_path(s.out_dir, "clean.csv"), d.clean);
    write_field(out_path(s.out_dir, "data.csv"), d.noisy);
    write_profiles(out_path(s.out_dir, "profile.csv"), {{"clean", &d.clean}, {"data", &d.noisy}},
                   s.profile_x1_mm * 1e-3);
    write_json(out_path(s.out_dir, "generate.json"), {{"version", kVersion},
                                                      {"spec", to_json(s)},
                                                      {"delta_h1", d.delta_h1},
                                                      {"delta_l2", d.delta_l2},
                                                      {"realized_level", d.realized_level}});
  }
  return 0;
}

int cmd_invert(const ExperimentSpec& s) {
  const ExperimentReport r = run_experiment(s);
  print_comparison(r);
  return r.pass() ? 0 : 1;
}

int cmd_verify(const ExperimentSpec& s, int samples, double radius) {
  const LayeredForwardModel model(s.grid(), s.physics(), {s.refinement, s.mass});
  const LayeredParams base = s.truth();
  const ConeEstimate cone =
      estimate_cone_constant(model, base, radius, samples, s.seed, s.elastic, s.lm.bounds, samples);
  const double scale = sup_norm(base);
  const LayeredParams dir = s.elastic ? LayeredParams{1.0, 0.0, -0.5, 0.0} : LayeredParams{1.0, 0.01, -0.5, 0.02};
  const double dn = sup_norm(dir);
  const LayeredParams unit{dir.storage1 / dn, dir.loss1 / dn, dir.storage2 / dn, dir.loss2 / dn};
  std::vector<double> ts;
  for (double f : {1e-1, 3e-2, 1e-2, 3e-3}) ts.push_back(f * scale);
  const auto scan = taylor_remainder_scan(model, base, unit, ts, s.elastic, s.lm.bounds);
  const double slope = taylor_slope(scan);
  std::printf("cone c_hat %.6e (radius %.3g, %zu pairs); out-of-sample violations at 1.5 c_hat: %d of %d\n", cone.c_hat,
              radius, cone.samples.size(), cone.validation.violations, cone.validation.pairs);
  std::printf("Taylor remainder slope %.4f\n", slope);
  if (!s.out_dir.empty()) {
    write_json(out_path(s.out_dir, "diagnostics.json"),
               {{"version", kVersion}, {"spec", to_json(s)}, {"cone", to_json(cone)},
                {"taylor", {{"points", to_json(scan)}, {"slope", slope}}}});
  }
  const bool ok = cone.c_hat > 0.0 && std::isfinite(cone.c_hat) && cone.validation.violations == 0 && slope >= 1.8 &&
                  slope <= 2.2;
  return ok ? 0 : 1;
}

int cmd_reproduce(const Overrides& o) {
  bool all = true;
  Json summary = Json::array();
  for (const auto& name : preset_names()) {
    Overrides per = o;
    if (!o.out.empty()) per.out = (std::filesystem::path(o.out) / ("example-" + name)).string();
    const ExperimentSpec s = resolve(per, name);
    std::printf("\n== Example %s: %s, %.0f Hz, initial G' (%.4g, %.4g) kPa ==\n", name.c_str(),
                s.elastic ? "elastic" : "viscoelastic", s.frequency_Hz, s.initial_storage_kPa[0],
                s.initial_storage_kPa[1]);
    const ExperimentReport r = run_experiment(s);
    print_comparison(r);
    all = all && r.pass();
    summary.push_back({{"example", name}, {"pass", r.pass()}, {"comparison", to_json(r.comparison)}});
  }
  if (!o.out.empty()) write_json(out_path(o.out, "reproduce.json"), {{"version", kVersion}, {"examples", summary}});
  std::printf("\n%s\n", all ? "all examples within tolerance" : "some examples outside tolerance");
  return all ? 0 : 1;
}

int cmd_scan(const ExperimentSpec& s, const std::vector<double>& levels, int max_increment) {
  const auto scan = stopping_index_scan(s, levels, s.seed);
  bool ok = true;
  Json rows = Json::array();
  std::printf("%10s %14s %6s  %s\n", "level", "delta", "k*", "stop");
  for (std::size_t k = 0; k < scan.size(); ++k) {
    const auto& p = scan[k];
    std::printf("%10.4g %14.6e %6d  %s\n", p.level, p.delta, p.k_star, std::string(to_string(p.stop_reason)).c_str());
    ok = ok && p.stop_reason == StopReason::Discrepancy;
    if (k > 0) {
      const int inc = p.k_star - scan[k - 1].k_star;
      ok = ok && inc >= 0 && inc <= max_increment;
    }
    rows.push_back({{"level", p.level}, {"delta", p.delta}, {"k_star", p.k_star},
                    {"stop_reason", std::string(to_string(p.stop_reason))}});
  }
  std::printf("%s\n", ok ? "k* nondecreasing with bounded increments" : "k* scaling check failed");
  if (!s.out_dir.empty()) {
    write_json(out_path(s.out_dir, "scan.json"), {{"version", kVersion}, {"spec", to_json(s)}, {"scan", rows}});
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layered complex shear-modulus reconstruction by Levenberg-Marquardt iteration"};
  app.set_version_flag("--version", std::string(mre::kVersion));
  app.require_subcommand(1);

  Overrides o_fwd, o_gen, o_inv, o_ver, o_rep, o_scan;
  auto* fwd = app.add_subcommand("forward", "solve the forward problem and compare with the analytic solution");
  add_common(fwd, o_fwd, "2.2");
  auto* gen = app.add_subcommand("generate", "write synthetic data with noise");
  add_common(gen, o_gen, "2.1");
  auto* inv = app.add_subcommand("invert", "run one inversion");
  add_common(inv, o_inv, "2.1");
  auto* ver = app.add_subcommand("verify", "cone-condition and Taylor-remainder diagnostics");
  add_common(ver, o_ver, "2.1");
  int samples = 20;
  double radius = 0.1;
  ver->add_option("--samples", samples, "pairs per cone estimate")->capture_default_str();
  ver->add_option("--radius", radius, "relative ball radius")->capture_default_str();
  auto* rep = app.add_subcommand("reproduce", "run the four benchmark examples");
  add_common(rep, o_rep, "2.1");
  auto* scan = app.add_subcommand("scan-delta", "stopping index against noise level");
  add_common(scan, o_scan, "2.1");
  std::vector<double> levels{0.2, 0.1, 0.05, 0.025};
  int max_increment = 5;
  scan->add_option("--levels", levels, "decreasing noise levels")->capture_default_str();
  scan->add_option("--max-increment", max_increment, "largest allowed k* increment")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fwd) return cmd_forward(resolve(o_fwd, o_fwd.example));
    if (*gen) return cmd_generate(resolve(o_gen, o_gen.example));
    if (*inv) return cmd_invert(resolve(o_inv, o_inv.example));
    if (*ver) return cmd_verify(resolve(o_ver, o_ver.example), samples, radius);
    if (*rep) return cmd_reproduce(o_rep);
    if (*scan) return cmd_scan(resolve(o_scan, o_scan.example), levels, max_increment);
  } catch (const mre::Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", std::string(mre::to_string(e.code())).c_str(), e.what());
    return 2;
  }
  return 0;
}
