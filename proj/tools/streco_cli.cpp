#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "streco/experiment.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<long long> seed;
  std::string formulation;
  std::string solver;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "Experiment config file")
      ->required();
  cmd->add_option("--out", flags.out, "Output directory (overrides config)");
  cmd->add_option("--seed", flags.seed, "Observation noise seed (overrides config)");
  cmd->add_option("--formulation", flags.formulation,
                  "Formulation (overrides config)")
      ->check(CLI::IsMember({"mf", "mf-alpha", "mf4", "mf4-alpha", "qr"}));
  cmd->add_option("--solver", flags.solver, "Solver (overrides config)")
      ->check(CLI::IsMember({"direct", "dual"}));
}

streco::ExperimentConfig load(const CommonFlags& flags) {
  streco::ExperimentConfig cfg = streco::parse_config(flags.config);
  if (!flags.out.empty()) cfg.out_dir = flags.out;
  if (flags.seed) cfg.seed = static_cast<std::uint64_t>(*flags.seed);
  if (!flags.formulation.empty()) cfg.formulation = flags.formulation;
  if (!flags.solver.empty()) cfg.solver = flags.solver;
  streco::validate_config(cfg);
  return cfg;
}

int guarded(const std::function<void()>& body) {
  try {
    body();
    return streco::kExitOk;
  } catch (const std::exception& e) {
    const int code = streco::exit_code_for(e);
    std::cerr << streco::exit_category(code) << ": " << e.what() << "\n";
    return code;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Space-time reconstruction of a parabolic state from a partial "
               "distributed observation"};
  app.require_subcommand(1);

  CommonFlags fw, ob, rc, dg, sw;
  int levels = 3;

  CLI::App* forward = app.add_subcommand(
      "forward", "Solve the forward problem and write the state CSV");
  add_common(forward, fw);
  CLI::App* observe = app.add_subcommand(
      "observe", "Synthesize a partial observation from a fine-grid truth");
  add_common(observe, ob);
  CLI::App* reconstruct = app.add_subcommand(
      "reconstruct", "Run the full reconstruction pipeline");
  add_common(reconstruct, rc);
  CLI::App* diagnose = app.add_subcommand(
      "diagnose", "Run the pipeline and report the stability diagnostics");
  add_common(diagnose, dg);
  CLI::App* sweep =
      app.add_subcommand("sweep", "Nested-refinement convergence study");
  add_common(sweep, sw);
  sweep->add_option("--levels", levels, "Number of refinement levels (>= 2)");

  CLI11_PARSE(app, argc, argv);

  if (forward->parsed())
    return guarded([&] {
      const streco::ExperimentConfig cfg = load(fw);
      const streco::SpaceTimeGrid grid = streco::make_grid(cfg);
      const streco::Coefficients coeffs = streco::make_coefficients(cfg);
      streco::validate_coefficients(coeffs, grid, cfg.quad_order);
      const streco::Field y = streco::solve_forward(grid, coeffs);
      const streco::ForwardMixedSolution mixed =
          streco::solve_forward_mixed(grid, coeffs);
      streco::write_field_csv(cfg.out_dir + "/forward.csv",
                              {"x", "t", "y", "y_mixed", "p_mixed"},
                              {&y, &mixed.y, &mixed.p});
      std::cout << "wrote " << cfg.out_dir << "/forward.csv\n";
    });
  if (observe->parsed())
    return guarded([&] {
      const streco::ExperimentConfig cfg = load(ob);
      const streco::Field truth = streco::generate_truth(cfg);
      const streco::ObservationSet obs =
          streco::make_observation(truth, cfg.omega_a, cfg.omega_b,
                                   streco::make_grid(cfg), cfg.quad_order,
                                   cfg.sigma, cfg.seed);
      streco::write_text_atomic(cfg.out_dir + "/.keep", "");
      streco::write_observation_csv(obs, cfg.out_dir + "/observation.csv");
      std::cout << "wrote " << cfg.out_dir << "/observation.csv ("
                << obs.sample_count() << " samples)\n";
    });
  if (reconstruct->parsed() || diagnose->parsed()) {
    const CommonFlags& flags = reconstruct->parsed() ? rc : dg;
    return guarded([&] {
      const streco::RunOutcome out = streco::run_experiment(load(flags));
      for (const std::string& f : out.files) std::cout << "wrote " << f << "\n";
      if (diagnose->parsed()) {
        for (const auto& [k, v] : out.norms.values)
          std::cout << k << " = " << v << "\n";
        std::cout << "C_emp = " << out.norms.C_emp << "\n"
                  << "delta_h = " << out.delta_h << "\n"
                  << "multiplier_consistency = " << out.consistency << "\n";
      }
    });
  }
  // sweep
  return guarded([&] {
    const streco::ExperimentConfig cfg = load(sw);
    const streco::SweepResult res = streco::convergence_sweep(cfg, levels);
    std::cout << "wrote " << res.csv_path << " (" << res.rows.size()
              << " levels)\n";
    if (!res.error.empty()) throw streco::MaxIterationsExceeded(res.error);
  });
}
