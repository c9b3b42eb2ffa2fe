// Command-line front end: simulate experiment sweeps, decompose moment or
// model files into feature estimates, and diagnose model separation
// constants.

#include <cstdint>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lrb/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"low-rank bandit simulator"};
  app.require_subcommand(1);

  lrb::SimulateOptions sim;
  std::vector<std::uint64_t> seeds;
  CLI::App* simulate = app.add_subcommand("simulate", "run every (policy, seed) cell of a config");
  simulate->add_option("--config", sim.config_path, "experiment config (TOML or JSON)")
      ->required();
  simulate->add_option("--out", sim.out_dir, "output directory (overrides config)");
  simulate->add_option("--seeds", seeds, "run seeds a,b,c (overrides config)")->delimiter(',');
  simulate->add_option("--parallelism", sim.parallelism, "worker threads (0 = all cores)");
  simulate->add_flag("--literal-gate", sim.literal_gate,
                     "explore when the Bernoulli gate draws 0 (listing polarity)");
  simulate->add_flag("--rebuild-on-refresh", sim.rebuild_on_refresh,
                     "rebuild per-user designs under each refreshed feature estimate");

  lrb::DecomposeOptions dec;
  CLI::App* decompose =
      app.add_subcommand("decompose", "estimate latent class features from moments");
  decompose->add_option("input", dec.input_path, "model JSON, moments JSON, or records CSV")
      ->required();
  decompose->add_option("--classes", dec.num_classes, "number of latent classes to extract");
  decompose->add_option("--out", dec.out_path, "write the feature estimate JSON here");
  decompose->add_option("--restarts", dec.rtp.restarts, "tensor power restarts");
  decompose->add_option("--power-iters", dec.rtp.power_iters, "power iterations per restart");
  decompose->add_option("--rtp-seed", dec.rtp.seed, "tensor power seed");
  decompose->add_option("--tol", dec.rtp.convergence_tol, "power iteration convergence tolerance");
  decompose->add_flag("--report-bounds", dec.report_bounds,
                      "print the recovery bound and exploration-threshold branches");
  decompose->add_option("--delta", dec.delta, "confidence level for the reported bounds");
  decompose->add_option("--bound-sessions", dec.bound_sessions,
                        "session count n used in the reported bounds");

  lrb::DiagnoseOptions diag;
  CLI::App* diagnose =
      app.add_subcommand("diagnose", "print separation constants and per-user thresholds");
  diagnose->add_option("model", diag.model_path, "model JSON with ground truth")->required();
  diagnose->add_option("--user", diag.user, "single user index (default: all)");
  diagnose->add_option("--delta", diag.delta, "confidence level");

  CLI11_PARSE(app, argc, argv);

  sim.seeds = seeds;
  if (simulate->parsed()) return lrb::cmd_simulate(sim);
  if (decompose->parsed()) return lrb::cmd_decompose(dec);
  if (diagnose->parsed()) return lrb::cmd_diagnose(diag);
  return 0;
}
