#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"

#include "bmlr/errors.hpp"
#include "bmlr/io.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "Bayesian multivariate logistic analysis of two-arm trials with "
      "correlated binary outcomes"};
  app.require_subcommand(1);

  bmlr::PipelineArgs args;
  auto add_common = [&](CLI::App* cmd, bool takes_data) {
    cmd->add_option("--config", args.config_path, "JSON analysis config")
        ->required();
    if (takes_data)
      cmd->add_option("--data", args.data_path, "trial dataset CSV");
    cmd->add_option("--out", args.out_dir,
                    "output directory, created if missing (default: out)");
    cmd->add_option("--seed", args.seed, "RNG seed (default: 20260815)");
    cmd->add_flag("--full-scale", args.full_scale,
                  "production chain settings (10000 stored, 1000 burn-in)");
    return cmd;
  };

  add_common(app.add_subcommand(
                 "fit", "sample the posterior and persist the draws"),
             true);
  CLI::App* decide = add_common(
      app.add_subcommand(
          "decide", "effect summaries, exceedance probabilities, verdicts"),
      true);
  decide->add_option("--draws", args.draws_path,
                     "reuse persisted draws instead of fitting");
  add_common(app.add_subcommand(
                 "plan", "required per-arm sample size for the targets"),
             false);
  add_common(app.add_subcommand(
                 "elicit", "prior coefficient means from stated beliefs"),
             false);
  add_common(app.add_subcommand(
                 "simulate", "Monte Carlo operating characteristics"),
             false);

  CLI11_PARSE(app, argc, argv);
  args.command = app.get_subcommands().front()->get_name();

  try {
    for (const std::string& path : bmlr::run_pipeline(args))
      std::printf("%s\n", path.c_str());
    return 0;
  } catch (const bmlr::Error& e) {
    std::fprintf(stderr, "%s\n",
                 bmlr::error_json(e.code(), e.what()).c_str());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n",
                 bmlr::error_json("internal", e.what()).c_str());
    return 2;
  }
}
