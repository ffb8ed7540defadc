#include <cstdio>
#include <exception>
#include <functional>
#include <string>

#include <CLI11.hpp>

#include "smaxdg/experiments.hpp"

namespace {

using Runner = std::function<smaxdg::RunResult(const smaxdg::RunConfig&, const std::string&)>;

struct SubcommandSpec {
  const char* name;
  const char* description;
  Runner run;
};

int run_experiment(const SubcommandSpec& spec, const std::string& config_path,
                   const std::string& outdir, int workers) {
  try {
    smaxdg::RunConfig config = smaxdg::load_config_file(config_path);
    config.workers = workers;
    smaxdg::RunResult result = spec.run(config, outdir);
    smaxdg::write_outputs(result, outdir);
    std::printf("%s: %s", spec.name, result.ok ? "ok" : "ACCEPTANCE FAILURE");
    if (result.has_fit) std::printf(" (slope %.4f)", result.fit.slope);
    std::printf("\n");
    for (const auto& f : result.failures) std::printf("  failed: %s\n", f.c_str());
    return smaxdg::exit_code(result);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s: error: %s\n", spec.name, e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic Maxwell symplectic dG experiment driver"};
  app.require_subcommand(1);

  const SubcommandSpec specs[] = {
      {"converge-time", "Temporal mean-square convergence against the spectral oracle",
       [](const smaxdg::RunConfig& c, const std::string&) { return smaxdg::converge_time(c); }},
      {"converge-space", "Spatial convergence of the dG discretization",
       [](const smaxdg::RunConfig& c, const std::string&) { return smaxdg::converge_space(c); }},
      {"converge-full", "Coupled space-time convergence",
       [](const smaxdg::RunConfig& c, const std::string&) { return smaxdg::converge_full(c); }},
      {"divergence-check", "Weak divergence residuals along scheme trajectories",
       [](const smaxdg::RunConfig& c, const std::string&) { return smaxdg::divergence_check(c); }},
      {"energy", "Energy identity for the exact flow and the full scheme",
       [](const smaxdg::RunConfig& c, const std::string&) { return smaxdg::energy_experiment(c); }},
      {"ldp-gap", "Rate-function gap between exact and temporal-scheme quantities",
       [](const smaxdg::RunConfig& c, const std::string&) { return smaxdg::ldp_gap(c); }},
      {"export-vtk", "Write the mesh and the projected initial field",
       [](const smaxdg::RunConfig& c, const std::string& out) {
         return smaxdg::export_vtk_experiment(c, out);
       }},
  };

  struct Opts {
    std::string config, out;
    int workers = 1;
  };
  std::vector<Opts> opts(std::size(specs));
  std::vector<CLI::App*> subs;
  for (size_t i = 0; i < std::size(specs); ++i) {
    CLI::App* sub = app.add_subcommand(specs[i].name, specs[i].description);
    sub->add_option("--config", opts[i].config, "Experiment config file")->required();
    sub->add_option("--out", opts[i].out, "Output directory")->required();
    sub->add_option("--workers", opts[i].workers, "Worker threads (default 1)");
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);

  for (size_t i = 0; i < std::size(specs); ++i)
    if (subs[i]->parsed())
      return run_experiment(specs[i], opts[i].config, opts[i].out, opts[i].workers);
  return 1;
}
