// Command-line front end for the experiment runners.

#include "jfft/experiments.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>

namespace {

using Runner = std::function<void(const jfft::ConfigDocument&, const jfft::RunContext&)>;

int run(const Runner& runner, const std::string& config, const std::string& out, std::size_t threads) {
  try {
    const auto doc = jfft::load_config(config);
    runner(doc, {out, threads});
    return jfft::kExitSuccess;
  } catch (const jfft::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return jfft::kExitConfigError;
  } catch (const jfft::SolverAbort& e) {
    std::cerr << "solver abort: " << e.what() << '\n';
    return jfft::kExitSolverAbort;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periodic small-strain elasticity with FFT-based preconditioned conjugate gradients"};
  app.require_subcommand(1);

  struct Command {
    const char* name;
    const char* help;
    Runner runner;
  };
  const Command commands[] = {
      {"solve", "Solve one cell problem", [](auto& d, auto& c) { jfft::run_solve(d, c); }},
      {"laminate-sweep", "Iteration counts for the graded laminate",
       [](auto& d, auto& c) { jfft::run_laminate_sweep(d, c); }},
      {"cosine-sweep", "Iteration counts for the cosine microstructure",
       [](auto& d, auto& c) { jfft::run_cosine_sweep(d, c); }},
      {"motivate", "Filtered soft inclusion", [](auto& d, auto& c) { jfft::run_motivate(d, c); }},
      {"topopt", "Phase-field inverse homogenization", [](auto& d, auto& c) { jfft::run_topopt(d, c); }},
      {"smooth-vs-sharp", "Smooth and thresholded densities at several contrasts",
       [](auto& d, auto& c) { jfft::run_smooth_vs_sharp(d, c); }},
  };

  std::string config, out;
  std::size_t threads = 1;
  const Runner* selected = nullptr;
  for (const auto& cmd : commands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "Output directory")->required();
    sub->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->callback([&selected, &cmd] { selected = &cmd.runner; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return jfft::kExitConfigError;
  }
  return run(*selected, config, out, threads);
}
