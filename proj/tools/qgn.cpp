#include "qgn/harness.hpp"

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cstdlib>
#include <iostream>
#include <optional>

namespace {

struct Overrides {
  std::optional<double> dt;
  std::optional<long long> chi;
  std::optional<double> time;
  std::optional<std::string> oracle;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

void add_overrides(CLI::App* app, Overrides& o) {
  app->add_option("--dt", o.dt, "Time step");
  app->add_option("--chi", o.chi, "Target minimum bond dimension");
  app->add_option("--time", o.time, "Final time");
  app->add_option("--oracle", o.oracle, "none | dense | krylov | free-fermion");
  app->add_option("--out", o.out, "Output prefix");
  app->add_option("--seed", o.seed, "Random seed");
  app->add_option("--threads", o.threads, "Worker threads (overrides QGN_THREADS)");
}

qgn::ExperimentConfig load(const std::string& path, const Overrides& o) {
  auto cfg = qgn::load_config(path);
  if (o.dt) cfg.dt = *o.dt;
  if (o.chi) cfg.min_chi = *o.chi;
  if (o.time) cfg.time = *o.time;
  if (o.oracle) cfg.oracle = qgn::parse_oracle_mode(*o.oracle);
  if (o.out) cfg.output = *o.out;
  if (o.seed) cfg.seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  cfg.validate();
  return cfg;
}

void set_threads(int from_config) {
  int n = from_config;
  if (const char* env = std::getenv("QGN_THREADS"); env && n == 0) n = std::atoi(env);
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum gauge network simulations"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides run_o, verify_o;
  auto* run = app.add_subcommand("run", "Evolve a configured experiment and write CSV and report");
  run->add_option("config", config_path, "YAML config")->required()->check(CLI::ExistingFile);
  add_overrides(run, run_o);

  auto* verify = app.add_subcommand("verify", "Run the invariant suite; nonzero exit on failure");
  verify->add_option("config", config_path, "YAML config")->required()->check(CLI::ExistingFile);
  add_overrides(verify, verify_o);

  std::string mps_in, qgn_out;
  auto* convert = app.add_subcommand("convert-mps", "Convert an MPS container into a QGN container");
  convert->add_option("input", mps_in, "MPS container")->required()->check(CLI::ExistingFile);
  convert->add_option("output", qgn_out, "QGN container")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto cfg = load(config_path, run_o);
      set_threads(cfg.threads);
      qgn::run_and_write(cfg, std::cout);
      return 0;
    }
    if (*verify) {
      auto cfg = load(config_path, verify_o);
      set_threads(cfg.threads);
      return qgn::verify_and_report(cfg, std::cout);
    }
    if (*convert) {
      set_threads(0);
      return qgn::convert_mps_file(mps_in, qgn_out, std::cout);
    }
  } catch (const qgn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const qgn::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
