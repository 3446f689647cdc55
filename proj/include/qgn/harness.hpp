#pragma once

#include "qgn/dynamics.hpp"
#include "qgn/fock.hpp"
#include "qgn/lattice.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qgn {

enum class Experiment { quench, slater, coherent };
enum class OracleMode { none, dense, krylov, free_fermion };

OracleMode parse_oracle_mode(const std::string& name);
std::string to_string(OracleMode mode);

enum class FaultInjection { none, corrupt_connection };

struct ExperimentConfig {
  std::string name = "experiment";
  Experiment experiment = Experiment::quench;
  Model model = FermiModel{};
  LatticeSpec lattice;
  /// "checkerboard", "all_right" or an explicit bitstring (site 0 first).
  std::string initial = "checkerboard";
  Index min_chi = 16;
  bool even_sector = false;
  double dt = 0.05;
  double time = 1.0;
  int stride = 1;
  std::vector<std::string> observables;
  OracleMode oracle = OracleMode::none;
  std::string output = "qgn_out";
  std::uint64_t seed = 1;
  int threads = 0;
  /// Serialize the network every this many steps (0: never).
  int checkpoint_every = 0;
  // Analytic experiments.
  int fermions = 0;
  // Verification.
  double oracle_tolerance = 1e-6;
  double order_time = 0.5;
  FaultInjection fault = FaultInjection::none;

  /// Throws ConfigError.
  void validate() const;
};

/// Parses YAML. Errors carry the 1-based line of the offending node.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Observables from names such as "n3" (site 3) or "x" (average over sites).
std::vector<Observable> parse_observables(const std::vector<std::string>& names, int n_sites);

struct OracleSeries {
  std::vector<std::string> labels;
  std::vector<double> t;
  std::vector<std::vector<double>> values;
  std::vector<double> energy;

  void write_csv(std::ostream& os) const;
};

struct SetupSummary {
  std::vector<Index> chi_history;
  bool saturated = false;
  std::vector<Index> chis;
};

struct RunResult {
  TimeSeries series;
  std::optional<OracleSeries> oracle;
  SetupSummary setup;
  double wall_seconds = 0.0;
  /// ComparisonReport as JSON text.
  std::string report_json;
};

/// Builds the QGN, evolves it, runs the oracle and assembles the report.
/// Nothing is written to disk.
RunResult run_experiment(const ExperimentConfig& cfg);

/// run_experiment plus <output>.csv, <output>_oracle.csv, <output>_report.json.
RunResult run_and_write(const ExperimentConfig& cfg, std::ostream& log);

struct CheckResult {
  std::string name;
  enum Status { pass, fail, skip } status = pass;
  std::string detail;
};

/// Invariant suite; never throws for check failures (they become fail entries).
std::vector<CheckResult> verify_experiment(const ExperimentConfig& cfg);

/// Prints one line per check; returns 0 iff no check failed.
int verify_and_report(const ExperimentConfig& cfg, std::ostream& log);

/// Canonicalizes an MPS container and writes the QGN container; prints chi_i.
int convert_mps_file(const std::string& in, const std::string& out, std::ostream& log);

}  // namespace qgn
