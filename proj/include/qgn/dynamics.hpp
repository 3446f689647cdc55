#pragma once

#include "qgn/network.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qgn {

/// H'_I per patch.
using EffectiveHamiltonians = std::vector<Matrix>;

/// H'_I = sum over patches J sharing a site with I of V_IJ H_J V_JI,
/// Hermitized. Throws MissingOperator without "H", NoPath when an
/// overlapping pair has no stored connection.
EffectiveHamiltonians build_h_prime(const Network& net);

/// h * tau^{ops[0]}_{patches[0]} ... tau^{ops[k]}_{patches[k]}.
struct CouplingTerm {
  std::vector<int> patches;
  std::vector<std::string> ops;
  double h = 0.0;
};

struct GeneralCoupling {
  std::vector<CouplingTerm> terms;
  /// Turns every "H" into a single-patch term.
  static GeneralCoupling from_local_hamiltonians(const Network& net);
};

/// Sum of 1/2 h (V_IJ tau_J V_JI)...(V_IK tau_K V_KI) + h.c. over terms whose
/// support meets patch I. Factors are ordered by ascending patch index;
/// connections to non-adjacent patches are products along the stored path.
EffectiveHamiltonians build_h_prime_general(const Network& net, const GeneralCoupling& couplings);

struct ButcherTableau {
  std::vector<std::vector<double>> a;  // a[k][l], l < k
  std::vector<double> b;
  std::vector<double> c;

  int stages() const { return static_cast<int>(b.size()); }
  /// Throws ContractViolation unless sum b = 1, c_1 = 0 and a is strictly lower.
  void validate() const;
  static ButcherTableau rk4();
};

enum class GeneratorMode {
  symmetrized,  // G~ = (U~^dag G U~ + G) / 2
  plain,        // G~ = G, diagnostic only
};

struct IntegratorConfig {
  double dt = 0.05;
  ButcherTableau tableau = ButcherTableau::rk4();
  GeneratorMode mode = GeneratorMode::symmetrized;
  std::optional<GeneralCoupling> couplings;
};

struct StepDiagnostics {
  double unitarity = 0.0;    // max |U^dag U - 1| over applied updates
  double hermiticity = 0.0;  // max generator non-Hermiticity before symmetrization
};

/// exp(-i tau G) for Hermitian G via eigendecomposition.
Matrix unitary_exp(const Matrix& G, double tau);

/// One step of the connection-preserving RK scheme. Throws IntegratorError
/// when a generator is non-Hermitian beyond 1e-8 or dt <= 0.
Network rk4_modified_step(const Network& net, const IntegratorConfig& cfg,
                          StepDiagnostics* diag = nullptr);

/// sum_I <psi_I|H_I|psi_I>. Throws ContractViolation on an imaginary part
/// above 1e-10 (relative to max(1, |E|)).
double energy_qgn(const Network& net);
/// sum over sites of the patch-averaged <n_i>; NaN without "n" operators.
double total_number_qgn(const Network& net);

struct Observable {
  std::string label;
  std::string prefix;  // operator prefix, e.g. "n", "x"
  int site = -1;       // -1: average over all sites
};

double observable_value(const Network& net, const Observable& obs);

struct TimeSeries {
  std::vector<std::string> labels;
  std::vector<double> t;
  std::vector<std::vector<double>> values;  // values[sample][observable]
  std::vector<double> energy;
  std::vector<double> number;
  std::vector<double> vpsi_residual;
  std::vector<double> triangle_residual;
  double max_unitarity_residual = 0.0;

  std::size_t size() const { return t.size(); }
  /// One header row, 17 significant digits.
  void write_csv(std::ostream& os) const;
};

struct EvolveOptions {
  int stride = 1;
  bool triangle_residuals = true;
  /// Called after every step with the step count.
  std::function<void(int, const Network&)> on_step;
};

/// Evolves net in place to time T = m dt, sampling at t = 0 and every
/// stride steps (plus the final time). Throws ContractViolation when T is not
/// a multiple of dt.
TimeSeries evolve(Network& net, double T, const IntegratorConfig& cfg,
                  const std::vector<Observable>& observables, const EvolveOptions& opts = {});

/// Number of steps for T, or ContractViolation.
int step_count(double T, double dt);

}  // namespace qgn
