#include "qgn/dynamics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

namespace qgn {

namespace {

Matrix hermitian_part(const Matrix& X) { return 0.5 * (X + X.adjoint()); }

double antihermitian_norm(const Matrix& X) {
  if (X.size() == 0) return 0.0;
  return (X - X.adjoint()).cwiseAbs().maxCoeff();
}

// Patches J != I that share a site with I, ascending.
std::vector<int> overlapping_patches(const PatchGraph& g, int I) {
  std::set<int> out;
  for (int s : g.patch(I))
    for (int J : g.patches_containing(s))
      if (J != I) out.insert(J);
  return {out.begin(), out.end()};
}

bool support_meets(const PatchGraph& g, const CouplingTerm& t, int I) {
  const auto& p = g.patch(I);
  for (int J : t.patches) {
    if (J == I) return true;
    for (int s : g.patch(J))
      if (std::binary_search(p.begin(), p.end(), s)) return true;
  }
  return false;
}

// Product of connections along the stored path from I to J.
Matrix path_connection(const Network& net, int I, int J) {
  if (I == J) return Matrix::Identity(net.chi(I), net.chi(I));
  if (net.graph().adjacent(I, J)) return net.connection(I, J);
  auto path = net.graph().path(I, J);
  Matrix W = net.connection(path[0], path[1]);
  for (std::size_t k = 1; k + 1 < path.size(); ++k) W = W * net.connection(path[k], path[k + 1]);
  return W;
}

// Operator on patch J seen through the stage unitary: U~_J^dag A U~_J.
Matrix staged(const Matrix& A, const std::vector<Matrix>* Ut, int J) {
  if (!Ut) return A;
  const Matrix& U = (*Ut)[J];
  return U.adjoint() * A * U;
}

// S_I such that the stage generator is U~_I S_I U~_I^dag.
std::vector<Matrix> core_generators(const Network& net, const std::vector<Matrix>* Ut,
                                    const IntegratorConfig& cfg) {
  const int P = net.patch_count();
  const auto& g = net.graph();
  std::vector<Matrix> S(P);
  if (!cfg.couplings) {
    std::vector<Matrix> Ht(P);
    for (int J = 0; J < P; ++J) Ht[J] = staged(net.op(J, "H"), Ut, J);
#pragma omp parallel for schedule(dynamic)
    for (int I = 0; I < P; ++I) {
      Matrix acc = Ht[I];
      for (int J : overlapping_patches(g, I)) {
        Matrix V = net.connection(I, J);
        acc.noalias() += V * Ht[J] * V.adjoint();
      }
      S[I] = std::move(acc);
    }
    return S;
  }
  const auto& terms = cfg.couplings->terms;
  for (const auto& t : terms) {
    if (t.patches.size() != t.ops.size() || t.patches.empty())
      throw ContractViolation("coupling term needs one operator per patch");
    for (std::size_t f = 0; f < t.patches.size(); ++f) (void)net.op(t.patches[f], t.ops[f]);
  }
#pragma omp parallel for schedule(dynamic)
  for (int I = 0; I < P; ++I) {
    Matrix acc = Matrix::Zero(net.chi(I), net.chi(I));
    for (const auto& t : terms) {
      if (!support_meets(g, t, I)) continue;
      std::vector<std::size_t> order(t.patches.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return t.patches[a] < t.patches[b]; });
      Matrix X = Matrix::Identity(net.chi(I), net.chi(I));
      for (std::size_t f : order) {
        const int J = t.patches[f];
        Matrix W = path_connection(net, I, J);
        X = X * (W * staged(net.op(J, t.ops[f]), Ut, J) * W.adjoint());
      }
      acc += 0.5 * t.h * (X + X.adjoint());
    }
    S[I] = std::move(acc);
  }
  return S;
}

}  // namespace

EffectiveHamiltonians build_h_prime(const Network& net) {
  IntegratorConfig cfg;
  auto S = core_generators(net, nullptr, cfg);
  for (auto& m : S) m = hermitian_part(m);
  return S;
}

GeneralCoupling GeneralCoupling::from_local_hamiltonians(const Network& net) {
  GeneralCoupling c;
  for (int I = 0; I < net.patch_count(); ++I) c.terms.push_back({{I}, {"H"}, 1.0});
  return c;
}

EffectiveHamiltonians build_h_prime_general(const Network& net, const GeneralCoupling& couplings) {
  IntegratorConfig cfg;
  cfg.couplings = couplings;
  auto S = core_generators(net, nullptr, cfg);
  for (auto& m : S) m = hermitian_part(m);
  return S;
}

void ButcherTableau::validate() const {
  const int s = stages();
  if (s < 1 || static_cast<int>(c.size()) != s || static_cast<int>(a.size()) != s)
    throw ContractViolation("tableau sizes do not match");
  if (std::abs(std::accumulate(b.begin(), b.end(), 0.0) - 1.0) > 1e-14)
    throw ContractViolation("tableau weights must sum to 1");
  if (c[0] != 0.0) throw ContractViolation("tableau c_1 must be 0");
  for (int k = 0; k < s; ++k)
    if (static_cast<int>(a[k].size()) > k)
      for (std::size_t l = k; l < a[k].size(); ++l)
        if (a[k][l] != 0.0) throw ContractViolation("tableau must be explicit");
}

ButcherTableau ButcherTableau::rk4() {
  return {{{}, {0.5}, {0.0, 0.5}, {0.0, 0.0, 1.0}}, {1.0 / 6, 1.0 / 3, 1.0 / 3, 1.0 / 6}, {0.0, 0.5, 0.5, 1.0}};
}

Matrix unitary_exp(const Matrix& G, double tau) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(G);
  if (es.info() != Eigen::Success) throw IntegratorError("eigendecomposition failed");
  Vector phase = (es.eigenvalues() * (-tau)).unaryExpr([](double x) { return std::polar(1.0, x); });
  Matrix U = es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
  // One Newton-Schulz step towards the unitary polar factor.
  const Index n = U.rows();
  Matrix E = U.adjoint() * U - Matrix::Identity(n, n);
  return U - 0.5 * U * E;
}

Network rk4_modified_step(const Network& net, const IntegratorConfig& cfg, StepDiagnostics* diag) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw IntegratorError("time step must be positive");
  const auto& tab = cfg.tableau;
  tab.validate();
  const int P = net.patch_count();
  const int s = tab.stages();
  StepDiagnostics d;
  std::vector<std::vector<Matrix>> Gt(s, std::vector<Matrix>(P));

  for (int k = 0; k < s; ++k) {
    bool shifted = false;
    for (int l = 0; l < k && l < static_cast<int>(tab.a[k].size()); ++l) shifted |= tab.a[k][l] != 0.0;
    std::vector<Matrix> Ut;
    if (shifted) {
      Ut.resize(P);
#pragma omp parallel for schedule(dynamic)
      for (int I = 0; I < P; ++I) {
        Matrix A = Matrix::Zero(net.chi(I), net.chi(I));
        for (int l = 0; l < k && l < static_cast<int>(tab.a[k].size()); ++l)
          if (tab.a[k][l] != 0.0) A += tab.a[k][l] * Gt[l][I];
        Ut[I] = unitary_exp(A, cfg.dt);
      }
    }
    auto S = core_generators(net, shifted ? &Ut : nullptr, cfg);
    double herm = 0.0;
    bool bad = false;
#pragma omp parallel for schedule(dynamic) reduction(max : herm) reduction(|| : bad)
    for (int I = 0; I < P; ++I) {
      const double r = antihermitian_norm(S[I]);
      const double scale = S[I].size() ? std::max(1.0, S[I].cwiseAbs().maxCoeff()) : 1.0;
      herm = std::max(herm, r);
      if (!(r <= 1e-8 * scale)) bad = true;
      Matrix Sh = hermitian_part(S[I]);
      if (!shifted) {
        Gt[k][I] = std::move(Sh);
      } else {
        Matrix G = Ut[I] * Sh * Ut[I].adjoint();
        Gt[k][I] = cfg.mode == GeneratorMode::symmetrized ? hermitian_part(0.5 * (Sh + G)) : hermitian_part(G);
      }
    }
    d.hermiticity = std::max(d.hermiticity, herm);
    if (bad) throw IntegratorError("non-Hermitian generator (residual " + std::to_string(herm) + ")");
  }

  std::vector<Matrix> U(P);
  double unit = 0.0;
#pragma omp parallel for schedule(dynamic) reduction(max : unit)
  for (int I = 0; I < P; ++I) {
    Matrix G = Matrix::Zero(net.chi(I), net.chi(I));
    for (int k = 0; k < s; ++k) G += tab.b[k] * Gt[k][I];
    U[I] = unitary_exp(G, cfg.dt);
    const Index n = U[I].rows();
    if (n > 0) unit = std::max(unit, (U[I].adjoint() * U[I] - Matrix::Identity(n, n)).cwiseAbs().maxCoeff());
  }
  d.unitarity = unit;

  Network out = net;
  for (int I = 0; I < P; ++I) out.set_psi(I, U[I] * net.psi(I));
  const auto& edges = net.graph().edges();
  std::vector<Matrix> V(edges.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t e = 0; e < edges.size(); ++e)
    V[e] = U[edges[e].first] * net.edge_connection(static_cast<int>(e)) * U[edges[e].second].adjoint();
  for (std::size_t e = 0; e < edges.size(); ++e) out.set_edge_connection(static_cast<int>(e), std::move(V[e]));
  if (diag) *diag = d;
  return out;
}

double energy_qgn(const Network& net) {
  cplx E = 0.0;
  for (int I = 0; I < net.patch_count(); ++I) E += net.psi(I).dot(net.op(I, "H") * net.psi(I));
  if (std::abs(E.imag()) > 1e-10 * std::max(1.0, std::abs(E.real())))
    throw ContractViolation("energy has an imaginary part " + std::to_string(E.imag()));
  return E.real();
}

double total_number_qgn(const Network& net) {
  const auto& g = net.graph();
  double N = 0.0;
  for (int s = 0; s < g.site_count(); ++s) {
    if (!net.has_operator(g.patches_containing(s).front(), site_op_name("n", s)))
      return std::numeric_limits<double>::quiet_NaN();
    N += mean_local_expectation(net, s, "n");
  }
  return N;
}

double observable_value(const Network& net, const Observable& obs) {
  if (obs.site >= 0) return mean_local_expectation(net, obs.site, obs.prefix);
  const int n = net.graph().site_count();
  double acc = 0.0;
  for (int s = 0; s < n; ++s) acc += mean_local_expectation(net, s, obs.prefix);
  return acc / n;
}

namespace {

void put_number(std::ostream& os, double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  os << buf;
}

}  // namespace

void TimeSeries::write_csv(std::ostream& os) const {
  os << "t";
  for (const auto& l : labels) os << ',' << l;
  os << ",energy,number,vpsi_residual,triangle_residual\n";
  for (std::size_t k = 0; k < t.size(); ++k) {
    put_number(os, t[k]);
    for (double v : values[k]) {
      os << ',';
      put_number(os, v);
    }
    for (double v : {energy[k], number[k], vpsi_residual[k], triangle_residual[k]}) {
      os << ',';
      put_number(os, v);
    }
    os << '\n';
  }
}

int step_count(double T, double dt) {
  if (!(dt > 0.0)) throw ContractViolation("time step must be positive");
  if (!(T >= 0.0)) throw ContractViolation("final time must be non-negative");
  const double m = std::round(T / dt);
  if (std::abs(m * dt - T) > 1e-9 * std::max(1.0, T))
    throw ContractViolation("final time is not a multiple of the time step");
  return static_cast<int>(m);
}

TimeSeries evolve(Network& net, double T, const IntegratorConfig& cfg,
                  const std::vector<Observable>& observables, const EvolveOptions& opts) {
  const int steps = step_count(T, cfg.dt);
  if (opts.stride < 1) throw ContractViolation("sampling stride must be positive");
  TimeSeries ts;
  for (const auto& o : observables) ts.labels.push_back(o.label);
  ResidualOptions ropts;
  ropts.triangles = opts.triangle_residuals;
  ropts.singular_values = false;
  auto sample = [&](double t) {
    ts.t.push_back(t);
    std::vector<double> row;
    for (const auto& o : observables) row.push_back(observable_value(net, o));
    ts.values.push_back(std::move(row));
    ts.energy.push_back(net.operators(0).count("H") ? energy_qgn(net) : std::numeric_limits<double>::quiet_NaN());
    ts.number.push_back(total_number_qgn(net));
    auto r = consistency_residuals(net, ropts);
    ts.vpsi_residual.push_back(r.vpsi);
    ts.triangle_residual.push_back(r.triangle);
  };
  sample(0.0);
  for (int k = 1; k <= steps; ++k) {
    StepDiagnostics d;
    net = rk4_modified_step(net, cfg, &d);
    ts.max_unitarity_residual = std::max(ts.max_unitarity_residual, d.unitarity);
    if (opts.on_step) opts.on_step(k, net);
    if (k % opts.stride == 0 || k == steps) sample(k * cfg.dt);
  }
  return ts;
}

}  // namespace qgn
