#include "qgn/network.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <bit>
#include <functional>

namespace qgn {

Network::Network(std::shared_ptr<const PatchGraph> graph, std::vector<Vector> psi,
                 std::vector<Matrix> edge_connections)
    : graph_(std::move(graph)), psi_(std::move(psi)), V_(std::move(edge_connections)) {
  if (!graph_) throw ContractViolation("network needs a patch graph");
  if (static_cast<int>(psi_.size()) != graph_->patch_count())
    throw ContractViolation("one local wavefunction per patch is required");
  if (V_.size() != graph_->edges().size())
    throw ContractViolation("one connection per patch-graph edge is required");
  for (std::size_t e = 0; e < V_.size(); ++e) {
    auto [I, J] = graph_->edges()[e];
    if (V_[e].rows() != chi(I) || V_[e].cols() != chi(J))
      throw ContractViolation("connection shape does not match local dimensions on edge " +
                              std::to_string(I) + "-" + std::to_string(J));
  }
  auto empty = std::make_shared<const OperatorTable>();
  ops_.assign(psi_.size(), empty);
}

std::vector<Index> Network::chis() const {
  std::vector<Index> out;
  for (const auto& p : psi_) out.push_back(p.size());
  return out;
}

void Network::check_patch(int I) const {
  if (I < 0 || I >= patch_count()) throw ContractViolation("patch index out of range");
}

void Network::set_psi(int I, Vector v) {
  check_patch(I);
  if (v.size() != chi(I)) throw ContractViolation("local wavefunction changes dimension");
  psi_[I] = std::move(v);
}

void Network::set_edge_connection(int e, Matrix m) {
  if (m.rows() != V_.at(e).rows() || m.cols() != V_.at(e).cols())
    throw ContractViolation("connection changes shape");
  V_[e] = std::move(m);
}

Matrix Network::connection(int I, int J) const {
  check_patch(I);
  check_patch(J);
  if (I == J) return Matrix::Identity(chi(I), chi(I));
  int e = graph_->edge_index(I, J);
  if (e < 0) throw NoPath("no connection between patches " + std::to_string(I) + " and " + std::to_string(J));
  return I < J ? V_[e] : Matrix(V_[e].adjoint());
}

Vector Network::apply_connection(int I, int J, const Vector& v) const {
  if (I == J) return v;
  int e = graph_->edge_index(I, J);
  if (e < 0) throw NoPath("no connection between patches " + std::to_string(I) + " and " + std::to_string(J));
  if (I < J) return V_[e] * v;
  return V_[e].adjoint() * v;
}

Vector Network::apply_path(const std::vector<int>& path, const Vector& v) const {
  Vector out = v;
  for (std::size_t k = path.size(); k-- > 1;) out = apply_connection(path[k - 1], path[k], out);
  return out;
}

bool Network::has_operator(int I, const std::string& name) const {
  check_patch(I);
  return ops_[I]->count(name) > 0;
}

const Matrix& Network::op(int I, const std::string& name) const {
  check_patch(I);
  auto it = ops_[I]->find(name);
  if (it == ops_[I]->end())
    throw MissingOperator("operator '" + name + "' not stored on patch " + std::to_string(I));
  return it->second;
}

void Network::set_operator(int I, const std::string& name, Matrix A) {
  check_patch(I);
  if (A.rows() != chi(I) || A.cols() != chi(I))
    throw ContractViolation("operator '" + name + "' has the wrong shape for patch " + std::to_string(I));
  auto table = std::make_shared<OperatorTable>(*ops_[I]);
  (*table)[name] = std::move(A);
  ops_[I] = std::move(table);
}

void Network::set_operator_table(int I, OperatorTable table) {
  check_patch(I);
  for (const auto& [name, A] : table)
    if (A.rows() != chi(I) || A.cols() != chi(I))
      throw ContractViolation("operator '" + name + "' has the wrong shape for patch " + std::to_string(I));
  ops_[I] = std::make_shared<const OperatorTable>(std::move(table));
}

std::string site_op_name(const std::string& prefix, int site) { return prefix + std::to_string(site); }

namespace {

Vector apply_named(const Network& net, int I, const std::string& name, const Vector& v) {
  if (name == "1") return v;
  return net.op(I, name) * v;
}

double path_residual(const Network& net, const std::vector<int>& path) {
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    int a = path[k], b = path[k + 1];
    worst = std::max(worst, (net.apply_connection(a, b, net.psi(b)) - net.psi(a)).norm());
    worst = std::max(worst, (net.apply_connection(b, a, net.psi(a)) - net.psi(b)).norm());
  }
  return worst;
}

}  // namespace

TruncationMapSet truncation_maps_from_images(const std::vector<std::vector<Vector>>& images) {
  TruncationMapSet out;
  for (std::size_t I = 0; I < images.size(); ++I) {
    const auto& list = images[I];
    if (list.empty()) throw InvalidImage("patch " + std::to_string(I) + " has no image vectors");
    const Index N = list.front().size();
    Matrix M(N, static_cast<Index>(list.size()));
    for (std::size_t k = 0; k < list.size(); ++k) {
      if (list[k].size() != N) throw InvalidImage("image vectors differ in dimension");
      M.col(k) = list[k];
    }
    if (M.cwiseAbs().maxCoeff() == 0.0)
      throw RankError("patch " + std::to_string(I) + " has only zero image vectors");
    Eigen::BDCSVD<Matrix> svd(M, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    Index r = 0;
    while (r < s.size() && s[r] > kRankTolerance * s[0]) ++r;
    out.Q.push_back(svd.matrixU().leftCols(r).adjoint());
  }
  return out;
}

Network qgn_from_truncation(std::shared_ptr<const PatchGraph> graph, const Vector& Psi,
                            const TruncationMapSet& Q,
                            const std::vector<std::vector<NamedOperator>>& requested_ops) {
  const int P = graph->patch_count();
  if (static_cast<int>(Q.Q.size()) != P) throw ConstructionError("one truncation map per patch is required");
  std::vector<Vector> psi(P);
  for (int I = 0; I < P; ++I) {
    const Matrix& q = Q.Q[I];
    if (q.cols() != Psi.size()) throw ConstructionError("truncation map width differs from state dimension");
    double iso = (q * q.adjoint() - Matrix::Identity(q.rows(), q.rows())).cwiseAbs().maxCoeff();
    if (iso > 1e-10)
      throw ConstructionError("truncation map of patch " + std::to_string(I) + " is not a co-isometry");
    psi[I] = q * Psi;
    if ((q.adjoint() * psi[I] - Psi).norm() > 1e-10)
      throw ConstructionError("image of patch " + std::to_string(I) + " does not contain the state");
  }
  std::vector<Matrix> V;
  for (auto [I, J] : graph->edges()) V.push_back(Q.Q[I] * Q.Q[J].adjoint());
  Network net(graph, std::move(psi), std::move(V));
  for (int I = 0; I < P && I < static_cast<int>(requested_ops.size()); ++I) {
    OperatorTable table;
    const Matrix qa = Q.Q[I].adjoint();
    for (const auto& [name, A] : requested_ops[I]) {
      if (A.rows() != Psi.size() || A.cols() != Psi.size())
        throw ConstructionError("operator '" + name + "' must act on the full space");
      Matrix Aq = A.matrix * qa;
      table[name] = Q.Q[I] * Aq;
    }
    net.set_operator_table(I, std::move(table));
  }
  return net;
}

std::vector<int> string_bridge(const Network& net, const OperatorString& s, std::size_t k) {
  const int a = s.entries.at(k).patch, b = s.entries.at(k + 1).patch;
  if (k < s.bridges.size() && !s.bridges[k].empty()) {
    const auto& p = s.bridges[k];
    if (p.front() != a || p.back() != b) throw NoPath("bridge endpoints do not match the string entries");
    for (std::size_t j = 0; j + 1 < p.size(); ++j)
      if (p[j] != p[j + 1] && !net.graph().adjacent(p[j], p[j + 1]))
        throw NoPath("bridge steps between non-adjacent patches");
    return p;
  }
  return net.graph().path(a, b);
}

cplx expectation_string(const Network& net, const OperatorString& s) {
  if (s.entries.empty()) throw ContractViolation("empty operator string");
  const std::size_t M = s.entries.size();
  Vector v = apply_named(net, s.entries[M - 1].patch, s.entries[M - 1].op, net.psi(s.entries[M - 1].patch));
  for (std::size_t k = M - 1; k-- > 0;) {
    v = net.apply_path(string_bridge(net, s, k), v);
    v = apply_named(net, s.entries[k].patch, s.entries[k].op, v);
  }
  return net.psi(s.entries[0].patch).dot(v);
}

ConnectedCorrelator connected_two_point(const Network& net, int I, const std::string& A, int J,
                                        const std::string& B, std::optional<std::vector<int>> path) {
  OperatorString s{{{I, A}, {J, B}}, {}};
  if (path) s.bridges.push_back(*path);
  auto p = string_bridge(net, s, 0);
  const cplx a = net.psi(I).dot(apply_named(net, I, A, net.psi(I)));
  const cplx b = net.psi(J).dot(apply_named(net, J, B, net.psi(J)));
  ConnectedCorrelator out;
  out.direct = expectation_string(net, s) - a * b;
  Vector right = apply_named(net, J, B, net.psi(J)) - b * net.psi(J);
  Vector mid = net.apply_path(p, right);
  Vector left = apply_named(net, I, A, mid) - a * mid;
  out.value = net.psi(I).dot(left);
  out.residual = path_residual(net, p);
  out.applicable = out.residual <= 1e-8;
  return out;
}

DensityMatrix density_matrix_from_qgn(const Network& net, std::optional<std::vector<int>> path) {
  std::vector<int> p = path ? *path : net.graph().covering_path();
  const int n = net.graph().site_count();
  if (p.empty()) throw NoPath("no covering path stored for density-matrix extraction");
  if (n > 8) throw ContractViolation("density-matrix extraction supports at most 8 sites");
  if (static_cast<int>(p.size()) != n) throw NoPath("density-matrix path must visit every patch once");
  std::vector<int> sites;
  for (int I : p) {
    if (net.graph().patch(I).size() != 1)
      throw ContractViolation("density-matrix extraction needs single-site patches");
    sites.push_back(net.graph().patch(I)[0]);
  }
  for (std::size_t k = 0; k + 1 < p.size(); ++k)
    if (!net.graph().adjacent(p[k], p[k + 1])) throw NoPath("density-matrix path is not connected");

  // Adjoint Pauli matrices per path position: identity, x, y, z.
  std::vector<std::array<Matrix, 4>> sig(n);
  for (int k = 0; k < n; ++k) {
    const int I = p[k], s = sites[k];
    sig[k][0] = Matrix::Identity(net.chi(I), net.chi(I));
    sig[k][1] = net.op(I, site_op_name("x", s)).adjoint();
    sig[k][2] = net.op(I, site_op_name("y", s)).adjoint();
    sig[k][3] = net.op(I, site_op_name("z", s)).adjoint();
  }
  const Index dim = Index{1} << n;
  Matrix rho = Matrix::Zero(dim, dim);
  const double norm = 1.0 / static_cast<double>(dim);
  static const cplx ipow[4] = {1.0, I_unit, -1.0, -I_unit};

  // u holds (row vector)^dag of psi_p0^dag s_0 V s_1 ... up to depth k.
  std::function<void(int, const Vector&, Bits, Bits, int)> dfs = [&](int k, const Vector& u, Bits flip,
                                                                     Bits sign, int ny) {
    for (int mu = 0; mu < 4; ++mu) {
      Vector w = mu == 0 ? u : Vector(sig[k][mu] * u);
      const Bits bit = Bits{1} << sites[k];
      Bits f = flip, sg = sign;
      int y = ny;
      if (mu == 1 || mu == 2) f |= bit;
      if (mu == 2 || mu == 3) sg |= bit;
      if (mu == 2) ++y;
      if (k + 1 == n) {
        const cplx value = w.dot(net.psi(p[k])) * norm * ipow[y % 4];
        if (value == 0.0) continue;
        for (Index b = 0; b < dim; ++b) {
          const Bits bb = static_cast<Bits>(b);
          const double s = (std::popcount(bb & sg) % 2) ? -1.0 : 1.0;
          rho(static_cast<Index>(bb ^ f), b) += s * value;
        }
      } else {
        dfs(k + 1, net.apply_connection(p[k + 1], p[k], w), f, sg, y);
      }
    }
  };
  dfs(0, net.psi(p[0]), 0, 0, 0);
  DensityMatrix out;
  out.hermiticity_residual = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  out.rho = std::move(rho);
  return out;
}

Network gauge_transform(const Network& net, const std::vector<Matrix>& lambda) {
  const int P = net.patch_count();
  if (static_cast<int>(lambda.size()) != P) throw ContractViolation("one gauge matrix per patch is required");
  for (int I = 0; I < P; ++I) {
    const Matrix& L = lambda[I];
    if (L.rows() != net.chi(I) || L.cols() != net.chi(I))
      throw NonUnitary("gauge matrix of patch " + std::to_string(I) + " has the wrong shape");
    double dev = (L.adjoint() * L - Matrix::Identity(L.rows(), L.cols())).cwiseAbs().maxCoeff();
    if (dev > 1e-10) throw NonUnitary("gauge matrix of patch " + std::to_string(I) + " is not unitary");
  }
  std::vector<Vector> psi(P);
  for (int I = 0; I < P; ++I) psi[I] = lambda[I] * net.psi(I);
  std::vector<Matrix> V;
  const auto& edges = net.graph().edges();
  for (std::size_t e = 0; e < edges.size(); ++e)
    V.push_back(lambda[edges[e].first] * net.edge_connection(static_cast<int>(e)) *
                lambda[edges[e].second].adjoint());
  Network out(net.graph_ptr(), std::move(psi), std::move(V));
  for (int I = 0; I < P; ++I) {
    OperatorTable table;
    for (const auto& [name, A] : net.operators(I)) table[name] = lambda[I] * A * lambda[I].adjoint();
    out.set_operator_table(I, std::move(table));
  }
  return out;
}

Residuals consistency_residuals(const Network& net, ResidualOptions opts) {
  Residuals r;
  const auto& edges = net.graph().edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    auto [I, J] = edges[e];
    const Matrix& V = net.edge_connection(static_cast<int>(e));
    r.vpsi = std::max(r.vpsi, (V * net.psi(J) - net.psi(I)).norm());
    r.vpsi = std::max(r.vpsi, (V.adjoint() * net.psi(I) - net.psi(J)).norm());
    if (opts.singular_values && V.size() > 0) {
      Eigen::BDCSVD<Matrix> svd(V);
      r.singular_excess = std::max(r.singular_excess, svd.singularValues()[0] - 1.0);
    }
  }
  if (opts.triangles) {
    for (auto [a, b, c] : net.graph().triangles()) {
      Matrix prod = net.connection(a, b) * net.connection(b, c);
      r.triangle = std::max(r.triangle, (prod - net.connection(a, c)).norm());
    }
  }
  return r;
}

cplx mean_local_expectation_complex(const Network& net, int site, const std::string& op_prefix) {
  if (site < 0 || site >= net.graph().site_count()) throw ContractViolation("site out of range");
  const auto& containing = net.graph().patches_containing(site);
  if (containing.empty()) throw ContractViolation("site is not contained in any patch");
  const std::string name = site_op_name(op_prefix, site);
  cplx sum = 0.0;
  for (int I : containing) sum += net.psi(I).dot(net.op(I, name) * net.psi(I));
  return sum / static_cast<double>(containing.size());
}

double mean_local_expectation(const Network& net, int site, const std::string& op_prefix) {
  cplx v = mean_local_expectation_complex(net, site, op_prefix);
  if (std::abs(v.imag()) > 1e-9)
    throw ContractViolation("local expectation of '" + op_prefix + "' has imaginary part " +
                            std::to_string(v.imag()));
  return v.real();
}

}  // namespace qgn
