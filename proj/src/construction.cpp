#include "qgn/construction.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>

namespace qgn {

double default_midpoint(int M) { return std::ceil((M + 1) / 2.0); }

std::vector<std::vector<Vector>> images_for_strings(const Vector& Psi, const PatchGraph& graph,
                                                    const ImageRequest& req) {
  std::vector<std::vector<Vector>> images(graph.patch_count());
  for (const auto& s : req.strings) {
    const int M = static_cast<int>(s.factors.size());
    if (M == 0) throw ContractViolation("empty operator string in image request");
    // Expanded string: identity factors fill the gaps between non-adjacent patches.
    std::vector<std::pair<int, const SparseOperator*>> ex;
    std::vector<int> pos(M);
    ex.emplace_back(s.factors[0].patch, &s.factors[0].op);
    pos[0] = 1;
    for (int k = 1; k < M; ++k) {
      const int a = s.factors[k - 1].patch, b = s.factors[k].patch;
      if (a == b) throw ContractViolation("consecutive string factors on the same patch");
      auto path = graph.path(a, b);
      for (std::size_t j = 1; j + 1 < path.size(); ++j) ex.emplace_back(path[j], nullptr);
      ex.emplace_back(b, &s.factors[k].op);
      pos[k] = static_cast<int>(ex.size());
    }
    const double m0 = s.m0.value_or(default_midpoint(M));
    if (m0 < 1.0 || m0 > M || std::floor(2.0 * m0) != 2.0 * m0)
      throw ContractViolation("midpoint must be a half-integer in 1..M");
    double m0e;
    if (std::floor(m0) == m0) m0e = pos[static_cast<int>(m0) - 1];
    else m0e = pos[static_cast<int>(std::floor(m0)) - 1] + 0.5;

    const int Me = static_cast<int>(ex.size());
    auto act = [&](int m, const Vector& v, bool adjoint) -> Vector {
      const SparseOperator* op = ex[m - 1].second;
      if (!op) return v;
      if (op->rows() != Psi.size() || op->cols() != Psi.size())
        throw ContractViolation("string factors must act on the full space");
      if (adjoint) return op->matrix.adjoint() * v;
      return op->matrix * v;
    };
    std::vector<Vector> L(Me + 2), R(Me + 2);
    L[0] = Psi;
    for (int m = 1; m <= Me && m < m0e + 1; ++m) L[m] = act(m, L[m - 1], true);
    R[Me + 1] = Psi;
    for (int m = Me; m >= 1 && m > m0e - 1; --m) R[m] = act(m, R[m + 1], false);
    for (int m = 1; m <= Me; ++m) {
      auto& list = images[ex[m - 1].first];
      list.push_back(Psi);
      if (m < m0e) {
        list.push_back(L[m - 1]);
        list.push_back(L[m]);
      } else if (m == m0e) {
        list.push_back(L[m - 1]);
        list.push_back(R[m + 1]);
      } else {
        list.push_back(R[m]);
        list.push_back(R[m + 1]);
      }
    }
  }
  for (auto& list : images)
    if (list.empty()) list.push_back(Psi);
  return images;
}

std::vector<Vector> k_point_images(const Vector& Psi, const std::vector<SparseOperator>& ops, int k) {
  if (k < 1) throw ContractViolation("k must be at least 1");
  if (ops.empty()) throw ContractViolation("operator list is empty");
  std::vector<Vector> out{Psi};
  std::vector<Vector> level{Psi};
  for (int r = 1; r <= k; ++r) {
    std::vector<Vector> next;
    next.reserve(level.size() * ops.size());
    for (const auto& op : ops)
      for (const auto& v : level) next.push_back(op.matrix * v);
    out.insert(out.end(), next.begin(), next.end());
    level = std::move(next);
  }
  return out;
}

std::vector<std::vector<Vector>> images_for_k_point(const Vector& Psi, const PatchGraph& graph,
                                                    const std::vector<SparseOperator>& ops, int k) {
  return std::vector<std::vector<Vector>>(graph.patch_count(), k_point_images(Psi, ops, k));
}

std::vector<NamedOperator> named_pauli_ops(const Basis& basis, const PatchGraph::Patch& patch) {
  std::vector<NamedOperator> out;
  for (int s : patch) {
    out.push_back({site_op_name("x", s), pauli_op(basis, s, Axis::x)});
    out.push_back({site_op_name("y", s), pauli_op(basis, s, Axis::y)});
    out.push_back({site_op_name("z", s), pauli_op(basis, s, Axis::z)});
  }
  return out;
}

std::vector<std::vector<NamedOperator>> pauli_ops_per_patch(const Basis& basis, const PatchGraph& graph) {
  std::vector<std::vector<NamedOperator>> out;
  for (const auto& p : graph.patches()) out.push_back(named_pauli_ops(basis, p));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void close_patch(std::set<Bits>& s, const PatchGraph::Patch& patch, Closure closure) {
  std::vector<Bits> masks;
  if (closure == Closure::swap) {
    if (patch.size() != 2) throw ContractViolation("swap closure needs two-site patches");
    const Bits mi = Bits{1} << patch[0], mj = Bits{1} << patch[1];
    std::vector<Bits> add;
    for (Bits b : s)
      if (((b & mi) != 0) != ((b & mj) != 0)) add.push_back(b ^ mi ^ mj);
    s.insert(add.begin(), add.end());
    return;
  }
  const std::size_t k = patch.size();
  for (Bits subset = 1; subset < (Bits{1} << k); ++subset) {
    if (closure == Closure::pauli_even && std::popcount(subset) % 2) continue;
    Bits m = 0;
    for (std::size_t j = 0; j < k; ++j)
      if ((subset >> j) & 1) m |= Bits{1} << patch[j];
    masks.push_back(m);
  }
  std::vector<Bits> add;
  for (Bits b : s)
    for (Bits m : masks) add.push_back(b ^ m);
  s.insert(add.begin(), add.end());
}

}  // namespace

QuenchImages quench_images(const PatchGraph& graph, Bits initial, Index min_chi, Closure closure) {
  const int P = graph.patch_count();
  std::vector<std::set<Bits>> S(P, std::set<Bits>{initial});
  std::vector<std::vector<int>> overlapping(P);
  for (int I = 0; I < P; ++I)
    for (int J = 0; J < P; ++J)
      if (I != J && graph.overlaps(I, J)) overlapping[I].push_back(J);

  QuenchImages out;
  std::size_t previous_total = 0;
  while (true) {
    for (int I = 0; I < P; ++I) close_patch(S[I], graph.patch(I), closure);
    Index smallest = std::numeric_limits<Index>::max();
    std::size_t total = 0;
    for (const auto& s : S) {
      smallest = std::min<Index>(smallest, static_cast<Index>(s.size()));
      total += s.size();
    }
    out.chi_history.push_back(smallest);
    if (smallest >= min_chi) break;
    if (total == previous_total) {
      out.saturated = true;
      break;
    }
    previous_total = total;
    const auto snapshot = S;
    for (int I = 0; I < P; ++I)
      for (int J : overlapping[I]) S[I].insert(snapshot[J].begin(), snapshot[J].end());
  }
  for (const auto& s : S) out.states.emplace_back(s.begin(), s.end());
  return out;
}

QuenchImages fermion_quench_images(const PatchGraph& graph, Bits initial, Index min_chi) {
  return quench_images(graph, initial, min_chi, Closure::swap);
}

QuenchImages ising_quench_images(const PatchGraph& graph, Index min_chi, bool even_sector) {
  return quench_images(graph, 0, min_chi, even_sector ? Closure::pauli_even : Closure::pauli);
}

Network basis_qgn(std::shared_ptr<const PatchGraph> graph, const std::vector<std::vector<Bits>>& states,
                  const std::function<cplx(Bits)>& amplitude,
                  const std::vector<std::vector<NamedBitOperator>>& ops) {
  const int P = graph->patch_count();
  if (static_cast<int>(states.size()) != P) throw ConstructionError("one image list per patch is required");
  std::vector<Vector> psi(P);
  for (int I = 0; I < P; ++I) {
    const auto& s = states[I];
    if (s.empty()) throw InvalidImage("patch " + std::to_string(I) + " has no image states");
    if (!std::is_sorted(s.begin(), s.end()) || std::adjacent_find(s.begin(), s.end()) != s.end())
      throw InvalidImage("image states must be sorted and unique");
    psi[I].resize(static_cast<Index>(s.size()));
    for (std::size_t k = 0; k < s.size(); ++k) psi[I][static_cast<Index>(k)] = amplitude(s[k]);
    if (std::abs(psi[I].norm() - 1.0) > 1e-10)
      throw ConstructionError("image of patch " + std::to_string(I) + " does not contain the state");
  }
  std::vector<Matrix> V;
  for (auto [I, J] : graph->edges()) {
    const auto& a = states[I];
    const auto& b = states[J];
    Matrix m = Matrix::Zero(static_cast<Index>(a.size()), static_cast<Index>(b.size()));
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
      if (a[i] == b[j]) m(static_cast<Index>(i++), static_cast<Index>(j++)) = 1.0;
      else if (a[i] < b[j]) ++i;
      else ++j;
    }
    V.push_back(std::move(m));
  }
  Network net(graph, std::move(psi), std::move(V));
  std::vector<std::pair<cplx, Bits>> hits;
  for (int I = 0; I < P && I < static_cast<int>(ops.size()); ++I) {
    const auto& s = states[I];
    const Index chi = static_cast<Index>(s.size());
    OperatorTable table;
    for (const auto& [name, op] : ops[I]) {
      Matrix A = Matrix::Zero(chi, chi);
      for (Index c = 0; c < chi; ++c) {
        hits.clear();
        op.apply(s[c], hits);
        for (auto [amp, b] : hits) {
          auto it = std::lower_bound(s.begin(), s.end(), b);
          if (it != s.end() && *it == b) A(it - s.begin(), c) += amp;
        }
      }
      table[name] = std::move(A);
    }
    net.set_operator_table(I, std::move(table));
  }
  return net;
}

std::vector<std::vector<NamedBitOperator>> quench_operator_tables(const Model& model,
                                                                  const PatchGraph& graph,
                                                                  Statistics stats) {
  auto H = local_hamiltonian_terms(model, graph, stats);
  const bool fermi = std::holds_alternative<FermiModel>(model);
  std::vector<std::vector<NamedBitOperator>> out(graph.patch_count());
  for (int I = 0; I < graph.patch_count(); ++I) {
    out[I].push_back({"H", H[I]});
    for (int s : graph.patch(I)) {
      if (fermi) {
        out[I].push_back({site_op_name("n", s), BitOperator::site(stats, {SiteOpKind::number, s})});
      } else {
        out[I].push_back({site_op_name("x", s), BitOperator::site(stats, {SiteOpKind::pauli_x, s})});
        out[I].push_back({site_op_name("y", s), BitOperator::site(stats, {SiteOpKind::pauli_y, s})});
        out[I].push_back({site_op_name("z", s), BitOperator::site(stats, {SiteOpKind::pauli_z, s})});
      }
    }
  }
  return out;
}

QuenchSetup fermion_quench_qgn(std::shared_ptr<const PatchGraph> graph, double V, Bits initial,
                               Index min_chi) {
  auto images = fermion_quench_images(*graph, initial, min_chi);
  const Statistics stats{BasisKind::fermion, PauliFrame::z};
  auto ops = quench_operator_tables(FermiModel{V}, *graph, stats);
  auto net = basis_qgn(graph, images.states, [initial](Bits b) { return b == initial ? cplx(1.0) : cplx(0.0); },
                       ops);
  return {std::move(net), std::move(images)};
}

QuenchSetup ising_quench_qgn(std::shared_ptr<const PatchGraph> graph, double h, Index min_chi,
                             bool even_sector) {
  auto images = ising_quench_images(*graph, min_chi, even_sector);
  const Statistics stats{BasisKind::spin, PauliFrame::x};
  auto ops = quench_operator_tables(IsingModel{h}, *graph, stats);
  auto net = basis_qgn(graph, images.states, [](Bits b) { return b == 0 ? cplx(1.0) : cplx(0.0); }, ops);
  return {std::move(net), std::move(images)};
}

Bits checkerboard(const LatticeSpec& lattice) {
  Bits out = 0;
  for (int s = 0; s < lattice.site_count(); ++s) {
    auto c = lattice.coords(s);
    int sum = 0;
    for (int x : c) sum += x;
    if (sum % 2 == 0) out |= Bits{1} << s;
  }
  return out;
}

// ---------------------------------------------------------------------------

Vector product_state(const std::vector<Vector>& site_states) {
  const int n = static_cast<int>(site_states.size());
  if (n < 1 || n > 28) throw ContractViolation("product state needs 1 to 28 sites");
  const Index dim = Index{1} << n;
  Vector out(dim);
  for (Index b = 0; b < dim; ++b) {
    cplx amp = 1.0;
    for (int s = 0; s < n && amp != 0.0; ++s) amp *= site_states[s][(b >> s) & 1];
    out[b] = amp;
  }
  return out;
}

Network product_state_qgn(std::shared_ptr<const PatchGraph> graph, const std::vector<Vector>& site_states) {
  Vector Psi = product_state(site_states);
  Psi.normalize();
  const int n = graph->site_count();
  Basis basis = build_basis(BasisKind::spin, n);
  std::vector<std::vector<Vector>> images(graph->patch_count(), std::vector<Vector>{Psi});
  return qgn_from_truncation(graph, Psi, truncation_maps_from_images(images),
                             pauli_ops_per_patch(basis, *graph));
}

Vector mixed_state_purification(int n) {
  Vector out = Vector::Zero(Index{1} << (n + 1));
  out[0] = out[out.size() - 1] = 1.0 / std::sqrt(2.0);
  return out;
}

Network mixed_state_qgn(const LatticeSpec& lattice, MixedVariant variant, PathStyle style) {
  auto graph = std::make_shared<const PatchGraph>(build_single_site_patch_graph(lattice, style));
  const int n = graph->site_count();
  const Index dim = Index{1} << (n + 1);
  const Bits all = static_cast<Bits>(dim - 1);
  Basis basis = build_basis(BasisKind::spin, n + 1);
  TruncationMapSet Q;
  for (int I = 0; I < n; ++I) {
    const int site = graph->patch(I)[0];
    const Bits flip = Bits{1} << site;
    std::vector<Bits> rows;
    if (variant == MixedVariant::basic) rows = {0, all};
    else rows = {0, flip, all ^ flip, all};
    Matrix q = Matrix::Zero(static_cast<Index>(rows.size()), dim);
    for (std::size_t r = 0; r < rows.size(); ++r) q(static_cast<Index>(r), static_cast<Index>(rows[r])) = 1.0;
    Q.Q.push_back(std::move(q));
  }
  return qgn_from_truncation(graph, mixed_state_purification(n), Q, pauli_ops_per_patch(basis, *graph));
}

Vector cat_state(int n) {
  Vector out = Vector::Zero(Index{1} << n);
  out[0] = out[out.size() - 1] = 1.0 / std::sqrt(2.0);
  return out;
}

Network cat_state_qgn(const LatticeSpec& lattice, PathStyle style) {
  auto graph = std::make_shared<const PatchGraph>(build_single_site_patch_graph(lattice, style));
  const int n = graph->site_count();
  Basis basis = build_basis(BasisKind::spin, n);
  Vector Psi = cat_state(n);
  ImageString s;
  for (int I : graph->covering_path()) s.factors.push_back({I, pauli_op(basis, graph->patch(I)[0], Axis::x)});
  auto images = images_for_strings(Psi, *graph, ImageRequest{{s}});
  return qgn_from_truncation(graph, Psi, truncation_maps_from_images(images), pauli_ops_per_patch(basis, *graph));
}

Vector rainbow_state(int n) {
  if (n < 2 || n % 2) throw ContractViolation("rainbow state needs an even number of qubits");
  const int pairs = n / 2;
  Vector out = Vector::Zero(Index{1} << n);
  const double amp = std::pow(2.0, -0.5 * pairs);
  for (Bits choice = 0; choice < (Bits{1} << pairs); ++choice) {
    Bits b = 0;
    double sign = 1.0;
    for (int p = 0; p < pairs; ++p) {
      if ((choice >> p) & 1) {
        b |= Bits{1} << p;  // |1_p 0_{n-1-p}>
        sign = -sign;
      } else {
        b |= Bits{1} << (n - 1 - p);
      }
    }
    out[static_cast<Index>(b)] = sign * amp;
  }
  return out;
}

Network coherent_qgn(std::shared_ptr<const PatchGraph> graph, const std::vector<cplx>& theta) {
  if (static_cast<int>(theta.size()) != graph->site_count())
    throw ConstructionError("one coherent amplitude per site is required");
  const int P = graph->patch_count();
  std::vector<Vector> psi(P, Vector::Ones(1));
  std::vector<Matrix> V(graph->edges().size(), Matrix::Ones(1, 1));
  Network net(graph, std::move(psi), std::move(V));
  for (int I = 0; I < P; ++I) {
    OperatorTable table;
    for (int s : graph->patch(I)) {
      table[site_op_name("b", s)] = Matrix::Constant(1, 1, theta[s]);
      table[site_op_name("bd", s)] = Matrix::Constant(1, 1, std::conj(theta[s]));
    }
    net.set_operator_table(I, std::move(table));
  }
  return net;
}

Network slater_qgn(std::shared_ptr<const PatchGraph> graph, const Matrix& phi) {
  const Index nf = phi.rows();
  if (phi.cols() != graph->site_count()) throw ConstructionError("orbital matrix must have one column per site");
  if (nf > 0 && (phi * phi.adjoint() - Matrix::Identity(nf, nf)).cwiseAbs().maxCoeff() > 1e-10)
    throw ConstructionError("orbitals are not orthonormal");
  const Index chi = 1 + nf;
  const int P = graph->patch_count();
  Vector e0 = Vector::Zero(chi);
  e0[0] = 1.0;
  std::vector<Vector> psi(P, e0);
  std::vector<Matrix> V(graph->edges().size(), Matrix::Identity(chi, chi));
  Network net(graph, std::move(psi), std::move(V));
  for (int I = 0; I < P; ++I) {
    OperatorTable table;
    for (int s : graph->patch(I)) {
      Matrix c = Matrix::Zero(chi, chi);
      for (Index a = 0; a < nf; ++a) c(1 + a, 0) = (a % 2 ? -1.0 : 1.0) * phi(a, s);
      table[site_op_name("cd", s)] = c.adjoint();
      table[site_op_name("c", s)] = std::move(c);
    }
    net.set_operator_table(I, std::move(table));
  }
  return net;
}

}  // namespace qgn
