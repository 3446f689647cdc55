#pragma once

#include "qgn/fock.hpp"
#include "qgn/lattice.hpp"
#include "qgn/types.hpp"

#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace qgn {

using OperatorTable = std::map<std::string, Matrix>;

/// Quantum gauge network: a local wavefunction per patch, a connection per
/// patch-graph edge and a table of truncated operators per patch.
///
/// Connections are stored once per edge in the (I < J) orientation; V_JI is
/// the adjoint. Operator tables are shared between copies, so copying a
/// network only duplicates wavefunctions and connections.
class Network {
 public:
  Network() = default;
  Network(std::shared_ptr<const PatchGraph> graph, std::vector<Vector> psi,
          std::vector<Matrix> edge_connections);

  const PatchGraph& graph() const { return *graph_; }
  const std::shared_ptr<const PatchGraph>& graph_ptr() const { return graph_; }
  int patch_count() const { return static_cast<int>(psi_.size()); }
  Index chi(int I) const { return psi_.at(I).size(); }
  std::vector<Index> chis() const;

  const Vector& psi(int I) const { return psi_.at(I); }
  void set_psi(int I, Vector v);

  /// Stored matrix of edge e = (I, J), I < J.
  const Matrix& edge_connection(int e) const { return V_.at(e); }
  void set_edge_connection(int e, Matrix m);
  /// V_IJ as a dense matrix; identity for I == J. Throws NoPath for non-edges.
  Matrix connection(int I, int J) const;
  /// V_IJ v without forming the adjoint explicitly.
  Vector apply_connection(int I, int J, const Vector& v) const;
  /// Product of connections along a patch path p0 p1 ... pn applied to v.
  Vector apply_path(const std::vector<int>& path, const Vector& v) const;

  bool has_operator(int I, const std::string& name) const;
  /// Throws MissingOperator. String evaluation treats the name "1" as the
  /// identity without a table entry.
  const Matrix& op(int I, const std::string& name) const;
  const OperatorTable& operators(int I) const { return *ops_.at(I); }
  void set_operator(int I, const std::string& name, Matrix A);
  void set_operator_table(int I, OperatorTable table);

 private:
  void check_patch(int I) const;

  std::shared_ptr<const PatchGraph> graph_;
  std::vector<Vector> psi_;
  std::vector<Matrix> V_;
  std::vector<std::shared_ptr<const OperatorTable>> ops_;
};

/// Operator names used throughout: "H", "n<site>", "x<site>", "y<site>",
/// "z<site>", "c<site>", "cd<site>", "b<site>", "bd<site>".
std::string site_op_name(const std::string& prefix, int site);

struct TruncationMapSet {
  /// Q_I, shape chi_I x N.
  std::vector<Matrix> Q;
};

/// Rank tolerance relative to the largest singular value of an image set.
inline constexpr double kRankTolerance = 1e-10;

/// Q_I^dag = left singular vectors of the image matrix above the rank
/// tolerance. Throws InvalidImage for empty lists, RankError for zero images.
TruncationMapSet truncation_maps_from_images(const std::vector<std::vector<Vector>>& images);

struct NamedOperator {
  std::string name;
  SparseOperator op;
};

/// psi_I = Q_I Psi, V_IJ = Q_I Q_J^dag, A_I = Q_I A Q_I^dag. Throws
/// ConstructionError when Q does not satisfy its invariants against Psi.
Network qgn_from_truncation(std::shared_ptr<const PatchGraph> graph, const Vector& Psi,
                            const TruncationMapSet& Q,
                            const std::vector<std::vector<NamedOperator>>& requested_ops);

struct OperatorString {
  struct Entry {
    int patch;
    std::string op;
  };
  std::vector<Entry> entries;
  /// Optional explicit paths; bridges[k] runs from entries[k].patch to
  /// entries[k+1].patch inclusive. Empty means shortest stored path.
  std::vector<std::vector<int>> bridges;
};

/// <psi_I1| A_1 V.. A_2 V.. ... A_M |psi_IM>.
cplx expectation_string(const Network& net, const OperatorString& s);

/// Patch path used between consecutive entries k and k+1.
std::vector<int> string_bridge(const Network& net, const OperatorString& s, std::size_t k);

struct ConnectedCorrelator {
  cplx value;        // <psi_I|(A - <A>) V (B - <B>)|psi_J>
  cplx direct;       // <psi_I|A V B|psi_J> - <A><B>
  double residual;   // V psi consistency along the path, both directions
  bool applicable;   // residual <= 1e-8
};

ConnectedCorrelator connected_two_point(const Network& net, int I, const std::string& A, int J,
                                        const std::string& B,
                                        std::optional<std::vector<int>> path = {});

struct DensityMatrix {
  Matrix rho;
  double hermiticity_residual;
};

/// rho = 2^-n sum over Pauli strings evaluated along a path of single-site
/// patches (default: the stored covering path). Needs x/y/z operators on
/// each patch; n <= 8.
DensityMatrix density_matrix_from_qgn(const Network& net,
                                      std::optional<std::vector<int>> path = {});

/// psi -> L psi, V_IJ -> L_I V_IJ L_J^dag, A -> L A L^dag. Throws NonUnitary.
Network gauge_transform(const Network& net, const std::vector<Matrix>& lambda);

struct ResidualOptions {
  bool triangles = true;
  bool singular_values = true;
};

struct Residuals {
  double vpsi = 0.0;
  double triangle = 0.0;
  double singular_excess = 0.0;
};

Residuals consistency_residuals(const Network& net, ResidualOptions opts = {});

/// Mean of <psi_I|A|psi_I> over the patches containing a site. Throws
/// ContractViolation when the imaginary part exceeds 1e-9.
double mean_local_expectation(const Network& net, int site, const std::string& op_prefix);
/// Same average without the reality check.
cplx mean_local_expectation_complex(const Network& net, int site, const std::string& op_prefix);

// Binary container (little-endian). Layout:
//   "QGNNET01" | u32 n_sites | u32 P | P x (u32 k, k x u32 site)
//   | u32 E | E x (u32 I, u32 J) | u32 L | L x u32 covering-path patch
//   | P x (u64 chi, chi x c128 psi) | E x (chi_I*chi_J x c128, row-major)
//   | P x (u32 count, count x (u32 len, name bytes, chi*chi x c128 row-major))
// c128 = two IEEE-754 doubles (re, im).
void write_network(std::ostream& os, const Network& net);
Network read_network(std::istream& is);
void save_network(const std::string& path, const Network& net);
Network load_network(const std::string& path);

}  // namespace qgn
