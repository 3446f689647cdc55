#include "qgn/network.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace qgn {

namespace {

constexpr char kMagic[8] = {'Q', 'G', 'N', 'N', 'E', 'T', '0', '1'};
static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw FormatError("truncated network container");
  return v;
}

void put_complex(std::ostream& os, cplx z) {
  put(os, z.real());
  put(os, z.imag());
}

cplx get_complex(std::istream& is) {
  double re = get<double>(is);
  double im = get<double>(is);
  return {re, im};
}

void put_matrix(std::ostream& os, const Matrix& m) {
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) put_complex(os, m(r, c));
}

Matrix get_matrix(std::istream& is, Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = get_complex(is);
  return m;
}

std::uint32_t get_count(std::istream& is, std::uint32_t limit, const char* what) {
  auto v = get<std::uint32_t>(is);
  if (v > limit) throw FormatError(std::string("implausible ") + what + " count in network container");
  return v;
}

}  // namespace

void write_network(std::ostream& os, const Network& net) {
  const auto& g = net.graph();
  os.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(os, g.site_count());
  put<std::uint32_t>(os, g.patch_count());
  for (const auto& p : g.patches()) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(p.size()));
    for (int s : p) put<std::uint32_t>(os, s);
  }
  put<std::uint32_t>(os, static_cast<std::uint32_t>(g.edges().size()));
  for (auto [I, J] : g.edges()) {
    put<std::uint32_t>(os, I);
    put<std::uint32_t>(os, J);
  }
  put<std::uint32_t>(os, static_cast<std::uint32_t>(g.covering_path().size()));
  for (int I : g.covering_path()) put<std::uint32_t>(os, I);
  for (int I = 0; I < net.patch_count(); ++I) {
    put<std::uint64_t>(os, net.chi(I));
    for (Index k = 0; k < net.chi(I); ++k) put_complex(os, net.psi(I)[k]);
  }
  for (std::size_t e = 0; e < g.edges().size(); ++e) put_matrix(os, net.edge_connection(static_cast<int>(e)));
  for (int I = 0; I < net.patch_count(); ++I) {
    const auto& table = net.operators(I);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(table.size()));
    for (const auto& [name, A] : table) {
      put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
      os.write(name.data(), static_cast<std::streamsize>(name.size()));
      put_matrix(os, A);
    }
  }
  if (!os) throw FormatError("failed to write network container");
}

Network read_network(std::istream& is) {
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw FormatError("not a network container (bad magic)");
  constexpr std::uint32_t kLimit = 1u << 24;
  const auto n_sites = get_count(is, kLimit, "site");
  const auto P = get_count(is, kLimit, "patch");
  std::vector<PatchGraph::Patch> patches(P);
  for (auto& p : patches) {
    p.resize(get_count(is, n_sites, "patch-site"));
    for (auto& s : p) s = static_cast<int>(get<std::uint32_t>(is));
  }
  const auto E = get_count(is, kLimit, "edge");
  std::vector<PatchGraph::Edge> edges(E);
  for (auto& [I, J] : edges) {
    I = static_cast<int>(get<std::uint32_t>(is));
    J = static_cast<int>(get<std::uint32_t>(is));
  }
  std::vector<int> path(get_count(is, kLimit, "path"));
  for (auto& I : path) I = static_cast<int>(get<std::uint32_t>(is));
  std::shared_ptr<const PatchGraph> graph;
  try {
    graph = std::make_shared<const PatchGraph>(static_cast<int>(n_sites), patches, edges, path);
  } catch (const InvalidLattice& e) {
    throw FormatError(std::string("invalid patch graph in container: ") + e.what());
  }
  if (graph->edges() != edges) throw FormatError("container edges are not in canonical order");

  std::vector<Vector> psi(P);
  for (auto& v : psi) {
    auto chi = get<std::uint64_t>(is);
    if (chi > kLimit) throw FormatError("implausible local dimension in network container");
    v.resize(static_cast<Index>(chi));
    for (Index k = 0; k < v.size(); ++k) v[k] = get_complex(is);
  }
  std::vector<Matrix> V;
  for (auto [I, J] : graph->edges()) V.push_back(get_matrix(is, psi[I].size(), psi[J].size()));
  Network net(graph, std::move(psi), std::move(V));
  for (std::uint32_t I = 0; I < P; ++I) {
    const auto count = get_count(is, kLimit, "operator");
    OperatorTable table;
    for (std::uint32_t k = 0; k < count; ++k) {
      std::string name(get_count(is, 4096, "name-length"), '\0');
      if (!is.read(name.data(), static_cast<std::streamsize>(name.size())))
        throw FormatError("truncated network container");
      const Index chi = net.chi(static_cast<int>(I));
      table[name] = get_matrix(is, chi, chi);
    }
    net.set_operator_table(static_cast<int>(I), std::move(table));
  }
  return net;
}

void save_network(const std::string& path, const Network& net) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open '" + path + "' for writing");
  write_network(os, net);
}

Network load_network(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open '" + path + "'");
  return read_network(is);
}

}  // namespace qgn
