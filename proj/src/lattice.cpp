#include "qgn/lattice.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

namespace qgn {

void LatticeSpec::validate() const {
  if (dims.empty() || dims.size() > 3)
    throw InvalidLattice("lattice must have 1 to 3 dimensions");
  if (periodic.size() != dims.size())
    throw InvalidLattice("periodic flags must match the number of dimensions");
  for (std::size_t d = 0; d < dims.size(); ++d) {
    if (dims[d] < 1) throw InvalidLattice("lattice extents must be positive");
    if (periodic[d] && dims[d] < 3)
      throw InvalidLattice("periodic extent " + std::to_string(dims[d]) +
                           " would duplicate bonds; use extent >= 3 or open boundaries");
  }
}

int LatticeSpec::site_count() const {
  return std::accumulate(dims.begin(), dims.end(), 1, std::multiplies<>());
}

std::vector<int> LatticeSpec::coords(int site) const {
  std::vector<int> c(dims.size());
  for (int d = dimension() - 1; d >= 0; --d) {
    c[d] = site % dims[d];
    site /= dims[d];
  }
  return c;
}

int LatticeSpec::index(std::span<const int> c) const {
  int idx = 0;
  for (int d = 0; d < dimension(); ++d) idx = idx * dims[d] + c[d];
  return idx;
}

std::vector<int> LatticeSpec::neighbors(int site) const {
  std::vector<int> out;
  auto c = coords(site);
  for (int d = 0; d < dimension(); ++d) {
    for (int step : {-1, 1}) {
      auto n = c;
      n[d] += step;
      if (n[d] < 0 || n[d] >= dims[d]) {
        if (!periodic[d]) continue;
        n[d] = (n[d] + dims[d]) % dims[d];
      }
      int j = index(n);
      if (j != site) out.push_back(j);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::pair<int, int>> LatticeSpec::bonds() const {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < site_count(); ++i)
    for (int j : neighbors(i))
      if (i < j) out.emplace_back(i, j);
  std::sort(out.begin(), out.end());
  return out;
}

LatticeSpec LatticeSpec::chain(int n, bool periodic) { return {{n}, {periodic}}; }

LatticeSpec LatticeSpec::square(int rows, int cols, bool periodic) {
  return {{rows, cols}, {periodic, periodic}};
}

LatticeSpec LatticeSpec::cubic(int a, int b, int c, bool periodic) {
  return {{a, b, c}, {periodic, periodic, periodic}};
}

PathStyle parse_path_style(std::string_view name) {
  if (name == "snake") return PathStyle::snake;
  if (name == "comb") return PathStyle::comb;
  if (name == "diagonal") return PathStyle::diagonal;
  throw UnsupportedPath("unknown path style '" + std::string(name) + "'");
}

std::string_view to_string(PathStyle style) {
  switch (style) {
    case PathStyle::snake: return "snake";
    case PathStyle::comb: return "comb";
    case PathStyle::diagonal: return "diagonal";
  }
  return "?";
}

namespace {

using Cell = std::pair<int, int>;

std::vector<Cell> snake_2d(int rows, int cols) {
  std::vector<Cell> out;
  for (int r = 0; r < rows; ++r)
    for (int k = 0; k < cols; ++k) out.emplace_back(r, r % 2 == 0 ? k : cols - 1 - k);
  return out;
}

std::vector<Cell> comb_2d(int rows, int cols) {
  std::vector<Cell> out;
  for (int c = 0; c < cols; ++c)
    for (int k = 0; k < rows; ++k) out.emplace_back(c % 2 == 0 ? k : rows - 1 - k, c);
  return out;
}

// Staircase walk: depth-first search for a Hamiltonian path from the corner
// that alternates right/down moves whenever it can.
std::vector<Cell> diagonal_2d(int rows, int cols) {
  enum Move { right, down, left, up, none };
  constexpr int dr[] = {0, 1, 0, -1};
  constexpr int dc[] = {1, 0, -1, 0};
  constexpr Move preference[5][4] = {
      {down, right, up, left},   // after right
      {right, down, left, up},   // after down
      {down, left, up, right},   // after left
      {right, up, left, down},   // after up
      {right, down, left, up}};  // start
  const int total = rows * cols;
  std::vector<char> seen(total, 0);
  std::vector<Cell> path{{0, 0}};
  std::vector<Move> last{none};
  std::vector<int> tried{0};
  seen[0] = 1;
  long budget = 2'000'000;
  while (static_cast<int>(path.size()) < total) {
    if (--budget < 0 || path.empty())
      throw UnsupportedPath("no diagonal covering path found for this lattice");
    auto [r, c] = path.back();
    bool advanced = false;
    while (tried.back() < 4) {
      Move m = preference[last.back()][tried.back()++];
      int nr = r + dr[m], nc = c + dc[m];
      if (nr < 0 || nr >= rows || nc < 0 || nc >= cols || seen[nr * cols + nc]) continue;
      seen[nr * cols + nc] = 1;
      path.emplace_back(nr, nc);
      last.push_back(m);
      tried.push_back(0);
      advanced = true;
      break;
    }
    if (!advanced) {
      seen[r * cols + c] = 0;
      path.pop_back();
      last.pop_back();
      tried.pop_back();
    }
  }
  return path;
}

std::vector<Cell> path_2d(int rows, int cols, PathStyle style) {
  switch (style) {
    case PathStyle::snake: return snake_2d(rows, cols);
    case PathStyle::comb: return comb_2d(rows, cols);
    case PathStyle::diagonal: return diagonal_2d(rows, cols);
  }
  return {};
}

}  // namespace

std::vector<int> covering_path(const LatticeSpec& lattice, PathStyle style) {
  lattice.validate();
  std::vector<int> out;
  const auto& d = lattice.dims;
  switch (lattice.dimension()) {
    case 1:
      if (style == PathStyle::diagonal)
        throw UnsupportedPath("diagonal path is undefined for a one-dimensional lattice");
      out.resize(d[0]);
      std::iota(out.begin(), out.end(), 0);
      break;
    case 2:
      for (auto [r, c] : path_2d(d[0], d[1], style)) out.push_back(r * d[1] + c);
      break;
    case 3: {
      auto layer = path_2d(d[1], d[2], style);
      for (int z = 0; z < d[0]; ++z) {
        for (int k = 0; k < static_cast<int>(layer.size()); ++k) {
          auto [r, c] = layer[z % 2 == 0 ? k : layer.size() - 1 - k];
          out.push_back((z * d[1] + r) * d[2] + c);
        }
      }
      break;
    }
  }
  return out;
}

PatchGraph::PatchGraph(int n_sites, std::vector<Patch> patches, std::vector<Edge> edges,
                       std::vector<int> covering)
    : n_sites_(n_sites), patches_(std::move(patches)), covering_path_(std::move(covering)) {
  const int P = patch_count();
  containing_.assign(n_sites_, {});
  for (int I = 0; I < P; ++I) {
    auto& p = patches_[I];
    if (p.empty()) throw InvalidLattice("empty patch " + std::to_string(I));
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    for (int s : p) {
      if (s < 0 || s >= n_sites_) throw InvalidLattice("patch references site out of range");
      containing_[s].push_back(I);
    }
  }
  for (int s = 0; s < n_sites_; ++s)
    if (containing_[s].empty())
      throw InvalidLattice("site " + std::to_string(s) + " is not covered by any patch");

  for (auto& e : edges) {
    if (e.first == e.second) throw InvalidLattice("self-edge in patch graph");
    if (e.first < 0 || e.second < 0 || e.first >= P || e.second >= P)
      throw InvalidLattice("edge references a missing patch");
    if (e.first > e.second) std::swap(e.first, e.second);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  edges_ = std::move(edges);

  adjacency_.assign(P, {});
  for (auto [a, b] : edges_) {
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  for (auto& a : adjacency_) std::sort(a.begin(), a.end());

  parent_.assign(static_cast<std::size_t>(P) * P, -1);
  for (int root = 0; root < P; ++root) {
    int* par = parent_.data() + static_cast<std::size_t>(root) * P;
    par[root] = root;
    std::deque<int> queue{root};
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      for (int v : adjacency_[u]) {
        if (par[v] != -1) continue;
        par[v] = u;
        queue.push_back(v);
      }
    }
  }

  for (std::size_t k = 0; k + 1 < covering_path_.size(); ++k)
    if (!adjacent(covering_path_[k], covering_path_[k + 1]))
      throw InvalidLattice("covering path steps between non-adjacent patches");
}

int PatchGraph::edge_index(int I, int J) const {
  Edge key = I < J ? Edge{I, J} : Edge{J, I};
  auto it = std::lower_bound(edges_.begin(), edges_.end(), key);
  if (it == edges_.end() || *it != key) return -1;
  return static_cast<int>(it - edges_.begin());
}

bool PatchGraph::overlaps(int I, int J) const {
  const auto& a = patches_.at(I);
  const auto& b = patches_.at(J);
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return true;
    if (*i < *j) ++i; else ++j;
  }
  return false;
}

std::vector<int> PatchGraph::path(int I, int J) const {
  const int P = patch_count();
  if (I < 0 || J < 0 || I >= P || J >= P) throw NoPath("patch index out of range");
  const int* par = parent_.data() + static_cast<std::size_t>(I) * P;
  if (par[J] == -1)
    throw NoPath("patches " + std::to_string(I) + " and " + std::to_string(J) +
                 " are not connected");
  std::vector<int> out{J};
  while (out.back() != I) out.push_back(par[out.back()]);
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<std::array<int, 3>> PatchGraph::triangles() const {
  std::vector<std::array<int, 3>> out;
  for (auto [a, b] : edges_)
    for (int c : adjacency_[b])
      if (c > b && adjacent(a, c)) out.push_back({a, b, c});
  return out;
}

bool PatchGraph::operator==(const PatchGraph& o) const {
  return n_sites_ == o.n_sites_ && patches_ == o.patches_ && edges_ == o.edges_ &&
         covering_path_ == o.covering_path_;
}

PatchGraph build_nn_patch_graph(const LatticeSpec& lattice) {
  lattice.validate();
  for (int e : lattice.dims)
    if (e < 2) throw InvalidLattice("nearest-neighbour patches need every extent >= 2");
  auto bonds = lattice.bonds();
  std::vector<PatchGraph::Patch> patches;
  patches.reserve(bonds.size());
  for (auto [i, j] : bonds) patches.push_back({i, j});

  std::vector<std::vector<int>> by_site(lattice.site_count());
  for (int I = 0; I < static_cast<int>(patches.size()); ++I)
    for (int s : patches[I]) by_site[s].push_back(I);
  std::vector<PatchGraph::Edge> edges;
  for (const auto& list : by_site)
    for (std::size_t a = 0; a < list.size(); ++a)
      for (std::size_t b = a + 1; b < list.size(); ++b) edges.emplace_back(list[a], list[b]);
  return PatchGraph(lattice.site_count(), std::move(patches), std::move(edges));
}

PatchGraph build_single_site_patch_graph(const LatticeSpec& lattice, PathStyle style) {
  lattice.validate();
  auto path = covering_path(lattice, style);
  std::vector<PatchGraph::Patch> patches;
  for (int s = 0; s < lattice.site_count(); ++s) patches.push_back({s});
  return PatchGraph(lattice.site_count(), std::move(patches), lattice.bonds(), std::move(path));
}

}  // namespace qgn
