#pragma once

#include "qgn/types.hpp"

#include <array>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace qgn {

/// Hypercubic lattice with row-major site indexing (last coordinate fastest).
struct LatticeSpec {
  std::vector<int> dims;
  std::vector<bool> periodic;

  /// Throws InvalidLattice for 0 or >3 dimensions, non-positive extents,
  /// or periodic extents below 3 (those would duplicate bonds).
  void validate() const;

  int dimension() const { return static_cast<int>(dims.size()); }
  int site_count() const;
  std::vector<int> coords(int site) const;
  int index(std::span<const int> coords) const;

  /// Nearest neighbours of a site, ascending.
  std::vector<int> neighbors(int site) const;
  /// Nearest-neighbour bonds (i < j), sorted.
  std::vector<std::pair<int, int>> bonds() const;

  static LatticeSpec chain(int n, bool periodic);
  static LatticeSpec square(int rows, int cols, bool periodic);
  static LatticeSpec cubic(int a, int b, int c, bool periodic);
};

enum class PathStyle { snake, comb, diagonal };

PathStyle parse_path_style(std::string_view name);
std::string_view to_string(PathStyle style);

/// Hamiltonian path through all sites, consecutive entries lattice neighbours.
std::vector<int> covering_path(const LatticeSpec& lattice, PathStyle style);

/// Patches of sites, their overlap/neighbour adjacency and a deterministic
/// table of shortest patch paths. Immutable once built.
class PatchGraph {
 public:
  using Patch = std::vector<int>;
  using Edge = std::pair<int, int>;

  /// Generic constructor. Edges are normalized to (I < J), deduplicated and
  /// sorted. Throws InvalidLattice if patches do not cover 0..n_sites-1 or
  /// an edge references a missing patch.
  PatchGraph(int n_sites, std::vector<Patch> patches, std::vector<Edge> edges,
             std::vector<int> covering_path = {});

  int site_count() const { return n_sites_; }
  int patch_count() const { return static_cast<int>(patches_.size()); }
  const std::vector<Patch>& patches() const { return patches_; }
  const Patch& patch(int I) const { return patches_.at(I); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<int>& neighbors(int I) const { return adjacency_.at(I); }
  /// Index of edge {I,J} in edges(), or -1.
  int edge_index(int I, int J) const;
  bool adjacent(int I, int J) const { return edge_index(I, J) >= 0; }
  bool overlaps(int I, int J) const;
  /// Patches containing a site, ascending.
  const std::vector<int>& patches_containing(int site) const { return containing_.at(site); }

  /// Shortest path I..J by BFS (ties broken by lowest patch index);
  /// path(I, I) = {I}. Throws NoPath for disconnected pairs.
  std::vector<int> path(int I, int J) const;

  /// Path used for density-matrix extraction; empty when not defined.
  const std::vector<int>& covering_path() const { return covering_path_; }

  /// Triples I<J<K with all three edges present.
  std::vector<std::array<int, 3>> triangles() const;

  bool operator==(const PatchGraph& other) const;

 private:
  int n_sites_;
  std::vector<Patch> patches_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adjacency_;
  std::vector<std::vector<int>> containing_;
  std::vector<int> covering_path_;
  // parent_[I * P + J]: predecessor of J on the BFS tree rooted at I.
  std::vector<int> parent_;
};

/// One patch per nearest-neighbour bond; patches adjacent iff they share a site.
PatchGraph build_nn_patch_graph(const LatticeSpec& lattice);

/// One patch per site; adjacent iff lattice neighbours. Stores the chosen
/// covering path (snake by default).
PatchGraph build_single_site_patch_graph(const LatticeSpec& lattice,
                                         PathStyle style = PathStyle::snake);

}  // namespace qgn
