#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

namespace qglat {

// Lattice vertex n1 + i*n2 on the integer grid.
struct VertexId {
  int n1 = 0;
  int n2 = 0;

  friend bool operator==(const VertexId&, const VertexId&) = default;
  int coord_sum() const { return n1 + n2; }
};

inline VertexId right_of(VertexId v) { return {v.n1 + 1, v.n2}; }
inline VertexId left_of(VertexId v) { return {v.n1 - 1, v.n2}; }
inline VertexId above(VertexId v) { return {v.n1, v.n2 + 1}; }
inline VertexId below(VertexId v) { return {v.n1, v.n2 - 1}; }

enum class EdgeDir : std::uint8_t { Right, Up };

// Canonical edge: e(0) = origin, e(1) = origin + 1 or origin + i.
struct EdgeId {
  VertexId origin;
  EdgeDir dir = EdgeDir::Right;

  friend bool operator==(const EdgeId&, const EdgeId&) = default;
  VertexId terminus() const {
    return dir == EdgeDir::Right ? right_of(origin) : above(origin);
  }
  // Edges always join coordinate sums s and s+1; s identifies the band.
  int band() const { return origin.coord_sum(); }
};

inline EdgeId right_edge(VertexId v) { return {v, EdgeDir::Right}; }
inline EdgeId up_edge(VertexId v) { return {v, EdgeDir::Up}; }
inline EdgeId left_edge(VertexId v) { return {left_of(v), EdgeDir::Right}; }
inline EdgeId down_edge(VertexId v) { return {below(v), EdgeDir::Up}; }

enum class Side : std::uint8_t { Top, Bottom, Left, Right };

// Boundary slot (side, m). The fixed total order for matrix rows/columns is
// Top, Bottom, Left, Right with m ascending inside each side.
struct BoundaryIndex {
  Side side = Side::Top;
  int m = 0;

  friend bool operator==(const BoundaryIndex&, const BoundaryIndex&) = default;
};

// The finite region: interior D_N = {0..N}^2, boundary = the 4(N+1)
// vertices adjacent to it (the four corners of the bounding square are not
// adjacent to any interior vertex and are excluded). Immutable after
// construction; safe to share across threads.
class Region {
 public:
  explicit Region(int N);

  int n() const { return N_; }
  int interior_count() const { return (N_ + 1) * (N_ + 1); }
  int boundary_count() const { return 4 * (N_ + 1); }  // M
  int vertex_count() const { return interior_count() + boundary_count(); }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  int interior_edge_count() const { return interior_edge_count_; }
  int boundary_edge_count() const { return edge_count() - interior_edge_count_; }

  bool is_interior(VertexId v) const {
    return v.n1 >= 0 && v.n1 <= N_ && v.n2 >= 0 && v.n2 <= N_;
  }
  bool is_boundary(VertexId v) const;
  bool contains(VertexId v) const { return is_interior(v) || is_boundary(v); }

  // Dense vertex numbering: interior row-major first, then boundary in
  // BoundaryIndex order shifted by interior_count().
  int vertex_index(VertexId v) const;
  int interior_index(VertexId v) const;

  int boundary_flat(BoundaryIndex b) const;  // 0..M-1
  int boundary_flat(VertexId v) const;
  BoundaryIndex boundary_of(VertexId v) const;
  VertexId boundary_vertex(BoundaryIndex b) const;
  VertexId boundary_vertex(int flat) const;

  // The unique interior neighbor w_v of a boundary vertex.
  VertexId interior_neighbor(VertexId boundary_v) const;

  // The unique edge of E_Omega incident to a boundary vertex.
  EdgeId boundary_edge(VertexId boundary_v) const;

  int degree(VertexId v) const;

  bool edge_in_region(EdgeId e) const;
  bool is_interior_edge(EdgeId e) const;
  bool is_boundary_edge(EdgeId e) const {
    return edge_in_region(e) && !is_interior_edge(e);
  }
  int edge_index(EdgeId e) const;  // throws on edges outside E_Omega
  EdgeId edge_at(int index) const { return edges_[index]; }
  const std::vector<EdgeId>& edges() const { return edges_; }

  // Incident edges of an interior vertex, in right, up, left, down order.
  std::array<EdgeId, 4> incident_edges(VertexId v) const;

 private:
  int N_;
  std::vector<EdgeId> edges_;
  std::vector<int> edge_lookup_;  // dense (origin, dir) -> index table
  int interior_edge_count_ = 0;

  int edge_slot(EdgeId e) const;
};

Region build_region(int N);

// Vertices of the diagonal line A_k = {x1 + x2 = k} inside Omega, ordered
// from the top boundary endpoint down-right to the right boundary endpoint.
// Requires N+1 <= k <= 2N.
std::vector<VertexId> diagonal_vertices(const Region& region, int k);

// The pi rotation about the center of D_N: (n1, n2) -> (N-n1, N-n2).
VertexId rotate_pi(const Region& region, VertexId v);
EdgeId rotate_pi(const Region& region, EdgeId e);

// Boundary permutation sigma with sigma[i] = flat index of the rotated
// boundary vertex; an involution on 0..M-1.
std::vector<int> rotation_boundary_permutation(const Region& region);

// Interior edges swept by the diagonals k = 2N..N+1: the down- and left-
// edges of each interior vertex on A_k. Union with its rotate_pi image is
// the full interior edge set.
std::vector<EdgeId> upper_triangle_edges(const Region& region);

}  // namespace qglat
