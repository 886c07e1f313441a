#include "qglat/lattice.hpp"

#include <stdexcept>
#include <string>

#include "qglat/errors.hpp"

namespace qglat {

namespace {

std::string vertex_str(VertexId v) {
  return "(" + std::to_string(v.n1) + "," + std::to_string(v.n2) + ")";
}

}  // namespace

Region::Region(int N) : N_(N) {
  if (N < 0) throw std::invalid_argument("Region: N must be >= 0");

  // Enumerate E_Omega deterministically: origins scanned row-major over the
  // bounding box, Right edge before Up edge at each origin. Interior edges
  // have both endpoints in D_N; boundary edges join D_N to the boundary.
  const int span = N_ + 3;  // origins range over [-1, N+1]^2
  edge_lookup_.assign(2 * span * span, -1);
  std::vector<EdgeId> boundary;
  for (int n2 = -1; n2 <= N_ + 1; ++n2) {
    for (int n1 = -1; n1 <= N_ + 1; ++n1) {
      for (EdgeDir dir : {EdgeDir::Right, EdgeDir::Up}) {
        const EdgeId e{{n1, n2}, dir};
        const VertexId a = e.origin, b = e.terminus();
        if (!contains(a) || !contains(b)) continue;
        if (!is_interior(a) && !is_interior(b)) continue;
        if (is_interior(a) && is_interior(b)) {
          edges_.push_back(e);
        } else {
          boundary.push_back(e);
        }
      }
    }
  }
  interior_edge_count_ = static_cast<int>(edges_.size());
  edges_.insert(edges_.end(), boundary.begin(), boundary.end());
  for (int i = 0; i < static_cast<int>(edges_.size()); ++i)
    edge_lookup_[edge_slot(edges_[i])] = i;
}

bool Region::is_boundary(VertexId v) const {
  if (v.n2 == N_ + 1 || v.n2 == -1) return v.n1 >= 0 && v.n1 <= N_;
  if (v.n1 == -1 || v.n1 == N_ + 1) return v.n2 >= 0 && v.n2 <= N_;
  return false;
}

int Region::vertex_index(VertexId v) const {
  if (is_interior(v)) return interior_index(v);
  return interior_count() + boundary_flat(v);
}

int Region::interior_index(VertexId v) const {
  if (!is_interior(v))
    throw std::out_of_range("interior_index: " + vertex_str(v) +
                            " not interior");
  return v.n2 * (N_ + 1) + v.n1;
}

int Region::boundary_flat(BoundaryIndex b) const {
  if (b.m < 0 || b.m > N_) throw std::out_of_range("boundary_flat: bad m");
  return static_cast<int>(b.side) * (N_ + 1) + b.m;
}

BoundaryIndex Region::boundary_of(VertexId v) const {
  if (v.n2 == N_ + 1 && v.n1 >= 0 && v.n1 <= N_) return {Side::Top, v.n1};
  if (v.n2 == -1 && v.n1 >= 0 && v.n1 <= N_) return {Side::Bottom, v.n1};
  if (v.n1 == -1 && v.n2 >= 0 && v.n2 <= N_) return {Side::Left, v.n2};
  if (v.n1 == N_ + 1 && v.n2 >= 0 && v.n2 <= N_) return {Side::Right, v.n2};
  throw std::out_of_range("boundary_of: " + vertex_str(v) + " not on boundary");
}

int Region::boundary_flat(VertexId v) const { return boundary_flat(boundary_of(v)); }

VertexId Region::boundary_vertex(BoundaryIndex b) const {
  switch (b.side) {
    case Side::Top: return {b.m, N_ + 1};
    case Side::Bottom: return {b.m, -1};
    case Side::Left: return {-1, b.m};
    case Side::Right: return {N_ + 1, b.m};
  }
  throw std::out_of_range("boundary_vertex: bad side");
}

VertexId Region::boundary_vertex(int flat) const {
  return boundary_vertex(
      BoundaryIndex{static_cast<Side>(flat / (N_ + 1)), flat % (N_ + 1)});
}

VertexId Region::interior_neighbor(VertexId v) const {
  const BoundaryIndex b = boundary_of(v);
  switch (b.side) {
    case Side::Top: return {b.m, N_};
    case Side::Bottom: return {b.m, 0};
    case Side::Left: return {0, b.m};
    case Side::Right: return {N_, b.m};
  }
  throw std::out_of_range("interior_neighbor: bad side");
}

EdgeId Region::boundary_edge(VertexId v) const {
  const VertexId w = interior_neighbor(v);
  if (v == right_of(w)) return right_edge(w);
  if (v == above(w)) return up_edge(w);
  if (v == left_of(w)) return left_edge(w);
  return down_edge(w);
}

int Region::degree(VertexId v) const {
  if (is_interior(v)) return 4;  // every lattice neighbor of D_N lies in Omega
  if (is_boundary(v)) return 1;
  throw std::out_of_range("degree: " + vertex_str(v) + " not in Omega");
}

int Region::edge_slot(EdgeId e) const {
  const int span = N_ + 3;
  const int i1 = e.origin.n1 + 1, i2 = e.origin.n2 + 1;
  return (static_cast<int>(e.dir) * span + i2) * span + i1;
}

bool Region::edge_in_region(EdgeId e) const {
  if (e.origin.n1 < -1 || e.origin.n1 > N_ + 1 || e.origin.n2 < -1 ||
      e.origin.n2 > N_ + 1)
    return false;
  return edge_lookup_[edge_slot(e)] >= 0;
}

bool Region::is_interior_edge(EdgeId e) const {
  return edge_in_region(e) && edge_lookup_[edge_slot(e)] < interior_edge_count_;
}

int Region::edge_index(EdgeId e) const {
  if (!edge_in_region(e))
    throw std::out_of_range("edge_index: edge not in E_Omega, origin " +
                            vertex_str(e.origin));
  return edge_lookup_[edge_slot(e)];
}

std::array<EdgeId, 4> Region::incident_edges(VertexId v) const {
  return {right_edge(v), up_edge(v), left_edge(v), down_edge(v)};
}

Region build_region(int N) { return Region(N); }

std::vector<VertexId> diagonal_vertices(const Region& region, int k) {
  const int N = region.n();
  if (k < N + 1 || k > 2 * N)
    throw std::out_of_range("diagonal_vertices: k = " + std::to_string(k) +
                            " outside [N+1, 2N]");
  std::vector<VertexId> out;
  const VertexId start{k - N - 1, N + 1};  // alpha_{k,0} on the top boundary
  for (int l = 0; l <= 2 * N + 2 - k; ++l)
    out.push_back({start.n1 + l, start.n2 - l});
  return out;
}

VertexId rotate_pi(const Region& region, VertexId v) {
  if (!region.contains(v))
    throw std::out_of_range("rotate_pi: " + vertex_str(v) + " not in Omega");
  const int N = region.n();
  return {N - v.n1, N - v.n2};
}

EdgeId rotate_pi(const Region& region, EdgeId e) {
  // Endpoints rotate; the canonical origin of the image is the rotated
  // terminus.
  const VertexId new_origin = rotate_pi(region, e.terminus());
  return {new_origin, e.dir};
}

std::vector<int> rotation_boundary_permutation(const Region& region) {
  std::vector<int> sigma(region.boundary_count());
  for (int i = 0; i < region.boundary_count(); ++i)
    sigma[i] = region.boundary_flat(rotate_pi(region, region.boundary_vertex(i)));
  return sigma;
}

std::vector<EdgeId> upper_triangle_edges(const Region& region) {
  const int N = region.n();
  std::vector<EdgeId> out;
  for (int k = 2 * N; k >= N + 1; --k) {
    const auto diag = diagonal_vertices(region, k);
    for (std::size_t l = 1; l + 1 < diag.size(); ++l) {
      for (EdgeId e : {down_edge(diag[l]), left_edge(diag[l])}) {
        if (region.is_interior_edge(e)) out.push_back(e);
      }
    }
  }
  return out;
}

}  // namespace qglat
