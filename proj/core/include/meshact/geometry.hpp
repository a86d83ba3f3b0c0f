#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "meshact/mesh.hpp"

namespace meshact {

enum class Metric { geodesic, euclidean };

const char* metric_name(Metric m);

// k nearest vertices of one center under one metric. Neighbors are sorted by
// (distance, index); the center itself is excluded. Displacements are
// neighbor - center coordinate offsets in meters.
struct Neighborhood {
    std::uint32_t center = 0;
    Metric metric = Metric::euclidean;
    std::vector<std::uint32_t> neighbor_indices;
    std::vector<std::array<double, 3>> displacements;
    std::vector<double> metric_distances;

    std::size_t size() const { return neighbor_indices.size(); }
};

// All patches of one frame: farthest-point-sampled centers, each with a
// geodesic and a euclidean neighborhood.
struct PatchSet {
    std::size_t frame_index = 0;
    std::vector<std::uint32_t> centers;
    std::vector<Neighborhood> geo;
    std::vector<Neighborhood> euc;
};

// Shortest-path distance from `source` to every vertex along mesh edges
// weighted by euclidean length. Distances accumulate in exact arithmetic and
// are rounded once, which makes them independent of traversal order: the
// result is bit-reproducible under vertex relabeling and exactly symmetric.
// Unreachable vertices get +infinity.
std::vector<double> geodesic_distances(const MeshFrame& frame, std::uint32_t source);

// k nearest neighbors of `center` under the metric, ties broken by lower
// vertex index. Throws ArgumentError when k exceeds the number of reachable
// vertices (geodesic) or N-1 (euclidean).
Neighborhood knn(const MeshFrame& frame, std::uint32_t center, std::size_t k, Metric metric);

// Deterministic farthest point sampling: the first center is the vertex with
// the lexicographically smallest (x,y,z); every next center maximizes the
// minimum euclidean distance to the chosen set, ties broken by lower index.
std::vector<std::uint32_t> farthest_point_sampling(const MeshFrame& frame, std::size_t c);

PatchSet build_frame_patches(const MeshFrame& frame, std::size_t c, std::size_t k,
                             std::size_t frame_index = 0);

// Debug dump: one "center metric neighbor distance" row per neighbor.
void dump_patch_table(const PatchSet& patches, std::ostream& out);

inline std::array<double, 3> to_dvec(const Vec3f& v) {
    return {static_cast<double>(v.x), static_cast<double>(v.y), static_cast<double>(v.z)};
}

double euclidean_distance(const Vec3f& a, const Vec3f& b);

}  // namespace meshact
