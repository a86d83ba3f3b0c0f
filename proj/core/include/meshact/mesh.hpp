#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace meshact {

// Vertex position in meters. Coordinates are kept in 32-bit floats, the
// same width the on-disk format uses, so serialization round-trips
// bit-exactly. All geometry kernels promote to double.
struct Vec3f {
    float x = 0.0f;
    float y = 0.0f;
    float z = 0.0f;

    friend bool operator==(const Vec3f&, const Vec3f&) = default;
};

// Undirected edge, normalized to a < b at construction.
struct Edge {
    std::uint32_t a = 0;
    std::uint32_t b = 0;

    Edge() = default;
    Edge(std::uint32_t m, std::uint32_t n) : a(m < n ? m : n), b(m < n ? n : m) {}

    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

// One frame of a mesh sequence: vertex positions plus undirected
// connectivity. Each undirected pair is stored once and queried both ways.
struct MeshFrame {
    std::vector<Vec3f> vertices;
    std::vector<Edge> edges;

    std::size_t vertex_count() const { return vertices.size(); }

    // Neighbor lists for both directions of every edge, sorted ascending.
    std::vector<std::vector<std::uint32_t>> adjacency() const;
};

struct MeshSequence {
    std::string id;
    std::optional<int> label;
    std::vector<MeshFrame> frames;

    std::size_t frame_count() const { return frames.size(); }
};

struct DatasetSplit {
    std::vector<std::string> train;
    std::vector<std::string> test;
    std::vector<std::string> val;
    std::array<double, 3> ratios{0.7, 0.15, 0.15};
};

// Diagnostic check of every MeshFrame invariant. Returns one message per
// violation; empty means the frame is well-formed. Never throws.
std::vector<std::string> validate(const MeshFrame& frame);

// Reorder vertices by a permutation: vertex i moves to slot perm[i] and
// every edge (m,n) becomes (perm[m],perm[n]). Pure relabeling, geometry
// unchanged as a set. Throws ArgumentError if perm is not a permutation
// of 0..N-1.
MeshFrame scramble_vertices(const MeshFrame& frame, const std::vector<std::uint32_t>& perm);

// Resample a sequence to exactly t frames by nearest-index mapping
// (first and last frames are preserved). t >= 1.
MeshSequence resample_frames(const MeshSequence& seq, std::size_t t);

}  // namespace meshact
