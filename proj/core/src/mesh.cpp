#include "meshact/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "meshact/errors.hpp"

namespace meshact {

std::vector<std::vector<std::uint32_t>> MeshFrame::adjacency() const {
    std::vector<std::vector<std::uint32_t>> adj(vertices.size());
    for (const Edge& e : edges) {
        adj[e.a].push_back(e.b);
        adj[e.b].push_back(e.a);
    }
    for (auto& nbrs : adj) std::sort(nbrs.begin(), nbrs.end());
    return adj;
}

std::vector<std::string> validate(const MeshFrame& frame) {
    std::vector<std::string> violations;
    const std::size_t n = frame.vertices.size();
    if (n == 0) violations.push_back("frame has no vertices (N >= 1 required)");
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3f& v = frame.vertices[i];
        if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z)) {
            violations.push_back("non-finite coordinate at vertex " + std::to_string(i));
        }
    }
    std::set<Edge> seen;
    for (std::size_t i = 0; i < frame.edges.size(); ++i) {
        const Edge& e = frame.edges[i];
        if (e.a == e.b) {
            violations.push_back("self-edge (" + std::to_string(e.a) + "," +
                                 std::to_string(e.b) + ") at edge " + std::to_string(i));
            continue;
        }
        if (e.a >= n || e.b >= n) {
            violations.push_back("index out of range in edge (" + std::to_string(e.a) + "," +
                                 std::to_string(e.b) + ") at edge " + std::to_string(i) +
                                 " for N=" + std::to_string(n));
            continue;
        }
        if (!seen.insert(e).second) {
            violations.push_back("duplicate edge (" + std::to_string(e.a) + "," +
                                 std::to_string(e.b) + ") at edge " + std::to_string(i));
        }
    }
    return violations;
}

MeshFrame scramble_vertices(const MeshFrame& frame, const std::vector<std::uint32_t>& perm) {
    const std::size_t n = frame.vertices.size();
    if (perm.size() != n) {
        throw ArgumentError("permutation size " + std::to_string(perm.size()) +
                            " does not match vertex count " + std::to_string(n));
    }
    std::vector<bool> hit(n, false);
    for (std::uint32_t p : perm) {
        if (p >= n || hit[p]) throw ArgumentError("input is not a permutation of 0..N-1");
        hit[p] = true;
    }
    MeshFrame out;
    out.vertices.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.vertices[perm[i]] = frame.vertices[i];
    out.edges.reserve(frame.edges.size());
    for (const Edge& e : frame.edges) out.edges.emplace_back(perm[e.a], perm[e.b]);
    return out;
}

MeshSequence resample_frames(const MeshSequence& seq, std::size_t t) {
    if (t == 0) throw ArgumentError("resample target t must be >= 1");
    if (seq.frames.empty()) throw ArgumentError("cannot resample an empty sequence");
    MeshSequence out;
    out.id = seq.id;
    out.label = seq.label;
    out.frames.reserve(t);
    const std::size_t src_t = seq.frames.size();
    for (std::size_t i = 0; i < t; ++i) {
        std::size_t src = t == 1 ? 0
                                 : static_cast<std::size_t>(std::llround(
                                       static_cast<double>(i) * static_cast<double>(src_t - 1) /
                                       static_cast<double>(t - 1)));
        out.frames.push_back(seq.frames[src]);
    }
    return out;
}

}  // namespace meshact
