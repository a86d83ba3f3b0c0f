#include "meshact/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <queue>

#include "meshact/errors.hpp"
#include "meshact/exact_sum.hpp"

namespace meshact {

const char* metric_name(Metric m) {
    return m == Metric::geodesic ? "geodesic" : "euclidean";
}

double euclidean_distance(const Vec3f& a, const Vec3f& b) {
    // float - float is exact in double, so dx/dy/dz are identical no matter
    // how the vertices were stored or relabeled.
    double dx = static_cast<double>(a.x) - static_cast<double>(b.x);
    double dy = static_cast<double>(a.y) - static_cast<double>(b.y);
    double dz = static_cast<double>(a.z) - static_cast<double>(b.z);
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

namespace {

struct QueueEntry {
    ExactSum dist;
    std::uint32_t vertex;
};

struct QueueCompare {
    // std::priority_queue is a max-heap; invert to pop the smallest distance.
    bool operator()(const QueueEntry& a, const QueueEntry& b) const {
        int c = a.dist.compare(b.dist);
        if (c != 0) return c > 0;
        return a.vertex > b.vertex;
    }
};

// Dijkstra over the edge graph with exact-sum path lengths. Exact arithmetic
// makes the final distances a pure function of the edge-weight multisets, so
// d(u,v) == d(v,u) bitwise and relabeling vertices cannot flip low-order bits.
std::vector<ExactSum> dijkstra_exact(const MeshFrame& frame, std::uint32_t source,
                                     std::vector<bool>& reached) {
    const std::size_t n = frame.vertices.size();
    if (source >= n) {
        throw ArgumentError("source index " + std::to_string(source) +
                            " out of range for N=" + std::to_string(n));
    }
    auto adj = frame.adjacency();
    std::vector<ExactSum> dist(n);
    std::vector<bool> done(n, false);
    reached.assign(n, false);
    reached[source] = true;

    std::priority_queue<QueueEntry, std::vector<QueueEntry>, QueueCompare> pq;
    pq.push({ExactSum(), source});
    while (!pq.empty()) {
        QueueEntry top = pq.top();
        pq.pop();
        std::uint32_t u = top.vertex;
        if (done[u]) continue;
        done[u] = true;
        dist[u] = top.dist;
        for (std::uint32_t v : adj[u]) {
            if (done[v]) continue;
            ExactSum cand = top.dist;
            cand.add(euclidean_distance(frame.vertices[u], frame.vertices[v]));
            if (!reached[v] || cand.compare(dist[v]) < 0) {
                reached[v] = true;
                dist[v] = cand;
                pq.push({std::move(cand), v});
            }
        }
    }
    return dist;
}

struct Candidate {
    double dist;
    std::uint32_t index;
};

Neighborhood pick_k_nearest(const MeshFrame& frame, std::uint32_t center, std::size_t k,
                            Metric metric, std::vector<Candidate>& candidates) {
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.dist != b.dist) return a.dist < b.dist;
        return a.index < b.index;
    });
    Neighborhood nb;
    nb.center = center;
    nb.metric = metric;
    nb.neighbor_indices.reserve(k);
    nb.displacements.reserve(k);
    nb.metric_distances.reserve(k);
    const auto c = to_dvec(frame.vertices[center]);
    for (std::size_t i = 0; i < k; ++i) {
        const Candidate& cd = candidates[i];
        const auto p = to_dvec(frame.vertices[cd.index]);
        nb.neighbor_indices.push_back(cd.index);
        nb.displacements.push_back({p[0] - c[0], p[1] - c[1], p[2] - c[2]});
        nb.metric_distances.push_back(cd.dist);
    }
    return nb;
}

Neighborhood knn_geodesic_from(const MeshFrame& frame, std::uint32_t center, std::size_t k,
                               const std::vector<double>& dist) {
    std::vector<Candidate> candidates;
    candidates.reserve(dist.size());
    for (std::uint32_t v = 0; v < dist.size(); ++v) {
        if (v == center || std::isinf(dist[v])) continue;
        candidates.push_back({dist[v], v});
    }
    if (k > candidates.size()) {
        throw ArgumentError("k=" + std::to_string(k) + " exceeds the " +
                            std::to_string(candidates.size()) +
                            " reachable vertices of center " + std::to_string(center));
    }
    return pick_k_nearest(frame, center, k, Metric::geodesic, candidates);
}

}  // namespace

std::vector<double> geodesic_distances(const MeshFrame& frame, std::uint32_t source) {
    std::vector<bool> reached;
    auto exact = dijkstra_exact(frame, source, reached);
    std::vector<double> out(frame.vertices.size());
    for (std::size_t v = 0; v < out.size(); ++v) {
        out[v] = reached[v] ? exact[v].rounded() : std::numeric_limits<double>::infinity();
    }
    return out;
}

Neighborhood knn(const MeshFrame& frame, std::uint32_t center, std::size_t k, Metric metric) {
    const std::size_t n = frame.vertices.size();
    if (center >= n) {
        throw ArgumentError("center index " + std::to_string(center) +
                            " out of range for N=" + std::to_string(n));
    }
    if (metric == Metric::geodesic) {
        return knn_geodesic_from(frame, center, k, geodesic_distances(frame, center));
    }
    if (k > n - 1) {
        throw ArgumentError("k=" + std::to_string(k) + " exceeds the " + std::to_string(n - 1) +
                            " other vertices of center " + std::to_string(center));
    }
    std::vector<Candidate> candidates;
    candidates.reserve(n - 1);
    for (std::uint32_t v = 0; v < n; ++v) {
        if (v == center) continue;
        candidates.push_back({euclidean_distance(frame.vertices[center], frame.vertices[v]), v});
    }
    return pick_k_nearest(frame, center, k, Metric::euclidean, candidates);
}

std::vector<std::uint32_t> farthest_point_sampling(const MeshFrame& frame, std::size_t c) {
    const std::size_t n = frame.vertices.size();
    if (c > n) {
        throw ArgumentError("cannot sample c=" + std::to_string(c) + " centers from N=" +
                            std::to_string(n) + " vertices");
    }
    std::vector<std::uint32_t> centers;
    if (c == 0) return centers;

    std::uint32_t first = 0;
    for (std::uint32_t v = 1; v < n; ++v) {
        const Vec3f& a = frame.vertices[v];
        const Vec3f& b = frame.vertices[first];
        auto key = [](const Vec3f& p) { return std::array<float, 3>{p.x, p.y, p.z}; };
        if (key(a) < key(b)) first = v;
    }
    centers.push_back(first);

    // Squared distances avoid the sqrt rounding; the argmax is the same.
    std::vector<double> min_sq(n, std::numeric_limits<double>::infinity());
    auto update = [&](std::uint32_t chosen) {
        const auto p = to_dvec(frame.vertices[chosen]);
        for (std::uint32_t v = 0; v < n; ++v) {
            const auto q = to_dvec(frame.vertices[v]);
            double dx = q[0] - p[0], dy = q[1] - p[1], dz = q[2] - p[2];
            double sq = dx * dx + dy * dy + dz * dz;
            if (sq < min_sq[v]) min_sq[v] = sq;
        }
    };
    update(first);
    while (centers.size() < c) {
        std::uint32_t best = 0;
        double best_sq = -1.0;
        for (std::uint32_t v = 0; v < n; ++v) {
            if (min_sq[v] > best_sq) {
                best_sq = min_sq[v];
                best = v;
            }
        }
        centers.push_back(best);
        update(best);
    }
    return centers;
}

PatchSet build_frame_patches(const MeshFrame& frame, std::size_t c, std::size_t k,
                             std::size_t frame_index) {
    PatchSet ps;
    ps.frame_index = frame_index;
    ps.centers = farthest_point_sampling(frame, c);
    ps.geo.reserve(c);
    ps.euc.reserve(c);
    for (std::uint32_t center : ps.centers) {
        ps.geo.push_back(knn_geodesic_from(frame, center, k, geodesic_distances(frame, center)));
        ps.euc.push_back(knn(frame, center, k, Metric::euclidean));
    }
    return ps;
}

void dump_patch_table(const PatchSet& patches, std::ostream& out) {
    out << "center\tmetric\tneighbor\tdistance\n";
    char buf[64];
    auto row = [&](const Neighborhood& nb) {
        for (std::size_t i = 0; i < nb.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", nb.metric_distances[i]);
            out << nb.center << '\t' << metric_name(nb.metric) << '\t' << nb.neighbor_indices[i]
                << '\t' << buf << '\n';
        }
    };
    for (const Neighborhood& nb : patches.geo) row(nb);
    for (const Neighborhood& nb : patches.euc) row(nb);
}

}  // namespace meshact
