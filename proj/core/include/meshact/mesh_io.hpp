#pragma once

#include <string>
#include <vector>

#include "meshact/mesh.hpp"

namespace meshact {

// MSEQ binary container, little-endian throughout:
//
//   magic   "MSEQ"                      4 bytes
//   version u16                         (currently 1)
//   t       u32                         frame count
//   per frame:
//     N          u32                    vertex count
//     vertices   N * 3 * f32            x,y,z in meters
//     edge_count u32
//     edges      edge_count * 2 * u32   undirected pairs, stored once
//
// Labels and ids live in a sidecar manifest so unlabeled corpora reuse the
// same binary format. load_sequence takes the id from the file stem.
void save_sequence(const MeshSequence& seq, const std::string& path);
MeshSequence load_sequence(const std::string& path);

// Manifest: text file, one "id,label,split" record per line. label is -1
// for unlabeled sequences.
struct ManifestEntry {
    std::string id;
    int label = -1;
    std::string split;  // "train", "test", "val"
};

void save_manifest(const std::vector<ManifestEntry>& entries, const std::string& path);
std::vector<ManifestEntry> load_manifest(const std::string& path);

}  // namespace meshact
