#include "meshact/mesh_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "meshact/errors.hpp"

namespace meshact {
namespace {

constexpr char kMagic[4] = {'M', 'S', 'E', 'Q'};
constexpr std::uint16_t kVersion = 1;

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw Error("cannot open " + path + " for writing");
    }
    void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), n); }
    void u16(std::uint16_t v) { put_le(v); }
    void u32(std::uint32_t v) { put_le(v); }
    void f32(float v) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        put_le(bits);
    }
    bool ok() const { return static_cast<bool>(out_); }

private:
    template <typename T>
    void put_le(T v) {
        unsigned char buf[sizeof(T)];
        for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(buf, sizeof(T));
    }
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw Error("cannot open " + path + " for reading");
    }
    void bytes(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw FormatError("unexpected end of file in " + path_, offset_);
        }
        offset_ += n;
    }
    std::uint16_t u16() { return get_le<std::uint16_t>(); }
    std::uint32_t u32() { return get_le<std::uint32_t>(); }
    float f32() {
        std::uint32_t bits = get_le<std::uint32_t>();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    std::size_t offset() const { return offset_; }

private:
    template <typename T>
    T get_le() {
        unsigned char buf[sizeof(T)];
        bytes(buf, sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(T(buf[i]) << (8 * i));
        return v;
    }
    std::ifstream in_;
    std::string path_;
    std::size_t offset_ = 0;
};

}  // namespace

void save_sequence(const MeshSequence& seq, const std::string& path) {
    if (seq.frames.empty()) throw ArgumentError("refusing to save a sequence with no frames");
    Writer w(path);
    w.bytes(kMagic, 4);
    w.u16(kVersion);
    w.u32(static_cast<std::uint32_t>(seq.frames.size()));
    for (const MeshFrame& f : seq.frames) {
        w.u32(static_cast<std::uint32_t>(f.vertices.size()));
        for (const Vec3f& v : f.vertices) {
            w.f32(v.x);
            w.f32(v.y);
            w.f32(v.z);
        }
        w.u32(static_cast<std::uint32_t>(f.edges.size()));
        for (const Edge& e : f.edges) {
            w.u32(e.a);
            w.u32(e.b);
        }
    }
    if (!w.ok()) throw Error("write failed for " + path);
}

MeshSequence load_sequence(const std::string& path) {
    Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw FormatError("bad magic in " + path + ", expected \"MSEQ\"", 0);
    }
    std::uint16_t version = r.u16();
    if (version != kVersion) {
        throw FormatError("unsupported MSEQ version " + std::to_string(version), 4);
    }
    std::uint32_t t = r.u32();
    if (t == 0) throw FormatError("sequence must have at least one frame", 6);

    MeshSequence seq;
    seq.id = std::filesystem::path(path).stem().string();
    seq.frames.reserve(t);
    for (std::uint32_t fi = 0; fi < t; ++fi) {
        MeshFrame frame;
        std::uint32_t n = r.u32();
        frame.vertices.resize(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            frame.vertices[i].x = r.f32();
            frame.vertices[i].y = r.f32();
            frame.vertices[i].z = r.f32();
        }
        std::uint32_t ec = r.u32();
        frame.edges.reserve(ec);
        for (std::uint32_t i = 0; i < ec; ++i) {
            std::size_t at = r.offset();
            std::uint32_t a = r.u32();
            std::uint32_t b = r.u32();
            if (a == b || a >= n || b >= n) {
                throw FormatError("invalid edge (" + std::to_string(a) + "," +
                                      std::to_string(b) + ") in frame " + std::to_string(fi),
                                  at);
            }
            frame.edges.emplace_back(a, b);
        }
        seq.frames.push_back(std::move(frame));
    }
    return seq;
}

void save_manifest(const std::vector<ManifestEntry>& entries, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    for (const ManifestEntry& e : entries) {
        out << e.id << ',' << e.label << ',' << e.split << '\n';
    }
}

std::vector<ManifestEntry> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path + " for reading");
    std::vector<ManifestEntry> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        ManifestEntry e;
        std::string label;
        if (!std::getline(ss, e.id, ',') || !std::getline(ss, label, ',') ||
            !std::getline(ss, e.split)) {
            throw Error("malformed manifest line " + std::to_string(lineno) + " in " + path);
        }
        e.label = std::stoi(label);
        entries.push_back(std::move(e));
    }
    return entries;
}

}  // namespace meshact
