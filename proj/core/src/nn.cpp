#include "meshact/nn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "meshact/errors.hpp"

namespace meshact {
namespace {

constexpr char kMagic[4] = {'M', 'A', 'C', 'K'};
constexpr std::uint16_t kVersion = 1;

std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

void put_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), 4);
}

void put_u16(std::ofstream& out, std::uint16_t v) {
    unsigned char buf[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
    out.write(reinterpret_cast<const char*>(buf), 2);
}

void put_f64(std::ofstream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), 8);
}

struct CheckpointEntry {
    Shape shape;
    std::vector<double> data;
};

std::map<std::string, CheckpointEntry> read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint " + path);
    std::size_t offset = 0;
    auto need = [&](void* p, std::size_t n) {
        in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n) {
            throw FormatError("unexpected end of checkpoint " + path, offset);
        }
        offset += n;
    };
    auto get_u32 = [&]() {
        unsigned char buf[4];
        need(buf, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(buf[i]) << (8 * i);
        return v;
    };
    auto get_u16 = [&]() {
        unsigned char buf[2];
        need(buf, 2);
        return static_cast<std::uint16_t>(buf[0] | (buf[1] << 8));
    };
    auto get_f64 = [&]() {
        unsigned char buf[8];
        need(buf, 8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= std::uint64_t(buf[i]) << (8 * i);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    };

    char magic[4];
    need(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw FormatError("bad magic in checkpoint " + path + ", expected \"MACK\"", 0);
    }
    std::uint16_t version = get_u16();
    if (version != kVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);
    }
    std::uint32_t count = get_u32();
    std::map<std::string, CheckpointEntry> entries;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint32_t name_len = get_u32();
        std::string name(name_len, '\0');
        need(name.data(), name_len);
        CheckpointEntry entry;
        std::uint32_t ndim = get_u32();
        entry.shape.resize(ndim);
        for (std::uint32_t d = 0; d < ndim; ++d) entry.shape[d] = get_u32();
        entry.data.resize(shape_numel(entry.shape));
        for (double& v : entry.data) v = get_f64();
        entries.emplace(std::move(name), std::move(entry));
    }
    return entries;
}

std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

}  // namespace

Tensor ParamStore::create(const std::string& name, Shape shape, std::size_t fan_in, Rng& rng) {
    if (params_.count(name)) throw ArgumentError("duplicate parameter name " + name);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::vector<double> data(shape_numel(shape));
    for (double& v : data) v = rng.uniform(-bound, bound);
    Tensor t = Tensor::leaf(std::move(shape), std::move(data));
    names_.push_back(name);
    params_.emplace(name, t);
    return t;
}

Tensor ParamStore::create_zeros(const std::string& name, Shape shape) {
    if (params_.count(name)) throw ArgumentError("duplicate parameter name " + name);
    Tensor t = Tensor::leaf(std::move(shape), std::vector<double>(shape_numel(shape), 0.0));
    names_.push_back(name);
    params_.emplace(name, t);
    return t;
}

Tensor ParamStore::get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ArgumentError("unknown parameter " + name);
    return it->second;
}

bool ParamStore::contains(const std::string& name) const { return params_.count(name) != 0; }

std::size_t ParamStore::total_parameters() const {
    std::size_t n = 0;
    for (const auto& [name, t] : params_) n += t.numel();
    return n;
}

void ParamStore::zero_grad() {
    for (auto& [name, t] : params_) t.zero_grad();
}

void ParamStore::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    out.write(kMagic, 4);
    put_u16(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(names_.size()));
    for (const std::string& name : names_) {
        const Tensor& t = params_.at(name);
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_u32(out, static_cast<std::uint32_t>(t.shape().size()));
        for (std::size_t d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
        for (double v : t.values()) put_f64(out, v);
    }
    if (!out) throw Error("write failed for " + path);
}

void ParamStore::load(const std::string& path) {
    auto entries = read_checkpoint(path);
    for (const auto& [name, entry] : entries) {
        if (!params_.count(name)) {
            throw Error("checkpoint " + path + " has unknown parameter " + name);
        }
    }
    for (const std::string& name : names_) {
        auto it = entries.find(name);
        if (it == entries.end()) throw Error("checkpoint " + path + " is missing parameter " + name);
        Tensor t = params_.at(name);
        if (it->second.shape != t.shape()) {
            throw Error("checkpoint shape mismatch for " + name + ": file " +
                        shape_str(it->second.shape) + " vs model " + shape_str(t.shape()));
        }
        t.mutable_values() = it->second.data;
    }
}

std::vector<std::string> ParamStore::load_matching(const std::string& path) {
    auto entries = read_checkpoint(path);
    std::vector<std::string> loaded;
    for (const std::string& name : names_) {
        auto it = entries.find(name);
        if (it == entries.end()) continue;
        Tensor t = params_.at(name);
        if (it->second.shape != t.shape()) {
            throw Error("checkpoint shape mismatch for " + name + ": file " +
                        shape_str(it->second.shape) + " vs model " + shape_str(t.shape()));
        }
        t.mutable_values() = it->second.data;
        loaded.push_back(name);
    }
    return loaded;
}

void Adam::step(ParamStore& store) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (const std::string& name : store.names()) {
        Tensor p = store.get(name);
        auto& [m, v] = moments_[name];
        if (m.size() != p.numel()) {
            m.assign(p.numel(), 0.0);
            v.assign(p.numel(), 0.0);
        }
        const auto& g = p.grad();
        auto& x = p.mutable_values();
        for (std::size_t i = 0; i < x.size(); ++i) {
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            double mhat = m[i] / bc1;
            double vhat = v[i] / bc2;
            x[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

}  // namespace meshact
