#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "meshact/rng.hpp"
#include "meshact/tensor.hpp"

namespace meshact {

// Named registry of trainable leaf tensors. Iteration order is the creation
// order, which the optimizer and the checkpoint format both follow.
class ParamStore {
public:
    // Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
    Tensor create(const std::string& name, Shape shape, std::size_t fan_in, Rng& rng);
    Tensor create_zeros(const std::string& name, Shape shape);

    Tensor get(const std::string& name) const;
    bool contains(const std::string& name) const;
    const std::vector<std::string>& names() const { return names_; }
    std::size_t total_parameters() const;

    void zero_grad();

    // Checkpoint: name-indexed flat arrays with shapes, versioned header,
    // exact double round-trip.
    void save(const std::string& path) const;
    // Strict load: every parameter in the store must appear with a matching
    // shape; unknown names in the file are an error.
    void load(const std::string& path);
    // Partial load: copies the name intersection (shape-checked), leaving the
    // rest at their current values. Returns the loaded names.
    std::vector<std::string> load_matching(const std::string& path);

private:
    std::vector<std::string> names_;
    std::map<std::string, Tensor> params_;
};

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

    // One update from the gradients currently accumulated in the store.
    void step(ParamStore& store);
    std::uint64_t steps_taken() const { return t_; }

private:
    AdamConfig cfg_;
    std::uint64_t t_ = 0;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> moments_;
};

inline Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    return add_rowvec(matmul(x, w), b);
}

}  // namespace meshact
