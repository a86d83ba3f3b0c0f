#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace meshact {

using Shape = std::vector<std::size_t>;

namespace detail {

struct TensorNode {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // allocated lazily, accumulates across backward calls
    bool requires_grad = false;
    const char* op = "leaf";
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backprop;

    std::size_t numel() const { return value.size(); }
    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
};

}  // namespace detail

// Shape-tagged double tensor participating in a reverse-mode graph. Value
// semantics on the handle; the node is shared. 1-D and 2-D shapes are all
// the model needs.
class Tensor {
public:
    Tensor() = default;

    static Tensor constant(Shape shape, std::vector<double> data);
    static Tensor scalar(double v);
    static Tensor zeros(Shape shape);
    // Leaf with requires_grad set; the grad buffer persists and accumulates.
    static Tensor leaf(Shape shape, std::vector<double> data);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t numel() const { return node_->numel(); }
    std::size_t rows() const;
    std::size_t cols() const;

    const std::vector<double>& values() const { return node_->value; }
    std::vector<double>& mutable_values() { return node_->value; }
    double item() const;
    double at(std::size_t r, std::size_t c) const;

    bool requires_grad() const { return node_->requires_grad; }
    const std::vector<double>& grad() const;
    void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

    std::shared_ptr<detail::TensorNode> node() const { return node_; }

private:
    explicit Tensor(std::shared_ptr<detail::TensorNode> n) : node_(std::move(n)) {}
    std::shared_ptr<detail::TensorNode> node_;

    friend Tensor wrap_node(std::shared_ptr<detail::TensorNode>);
};

// ---- elementwise and linear algebra ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_rowvec(const Tensor& m, const Tensor& v);  // [r,c] + [c]
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);
Tensor transpose(const Tensor& a);

// ---- structure ----
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor gather_rows(const Tensor& a, const std::vector<std::size_t>& indices);

// ---- reductions ----
Tensor sum_all(const Tensor& a);
Tensor sum_rows(const Tensor& a);   // [r,c] -> [c], rows accumulated in order
// [r,c] -> [r/seg,c]: sums every consecutive block of `seg` rows.
Tensor segment_sum_rows(const Tensor& a, std::size_t seg);
Tensor max_rows(const Tensor& a);   // [r,c] -> [c], ties keep the lowest row
// [r,c] -> [c]; every column is summed in sorted value order, so the result
// is bit-identical under any row permutation of the input.
Tensor mean_rows(const Tensor& a);

// ---- nonlinear blocks ----
// Row softmax with an optional visibility mask (1 = visible). Masked
// entries are exactly 0, each row sums to 1, max-subtraction for stability.
// A fully masked row is an error.
Tensor masked_softmax(const Tensor& scores, const std::vector<std::uint8_t>& mask);
Tensor softmax_rows(const Tensor& scores);
// Per-column standardization over the row axis: (x - mean) / sqrt(var + eps).
Tensor normalize_columns(const Tensor& a, double eps);
// Scalar cross-entropy of a logit vector against a class index.
Tensor cross_entropy_with_logits(const Tensor& logits, std::size_t target);
// Symmetric chamfer distance between [n,3] and [m,3] point sets, average
// closest euclidean distance in both directions. Differentiable w.r.t. both;
// nearest-neighbor ties resolve to the lowest index.
Tensor chamfer(const Tensor& pred, const Tensor& target);

// Reverse-mode sweep from a scalar loss. Every reachable node is visited
// exactly once in topological order; gradients accumulate (+=).
void backward(const Tensor& loss);

// Central-difference verification of d f / d x. Returns the maximum relative
// error over coordinates, denominator max(|analytic|,|numeric|,1e-8).
double gradient_check(const std::function<Tensor(const Tensor&)>& f, Tensor& x, double eps);

}  // namespace meshact
