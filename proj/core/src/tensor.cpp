#include "meshact/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "meshact/errors.hpp"

namespace meshact {

using detail::TensorNode;

Tensor wrap_node(std::shared_ptr<TensorNode> n) { return Tensor(std::move(n)); }

namespace {

std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

void require(bool cond, const std::string& msg) {
    if (!cond) throw ShapeError(msg);
}

std::shared_ptr<TensorNode> make_node(Shape shape, const char* op,
                                      std::vector<std::shared_ptr<TensorNode>> parents) {
    auto n = std::make_shared<TensorNode>();
    n->shape = std::move(shape);
    n->value.assign(shape_numel(n->shape), 0.0);
    n->op = op;
    for (auto& p : parents) {
        if (p->requires_grad) n->requires_grad = true;
    }
    n->parents = std::move(parents);
    return n;
}

// Every forward op funnels through here; a NaN or Inf is reported at the op
// that produced it instead of corrupting the graph.
Tensor finish(std::shared_ptr<TensorNode> n) {
    for (double v : n->value) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string("non-finite value produced by op '") + n->op + "'");
        }
    }
    if (!n->requires_grad) n->backprop = nullptr;
    return wrap_node(std::move(n));
}

void check_2d(const Tensor& t, const char* what) {
    require(t.shape().size() == 2, std::string(what) + " must be 2-D, got " + shape_str(t.shape()));
}

}  // namespace

Tensor Tensor::constant(Shape shape, std::vector<double> data) {
    auto n = std::make_shared<TensorNode>();
    if (shape_numel(shape) != data.size()) {
        throw ShapeError("data length " + std::to_string(data.size()) + " does not match shape " +
                         shape_str(shape));
    }
    n->shape = std::move(shape);
    n->value = std::move(data);
    n->op = "constant";
    return wrap_node(std::move(n));
}

Tensor Tensor::scalar(double v) { return constant({1}, {v}); }

Tensor Tensor::zeros(Shape shape) {
    return constant(std::move(shape), std::vector<double>(shape_numel(shape), 0.0));
}

Tensor Tensor::leaf(Shape shape, std::vector<double> data) {
    Tensor t = constant(std::move(shape), std::move(data));
    t.node()->requires_grad = true;
    t.node()->op = "leaf";
    t.node()->ensure_grad();
    return t;
}

std::size_t Tensor::rows() const {
    require(node_->shape.size() == 2, "rows() needs a 2-D tensor");
    return node_->shape[0];
}

std::size_t Tensor::cols() const {
    require(node_->shape.size() == 2, "cols() needs a 2-D tensor");
    return node_->shape[1];
}

double Tensor::item() const {
    require(node_->numel() == 1, "item() needs a single-element tensor, got " +
                                     shape_str(node_->shape));
    return node_->value[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
    return node_->value[r * cols() + c];
}

const std::vector<double>& Tensor::grad() const {
    const_cast<TensorNode*>(node_.get())->ensure_grad();
    return node_->grad;
}

// ---------------------------------------------------------------- elementwise

namespace {

Tensor binary_elementwise(const Tensor& a, const Tensor& b, const char* op,
                          double (*fwd)(double, double),
                          void (*bwd)(double ga, double av, double bv, double& da, double& db)) {
    require(a.shape() == b.shape(), std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                        " vs " + shape_str(b.shape()));
    auto n = make_node(a.shape(), op, {a.node(), b.node()});
    const auto& av = a.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < n->value.size(); ++i) n->value[i] = fwd(av[i], bv[i]);
    n->backprop = [bwd](TensorNode& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        pa.ensure_grad();
        pb.ensure_grad();
        for (std::size_t i = 0; i < self.value.size(); ++i) {
            double da = 0.0, db = 0.0;
            bwd(self.grad[i], pa.value[i], pb.value[i], da, db);
            if (pa.requires_grad) pa.grad[i] += da;
            if (pb.requires_grad) pb.grad[i] += db;
        }
    };
    return finish(n);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_elementwise(
        a, b, "add", [](double x, double y) { return x + y; },
        [](double g, double, double, double& da, double& db) {
            da = g;
            db = g;
        });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_elementwise(
        a, b, "sub", [](double x, double y) { return x - y; },
        [](double g, double, double, double& da, double& db) {
            da = g;
            db = -g;
        });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_elementwise(
        a, b, "mul", [](double x, double y) { return x * y; },
        [](double g, double x, double y, double& da, double& db) {
            da = g * y;
            db = g * x;
        });
}

Tensor scale(const Tensor& a, double s) {
    auto n = make_node(a.shape(), "scale", {a.node()});
    for (std::size_t i = 0; i < n->value.size(); ++i) n->value[i] = a.values()[i] * s;
    n->backprop = [s](TensorNode& self) {
        auto& p = *self.parents[0];
        p.ensure_grad();
        for (std::size_t i = 0; i < self.value.size(); ++i) p.grad[i] += self.grad[i] * s;
    };
    return finish(n);
}

Tensor add_rowvec(const Tensor& m, const Tensor& v) {
    check_2d(m, "add_rowvec matrix");
    require(v.shape().size() == 1 && v.shape()[0] == m.cols(),
            "add_rowvec: vector " + shape_str(v.shape()) + " does not match matrix " +
                shape_str(m.shape()));
    auto n = make_node(m.shape(), "add_rowvec", {m.node(), v.node()});
    const std::size_t r = m.rows(), c = m.cols();
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) n->value[i * c + j] = m.values()[i * c + j] + v.values()[j];
    }
    n->backprop = [r, c](TensorNode& self) {
        auto& pm = *self.parents[0];
        auto& pv = *self.parents[1];
        pm.ensure_grad();
        pv.ensure_grad();
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                double g = self.grad[i * c + j];
                if (pm.requires_grad) pm.grad[i * c + j] += g;
                if (pv.requires_grad) pv.grad[j] += g;
            }
        }
    };
    return finish(n);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    check_2d(a, "matmul lhs");
    check_2d(b, "matmul rhs");
    require(a.cols() == b.rows(), "matmul: inner dimensions differ, " + shape_str(a.shape()) +
                                      " x " + shape_str(b.shape()));
    const std::size_t m = a.rows(), k = a.cols(), p = b.cols();
    auto n = make_node({m, p}, "matmul", {a.node(), b.node()});
    const double* av = a.values().data();
    const double* bv = b.values().data();
    double* ov = n->value.data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t l = 0; l < k; ++l) {
            double x = av[i * k + l];
            if (x == 0.0) continue;
            const double* brow = bv + l * p;
            double* orow = ov + i * p;
            for (std::size_t j = 0; j < p; ++j) orow[j] += x * brow[j];
        }
    }
    n->backprop = [m, k, p](TensorNode& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        pa.ensure_grad();
        pb.ensure_grad();
        const double* g = self.grad.data();
        if (pa.requires_grad) {
            // dA = G * B^T
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t l = 0; l < k; ++l) {
                    double acc = 0.0;
                    const double* brow = pb.value.data() + l * p;
                    const double* grow = g + i * p;
                    for (std::size_t j = 0; j < p; ++j) acc += grow[j] * brow[j];
                    pa.grad[i * k + l] += acc;
                }
            }
        }
        if (pb.requires_grad) {
            // dB = A^T * G
            for (std::size_t l = 0; l < k; ++l) {
                for (std::size_t i = 0; i < m; ++i) {
                    double x = pa.value[i * k + l];
                    if (x == 0.0) continue;
                    const double* grow = g + i * p;
                    double* brow = pb.grad.data() + l * p;
                    for (std::size_t j = 0; j < p; ++j) brow[j] += x * grow[j];
                }
            }
        }
    };
    return finish(n);
}

Tensor relu(const Tensor& a) {
    auto n = make_node(a.shape(), "relu", {a.node()});
    for (std::size_t i = 0; i < n->value.size(); ++i) n->value[i] = std::max(0.0, a.values()[i]);
    n->backprop = [](TensorNode& self) {
        auto& p = *self.parents[0];
        p.ensure_grad();
        for (std::size_t i = 0; i < self.value.size(); ++i) {
            if (p.value[i] > 0.0) p.grad[i] += self.grad[i];
        }
    };
    return finish(n);
}

Tensor reshape(const Tensor& a, Shape shape) {
    require(shape_numel(shape) == a.numel(), "reshape: element count mismatch " +
                                                 shape_str(a.shape()) + " -> " + shape_str(shape));
    auto n = make_node(std::move(shape), "reshape", {a.node()});
    n->value = a.values();
    n->backprop = [](TensorNode& self) {
        auto& p = *self.parents[0];
        p.ensure_grad();
        for (std::size_t i = 0; i < self.value.size(); ++i) p.grad[i] += self.grad[i];
    };
    return finish(n);
}

Tensor transpose(const Tensor& a) {
    check_2d(a, "transpose input");
    const std::size_t r = a.rows(), c = a.cols();
    auto n = make_node({c, r}, "transpose", {a.node()});
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) n->value[j * r + i] = a.at(i, j);
    }
    n->backprop = [r, c](TensorNode& self) {
        auto& p = *self.parents[0];
        p.ensure_grad();
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) p.grad[i * c + j] += self.grad[j * r + i];
        }
    };
    return finish(n);
}

// ----------------------------------------------------------------- structure

Tensor concat_cols(const std::vector<Tensor>& parts) {
    require(!parts.empty(), "concat_cols: no inputs");
    const std::size_t r = parts[0].rows();
    std::size_t total = 0;
    std::vector<std::shared_ptr<TensorNode>> parents;
    for (const Tensor& t : parts) {
        check_2d(t, "concat_cols input");
        require(t.rows() == r, "concat_cols: row count mismatch");
        total += t.cols();
        parents.push_back(t.node());
    }
    auto n = make_node({r, total}, "concat_cols", std::move(parents));
    std::size_t off = 0;
    for (const Tensor& t : parts) {
        const std::size_t c = t.cols();
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) n->value[i * total + off + j] = t.at(i, j);
        }
        off += c;
    }
    n->backprop = [r, total](TensorNode& self) {
        std::size_t off = 0;
        for (auto& parent : self.parents) {
            auto& p = *parent;
            const std::size_t c = p.shape[1];
            if (p.requires_grad) {
                p.ensure_grad();
                for (std::size_t i = 0; i < r; ++i) {
                    for (std::size_t j = 0; j < c; ++j) {
                        p.grad[i * c + j] += self.grad[i * total + off + j];
                    }
                }
            }
            off += c;
        }
    };
    return finish(n);
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    require(!parts.empty(), "concat_rows: no inputs");
    const std::size_t c = parts[0].cols();
    std::size_t total = 0;
    std::vector<std::shared_ptr<TensorNode>> parents;
    for (const Tensor& t : parts) {
        check_2d(t, "concat_rows input");
        require(t.cols() == c, "concat_rows: column count mismatch");
        total += t.rows();
        parents.push_back(t.node());
    }
    auto n = make_node({total, c}, "concat_rows", std::move(parents));
    std::size_t off = 0;
    for (const Tensor& t : parts) {
        std::copy(t.values().begin(), t.values().end(), n->value.begin() + off);
        off += t.numel();
    }
    n->backprop = [](TensorNode& self) {
        std::size_t off = 0;
        for (auto& parent : self.parents) {
            auto& p = *parent;
            if (p.requires_grad) {
                p.ensure_grad();
                for (std::size_t i = 0; i < p.value.size(); ++i) p.grad[i] += self.grad[off + i];
            }
            off += p.value.size();
        }
    };
    return finish(n);
}

Tensor gather_rows(const Tensor& a, const std::vector<std::size_t>& indices) {
    check_2d(a, "gather_rows input");
    const std::size_t c = a.cols();
    for (std::size_t idx : indices) {
        require(idx < a.rows(), "gather_rows: row index " + std::to_string(idx) +
                                    " out of range for " + shape_str(a.shape()));
    }
    auto n = make_node({indices.size(), c}, "gather_rows", {a.node()});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        for (std::size_t j = 0; j < c; ++j) n->value[i * c + j] = a.at(indices[i], j);
    }
    auto idx = indices;
    n->backprop = [idx, c](TensorNode& self) {
        auto& p = *self.parents[0];
        p.ensure_grad();
        for (std::size_t i = 0; i < idx.size(); ++i) {
            for (std::size_t j = 0; j < c; ++j) p.grad[idx[i] * c + j] += self.grad[i * c + j];
        }
    };
    return finish(n);
}

// ---------------------------------------------------------------- reductions

Tensor sum_all(const Tensor& a) {
    auto n = make_node({1}, "sum_all", {a.node()});
    double acc = 0.0;
    for (double v : a.values()) acc += v;
    n->value[0] = acc;
    n->backprop = [](TensorNode& self) {
        auto& p = *self.parents[0];
        p.ensure_grad();
        for (std::size_t i = 0; i < p.value.size(); ++i) p.grad[i] += self.grad[0];
    };
    return finish(n);
}

Tensor sum_rows(const Tensor& a) {
    check_2d(a, "sum_rows input");
    const std::size_t r = a.rows(), c = a.cols();
    auto n = make_node({c}, "sum_rows", {a.node()});
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) n->value[j] += a.at(i, j);
    }
    n->backprop = [r, c](TensorNode& self) {
        auto& p = *self.parents[0];
        p.ensure_grad();
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) p.grad[i * c + j] += self.grad[j];
        }
    };
    return finish(n);
}

Tensor segment_sum_rows(const Tensor& a, std::size_t seg) {
    check_2d(a, "segment_sum_rows input");
    const std::size_t r = a.rows(), c = a.cols();
    require(seg >= 1 && r % seg == 0, "segment_sum_rows: row count " + std::to_string(r) +
                                          " is not a multiple of segment " + std::to_string(seg));
    const std::size_t out_r = r / seg;
    auto n = make_node({out_r, c}, "segment_sum_rows", {a.node()});
    for (std::size_t i = 0; i < r; ++i) {
        const std::size_t o = i / seg;
        for (std::size_t j = 0; j < c; ++j) n->value[o * c + j] += a.at(i, j);
    }
    n->backprop = [r, c, seg](TensorNode& self) {
        auto& p = *self.parents[0];
        p.ensure_grad();
        for (std::size_t i = 0; i < r; ++i) {
            const std::size_t o = i / seg;
            for (std::size_t j = 0; j < c; ++j) p.grad[i * c + j] += self.grad[o * c + j];
        }
    };
    return finish(n);
}

Tensor max_rows(const Tensor& a) {
    check_2d(a, "max_rows input");
    const std::size_t r = a.rows(), c = a.cols();
    require(r >= 1, "max_rows: empty input");
    auto n = make_node({c}, "max_rows", {a.node()});
    std::vector<std::size_t> argmax(c, 0);
    for (std::size_t j = 0; j < c; ++j) {
        double best = a.at(0, j);
        for (std::size_t i = 1; i < r; ++i) {
            if (a.at(i, j) > best) {  // strict: ties keep the lowest row
                best = a.at(i, j);
                argmax[j] = i;
            }
        }
        n->value[j] = best;
    }
    n->backprop = [argmax, c](TensorNode& self) {
        auto& p = *self.parents[0];
        p.ensure_grad();
        for (std::size_t j = 0; j < c; ++j) p.grad[argmax[j] * c + j] += self.grad[j];
    };
    return finish(n);
}

Tensor mean_rows(const Tensor& a) {
    check_2d(a, "mean_rows input");
    const std::size_t r = a.rows(), c = a.cols();
    require(r >= 1, "mean_rows: empty input");
    auto n = make_node({c}, "mean_rows", {a.node()});
    std::vector<double> column(r);
    for (std::size_t j = 0; j < c; ++j) {
        for (std::size_t i = 0; i < r; ++i) column[i] = a.at(i, j);
        std::sort(column.begin(), column.end());
        double acc = 0.0;
        for (double v : column) acc += v;
        n->value[j] = acc / static_cast<double>(r);
    }
    // d mean / d x_i is exactly 1/r regardless of the summation order.
    n->backprop = [r, c](TensorNode& self) {
        auto& p = *self.parents[0];
        p.ensure_grad();
        const double inv = 1.0 / static_cast<double>(r);
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) p.grad[i * c + j] += self.grad[j] * inv;
        }
    };
    return finish(n);
}

// ------------------------------------------------------------------ softmax

Tensor masked_softmax(const Tensor& scores, const std::vector<std::uint8_t>& mask) {
    check_2d(scores, "masked_softmax input");
    const std::size_t r = scores.rows(), c = scores.cols();
    require(mask.size() == r * c, "masked_softmax: mask size " + std::to_string(mask.size()) +
                                      " does not match scores " + shape_str(scores.shape()));
    auto n = make_node(scores.shape(), "masked_softmax", {scores.node()});
    for (std::size_t i = 0; i < r; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < c; ++j) {
            if (mask[i * c + j]) mx = std::max(mx, scores.at(i, j));
        }
        if (!std::isfinite(mx)) {
            throw ArgumentError("masked_softmax: row " + std::to_string(i) +
                                " has no unmasked column");
        }
        double denom = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            if (mask[i * c + j]) denom += std::exp(scores.at(i, j) - mx);
        }
        for (std::size_t j = 0; j < c; ++j) {
            n->value[i * c + j] = mask[i * c + j] ? std::exp(scores.at(i, j) - mx) / denom : 0.0;
        }
    }
    auto saved_mask = mask;
    n->backprop = [saved_mask, r, c](TensorNode& self) {
        auto& p = *self.parents[0];
        p.ensure_grad();
        for (std::size_t i = 0; i < r; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                if (saved_mask[i * c + j]) dot += self.grad[i * c + j] * self.value[i * c + j];
            }
            for (std::size_t j = 0; j < c; ++j) {
                if (saved_mask[i * c + j]) {
                    p.grad[i * c + j] += self.value[i * c + j] * (self.grad[i * c + j] - dot);
                }
            }
        }
    };
    return finish(n);
}

Tensor softmax_rows(const Tensor& scores) {
    return masked_softmax(scores, std::vector<std::uint8_t>(scores.numel(), 1));
}

Tensor normalize_columns(const Tensor& a, double eps) {
    check_2d(a, "normalize_columns input");
    const std::size_t r = a.rows(), c = a.cols();
    require(r >= 1, "normalize_columns: empty input");
    auto n = make_node(a.shape(), "normalize_columns", {a.node()});
    std::vector<double> inv_std(c);
    for (std::size_t j = 0; j < c; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < r; ++i) mean += a.at(i, j);
        mean /= static_cast<double>(r);
        double var = 0.0;
        for (std::size_t i = 0; i < r; ++i) {
            double d = a.at(i, j) - mean;
            var += d * d;
        }
        var /= static_cast<double>(r);
        inv_std[j] = 1.0 / std::sqrt(var + eps);
        for (std::size_t i = 0; i < r; ++i) n->value[i * c + j] = (a.at(i, j) - mean) * inv_std[j];
    }
    n->backprop = [inv_std, r, c](TensorNode& self) {
        auto& p = *self.parents[0];
        p.ensure_grad();
        const double invr = 1.0 / static_cast<double>(r);
        for (std::size_t j = 0; j < c; ++j) {
            double gmean = 0.0, gydot = 0.0;
            for (std::size_t i = 0; i < r; ++i) {
                gmean += self.grad[i * c + j];
                gydot += self.grad[i * c + j] * self.value[i * c + j];
            }
            gmean *= invr;
            gydot *= invr;
            for (std::size_t i = 0; i < r; ++i) {
                p.grad[i * c + j] += inv_std[j] * (self.grad[i * c + j] - gmean -
                                                   self.value[i * c + j] * gydot);
            }
        }
    };
    return finish(n);
}

Tensor cross_entropy_with_logits(const Tensor& logits, std::size_t target) {
    require(logits.shape().size() == 1, "cross_entropy_with_logits: logits must be 1-D");
    const std::size_t n_classes = logits.numel();
    require(target < n_classes, "cross_entropy_with_logits: target " + std::to_string(target) +
                                    " out of range for " + std::to_string(n_classes) + " classes");
    auto n = make_node({1}, "cross_entropy", {logits.node()});
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : logits.values()) mx = std::max(mx, v);
    double denom = 0.0;
    for (double v : logits.values()) denom += std::exp(v - mx);
    n->value[0] = std::log(denom) + mx - logits.values()[target];
    n->backprop = [target, mx, denom](TensorNode& self) {
        auto& p = *self.parents[0];
        p.ensure_grad();
        for (std::size_t j = 0; j < p.value.size(); ++j) {
            double soft = std::exp(p.value[j] - mx) / denom;
            p.grad[j] += self.grad[0] * (soft - (j == target ? 1.0 : 0.0));
        }
    };
    return finish(n);
}

Tensor chamfer(const Tensor& pred, const Tensor& target) {
    check_2d(pred, "chamfer pred");
    check_2d(target, "chamfer target");
    require(pred.cols() == 3 && target.cols() == 3, "chamfer: point sets must be [n,3]");
    const std::size_t n_p = pred.rows(), n_t = target.rows();
    require(n_p >= 1 && n_t >= 1, "chamfer: point sets must be nonempty");

    auto dist_pt = [&](std::size_t i, std::size_t j) {
        double dx = pred.at(i, 0) - target.at(j, 0);
        double dy = pred.at(i, 1) - target.at(j, 1);
        double dz = pred.at(i, 2) - target.at(j, 2);
        return std::sqrt(dx * dx + dy * dy + dz * dz);
    };

    std::vector<std::size_t> nn_p(n_p), nn_t(n_t);
    std::vector<double> d_p(n_p), d_t(n_t);
    for (std::size_t i = 0; i < n_p; ++i) {
        double best = dist_pt(i, 0);
        std::size_t arg = 0;
        for (std::size_t j = 1; j < n_t; ++j) {
            double d = dist_pt(i, j);
            if (d < best) {
                best = d;
                arg = j;
            }
        }
        nn_p[i] = arg;
        d_p[i] = best;
    }
    for (std::size_t j = 0; j < n_t; ++j) {
        double best = dist_pt(0, j);
        std::size_t arg = 0;
        for (std::size_t i = 1; i < n_p; ++i) {
            double d = dist_pt(i, j);
            if (d < best) {
                best = d;
                arg = i;
            }
        }
        nn_t[j] = arg;
        d_t[j] = best;
    }

    auto n = make_node({1}, "chamfer", {pred.node(), target.node()});
    double acc_p = 0.0, acc_t = 0.0;
    for (double d : d_p) acc_p += d;
    for (double d : d_t) acc_t += d;
    n->value[0] = acc_p / static_cast<double>(n_p) + acc_t / static_cast<double>(n_t);

    n->backprop = [nn_p, nn_t, d_p, d_t, n_p, n_t](TensorNode& self) {
        auto& p = *self.parents[0];
        auto& t = *self.parents[1];
        p.ensure_grad();
        t.ensure_grad();
        const double g = self.grad[0];
        auto push = [&](std::size_t pi, std::size_t ti, double dist, double w) {
            if (dist <= 0.0) return;  // coincident points: valid subgradient 0
            for (std::size_t a = 0; a < 3; ++a) {
                double diff = (p.value[pi * 3 + a] - t.value[ti * 3 + a]) / dist;
                if (p.requires_grad) p.grad[pi * 3 + a] += g * w * diff;
                if (t.requires_grad) t.grad[ti * 3 + a] -= g * w * diff;
            }
        };
        for (std::size_t i = 0; i < n_p; ++i) push(i, nn_p[i], d_p[i], 1.0 / double(n_p));
        for (std::size_t j = 0; j < n_t; ++j) push(nn_t[j], j, d_t[j], 1.0 / double(n_t));
    };
    return finish(n);
}

// ------------------------------------------------------------------ backward

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1) {
        throw ArgumentError("backward: loss must be a defined scalar tensor");
    }
    // Iterative post-order DFS; reversing it yields a topological order with
    // every consumer processed before its producers.
    std::vector<TensorNode*> order;
    std::unordered_set<TensorNode*> seen;
    struct Item {
        TensorNode* node;
        std::size_t next_parent;
    };
    std::vector<Item> stack{{loss.node().get(), 0}};
    seen.insert(loss.node().get());
    while (!stack.empty()) {
        Item& top = stack.back();
        if (top.next_parent < top.node->parents.size()) {
            TensorNode* parent = top.node->parents[top.next_parent++].get();
            if (parent->requires_grad && seen.insert(parent).second) {
                stack.push_back({parent, 0});
            }
        } else {
            order.push_back(top.node);
            stack.pop_back();
        }
    }
    loss.node()->ensure_grad();
    loss.node()->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorNode* node = *it;
        node->ensure_grad();
        if (node->backprop) node->backprop(*node);
    }
}

double gradient_check(const std::function<Tensor(const Tensor&)>& f, Tensor& x, double eps) {
    if (eps <= 0.0) throw ArgumentError("gradient_check: eps must be positive");
    x.zero_grad();
    Tensor out = f(x);
    backward(out);
    std::vector<double> analytic = x.grad();

    double max_rel = 0.0;
    auto& xs = x.mutable_values();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double orig = xs[i];
        xs[i] = orig + eps;
        double fp = f(x).item();
        xs[i] = orig - eps;
        double fm = f(x).item();
        xs[i] = orig;
        double numeric = (fp - fm) / (2.0 * eps);
        double denom = std::max({std::fabs(analytic[i]), std::fabs(numeric), 1e-8});
        max_rel = std::max(max_rel, std::fabs(analytic[i] - numeric) / denom);
    }
    return max_rel;
}

}  // namespace meshact
