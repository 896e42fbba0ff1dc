#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "floodlab/rng.hpp"

namespace floodlab {

/// Tracks live tensor-data bytes on the current thread. Used by the inference
/// benchmark to measure the transient high-water mark of one forward pass.
struct MemoryTracker {
    static std::size_t current_bytes();
    static std::size_t peak_bytes();
    static void reset_peak();  // peak := current
};

/// Dense row-major 64-bit tensor. Copies are shallow (storage is shared);
/// use clone() for a deep copy. All shapes are explicit, no implicit
/// broadcasting beyond what the ops below define.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> values);
    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    bool defined() const { return static_cast<bool>(data_); }
    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_[i]; }
    std::size_t numel() const;

    double* data() { return data_->data(); }
    const double* data() const { return data_->data(); }
    double& operator[](std::size_t i) { return (*data_)[i]; }
    double operator[](std::size_t i) const { return (*data_)[i]; }

    void fill(double v);
    Tensor clone() const;
    /// Same storage, new shape (element count must match).
    Tensor reshaped(std::vector<std::size_t> new_shape) const;

private:
    std::vector<std::size_t> shape_;
    std::shared_ptr<std::vector<double>> data_;
};

class Graph;

/// One recorded operation (or leaf) in a computation graph.
struct Node {
    Tensor value;
    Tensor grad;  // allocated lazily during backward
    bool requires_grad = false;
    std::vector<Node*> parents;
    std::function<void(Node&)> backward_fn;

    Tensor& ensure_grad();
};

using Var = Node*;

enum class Mode { TRAIN, EVAL };

/// Per-channel batch normalization state. gamma/beta are learnable; the
/// running statistics are buffers updated in train mode (momentum 0.1) and
/// consumed in eval mode.
struct BatchNormParams {
    Tensor gamma, beta, running_mean, running_var;

    static BatchNormParams make(std::size_t channels);
};

/// Define-by-run reverse-mode graph. Nodes are owned by the graph and created
/// in forward order; backward() visits them exactly once in reverse creation
/// order, which is a valid reverse-topological order by construction.
class Graph {
public:
    /// Leaf sharing `t`'s storage. Gradients accumulate into the node, not
    /// into the tensor.
    Var leaf(const Tensor& t, bool requires_grad);

    // [..., m, k] x [..., k, n] -> [..., m, n]. Leading dimensions must match
    // exactly, or the right operand may be a plain matrix shared across the
    // left operand's leading dimensions.
    Var matmul(Var a, Var b);

    /// Elementwise a + b. b's shape must equal a's shape or a trailing suffix
    /// of it (bias and positional-table broadcasts).
    Var add(Var a, Var b);

    Var scale(Var a, double s);

    /// Numerically stable softmax over the last dimension.
    Var softmax(Var a);

    /// Exact GELU x * Phi(x) via erf.
    Var gelu(Var a);

    /// Train mode normalizes per channel (last dimension) over all leading
    /// dimensions with eps 1e-5 and updates `state`'s running statistics;
    /// eval mode uses the running statistics. Throws DegenerateData when the
    /// train-mode normalization set has a single element.
    Var batch_norm(Var x, Var gamma, Var beta, BatchNormParams& state, Mode mode);

    /// Inverted dropout: train mode zeroes with probability p and scales
    /// survivors by 1/(1-p); eval mode (and p = 0) is the identity.
    Var dropout(Var x, double p, Rng& rng, Mode mode);

    /// Mean binary cross-entropy from logits, in log-sum-exp form.
    Var bce_with_logits(Var logits, const std::vector<double>& targets);

    /// Fused scaled-dot-product attention: softmax(q k^T * scale) v per
    /// (batch, head) block. q, k are [b, h, s, d_k], v is [b, h, s, d_v];
    /// the result is [b, h, s, d_v]. Equivalent to composing matmul, scale
    /// and softmax, but keeps only the attention weights alive (and not even
    /// those when no gradient is required), which keeps long sequences
    /// affordable.
    Var attention(Var q, Var k, Var v, double scale);

    /// Same storage, new shape.
    Var reshape(Var a, std::vector<std::size_t> new_shape);

    /// 4-D axis permutation (materializes).
    Var permute4(Var a, const std::array<std::size_t, 4>& axes);

    void backward(Var loss);

    std::size_t node_count() const { return nodes_.size(); }

private:
    Var emplace(Tensor value, bool requires_grad, std::vector<Node*> parents,
                std::function<void(Node&)> backward_fn);
    std::vector<std::unique_ptr<Node>> nodes_;
};

/// Max relative error between the reverse-mode gradient of `f` at `x` and
/// central finite differences: max_i |analytic - numeric| / max(1e-12,
/// |numeric|). `f` must build a scalar from the given leaf.
double grad_check(const std::function<Var(Graph&, Var)>& f, const Tensor& x, double eps);

}  // namespace floodlab
