#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "floodlab/features.hpp"
#include "floodlab/tensor.hpp"

namespace floodlab {

/// Time Series Transformer hyperparameters. Defaults are the tuned values the
/// detector ships with.
struct TSTConfig {
    std::size_t seq_len = 400;
    std::size_t d_model = 64;
    std::size_t n_heads = 32;
    std::size_t d_ff = 64;
    std::size_t n_layers = 2;
    double dropout = 0.1;
    std::size_t batch_size = 4;
    std::size_t d_k = 2;
    std::size_t d_v = 2;
    bool learned_embeddings = true;
    std::uint64_t seed = 42;

    /// Enforces n_heads * d_k == d_model (never silently repaired) and basic
    /// positivity. Throws ConfigError.
    void validate() const;
};

struct TSTLayerParams {
    Tensor w_q, b_q, w_k, b_k, w_v, b_v;  // d_model -> n_heads*d_k / d_v
    Tensor w_o, b_o;                      // n_heads*d_v -> d_model
    BatchNormParams bn_attn, bn_ff;
    Tensor w_ff1, b_ff1, w_ff2, b_ff2;  // d_model -> d_ff -> d_model
};

/// All model state. The positional table is trainable iff
/// config.learned_embeddings; otherwise it holds the fixed sinusoidal table.
struct TSTParams {
    TSTConfig config;
    Tensor input_proj_w, input_proj_b;  // pointwise projection 1 -> d_model
    Tensor pos_embedding;               // [seq_len, d_model]
    std::vector<TSTLayerParams> layers;
    Tensor head_w, head_b;  // flatten(seq_len*d_model) -> 1 logit

    /// Trainable tensors in a fixed order (positional table included only
    /// with learned embeddings).
    std::vector<Tensor*> trainable();

    /// Every tensor needed to restore the model (running stats and the
    /// positional table included), with stable names for serialization.
    std::vector<std::pair<std::string, Tensor*>> named_state();

    /// Number of trainable scalar parameters.
    std::size_t param_count();

    TSTParams clone() const;
};

TSTParams tst_init(const TSTConfig& config, Rng& rng);

/// [seq_len, d_model] alternating sine/cosine table.
Tensor sinusoidal_embedding(std::size_t seq_len, std::size_t d_model);

/// Standalone multi-head self-attention forward for a concrete input:
/// concat_h(softmax(Q K^T / sqrt(d_k)) V) W_o on layer `layer_index`, without
/// the residual, dropout or norm around it. x is [b, s, d_model].
Tensor mha_forward(TSTParams& params, std::size_t layer_index, const Tensor& x);

/// Builds the full model on `g` from input x [b, seq_len, 1] to logits [b].
/// `bound` receives (parameter tensor, leaf var) pairs for the optimizer; may
/// be null. `rng` is required in train mode when config.dropout > 0.
Var tst_graph(Graph& g, TSTParams& params, Var x, Mode mode, Rng* rng,
              std::vector<std::pair<Tensor*, Var>>* bound);

/// Convenience forward returning the logits tensor [b].
Tensor tst_forward(TSTParams& params, const Tensor& x, Mode mode, Rng* rng = nullptr);

/// Sigmoid-thresholded labels for every sequence in `ds` (eval mode).
/// Label 1 iff sigmoid(logit) >= threshold.
std::vector<int> tst_predict(TSTParams& params, const SequenceDataset& ds,
                             double threshold = 0.5, std::size_t batch_size = 16);

/// Logits for every sequence in `ds` (eval mode, batched).
std::vector<double> tst_logits(TSTParams& params, const SequenceDataset& ds,
                               std::size_t batch_size = 16);

/// Packs sequences ds[indices] into a [n, seq_len, 1] batch tensor.
Tensor pack_sequences(const SequenceDataset& ds, const std::vector<std::size_t>& indices);

}  // namespace floodlab
