#pragma once

#include <cstdint>
#include <vector>

#include "floodlab/metrics.hpp"
#include "floodlab/tst.hpp"

namespace floodlab {

/// Training procedure knobs. The optimizer is Adam; epochs is an upper bound
/// under early stopping on validation F1.
struct TrainSpec {
    std::size_t epochs = 50;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t patience = 5;
    double val_fraction = 0.2;
    std::size_t batch_size = 4;

    void validate() const;
};

struct TrainHistory {
    std::vector<double> train_loss;  // mean batch loss per epoch
    std::vector<double> val_f1;      // validation F1 per epoch
    std::size_t best_epoch = 0;      // 1-based; 0 = never improved
    double best_val_f1 = 0.0;
    std::size_t epochs_run = 0;
};

/// Adam state for one set of parameter tensors.
class AdamOptimizer {
public:
    AdamOptimizer(std::vector<Tensor*> params, const TrainSpec& spec);
    /// Applies one update from the gradients bound to graph leaves.
    void step(const std::vector<std::pair<Tensor*, Var>>& bound);

private:
    std::vector<Tensor*> params_;
    std::vector<Tensor> m_, v_;
    TrainSpec spec_;
    std::size_t t_ = 0;
};

/// Trains `params` in place with mini-batch Adam on BCE. `blocks` holds one
/// SequenceDataset per source series; the validation split is the
/// chronological tail of each block, subsampled at stride seq_len so
/// validation sequences never overlap each other, and training sequences that
/// would overlap the validation span are dropped. Early-stops when validation
/// F1 fails to improve for `patience` epochs and restores the
/// best-validation checkpoint. Deterministic given `rng`'s seed.
TrainHistory train_tst(TSTParams& params, const std::vector<SequenceDataset>& blocks,
                       const TrainSpec& spec, Rng& rng);

struct BenchResult {
    double median_forward_s = 0.0;
    std::size_t param_count = 0;
    std::size_t peak_extra_memory_bytes = 0;
    std::size_t param_bytes = 0;
};

/// Median wall-clock of `n_trials` single-sequence eval-mode forward passes
/// (after 3 warmup passes), the exact trainable parameter count, and the
/// tensor-allocation high-water mark of one pass.
BenchResult bench_inference(TSTParams& params, std::size_t n_trials);

}  // namespace floodlab
