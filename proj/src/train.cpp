#include "floodlab/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "floodlab/error.hpp"

namespace floodlab {

void TrainSpec::validate() const {
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
        throw InvalidArgument("val_fraction must be in (0, 1)");
    }
    if (patience < 1) throw InvalidArgument("patience must be at least 1");
    if (batch_size == 0) throw InvalidArgument("batch_size must be positive");
    if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
}

AdamOptimizer::AdamOptimizer(std::vector<Tensor*> params, const TrainSpec& spec)
    : params_(std::move(params)), spec_(spec) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (Tensor* p : params_) {
        m_.emplace_back(p->shape());
        m_.back().fill(0.0);
        v_.emplace_back(p->shape());
        v_.back().fill(0.0);
    }
}

void AdamOptimizer::step(const std::vector<std::pair<Tensor*, Var>>& bound) {
    ++t_;
    const double bc1 = 1.0 - std::pow(spec_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(spec_.beta2, static_cast<double>(t_));
    for (const auto& [tensor, leaf] : bound) {
        // Find the optimizer slot for this tensor.
        std::size_t slot = params_.size();
        for (std::size_t i = 0; i < params_.size(); ++i) {
            if (params_[i] == tensor) {
                slot = i;
                break;
            }
        }
        if (slot == params_.size()) throw InvalidArgument("adam step: unknown parameter tensor");
        if (!leaf->grad.defined()) continue;  // parameter unused in this graph

        double* p = tensor->data();
        const double* g = leaf->grad.data();
        double* m = m_[slot].data();
        double* v = v_[slot].data();
        const std::size_t n = tensor->numel();
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = spec_.beta1 * m[i] + (1.0 - spec_.beta1) * g[i];
            v[i] = spec_.beta2 * v[i] + (1.0 - spec_.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= spec_.learning_rate * mhat / (std::sqrt(vhat) + spec_.adam_eps);
        }
    }
}

namespace {

struct SampleRef {
    std::size_t block;
    std::size_t index;
};

Tensor pack_samples(const std::vector<SequenceDataset>& blocks,
                    const std::vector<SampleRef>& samples, std::size_t from, std::size_t to) {
    const std::size_t seq_len = blocks.front().seq_len;
    Tensor batch({to - from, seq_len, 1});
    double* p = batch.data();
    for (std::size_t i = from; i < to; ++i) {
        const auto& ds = blocks[samples[i].block];
        const double* src = ds.sequence(samples[i].index);
        std::copy(src, src + seq_len, p + (i - from) * seq_len);
    }
    return batch;
}

}  // namespace

TrainHistory train_tst(TSTParams& params, const std::vector<SequenceDataset>& blocks,
                       const TrainSpec& spec, Rng& rng) {
    spec.validate();
    if (blocks.empty()) throw InsufficientData("train_tst: no sequence blocks");
    for (const auto& b : blocks) {
        if (b.seq_len != params.config.seq_len) {
            throw ShapeError("train_tst: block seq_len does not match model config");
        }
        if (b.size() == 0) throw InsufficientData("train_tst: empty sequence block");
    }

    // Chronological split per block: tail fraction is validation, subsampled
    // at stride seq_len so validation sequences do not overlap each other;
    // training sequences overlapping the validation span are dropped.
    std::vector<SampleRef> train_samples, val_samples;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const auto& ds = blocks[b];
        const std::size_t n = ds.size();
        std::size_t split = static_cast<std::size_t>(
            std::floor(static_cast<double>(n) * (1.0 - spec.val_fraction)));
        if (split == 0) split = 1;
        if (split >= n) split = n - 1;

        const std::size_t val_start_window = ds.starts[split];
        for (std::size_t i = 0; i < split; ++i) {
            if (ds.starts[i] + ds.seq_len <= val_start_window) {
                train_samples.push_back({b, i});
            }
        }
        std::size_t next_allowed = ds.starts[split];
        for (std::size_t i = split; i < n; ++i) {
            if (ds.starts[i] >= next_allowed) {
                val_samples.push_back({b, i});
                next_allowed = ds.starts[i] + ds.seq_len;
            }
        }
    }
    if (train_samples.empty()) throw InsufficientData("train_tst: no training sequences survive");

    bool has0 = false, has1 = false;
    for (const auto& s : train_samples) {
        (blocks[s.block].labels[s.index] ? has1 : has0) = true;
    }
    if (!has0 || !has1) throw DegenerateData("train_tst: training data has a single class");

    TrainHistory history;
    if (spec.epochs == 0) return history;

    AdamOptimizer adam(params.trainable(), spec);
    TSTParams best_params;
    std::size_t bad_epochs = 0;

    std::vector<int> val_labels;
    for (const auto& s : val_samples) val_labels.push_back(blocks[s.block].labels[s.index]);

    for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
        // Fisher-Yates shuffle from the caller's stream.
        for (std::size_t i = train_samples.size(); i > 1; --i) {
            std::swap(train_samples[i - 1], train_samples[rng.uniform_int(i)]);
        }

        double loss_sum = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < train_samples.size(); start += spec.batch_size) {
            const std::size_t stop = std::min(train_samples.size(), start + spec.batch_size);
            Tensor x = pack_samples(blocks, train_samples, start, stop);
            std::vector<double> targets;
            targets.reserve(stop - start);
            for (std::size_t i = start; i < stop; ++i) {
                targets.push_back(
                    static_cast<double>(blocks[train_samples[i].block].labels[train_samples[i].index]));
            }

            Graph g;
            std::vector<std::pair<Tensor*, Var>> bound;
            Var xv = g.leaf(x, false);
            Var logits = tst_graph(g, params, xv, Mode::TRAIN, &rng, &bound);
            Var loss = g.bce_with_logits(logits, targets);
            g.backward(loss);
            adam.step(bound);

            loss_sum += loss->value[0];
            ++n_batches;
        }
        history.train_loss.push_back(loss_sum / static_cast<double>(n_batches));
        history.epochs_run = epoch + 1;

        if (val_samples.empty()) {
            history.val_f1.push_back(0.0);
            continue;
        }

        // Validation F1 with the current weights, eval mode.
        std::vector<int> preds;
        preds.reserve(val_samples.size());
        const std::size_t eval_bs = 16;
        for (std::size_t start = 0; start < val_samples.size(); start += eval_bs) {
            const std::size_t stop = std::min(val_samples.size(), start + eval_bs);
            Tensor x = pack_samples(blocks, val_samples, start, stop);
            Tensor logits = tst_forward(params, x, Mode::EVAL);
            for (std::size_t i = 0; i < logits.numel(); ++i) {
                preds.push_back(logits[i] >= 0.0 ? 1 : 0);
            }
        }
        const double f1 = evaluate(preds, val_labels).f1;
        history.val_f1.push_back(f1);

        if (f1 > history.best_val_f1 || history.best_epoch == 0) {
            history.best_val_f1 = f1;
            history.best_epoch = epoch + 1;
            best_params = params.clone();
            bad_epochs = 0;
        } else if (++bad_epochs >= spec.patience) {
            break;
        }
    }

    if (history.best_epoch > 0) params = std::move(best_params);
    return history;
}

BenchResult bench_inference(TSTParams& params, std::size_t n_trials) {
    if (n_trials == 0) throw InvalidArgument("bench_inference: n_trials must be positive");
    Tensor x({1, params.config.seq_len, 1});
    x.fill(0.0);

    for (int i = 0; i < 3; ++i) tst_forward(params, x, Mode::EVAL);

    BenchResult result;
    result.param_count = params.param_count();
    result.param_bytes = result.param_count * sizeof(double);

    MemoryTracker::reset_peak();
    const std::size_t before = MemoryTracker::current_bytes();
    tst_forward(params, x, Mode::EVAL);
    result.peak_extra_memory_bytes = MemoryTracker::peak_bytes() - before;

    std::vector<double> times(n_trials);
    for (std::size_t i = 0; i < n_trials; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        tst_forward(params, x, Mode::EVAL);
        const auto t1 = std::chrono::steady_clock::now();
        times[i] = std::chrono::duration<double>(t1 - t0).count();
    }
    std::sort(times.begin(), times.end());
    result.median_forward_s = times[times.size() / 2];
    return result;
}

}  // namespace floodlab
