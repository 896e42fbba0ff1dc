#include "floodlab/pipeline.hpp"

#include <algorithm>

#include "floodlab/error.hpp"

namespace floodlab {

WindowSeries featurize(TrafficTrace trace, const std::vector<LabelInterval>& labels,
                       double window_s) {
    double span = trace.duration_s;
    for (const auto& iv : labels) span = std::max(span, iv.end_s);
    trace.duration_s = span;
    return window_counts(trace, window_s, labels);
}

Scaler fit_scaler_over(const std::vector<WindowSeries>& raw_blocks) {
    WindowSeries combined;
    for (const auto& b : raw_blocks) {
        if (b.scaled) throw InvalidArgument("fit_scaler_over expects raw series");
        combined.counts.insert(combined.counts.end(), b.counts.begin(), b.counts.end());
        combined.labels.insert(combined.labels.end(), b.labels.begin(), b.labels.end());
    }
    return fit_scaler(combined);
}

std::vector<std::vector<double>> iforest_vectors(const WindowSeries& scaled, bool benign_only) {
    if (!scaled.scaled) throw InvalidArgument("iforest_vectors expects a scaled series");
    std::vector<std::vector<double>> out;
    if (scaled.size() < kIForestWindow) return out;
    for (std::size_t end = kIForestWindow - 1; end < scaled.size(); ++end) {
        const std::size_t begin = end + 1 - kIForestWindow;
        if (benign_only) {
            bool clean = true;
            for (std::size_t i = begin; i <= end && clean; ++i) clean = scaled.labels[i] == 0;
            if (!clean) continue;
        }
        out.emplace_back(scaled.counts.begin() + static_cast<std::ptrdiff_t>(begin),
                         scaled.counts.begin() + static_cast<std::ptrdiff_t>(end + 1));
    }
    return out;
}

std::vector<std::size_t> eval_anchors(std::size_t series_size, std::size_t seq_len,
                                      std::size_t stride) {
    std::vector<std::size_t> anchors;
    if (series_size < seq_len) return anchors;
    const std::size_t n = (series_size - seq_len) / stride + 1;
    anchors.reserve(n);
    for (std::size_t i = 0; i < n; ++i) anchors.push_back(i * stride + seq_len - 1);
    return anchors;
}

AnchoredSeries anchor_series(const WindowSeries& scaled, std::size_t seq_len,
                             std::size_t stride) {
    AnchoredSeries out;
    out.sequences = make_sequences(scaled, seq_len, stride);
    out.anchors = eval_anchors(scaled.size(), seq_len, stride);
    for (std::size_t a : out.anchors) out.labels.push_back(scaled.labels[a]);
    return out;
}

DetectorBundle train_detectors(const std::vector<WindowSeries>& raw_train_blocks,
                               const PipelineTrainOptions& options) {
    DetectorBundle bundle;
    bundle.scaler = fit_scaler_over(raw_train_blocks);

    std::vector<WindowSeries> scaled_blocks;
    scaled_blocks.reserve(raw_train_blocks.size());
    for (const auto& b : raw_train_blocks) scaled_blocks.push_back(apply_scaler(bundle.scaler, b));

    // TST
    std::vector<SequenceDataset> seq_blocks;
    for (const auto& b : scaled_blocks) {
        seq_blocks.push_back(make_sequences(b, options.config.seq_len, options.train_stride));
    }
    Rng init_rng(options.config.seed);
    bundle.tst = tst_init(options.config, init_rng);
    Rng train_rng(options.seed);
    bundle.history = train_tst(bundle.tst, seq_blocks, options.train, train_rng);

    // Threshold baseline on the combined scaled training windows.
    WindowSeries combined;
    combined.scaled = true;
    for (const auto& b : scaled_blocks) {
        combined.counts.insert(combined.counts.end(), b.counts.begin(), b.counts.end());
        combined.labels.insert(combined.labels.end(), b.labels.begin(), b.labels.end());
    }
    bundle.threshold = threshold_fit(combined);

    // Isolation forest: trees model benign traffic only; the score threshold
    // is picked on the full labeled training vectors.
    std::vector<std::vector<double>> benign_vecs, all_vecs;
    std::vector<int> all_labels;
    for (const auto& b : scaled_blocks) {
        auto bv = iforest_vectors(b, true);
        benign_vecs.insert(benign_vecs.end(), bv.begin(), bv.end());
        auto av = iforest_vectors(b, false);
        for (std::size_t i = 0; i < av.size(); ++i) {
            // Vector label = label of its last window.
            all_labels.push_back(b.labels[kIForestWindow - 1 + i]);
        }
        all_vecs.insert(all_vecs.end(), av.begin(), av.end());
    }
    Rng iforest_rng(options.seed + 1);
    bundle.iforest = iforest_fit(benign_vecs, options.iforest_psi, options.iforest_trees,
                                 iforest_rng);
    iforest_select_threshold(bundle.iforest, all_vecs, all_labels);
    return bundle;
}

ScenarioEval evaluate_detectors(DetectorBundle& bundle, const WindowSeries& raw_test,
                                std::size_t eval_stride) {
    const WindowSeries scaled = apply_scaler(bundle.scaler, raw_test);
    AnchoredSeries anchored =
        anchor_series(scaled, bundle.tst.config.seq_len, eval_stride);

    ScenarioEval out;
    {
        std::vector<int> preds = tst_predict(bundle.tst, anchored.sequences);
        out.tst = evaluate(preds, anchored.labels);
        out.tst.param_count = bundle.tst.param_count();
    }
    {
        std::vector<int> preds;
        preds.reserve(anchored.anchors.size());
        std::vector<double> vec(kIForestWindow);
        for (std::size_t a : anchored.anchors) {
            const std::size_t begin = a + 1 - kIForestWindow;
            std::copy(scaled.counts.begin() + static_cast<std::ptrdiff_t>(begin),
                      scaled.counts.begin() + static_cast<std::ptrdiff_t>(a + 1), vec.begin());
            preds.push_back(bundle.iforest.predict(vec));
        }
        out.iforest = evaluate(preds, anchored.labels);
    }
    {
        std::vector<int> preds;
        preds.reserve(anchored.anchors.size());
        for (std::size_t a : anchored.anchors) {
            preds.push_back(bundle.threshold.predict(scaled.counts[a]));
        }
        out.threshold = evaluate(preds, anchored.labels);
    }
    return out;
}

EvalReport evaluate_tst(TSTParams& params, const Scaler& scaler, const WindowSeries& raw_test,
                        std::size_t eval_stride, double threshold) {
    const WindowSeries scaled = apply_scaler(scaler, raw_test);
    AnchoredSeries anchored = anchor_series(scaled, params.config.seq_len, eval_stride);
    std::vector<int> preds = tst_predict(params, anchored.sequences, threshold);
    EvalReport report = evaluate(preds, anchored.labels);
    report.param_count = params.param_count();
    return report;
}

}  // namespace floodlab
