#pragma once

#include <map>
#include <string>
#include <vector>

#include "floodlab/features.hpp"
#include "floodlab/iforest.hpp"
#include "floodlab/metrics.hpp"
#include "floodlab/threshold.hpp"
#include "floodlab/train.hpp"
#include "floodlab/tst.hpp"

namespace floodlab {

/// Windows a trace against its label timeline. The window span covers the
/// label intervals even when the trace's own duration stops at the last
/// packet (as parsed captures do).
WindowSeries featurize(TrafficTrace trace, const std::vector<LabelInterval>& labels,
                       double window_s = 0.1);

/// Scaler fitted once over the concatenated raw training series.
Scaler fit_scaler_over(const std::vector<WindowSeries>& raw_blocks);

/// Dimension of the isolation-forest input vectors (consecutive scaled
/// counts ending at the anchor window).
inline constexpr std::size_t kIForestWindow = 10;

/// Consecutive-count vectors for the isolation forest. When benign_only is
/// set, vectors whose span touches an attack-labeled window are skipped
/// (anomaly-detection convention: model normal traffic only).
std::vector<std::vector<double>> iforest_vectors(const WindowSeries& scaled, bool benign_only);

/// Detector-agnostic evaluation anchors: the last-window indices of the
/// sequences of `make_sequences(series, seq_len, stride)`. All detectors
/// predict at the same anchors so their metrics are comparable.
std::vector<std::size_t> eval_anchors(std::size_t series_size, std::size_t seq_len,
                                      std::size_t stride);

struct AnchoredSeries {
    SequenceDataset sequences;          // TST view
    std::vector<std::size_t> anchors;   // window indices
    std::vector<int> labels;            // anchor labels
};

AnchoredSeries anchor_series(const WindowSeries& scaled, std::size_t seq_len, std::size_t stride);

/// Trains all three detectors on the scaled training blocks.
struct DetectorBundle {
    TSTParams tst;
    Scaler scaler;
    TrainHistory history;
    ThresholdDetector threshold;
    IForestModel iforest;
};

struct PipelineTrainOptions {
    TSTConfig config;
    TrainSpec train;
    std::size_t train_stride = 40;
    std::size_t iforest_psi = 256;
    std::size_t iforest_trees = 100;
    std::uint64_t seed = 42;
};

DetectorBundle train_detectors(const std::vector<WindowSeries>& raw_train_blocks,
                               const PipelineTrainOptions& options);

/// Per-detector reports on one test series at shared anchors.
struct ScenarioEval {
    EvalReport tst;
    EvalReport iforest;
    EvalReport threshold;
};

ScenarioEval evaluate_detectors(DetectorBundle& bundle, const WindowSeries& raw_test,
                                std::size_t eval_stride);

/// TST-only evaluation (used by the eval subcommand).
EvalReport evaluate_tst(TSTParams& params, const Scaler& scaler, const WindowSeries& raw_test,
                        std::size_t eval_stride, double threshold = 0.5);

}  // namespace floodlab
