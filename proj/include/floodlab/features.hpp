#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "floodlab/trace.hpp"

namespace floodlab {

/// MAVLink packets counted per fixed time window, with a binary label per
/// window (1 = DDoS). `counts` holds raw non-negative integers until a scaler
/// is applied, after which `scaled` is set.
struct WindowSeries {
    std::vector<double> counts;
    std::vector<int> labels;
    double window_s = 0.1;
    bool scaled = false;

    std::size_t size() const { return counts.size(); }
};

/// Standardization parameters (population statistics over the training
/// windows, both classes together).
struct Scaler {
    double mean = 0.0;
    double std = 1.0;
};

/// Fixed-length window-count sequences for the sequence detectors. Sequences
/// are kept as (start index, label) views into `counts` to avoid materializing
/// the heavily overlapping slices; `sequence(i)` yields the concrete values.
struct SequenceDataset {
    std::vector<double> counts;  // backing series (one source block)
    std::vector<std::size_t> starts;
    std::vector<int> labels;
    std::size_t seq_len = 0;
    std::size_t stride = 1;

    std::size_t size() const { return starts.size(); }
    const double* sequence(std::size_t i) const { return counts.data() + starts[i]; }
};

/// Counts MAVLINK packets in ceil(duration/window_s) contiguous windows
/// [k*w, (k+1)*w); a packet at exactly t = duration lands in the last window
/// so counts always conserve packets. Window label = 1 iff the window midpoint
/// lies in an attack interval (intervals are half-open [start, end)).
WindowSeries window_counts(const TrafficTrace& trace, double window_s,
                           const std::vector<LabelInterval>& label_intervals);

Scaler fit_scaler(const WindowSeries& train);
WindowSeries apply_scaler(const Scaler& scaler, const WindowSeries& series);

/// Sliding sequences starting at index 0, `stride` apart. The sequence label
/// is the label of its last window. Throws InsufficientData when the series
/// is shorter than seq_len.
SequenceDataset make_sequences(const WindowSeries& series, std::size_t seq_len,
                               std::size_t stride);

// Two-column CSV (count,label) persistence for WindowSeries.
void write_window_series(const WindowSeries& series, std::ostream& out);
WindowSeries read_window_series(std::istream& in);
void write_window_series_file(const WindowSeries& series, const std::string& path);
WindowSeries read_window_series_file(const std::string& path);

// Label-interval file helpers (CSV: start_s,end_s,label).
void write_label_intervals(const std::vector<LabelInterval>& labels, std::ostream& out);
std::vector<LabelInterval> read_label_intervals(std::istream& in);
void write_label_intervals_file(const std::vector<LabelInterval>& labels,
                                const std::string& path);
std::vector<LabelInterval> read_label_intervals_file(const std::string& path);

}  // namespace floodlab
