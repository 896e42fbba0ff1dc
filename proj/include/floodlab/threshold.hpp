#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "floodlab/features.hpp"

namespace floodlab {

/// Sanity baseline: predict DDoS when the (scaled) window count falls below a
/// learned cut.
struct ThresholdDetector {
    double cut = 0.0;

    int predict(double count) const { return count < cut ? 1 : 0; }
    std::vector<int> predict(const std::vector<double>& counts) const;
};

/// Learns the cut minimizing training error of "predict 1 iff count < c".
/// Requires a scaled series containing both classes (DegenerateData
/// otherwise). Ties resolve to the smallest candidate cut, which makes the
/// fit permutation-invariant.
ThresholdDetector threshold_fit(const WindowSeries& train);

// The file carries the scaler alongside the cut so a saved detector can be
// applied to raw window series end to end.
void write_threshold_file(const ThresholdDetector& detector, const Scaler& scaler,
                          const std::string& path);
std::pair<ThresholdDetector, Scaler> read_threshold_file(const std::string& path);

}  // namespace floodlab
