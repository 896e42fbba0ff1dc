#include "floodlab/threshold.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "floodlab/error.hpp"

namespace floodlab {

std::vector<int> ThresholdDetector::predict(const std::vector<double>& counts) const {
    std::vector<int> out(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) out[i] = predict(counts[i]);
    return out;
}

ThresholdDetector threshold_fit(const WindowSeries& train) {
    if (!train.scaled) throw InvalidArgument("threshold_fit expects a scaled series");
    if (train.size() == 0) throw InsufficientData("threshold_fit: empty series");
    bool has0 = false, has1 = false;
    for (int l : train.labels) (l ? has1 : has0) = true;
    if (!has0 || !has1) throw DegenerateData("threshold_fit needs both classes");

    // Sort (count, label) pairs; sweeping the cut upward, each group of equal
    // counts flips from "predicted 0" to "predicted 1".
    std::vector<std::pair<double, int>> pts(train.size());
    std::size_t total_pos = 0;
    for (std::size_t i = 0; i < train.size(); ++i) {
        pts[i] = {train.counts[i], train.labels[i]};
        total_pos += static_cast<std::size_t>(train.labels[i]);
    }
    std::sort(pts.begin(), pts.end());

    // Cut below the minimum: nothing predicted 1, errors = positives.
    std::size_t errors = total_pos;
    std::size_t best_errors = errors;
    double best_cut = pts.front().first - 1.0;

    std::size_t i = 0;
    while (i < pts.size()) {
        std::size_t j = i;
        while (j < pts.size() && pts[j].first == pts[i].first) {
            // Group becomes predicted 1: attacks stop being errors, benign start.
            errors += pts[j].second == 1 ? std::size_t(-1) : std::size_t(1);
            ++j;
        }
        const double cut =
            j < pts.size() ? 0.5 * (pts[j - 1].first + pts[j].first) : pts.back().first + 1.0;
        if (errors < best_errors) {
            best_errors = errors;
            best_cut = cut;
        }
        i = j;
    }
    return {best_cut};
}

void write_threshold_file(const ThresholdDetector& detector, const Scaler& scaler,
                          const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write threshold file '" + path + "'");
    char buf[160];
    std::snprintf(buf, sizeof(buf), "cut %.17g\nscaler %.17g %.17g\n", detector.cut, scaler.mean,
                  scaler.std);
    out << "FLOODLAB-THRESHOLD v1\n" << buf;
    if (!out) throw Error("threshold write failed");
}

std::pair<ThresholdDetector, Scaler> read_threshold_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open threshold file '" + path + "'");
    std::string magic;
    std::getline(in, magic);
    if (magic != "FLOODLAB-THRESHOLD v1") throw FormatError("threshold file: bad magic");
    std::string key;
    ThresholdDetector d;
    Scaler s;
    if (!(in >> key >> d.cut) || key != "cut") throw FormatError("threshold file: bad cut line");
    if (!(in >> key >> s.mean >> s.std) || key != "scaler") {
        throw FormatError("threshold file: bad scaler line");
    }
    return {d, s};
}

}  // namespace floodlab
