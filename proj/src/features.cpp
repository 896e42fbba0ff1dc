#include "floodlab/features.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "floodlab/error.hpp"

namespace floodlab {

namespace {

int label_at(const std::vector<LabelInterval>& intervals, double t) {
    for (const auto& iv : intervals) {
        if (t >= iv.start_s && t < iv.end_s) return iv.label;
    }
    return 0;
}

}  // namespace

WindowSeries window_counts(const TrafficTrace& trace, double window_s,
                           const std::vector<LabelInterval>& label_intervals) {
    if (!(window_s > 0.0)) throw InvalidArgument("window_s must be positive");

    WindowSeries series;
    series.window_s = window_s;
    if (trace.duration_s <= 0.0) return series;

    const std::size_t n = static_cast<std::size_t>(std::ceil(trace.duration_s / window_s));
    series.counts.assign(n, 0.0);
    series.labels.resize(n);
    for (const auto& p : trace.packets) {
        if (p.protocol != Protocol::MAVLINK) continue;
        std::size_t k = static_cast<std::size_t>(p.t_rel / window_s);
        if (k >= n) k = n - 1;
        series.counts[k] += 1.0;
    }
    for (std::size_t k = 0; k < n; ++k) {
        series.labels[k] = label_at(label_intervals, (static_cast<double>(k) + 0.5) * window_s);
    }
    return series;
}

Scaler fit_scaler(const WindowSeries& train) {
    if (train.counts.empty()) throw InsufficientData("fit_scaler: empty series");
    if (train.scaled) throw InvalidArgument("fit_scaler: series is already scaled");

    double sum = 0.0;
    for (double c : train.counts) sum += c;
    const double mean = sum / static_cast<double>(train.counts.size());
    double ss = 0.0;
    for (double c : train.counts) ss += (c - mean) * (c - mean);
    double std = std::sqrt(ss / static_cast<double>(train.counts.size()));
    if (std < 1e-12) std = 1.0;  // constant input guard
    return {mean, std};
}

WindowSeries apply_scaler(const Scaler& scaler, const WindowSeries& series) {
    if (series.scaled) throw InvalidArgument("apply_scaler: series is already scaled");
    WindowSeries out = series;
    out.scaled = true;
    for (auto& c : out.counts) c = (c - scaler.mean) / scaler.std;
    return out;
}

SequenceDataset make_sequences(const WindowSeries& series, std::size_t seq_len,
                               std::size_t stride) {
    if (seq_len == 0 || stride == 0) throw InvalidArgument("seq_len and stride must be positive");
    if (series.size() < seq_len) {
        throw InsufficientData("series of " + std::to_string(series.size()) +
                               " windows is shorter than seq_len " + std::to_string(seq_len));
    }
    SequenceDataset ds;
    ds.counts = series.counts;
    ds.seq_len = seq_len;
    ds.stride = stride;
    const std::size_t n_seq = (series.size() - seq_len) / stride + 1;
    ds.starts.reserve(n_seq);
    ds.labels.reserve(n_seq);
    for (std::size_t i = 0; i < n_seq; ++i) {
        const std::size_t start = i * stride;
        ds.starts.push_back(start);
        ds.labels.push_back(series.labels[start + seq_len - 1]);
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Persistence

void write_window_series(const WindowSeries& series, std::ostream& out) {
    out << "count,label\n";
    char buf[40];
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series.scaled) {
            std::snprintf(buf, sizeof(buf), "%.17g", series.counts[i]);
            out << buf;
        } else {
            out << static_cast<long long>(series.counts[i]);
        }
        out << ',' << series.labels[i] << '\n';
    }
    if (!out) throw Error("window series write failed");
}

WindowSeries read_window_series(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || (line != "count,label" && line != "count,label\r")) {
        throw FormatError("window series: expected 'count,label' header");
    }
    WindowSeries series;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos) throw RowError(line_no, "expected 'count,label'");
        double count = 0.0;
        auto [p1, e1] = std::from_chars(line.data(), line.data() + comma, count);
        int label = 0;
        auto [p2, e2] =
            std::from_chars(line.data() + comma + 1, line.data() + line.size(), label);
        if (e1 != std::errc{} || p1 != line.data() + comma || e2 != std::errc{} ||
            p2 != line.data() + line.size() || (label != 0 && label != 1)) {
            throw RowError(line_no, "bad window series row '" + line + "'");
        }
        series.counts.push_back(count);
        series.labels.push_back(label);
        if (count != std::floor(count) || count < 0.0) series.scaled = true;
    }
    return series;
}

void write_window_series_file(const WindowSeries& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write window series '" + path + "'");
    write_window_series(series, out);
}

WindowSeries read_window_series_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open window series '" + path + "'");
    return read_window_series(in);
}

void write_label_intervals(const std::vector<LabelInterval>& labels, std::ostream& out) {
    out << "start_s,end_s,label\n";
    char buf[96];
    for (const auto& iv : labels) {
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%d\n", iv.start_s, iv.end_s, iv.label);
        out << buf;
    }
    if (!out) throw Error("label interval write failed");
}

std::vector<LabelInterval> read_label_intervals(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) ||
        (line != "start_s,end_s,label" && line != "start_s,end_s,label\r")) {
        throw FormatError("label file: expected 'start_s,end_s,label' header");
    }
    std::vector<LabelInterval> labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        LabelInterval iv;
        int n = 0;
        if (std::sscanf(line.c_str(), "%lf,%lf,%d%n", &iv.start_s, &iv.end_s, &iv.label, &n) != 3 ||
            static_cast<std::size_t>(n) != line.size()) {
            throw RowError(line_no, "bad label row '" + line + "'");
        }
        labels.push_back(iv);
    }
    return labels;
}

void write_label_intervals_file(const std::vector<LabelInterval>& labels,
                                const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write label file '" + path + "'");
    write_label_intervals(labels, out);
}

std::vector<LabelInterval> read_label_intervals_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open label file '" + path + "'");
    return read_label_intervals(in);
}

}  // namespace floodlab
