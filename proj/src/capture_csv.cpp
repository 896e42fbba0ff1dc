#include "floodlab/capture_csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "floodlab/error.hpp"

namespace floodlab {

namespace {

constexpr const char* kHeader = "No.,Time,Source,Destination,Protocol,Length,Info";

std::string unquote(std::string field) {
    if (field.size() >= 2 && field.front() == '"' && field.back() == '"') {
        return field.substr(1, field.size() - 2);
    }
    return field;
}

// Splits the first 6 comma-separated fields; the remainder (which may itself
// contain commas) is the Info column.
std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t pos = 0;
    for (int i = 0; i < 6; ++i) {
        const std::size_t comma = line.find(',', pos);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(pos));
            return fields;
        }
        fields.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
    fields.push_back(line.substr(pos));
    return fields;
}

double parse_double(const std::string& s, std::size_t line_no, const char* what) {
    double value = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw RowError(line_no, std::string("unparseable ") + what + " '" + s + "'");
    }
    return value;
}

std::uint32_t parse_length(const std::string& s, std::size_t line_no) {
    std::uint32_t value = 0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || value == 0) {
        throw RowError(line_no, "unparseable Length '" + s + "'");
    }
    return value;
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

}  // namespace

TrafficTrace parse_capture_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty capture: missing header row");
    {
        auto fields = split_row(strip_cr(line));
        std::string normalized;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) normalized += ',';
            normalized += unquote(fields[i]);
        }
        if (normalized != kHeader) {
            throw FormatError("bad capture header, expected '" + std::string(kHeader) + "'");
        }
    }

    TrafficTrace trace;
    std::size_t line_no = 1;
    double prev_t = -1.0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto fields = split_row(line);
        if (fields.size() != 7) {
            throw RowError(line_no, "expected 7 columns, got " + std::to_string(fields.size()));
        }
        PacketRecord p;
        p.t_rel = parse_double(unquote(fields[1]), line_no, "Time");
        if (p.t_rel < 0.0) throw RowError(line_no, "negative Time");
        if (p.t_rel < prev_t) {
            throw OrderError("line " + std::to_string(line_no) +
                             ": Time decreases; refusing to reorder rows");
        }
        prev_t = p.t_rel;
        p.src_id = unquote(fields[2]);
        p.dst_id = unquote(fields[3]);
        p.protocol = protocol_from_string(unquote(fields[4]));
        p.length_bytes = parse_length(unquote(fields[5]), line_no);
        p.info = unquote(fields[6]);
        trace.packets.push_back(std::move(p));
    }
    trace.duration_s = trace.packets.empty() ? 0.0 : trace.packets.back().t_rel;
    return trace;
}

void write_capture_csv(const TrafficTrace& trace, std::ostream& out) {
    out << kHeader << '\n';
    char tbuf[32];
    std::size_t no = 0;
    for (const auto& p : trace.packets) {
        std::snprintf(tbuf, sizeof(tbuf), "%.6f", p.t_rel);
        out << ++no << ',' << tbuf << ',' << p.src_id << ',' << p.dst_id << ','
            << protocol_name(p.protocol) << ',' << p.length_bytes << ',' << p.info << '\n';
    }
    if (!out) throw Error("capture write failed");
}

TrafficTrace merge_traces(const TrafficTrace& a, const TrafficTrace& b) {
    a.check_sorted();
    b.check_sorted();
    TrafficTrace out;
    out.duration_s = std::max(a.duration_s, b.duration_s);
    out.packets.reserve(a.packets.size() + b.packets.size());
    std::size_t i = 0, j = 0;
    while (i < a.packets.size() && j < b.packets.size()) {
        if (b.packets[j].t_rel < a.packets[i].t_rel) {
            out.packets.push_back(b.packets[j++]);
        } else {
            out.packets.push_back(a.packets[i++]);  // ties: a first
        }
    }
    for (; i < a.packets.size(); ++i) out.packets.push_back(a.packets[i]);
    for (; j < b.packets.size(); ++j) out.packets.push_back(b.packets[j]);
    return out;
}

TrafficTrace read_capture_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open capture file '" + path + "'");
    return parse_capture_csv(in);
}

void write_capture_file(const TrafficTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write capture file '" + path + "'");
    write_capture_csv(trace, out);
}

}  // namespace floodlab
