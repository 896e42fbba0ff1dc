#pragma once

#include <iosfwd>
#include <string>

#include "floodlab/trace.hpp"

namespace floodlab {

// Canonical capture interchange format, compatible with Wireshark CSV packet
// exports. Column order and header spelling are fixed:
//
//   No.,Time,Source,Destination,Protocol,Length,Info
//
// Time is seconds with 6 decimal places. Fields may be double-quoted (as
// Wireshark writes them); the writer emits them unquoted. Only Time, Protocol
// and Length drive the pipeline; Source/Destination/Info ride along as opaque
// strings.

/// Parses a capture stream. Throws FormatError on a bad header, RowError (with
/// line number) on malformed fields, OrderError if Time decreases. Rows are
/// never reordered.
TrafficTrace parse_capture_csv(std::istream& in);

/// Writes `trace` in the canonical column format.
void write_capture_csv(const TrafficTrace& trace, std::ostream& out);

/// Stable time-sorted merge; ties keep packets of `a` before packets of `b`.
/// Both inputs must already be sorted (OrderError otherwise).
TrafficTrace merge_traces(const TrafficTrace& a, const TrafficTrace& b);

// File-path conveniences used by the CLI.
TrafficTrace read_capture_file(const std::string& path);
void write_capture_file(const TrafficTrace& trace, const std::string& path);

}  // namespace floodlab
