#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace floodlab {

/// Confusion counts and derived metrics for the DDoS-positive class.
/// Zero-denominator metrics are reported as 0 with the matching flag set.
/// inference_time_s and peak_extra_memory_bytes are filled by the benchmark
/// path only (negative / zero when unset) so that evaluation reports stay
/// byte-reproducible.
struct EvalReport {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    double precision = 0.0, recall = 0.0, accuracy = 0.0, f1 = 0.0;
    bool precision_undefined = false, recall_undefined = false, f1_undefined = false;
    double inference_time_s = -1.0;
    std::size_t param_count = 0;
    std::size_t peak_extra_memory_bytes = 0;
};

/// Positive class = DDoS (label 1). Throws InvalidArgument on length mismatch.
EvalReport evaluate(const std::vector<int>& predictions, const std::vector<int>& labels);

/// Stable CSV schema:
/// detector,scenario,tp,fp,tn,fn,precision,recall,accuracy,f1,flags,
/// param_count,inference_time_s,peak_extra_memory_bytes
void write_eval_report_header(std::ostream& out);
void write_eval_report_row(std::ostream& out, const std::string& detector,
                           const std::string& scenario, const EvalReport& report);

}  // namespace floodlab
