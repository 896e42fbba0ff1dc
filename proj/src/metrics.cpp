#include "floodlab/metrics.hpp"

#include <cstdio>
#include <ostream>

#include "floodlab/error.hpp"

namespace floodlab {

EvalReport evaluate(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.size() != labels.size()) {
        throw InvalidArgument("evaluate: " + std::to_string(predictions.size()) +
                              " predictions vs " + std::to_string(labels.size()) + " labels");
    }
    EvalReport r;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const bool pred = predictions[i] != 0;
        const bool truth = labels[i] != 0;
        if (pred && truth) ++r.tp;
        else if (pred && !truth) ++r.fp;
        else if (!pred && truth) ++r.fn;
        else ++r.tn;
    }
    const std::size_t total = predictions.size();
    if (r.tp + r.fp > 0) {
        r.precision = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp);
    } else {
        r.precision_undefined = true;
    }
    if (r.tp + r.fn > 0) {
        r.recall = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
    } else {
        r.recall_undefined = true;
    }
    if (total > 0) r.accuracy = static_cast<double>(r.tp + r.tn) / static_cast<double>(total);
    if (r.precision + r.recall > 0.0) {
        r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
    } else {
        r.f1_undefined = true;
    }
    return r;
}

void write_eval_report_header(std::ostream& out) {
    out << "detector,scenario,tp,fp,tn,fn,precision,recall,accuracy,f1,flags,"
           "param_count,inference_time_s,peak_extra_memory_bytes\n";
}

void write_eval_report_row(std::ostream& out, const std::string& detector,
                           const std::string& scenario, const EvalReport& r) {
    std::string flags;
    if (r.precision_undefined) flags += 'P';
    if (r.recall_undefined) flags += 'R';
    if (r.f1_undefined) flags += 'F';
    if (flags.empty()) flags = "-";

    char buf[160];
    std::snprintf(buf, sizeof(buf), "%.9f,%.9f,%.9f,%.9f", r.precision, r.recall, r.accuracy,
                  r.f1);
    out << detector << ',' << scenario << ',' << r.tp << ',' << r.fp << ',' << r.tn << ','
        << r.fn << ',' << buf << ',' << flags << ',' << r.param_count << ',';
    if (r.inference_time_s >= 0.0) {
        std::snprintf(buf, sizeof(buf), "%.6f", r.inference_time_s);
        out << buf;
    }
    out << ',';
    if (r.peak_extra_memory_bytes > 0) out << r.peak_extra_memory_bytes;
    out << '\n';
}

}  // namespace floodlab
