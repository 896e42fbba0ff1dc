#include "floodlab/ablation.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include "floodlab/error.hpp"

namespace floodlab {

AblationGrid parse_ablation_grid(std::istream& in) {
    AblationGrid grid;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string param, eq;
        if (!(ls >> param)) continue;  // blank
        if (!(ls >> eq) || eq != "=") {
            throw ConfigError("grid line " + std::to_string(line_no) + ": expected 'param = v1 v2 ...'");
        }
        std::vector<std::string> values;
        std::string v;
        while (ls >> v) values.push_back(v);
        if (values.empty()) {
            throw ConfigError("grid line " + std::to_string(line_no) + ": no values for '" + param + "'");
        }
        grid.sweeps.emplace_back(param, values);
    }
    if (grid.sweeps.empty()) throw ConfigError("ablation grid is empty");
    return grid;
}

AblationGrid load_ablation_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open grid file '" + path + "'");
    return parse_ablation_grid(in);
}

namespace {

TSTConfig apply_override(const TSTConfig& base, const std::string& param,
                         const std::string& value, std::string& error) {
    TSTConfig c = base;
    auto as_size = [&]() -> std::size_t {
        std::size_t out = 0;
        std::istringstream vs(value);
        if (!(vs >> out) || !(vs >> std::ws).eof() || out == 0) {
            error = "bad value '" + value + "' for " + param;
        }
        return out;
    };
    if (param == "seq_len") c.seq_len = as_size();
    else if (param == "d_model") c.d_model = as_size();
    else if (param == "n_heads") c.n_heads = as_size();
    else if (param == "d_ff") c.d_ff = as_size();
    else if (param == "n_layers") c.n_layers = as_size();
    else if (param == "dropout") {
        std::istringstream vs(value);
        if (!(vs >> c.dropout) || !(vs >> std::ws).eof()) error = "bad dropout '" + value + "'";
    } else if (param == "learned_embeddings") {
        if (value == "true") c.learned_embeddings = true;
        else if (value == "false") c.learned_embeddings = false;
        else error = "bad learned_embeddings '" + value + "' (true/false)";
    } else {
        error = "unknown ablation parameter '" + param + "'";
    }
    if (!error.empty()) return c;

    // Head dimensions follow the encoder width.
    if (c.d_model % c.n_heads != 0) {
        error = "d_model " + std::to_string(c.d_model) + " not divisible by n_heads " +
                std::to_string(c.n_heads);
        return c;
    }
    c.d_k = c.d_v = c.d_model / c.n_heads;
    try {
        c.validate();
    } catch (const ConfigError& e) {
        error = e.what();
    }
    return c;
}

}  // namespace

std::vector<AblationCell> expand_ablation_grid(const AblationGrid& grid, const TSTConfig& base) {
    std::vector<AblationCell> cells;
    for (const auto& [param, values] : grid.sweeps) {
        for (const auto& value : values) {
            AblationCell cell;
            cell.param = param;
            cell.value = value;
            std::string error;
            cell.config = apply_override(base, param, value, error);
            if (!error.empty()) {
                cell.valid = false;
                cell.reason = error;
            }
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

std::vector<AblationRow> run_ablation(const AblationGrid& grid, const TSTConfig& base,
                                      const AblationInput& input, std::size_t jobs) {
    const std::vector<AblationCell> cells = expand_ablation_grid(grid, base);
    const std::size_t n_scenarios = input.raw_test_series.size();
    std::vector<AblationRow> rows(cells.size() * std::max<std::size_t>(1, n_scenarios));

    auto run_cell = [&](std::size_t ci) {
        const AblationCell& cell = cells[ci];
        const std::size_t row_base = ci * std::max<std::size_t>(1, n_scenarios);
        if (!cell.valid) {
            for (std::size_t s = 0; s < std::max<std::size_t>(1, n_scenarios); ++s) {
                AblationRow& row = rows[row_base + s];
                row.param = cell.param;
                row.value = cell.value;
                row.scenario = s < n_scenarios ? input.raw_test_series[s].first : "";
                row.skipped = true;
                row.reason = cell.reason;
            }
            return;
        }

        PipelineTrainOptions options;
        options.config = cell.config;
        options.train = input.train;
        options.train_stride = input.train_stride;
        options.seed = input.seed;

        try {
            // Baselines are unaffected by TST hyperparameters; train only the
            // transformer here.
            Scaler scaler = fit_scaler_over(input.raw_train_blocks);
            std::vector<SequenceDataset> seq_blocks;
            for (const auto& b : input.raw_train_blocks) {
                seq_blocks.push_back(make_sequences(apply_scaler(scaler, b), cell.config.seq_len,
                                                    input.train_stride));
            }
            Rng init_rng(cell.config.seed);
            TSTParams params = tst_init(cell.config, init_rng);
            Rng train_rng(input.seed);
            train_tst(params, seq_blocks, input.train, train_rng);

            for (std::size_t s = 0; s < n_scenarios; ++s) {
                AblationRow& row = rows[row_base + s];
                row.param = cell.param;
                row.value = cell.value;
                row.scenario = input.raw_test_series[s].first;
                row.report = evaluate_tst(params, scaler, input.raw_test_series[s].second,
                                          input.eval_stride);
            }
        } catch (const Error& e) {
            for (std::size_t s = 0; s < std::max<std::size_t>(1, n_scenarios); ++s) {
                AblationRow& row = rows[row_base + s];
                row.param = cell.param;
                row.value = cell.value;
                row.scenario = s < n_scenarios ? input.raw_test_series[s].first : "";
                row.skipped = true;
                row.reason = e.what();
            }
        }
    };

    if (jobs <= 1 || cells.size() <= 1) {
        for (std::size_t ci = 0; ci < cells.size(); ++ci) run_cell(ci);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        const std::size_t n_workers = std::min(jobs, cells.size());
        workers.reserve(n_workers);
        for (std::size_t w = 0; w < n_workers; ++w) {
            workers.emplace_back([&]() {
                for (std::size_t ci = next.fetch_add(1); ci < cells.size();
                     ci = next.fetch_add(1)) {
                    run_cell(ci);
                }
            });
        }
        for (auto& t : workers) t.join();
    }
    return rows;
}

void write_ablation_csv(const std::vector<AblationRow>& rows, std::ostream& out) {
    out << "param,value,scenario,status,reason,precision,recall,accuracy,f1\n";
    char buf[128];
    for (const auto& row : rows) {
        out << row.param << ',' << row.value << ',' << row.scenario << ',';
        if (row.skipped) {
            std::string reason = row.reason;
            for (auto& ch : reason) {
                if (ch == ',' || ch == '\n') ch = ';';
            }
            out << "skipped," << reason << ",,,,\n";
        } else {
            std::snprintf(buf, sizeof(buf), "%.9f,%.9f,%.9f,%.9f", row.report.precision,
                          row.report.recall, row.report.accuracy, row.report.f1);
            out << "ok,," << buf << '\n';
        }
    }
    if (!out) throw Error("ablation csv write failed");
}

}  // namespace floodlab
