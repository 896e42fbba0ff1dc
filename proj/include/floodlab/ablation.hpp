#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "floodlab/pipeline.hpp"

namespace floodlab {

// Ablation grid file: 'param = v1 v2 ...' lines, '#' comments. Recognized
// params: seq_len, d_model, n_heads, d_ff, n_layers, dropout,
// learned_embeddings. The runner sweeps one parameter at a time with the
// others held at the base configuration (the shape of the published
// sensitivity tables), re-deriving d_k = d_v = d_model / n_heads per cell.
struct AblationGrid {
    std::vector<std::pair<std::string, std::vector<std::string>>> sweeps;
};

AblationGrid parse_ablation_grid(std::istream& in);
AblationGrid load_ablation_grid(const std::string& path);

struct AblationCell {
    std::string param;
    std::string value;
    TSTConfig config;
    bool valid = true;
    std::string reason;  // set when invalid
};

/// Expands the grid against a base config; invalid cells (for example a head
/// count that does not divide d_model) are kept with valid = false.
std::vector<AblationCell> expand_ablation_grid(const AblationGrid& grid, const TSTConfig& base);

struct AblationRow {
    std::string param;
    std::string value;
    std::string scenario;
    bool skipped = false;
    std::string reason;
    EvalReport report;
};

struct AblationInput {
    std::vector<WindowSeries> raw_train_blocks;
    std::vector<std::pair<std::string, WindowSeries>> raw_test_series;  // name -> series
    TrainSpec train;
    std::size_t train_stride = 40;
    std::size_t eval_stride = 20;
    std::uint64_t seed = 42;
};

/// One train+eval per valid cell per test scenario, every cell on identical
/// data with its own seeded generators. `jobs` > 1 runs cells on a worker
/// pool; row order is independent of scheduling.
std::vector<AblationRow> run_ablation(const AblationGrid& grid, const TSTConfig& base,
                                      const AblationInput& input, std::size_t jobs = 1);

/// CSV: param,value,scenario,status,reason,precision,recall,accuracy,f1
void write_ablation_csv(const std::vector<AblationRow>& rows, std::ostream& out);

}  // namespace floodlab
