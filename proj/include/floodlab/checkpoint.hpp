#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "floodlab/features.hpp"
#include "floodlab/tensor.hpp"
#include "floodlab/tst.hpp"

namespace floodlab {

// Flat named-tensor container, version 1:
//
//   FLOODLAB-TENSORS v1\n
//   <one-line JSON header>\n
//   tensor <name> <rank> <d0> <d1> ...\n
//   <numel * 8 bytes of little-endian IEEE-754 doubles>
//   ... repeated per tensor ...
//   end\n
//
// The JSON header carries whatever the producer needs (model config, scaler).

void write_named_tensors(std::ostream& out, const std::string& header_json,
                         const std::vector<std::pair<std::string, const Tensor*>>& tensors);

struct NamedTensors {
    std::string header_json;
    std::vector<std::pair<std::string, Tensor>> tensors;

    const Tensor& find(const std::string& name) const;
};

NamedTensors read_named_tensors(std::istream& in);

/// TST model checkpoint: config + the scaler it was trained with + all state
/// tensors (including batch-norm running statistics).
void save_tst_checkpoint(TSTParams& params, const Scaler& scaler, const std::string& path);

struct TSTCheckpoint {
    TSTParams params;
    Scaler scaler;
};

TSTCheckpoint load_tst_checkpoint(const std::string& path);

}  // namespace floodlab
