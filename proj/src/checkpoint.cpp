#include "floodlab/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "floodlab/error.hpp"

namespace floodlab {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; add byte swapping for this platform");

constexpr const char* kMagic = "FLOODLAB-TENSORS v1";

}  // namespace

void write_named_tensors(std::ostream& out, const std::string& header_json,
                         const std::vector<std::pair<std::string, const Tensor*>>& tensors) {
    out << kMagic << '\n' << header_json << '\n';
    for (const auto& [name, tensor] : tensors) {
        out << "tensor " << name << ' ' << tensor->rank();
        for (std::size_t d : tensor->shape()) out << ' ' << d;
        out << '\n';
        out.write(reinterpret_cast<const char*>(tensor->data()),
                  static_cast<std::streamsize>(tensor->numel() * sizeof(double)));
    }
    out << "end\n";
    if (!out) throw Error("checkpoint write failed");
}

NamedTensors read_named_tensors(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kMagic) {
        throw FormatError("checkpoint: bad magic (expected '" + std::string(kMagic) + "')");
    }
    NamedTensors out;
    if (!std::getline(in, out.header_json)) throw FormatError("checkpoint: missing header");

    while (std::getline(in, line)) {
        if (line == "end") return out;
        std::istringstream ls(line);
        std::string kind, name;
        std::size_t rank = 0;
        if (!(ls >> kind >> name >> rank) || kind != "tensor") {
            throw FormatError("checkpoint: bad tensor line '" + line + "'");
        }
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) {
            if (!(ls >> d)) throw FormatError("checkpoint: bad shape in '" + line + "'");
        }
        Tensor t(shape);
        in.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.numel() * sizeof(double)));
        if (!in) throw FormatError("checkpoint: truncated tensor data for '" + name + "'");
        out.tensors.emplace_back(name, std::move(t));
    }
    throw FormatError("checkpoint: missing end marker");
}

const Tensor& NamedTensors::find(const std::string& name) const {
    for (const auto& [n, t] : tensors) {
        if (n == name) return t;
    }
    throw FormatError("checkpoint: missing tensor '" + name + "'");
}

void save_tst_checkpoint(TSTParams& params, const Scaler& scaler, const std::string& path) {
    nlohmann::json header;
    header["model"] = "tst";
    const TSTConfig& c = params.config;
    header["config"] = {{"seq_len", c.seq_len},   {"d_model", c.d_model},
                        {"n_heads", c.n_heads},   {"d_ff", c.d_ff},
                        {"n_layers", c.n_layers}, {"dropout", c.dropout},
                        {"batch_size", c.batch_size}, {"d_k", c.d_k},
                        {"d_v", c.d_v},           {"learned_embeddings", c.learned_embeddings},
                        {"seed", c.seed}};
    header["scaler"] = {{"mean", scaler.mean}, {"std", scaler.std}};

    std::vector<std::pair<std::string, const Tensor*>> tensors;
    for (auto& [name, tensor] : params.named_state()) tensors.emplace_back(name, tensor);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint '" + path + "'");
    write_named_tensors(out, header.dump(), tensors);
}

TSTCheckpoint load_tst_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint '" + path + "'");
    NamedTensors nt = read_named_tensors(in);

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(nt.header_json);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint: bad JSON header: ") + e.what());
    }
    if (header.value("model", "") != "tst") throw FormatError("checkpoint: not a TST model");

    TSTCheckpoint ckpt;
    const auto& jc = header.at("config");
    TSTConfig& c = ckpt.params.config;
    c.seq_len = jc.at("seq_len").get<std::size_t>();
    c.d_model = jc.at("d_model").get<std::size_t>();
    c.n_heads = jc.at("n_heads").get<std::size_t>();
    c.d_ff = jc.at("d_ff").get<std::size_t>();
    c.n_layers = jc.at("n_layers").get<std::size_t>();
    c.dropout = jc.at("dropout").get<double>();
    c.batch_size = jc.at("batch_size").get<std::size_t>();
    c.d_k = jc.at("d_k").get<std::size_t>();
    c.d_v = jc.at("d_v").get<std::size_t>();
    c.learned_embeddings = jc.at("learned_embeddings").get<bool>();
    c.seed = jc.at("seed").get<std::uint64_t>();
    c.validate();
    ckpt.scaler.mean = header.at("scaler").at("mean").get<double>();
    ckpt.scaler.std = header.at("scaler").at("std").get<double>();

    // Materialize the parameter structure, then overwrite every tensor from
    // the file (shape-checked).
    Rng scratch(0);
    ckpt.params = tst_init(c, scratch);
    ckpt.params.config = c;
    for (auto& [name, tensor] : ckpt.params.named_state()) {
        const Tensor& stored = nt.find(name);
        if (stored.shape() != tensor->shape()) {
            throw FormatError("checkpoint: tensor '" + name + "' has unexpected shape");
        }
        *tensor = stored.clone();
    }
    return ckpt;
}

}  // namespace floodlab
