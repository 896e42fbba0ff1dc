#include "floodlab/tst.hpp"

#include <cmath>

#include "floodlab/error.hpp"

namespace floodlab {

void TSTConfig::validate() const {
    if (seq_len == 0 || d_model == 0 || n_heads == 0 || d_ff == 0 || n_layers == 0 ||
        batch_size == 0 || d_k == 0 || d_v == 0) {
        throw ConfigError("TST config fields must be positive");
    }
    if (n_heads * d_k != d_model) {
        throw ConfigError("n_heads * d_k must equal d_model (" + std::to_string(n_heads) + " * " +
                          std::to_string(d_k) + " != " + std::to_string(d_model) + ")");
    }
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
}

namespace {

Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t({fan_in, fan_out});
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-bound, bound);
    return t;
}

Tensor zeros(std::size_t n) {
    Tensor t({n});
    t.fill(0.0);
    return t;
}

}  // namespace

Tensor sinusoidal_embedding(std::size_t seq_len, std::size_t d_model) {
    Tensor t({seq_len, d_model});
    for (std::size_t pos = 0; pos < seq_len; ++pos) {
        for (std::size_t i = 0; i < d_model; ++i) {
            const double exponent = static_cast<double>(2 * (i / 2)) / static_cast<double>(d_model);
            const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
            t[pos * d_model + i] = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return t;
}

TSTParams tst_init(const TSTConfig& config, Rng& rng) {
    config.validate();
    TSTParams p;
    p.config = config;

    p.input_proj_w = xavier_uniform(1, config.d_model, rng);
    p.input_proj_b = zeros(config.d_model);

    if (config.learned_embeddings) {
        p.pos_embedding = Tensor({config.seq_len, config.d_model});
        for (std::size_t i = 0; i < p.pos_embedding.numel(); ++i) {
            p.pos_embedding[i] = rng.normal(0.0, 0.02);
        }
    } else {
        p.pos_embedding = sinusoidal_embedding(config.seq_len, config.d_model);
    }

    p.layers.resize(config.n_layers);
    for (auto& layer : p.layers) {
        layer.w_q = xavier_uniform(config.d_model, config.n_heads * config.d_k, rng);
        layer.b_q = zeros(config.n_heads * config.d_k);
        layer.w_k = xavier_uniform(config.d_model, config.n_heads * config.d_k, rng);
        layer.b_k = zeros(config.n_heads * config.d_k);
        layer.w_v = xavier_uniform(config.d_model, config.n_heads * config.d_v, rng);
        layer.b_v = zeros(config.n_heads * config.d_v);
        layer.w_o = xavier_uniform(config.n_heads * config.d_v, config.d_model, rng);
        layer.b_o = zeros(config.d_model);
        layer.bn_attn = BatchNormParams::make(config.d_model);
        layer.bn_ff = BatchNormParams::make(config.d_model);
        layer.w_ff1 = xavier_uniform(config.d_model, config.d_ff, rng);
        layer.b_ff1 = zeros(config.d_ff);
        layer.w_ff2 = xavier_uniform(config.d_ff, config.d_model, rng);
        layer.b_ff2 = zeros(config.d_model);
    }

    p.head_w = xavier_uniform(config.seq_len * config.d_model, 1, rng);
    p.head_b = zeros(1);
    return p;
}

std::vector<Tensor*> TSTParams::trainable() {
    std::vector<Tensor*> out;
    out.push_back(&input_proj_w);
    out.push_back(&input_proj_b);
    if (config.learned_embeddings) out.push_back(&pos_embedding);
    for (auto& l : layers) {
        for (Tensor* t : {&l.w_q, &l.b_q, &l.w_k, &l.b_k, &l.w_v, &l.b_v, &l.w_o, &l.b_o,
                          &l.bn_attn.gamma, &l.bn_attn.beta, &l.w_ff1, &l.b_ff1, &l.w_ff2,
                          &l.b_ff2, &l.bn_ff.gamma, &l.bn_ff.beta}) {
            out.push_back(t);
        }
    }
    out.push_back(&head_w);
    out.push_back(&head_b);
    return out;
}

std::vector<std::pair<std::string, Tensor*>> TSTParams::named_state() {
    std::vector<std::pair<std::string, Tensor*>> out;
    out.emplace_back("input_proj.w", &input_proj_w);
    out.emplace_back("input_proj.b", &input_proj_b);
    out.emplace_back("pos_embedding", &pos_embedding);
    for (std::size_t i = 0; i < layers.size(); ++i) {
        auto& l = layers[i];
        const std::string prefix = "layer" + std::to_string(i) + ".";
        out.emplace_back(prefix + "w_q", &l.w_q);
        out.emplace_back(prefix + "b_q", &l.b_q);
        out.emplace_back(prefix + "w_k", &l.w_k);
        out.emplace_back(prefix + "b_k", &l.b_k);
        out.emplace_back(prefix + "w_v", &l.w_v);
        out.emplace_back(prefix + "b_v", &l.b_v);
        out.emplace_back(prefix + "w_o", &l.w_o);
        out.emplace_back(prefix + "b_o", &l.b_o);
        out.emplace_back(prefix + "bn_attn.gamma", &l.bn_attn.gamma);
        out.emplace_back(prefix + "bn_attn.beta", &l.bn_attn.beta);
        out.emplace_back(prefix + "bn_attn.running_mean", &l.bn_attn.running_mean);
        out.emplace_back(prefix + "bn_attn.running_var", &l.bn_attn.running_var);
        out.emplace_back(prefix + "w_ff1", &l.w_ff1);
        out.emplace_back(prefix + "b_ff1", &l.b_ff1);
        out.emplace_back(prefix + "w_ff2", &l.w_ff2);
        out.emplace_back(prefix + "b_ff2", &l.b_ff2);
        out.emplace_back(prefix + "bn_ff.gamma", &l.bn_ff.gamma);
        out.emplace_back(prefix + "bn_ff.beta", &l.bn_ff.beta);
        out.emplace_back(prefix + "bn_ff.running_mean", &l.bn_ff.running_mean);
        out.emplace_back(prefix + "bn_ff.running_var", &l.bn_ff.running_var);
    }
    out.emplace_back("head.w", &head_w);
    out.emplace_back("head.b", &head_b);
    return out;
}

std::size_t TSTParams::param_count() {
    std::size_t n = 0;
    for (Tensor* t : trainable()) n += t->numel();
    return n;
}

TSTParams TSTParams::clone() const {
    TSTParams out;
    out.config = config;
    out.input_proj_w = input_proj_w.clone();
    out.input_proj_b = input_proj_b.clone();
    out.pos_embedding = pos_embedding.clone();
    out.layers.resize(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& src = layers[i];
        auto& dst = out.layers[i];
        dst.w_q = src.w_q.clone();
        dst.b_q = src.b_q.clone();
        dst.w_k = src.w_k.clone();
        dst.b_k = src.b_k.clone();
        dst.w_v = src.w_v.clone();
        dst.b_v = src.b_v.clone();
        dst.w_o = src.w_o.clone();
        dst.b_o = src.b_o.clone();
        dst.bn_attn = {src.bn_attn.gamma.clone(), src.bn_attn.beta.clone(),
                       src.bn_attn.running_mean.clone(), src.bn_attn.running_var.clone()};
        dst.bn_ff = {src.bn_ff.gamma.clone(), src.bn_ff.beta.clone(),
                     src.bn_ff.running_mean.clone(), src.bn_ff.running_var.clone()};
        dst.w_ff1 = src.w_ff1.clone();
        dst.b_ff1 = src.b_ff1.clone();
        dst.w_ff2 = src.w_ff2.clone();
        dst.b_ff2 = src.b_ff2.clone();
    }
    out.head_w = head_w.clone();
    out.head_b = head_b.clone();
    return out;
}

namespace {

struct LeafBinder {
    Graph& g;
    Mode mode;
    std::vector<std::pair<Tensor*, Var>>* bound;

    Var operator()(Tensor& t, bool trainable_tensor = true) {
        Var v = g.leaf(t, mode == Mode::TRAIN && trainable_tensor);
        if (bound && mode == Mode::TRAIN && trainable_tensor) bound->emplace_back(&t, v);
        return v;
    }
};

}  // namespace

namespace {

Var mha_block(Graph& g, Var x, const TSTConfig& config, Var w_q, Var b_q, Var w_k, Var b_k,
              Var w_v, Var b_v, Var w_o, Var b_o) {
    const std::size_t b = x->value.dim(0);
    const std::size_t s = x->value.dim(1);
    const std::size_t h = config.n_heads;
    const std::size_t dk = config.d_k;
    const std::size_t dv = config.d_v;

    auto project = [&](Var w, Var bias, std::size_t dh) {
        Var p = g.add(g.matmul(x, w), bias);             // [b, s, h*dh]
        Var r = g.reshape(p, {b, s, h, dh});             // split heads
        return g.permute4(r, {0, 2, 1, 3});              // [b, h, s, dh]
    };
    Var q = project(w_q, b_q, dk);
    Var k = project(w_k, b_k, dk);
    Var v = project(w_v, b_v, dv);

    Var ctx = g.attention(q, k, v, 1.0 / std::sqrt(static_cast<double>(dk)));  // [b, h, s, dv]
    Var merged = g.reshape(g.permute4(ctx, {0, 2, 1, 3}), {b, s, h * dv});
    return g.add(g.matmul(merged, w_o), b_o);                   // [b, s, d_model]
}

}  // namespace

Tensor mha_forward(TSTParams& params, std::size_t layer_index, const Tensor& x) {
    if (layer_index >= params.layers.size()) throw InvalidArgument("layer index out of range");
    auto& layer = params.layers[layer_index];
    Graph g;
    Var xv = g.leaf(x, false);
    Var out = mha_block(g, xv, params.config, g.leaf(layer.w_q, false), g.leaf(layer.b_q, false),
                        g.leaf(layer.w_k, false), g.leaf(layer.b_k, false),
                        g.leaf(layer.w_v, false), g.leaf(layer.b_v, false),
                        g.leaf(layer.w_o, false), g.leaf(layer.b_o, false));
    return out->value;
}

Var tst_graph(Graph& g, TSTParams& params, Var x, Mode mode, Rng* rng,
              std::vector<std::pair<Tensor*, Var>>* bound) {
    const TSTConfig& cfg = params.config;
    if (x->value.rank() != 3 || x->value.dim(1) != cfg.seq_len || x->value.dim(2) != 1) {
        throw ShapeError("tst input must be [batch, seq_len, 1]");
    }
    if (mode == Mode::TRAIN && cfg.dropout > 0.0 && rng == nullptr) {
        throw InvalidArgument("train-mode forward with dropout needs an rng");
    }
    const std::size_t b = x->value.dim(0);
    LeafBinder bind{g, mode, bound};

    // Pointwise input projection (kernel-1 conv) then positional embeddings.
    Var hidden = g.add(g.matmul(x, bind(params.input_proj_w)), bind(params.input_proj_b));
    Var pos = bind(params.pos_embedding, cfg.learned_embeddings);
    hidden = g.add(hidden, pos);
    if (rng) hidden = g.dropout(hidden, cfg.dropout, *rng, mode);

    for (auto& layer : params.layers) {
        Var attn = mha_block(g, hidden, cfg, bind(layer.w_q), bind(layer.b_q), bind(layer.w_k),
                             bind(layer.b_k), bind(layer.w_v), bind(layer.b_v), bind(layer.w_o),
                             bind(layer.b_o));
        if (rng) attn = g.dropout(attn, cfg.dropout, *rng, mode);
        hidden = g.batch_norm(g.add(attn, hidden), bind(layer.bn_attn.gamma),
                              bind(layer.bn_attn.beta), layer.bn_attn, mode);

        Var ff = g.add(g.matmul(g.gelu(g.add(g.matmul(hidden, bind(layer.w_ff1)),
                                             bind(layer.b_ff1))),
                                bind(layer.w_ff2)),
                       bind(layer.b_ff2));
        if (rng) ff = g.dropout(ff, cfg.dropout, *rng, mode);
        hidden = g.batch_norm(g.add(ff, hidden), bind(layer.bn_ff.gamma), bind(layer.bn_ff.beta),
                              layer.bn_ff, mode);
    }

    Var flat = g.reshape(hidden, {b, cfg.seq_len * cfg.d_model});
    Var logits = g.add(g.matmul(flat, bind(params.head_w)), bind(params.head_b));
    return g.reshape(logits, {b});
}

Tensor tst_forward(TSTParams& params, const Tensor& x, Mode mode, Rng* rng) {
    Graph g;
    Var xv = g.leaf(x, false);
    return tst_graph(g, params, xv, mode, rng, nullptr)->value;
}

Tensor pack_sequences(const SequenceDataset& ds, const std::vector<std::size_t>& indices) {
    Tensor batch({indices.size(), ds.seq_len, 1});
    double* p = batch.data();
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const double* src = ds.sequence(indices[i]);
        std::copy(src, src + ds.seq_len, p + i * ds.seq_len);
    }
    return batch;
}

std::vector<double> tst_logits(TSTParams& params, const SequenceDataset& ds,
                               std::size_t batch_size) {
    if (ds.seq_len != params.config.seq_len) {
        throw ShapeError("dataset seq_len " + std::to_string(ds.seq_len) +
                         " does not match model seq_len " +
                         std::to_string(params.config.seq_len));
    }
    std::vector<double> out;
    out.reserve(ds.size());
    std::vector<std::size_t> indices;
    for (std::size_t i = 0; i < ds.size(); i += batch_size) {
        indices.clear();
        for (std::size_t j = i; j < std::min(ds.size(), i + batch_size); ++j) indices.push_back(j);
        Tensor logits = tst_forward(params, pack_sequences(ds, indices), Mode::EVAL);
        for (std::size_t j = 0; j < logits.numel(); ++j) out.push_back(logits[j]);
    }
    return out;
}

std::vector<int> tst_predict(TSTParams& params, const SequenceDataset& ds, double threshold,
                             std::size_t batch_size) {
    std::vector<double> logits = tst_logits(params, ds, batch_size);
    std::vector<int> labels(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double prob = 1.0 / (1.0 + std::exp(-logits[i]));
        labels[i] = prob >= threshold ? 1 : 0;
    }
    return labels;
}

}  // namespace floodlab
