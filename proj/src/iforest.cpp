#include "floodlab/iforest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "floodlab/error.hpp"

namespace floodlab {

double iforest_c(std::size_t n) {
    if (n <= 1) return 0.0;
    double harmonic = 0.0;
    for (std::size_t k = 1; k + 1 <= n; ++k) harmonic += 1.0 / static_cast<double>(k);
    return 2.0 * harmonic - 2.0 * static_cast<double>(n - 1) / static_cast<double>(n);
}

double IForestTree::path_length(const double* x) const {
    std::size_t depth = 0;
    int idx = 0;
    while (nodes[idx].feature >= 0) {
        idx = x[nodes[idx].feature] < nodes[idx].split ? nodes[idx].left : nodes[idx].right;
        ++depth;
    }
    return static_cast<double>(depth) + iforest_c(nodes[idx].size);
}

std::size_t IForestTree::depth() const {
    // Iterative depth computation over the explicit node array.
    std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
    std::size_t best = 0;
    while (!stack.empty()) {
        auto [idx, d] = stack.back();
        stack.pop_back();
        best = std::max(best, d);
        if (nodes[idx].feature >= 0) {
            stack.push_back({nodes[idx].left, d + 1});
            stack.push_back({nodes[idx].right, d + 1});
        }
    }
    return best;
}

double IForestModel::mean_path_length(const double* x) const {
    double sum = 0.0;
    for (const auto& tree : trees) sum += tree.path_length(x);
    return sum / static_cast<double>(trees.size());
}

double IForestModel::score(const double* x) const {
    return std::pow(2.0, -mean_path_length(x) / iforest_c(subsample_size));
}

double IForestModel::score(const std::vector<double>& x) const {
    if (x.size() != dim) throw InvalidArgument("iforest score: wrong input dimension");
    return score(x.data());
}

int IForestModel::predict(const std::vector<double>& x) const {
    return score(x) >= threshold ? 1 : 0;
}

namespace {

struct TreeBuilder {
    const std::vector<std::vector<double>>& data;
    std::size_t dim;
    std::size_t depth_limit;
    Rng& rng;
    IForestTree tree;

    int build(std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi, std::size_t depth) {
        const std::size_t count = hi - lo;
        const int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({});
        if (count <= 1 || depth >= depth_limit) {
            tree.nodes[node_id].size = count;
            return node_id;
        }

        // Choose a split feature with spread; give up (leaf) if none has any.
        std::vector<std::size_t> candidates(dim);
        std::iota(candidates.begin(), candidates.end(), 0);
        int feature = -1;
        double fmin = 0.0, fmax = 0.0;
        while (!candidates.empty()) {
            const std::size_t pick = rng.uniform_int(candidates.size());
            const std::size_t f = candidates[pick];
            fmin = fmax = data[idx[lo]][f];
            for (std::size_t i = lo + 1; i < hi; ++i) {
                fmin = std::min(fmin, data[idx[i]][f]);
                fmax = std::max(fmax, data[idx[i]][f]);
            }
            if (fmax > fmin) {
                feature = static_cast<int>(f);
                break;
            }
            candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pick));
        }
        if (feature < 0) {
            tree.nodes[node_id].size = count;
            return node_id;
        }

        const double split = rng.uniform(fmin, fmax);
        auto mid_it = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(lo),
                                     idx.begin() + static_cast<std::ptrdiff_t>(hi),
                                     [&](std::size_t i) { return data[i][static_cast<std::size_t>(feature)] < split; });
        std::size_t mid = static_cast<std::size_t>(mid_it - idx.begin());
        // A degenerate cut (all points on one side) still terminates because
        // the depth limit caps recursion.
        tree.nodes[node_id].feature = feature;
        tree.nodes[node_id].split = split;
        const int left = build(idx, lo, mid, depth + 1);
        const int right = build(idx, mid, hi, depth + 1);
        tree.nodes[node_id].left = left;
        tree.nodes[node_id].right = right;
        return node_id;
    }
};

}  // namespace

IForestModel iforest_fit(const std::vector<std::vector<double>>& train, std::size_t psi,
                         std::size_t n_trees, Rng& rng) {
    if (psi < 2) throw InvalidArgument("iforest subsample size must be at least 2");
    if (n_trees == 0) throw InvalidArgument("iforest needs at least one tree");
    if (train.size() < psi) {
        throw InsufficientData("iforest_fit: " + std::to_string(train.size()) +
                               " vectors is fewer than psi " + std::to_string(psi));
    }
    const std::size_t dim = train.front().size();
    for (const auto& v : train) {
        if (v.size() != dim) throw InvalidArgument("iforest_fit: ragged input vectors");
    }

    IForestModel model;
    model.subsample_size = psi;
    model.dim = dim;
    const std::size_t depth_limit =
        static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(psi))));

    for (std::size_t t = 0; t < n_trees; ++t) {
        // Partial Fisher-Yates: first psi entries become the subsample.
        std::vector<std::size_t> pool(train.size());
        std::iota(pool.begin(), pool.end(), 0);
        for (std::size_t i = 0; i < psi; ++i) {
            const std::size_t j = i + rng.uniform_int(pool.size() - i);
            std::swap(pool[i], pool[j]);
        }
        std::vector<std::size_t> sample(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(psi));

        TreeBuilder builder{train, dim, depth_limit, rng, {}};
        builder.build(sample, 0, psi, 0);
        model.trees.push_back(std::move(builder.tree));
    }
    return model;
}

void iforest_select_threshold(IForestModel& model, const std::vector<std::vector<double>>& vectors,
                              const std::vector<int>& labels) {
    if (vectors.size() != labels.size()) {
        throw InvalidArgument("iforest_select_threshold: size mismatch");
    }
    if (vectors.empty()) throw InsufficientData("iforest_select_threshold: empty data");

    std::vector<std::pair<double, int>> scored(vectors.size());
    std::size_t total_pos = 0;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        scored[i] = {model.score(vectors[i]), labels[i]};
        total_pos += static_cast<std::size_t>(labels[i]);
    }
    std::sort(scored.begin(), scored.end());

    // Sweep tau over the sorted scores; predicting 1 for score >= tau.
    // Start with tau below the minimum (everything predicted positive).
    std::size_t tp = total_pos;
    std::size_t fp = vectors.size() - total_pos;
    auto f1_of = [&](std::size_t tp_, std::size_t fp_) {
        const std::size_t fn_ = total_pos - tp_;
        const double denom = static_cast<double>(2 * tp_ + fp_ + fn_);
        return denom > 0.0 ? 2.0 * static_cast<double>(tp_) / denom : 0.0;
    };
    double best_f1 = f1_of(tp, fp);
    double best_tau = scored.front().first - 1e-12;
    std::size_t i = 0;
    while (i < scored.size()) {
        // Raise tau just above scored[i..j-1] (ties move together).
        std::size_t j = i;
        while (j < scored.size() && scored[j].first == scored[i].first) {
            if (scored[j].second == 1) --tp;
            else --fp;
            ++j;
        }
        if (j < scored.size()) {
            const double f1 = f1_of(tp, fp);
            if (f1 > best_f1) {
                best_f1 = f1;
                best_tau = 0.5 * (scored[j - 1].first + scored[j].first);
            }
        }
        i = j;
    }
    model.threshold = best_tau;
}

// ---------------------------------------------------------------------------
// Serialization

void write_iforest(const IForestModel& model, const Scaler& scaler, std::ostream& out) {
    char buf[160];
    out << "FLOODLAB-IFOREST v1\n";
    out << "psi " << model.subsample_size << "\n";
    out << "dim " << model.dim << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", model.threshold);
    out << "tau " << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g %.17g", scaler.mean, scaler.std);
    out << "scaler " << buf << "\n";
    out << "trees " << model.trees.size() << "\n";
    for (const auto& tree : model.trees) {
        out << "tree " << tree.nodes.size() << "\n";
        for (const auto& n : tree.nodes) {
            if (n.feature < 0) {
                out << "leaf " << n.size << "\n";
            } else {
                std::snprintf(buf, sizeof(buf), "%.17g", n.split);
                out << "node " << n.feature << ' ' << buf << ' ' << n.left << ' ' << n.right
                    << "\n";
            }
        }
    }
    if (!out) throw Error("iforest write failed");
}

std::pair<IForestModel, Scaler> read_iforest(std::istream& in) {
    std::string line;
    auto next_line = [&](const char* what) {
        if (!std::getline(in, line)) throw FormatError(std::string("iforest file: missing ") + what);
        return line;
    };
    if (next_line("magic") != "FLOODLAB-IFOREST v1") {
        throw FormatError("iforest file: bad magic");
    }
    IForestModel model;
    Scaler scaler;
    std::size_t n_trees = 0;
    {
        std::istringstream ls(next_line("psi"));
        std::string key;
        if (!(ls >> key >> model.subsample_size) || key != "psi") throw FormatError("iforest: psi");
    }
    {
        std::istringstream ls(next_line("dim"));
        std::string key;
        if (!(ls >> key >> model.dim) || key != "dim") throw FormatError("iforest: dim");
    }
    {
        std::istringstream ls(next_line("tau"));
        std::string key;
        if (!(ls >> key >> model.threshold) || key != "tau") throw FormatError("iforest: tau");
    }
    {
        std::istringstream ls(next_line("scaler"));
        std::string key;
        if (!(ls >> key >> scaler.mean >> scaler.std) || key != "scaler") {
            throw FormatError("iforest: scaler");
        }
    }
    {
        std::istringstream ls(next_line("trees"));
        std::string key;
        if (!(ls >> key >> n_trees) || key != "trees") throw FormatError("iforest: trees");
    }
    for (std::size_t t = 0; t < n_trees; ++t) {
        std::istringstream ls(next_line("tree"));
        std::string key;
        std::size_t n_nodes = 0;
        if (!(ls >> key >> n_nodes) || key != "tree") throw FormatError("iforest: tree header");
        IForestTree tree;
        for (std::size_t i = 0; i < n_nodes; ++i) {
            std::istringstream ns(next_line("node"));
            std::string kind;
            ns >> kind;
            IForestNode node;
            if (kind == "leaf") {
                if (!(ns >> node.size)) throw FormatError("iforest: leaf node");
            } else if (kind == "node") {
                if (!(ns >> node.feature >> node.split >> node.left >> node.right)) {
                    throw FormatError("iforest: split node");
                }
            } else {
                throw FormatError("iforest: unknown node kind '" + kind + "'");
            }
            tree.nodes.push_back(node);
        }
        model.trees.push_back(std::move(tree));
    }
    return {std::move(model), scaler};
}

void write_iforest_file(const IForestModel& model, const Scaler& scaler,
                        const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write iforest file '" + path + "'");
    write_iforest(model, scaler, out);
}

std::pair<IForestModel, Scaler> read_iforest_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open iforest file '" + path + "'");
    return read_iforest(in);
}

}  // namespace floodlab
