#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "floodlab/features.hpp"
#include "floodlab/rng.hpp"

namespace floodlab {

/// Average unsuccessful-search path length c(n) of a BST with n points,
/// 2*H(n-1) - 2*(n-1)/n with exact harmonic numbers. c(0) = c(1) = 0.
double iforest_c(std::size_t n);

struct IForestNode {
    int feature = -1;  // -1 marks a leaf
    double split = 0.0;
    int left = -1;
    int right = -1;
    std::size_t size = 0;  // points that reached this node (leaves only)
};

struct IForestTree {
    std::vector<IForestNode> nodes;  // node 0 is the root

    /// Path length of x: isolation depth plus c(m) at leaves holding m > 1.
    double path_length(const double* x) const;
    std::size_t depth() const;
};

/// Isolation forest over fixed-dimension vectors. Anomaly score of x is
/// 2^(-E[h(x)] / c(psi)), in (0, 1]; higher means more isolable.
struct IForestModel {
    std::vector<IForestTree> trees;
    std::size_t subsample_size = 256;
    std::size_t dim = 0;
    double threshold = 0.5;  // score cut used for classification

    double mean_path_length(const double* x) const;
    double score(const double* x) const;
    double score(const std::vector<double>& x) const;
    int predict(const std::vector<double>& x) const;  // 1 iff score >= threshold
};

/// Builds n_trees isolation trees on subsamples of size psi (drawn without
/// replacement). Split feature uniform over dimensions with spread, split
/// value uniform in the feature's range within the node. Deterministic given
/// the rng seed. Throws InsufficientData when train.size() < psi.
IForestModel iforest_fit(const std::vector<std::vector<double>>& train, std::size_t psi,
                         std::size_t n_trees, Rng& rng);

/// Picks model.threshold maximizing F1 of "score >= tau => attack" over the
/// labeled vectors.
void iforest_select_threshold(IForestModel& model, const std::vector<std::vector<double>>& vectors,
                              const std::vector<int>& labels);

// Structured text tree dump; carries the scaler so a saved model applies to
// raw window series end to end.
void write_iforest(const IForestModel& model, const Scaler& scaler, std::ostream& out);
std::pair<IForestModel, Scaler> read_iforest(std::istream& in);
void write_iforest_file(const IForestModel& model, const Scaler& scaler, const std::string& path);
std::pair<IForestModel, Scaler> read_iforest_file(const std::string& path);

}  // namespace floodlab
