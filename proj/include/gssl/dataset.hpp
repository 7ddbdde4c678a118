#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gssl/graph.hpp"

namespace gssl {

enum class FeatureKind { node_label_onehot, degree_onehot, none };

std::string to_string(FeatureKind k);

struct DatasetBundle {
    std::vector<Graph> graphs;
    std::size_t num_classes = 0;
    FeatureKind feature_kind = FeatureKind::none;
    std::string name;
    std::uint64_t checksum = 0;

    std::size_t size() const { return graphs.size(); }
    double avg_nodes() const;
    double avg_undirected_edges() const;
    std::size_t feature_dim() const { return graphs.empty() ? 0 : graphs.front().feature_dim(); }
    std::size_t max_degree() const;
};

// Reads <root>/<name>/<name>_A.txt (1-based "u, v" pairs), _graph_indicator.txt,
// _graph_labels.txt and, when present, _node_labels.txt. Duplicate directed pairs
// collapse to one undirected edge; graph labels remap to contiguous 0..C-1; node
// labels one-hot encode. Without node labels the bundle comes back featureless
// (FeatureKind::none) and needs degree_featurize.
DatasetBundle parse_tudataset(const std::string& root, const std::string& name);

// One-hot of min(degree, cap); cap == 0 means the dataset's max degree.
DatasetBundle degree_featurize(const DatasetBundle& bundle, std::size_t cap = 0);

std::uint64_t bundle_checksum(const DatasetBundle& bundle);

// Binary cache: <prefix>.idx.json (structure) + <prefix>.feat.bin (feature matrix
// in the checkpoint container format).
void save_bundle_cache(const DatasetBundle& bundle, const std::string& prefix);
DatasetBundle load_bundle_cache(const std::string& prefix);

struct SplitSpec {
    enum class Kind { kfold, label_rate, kshot };
    Kind kind = Kind::kfold;
    std::size_t k = 0;        // folds for kfold, shots for kshot
    double fraction = 0.0;    // label_rate
    std::uint64_t seed = 0;
    // kfold: one part per fold; label_rate and kshot: {train, test}.
    std::vector<std::vector<std::size_t>> parts;
};

SplitSpec make_kfold(const DatasetBundle& bundle, std::size_t k, std::uint64_t seed);
SplitSpec make_label_rate(const DatasetBundle& bundle, double fraction, std::uint64_t seed);
SplitSpec make_kshot(const DatasetBundle& bundle, std::size_t k, std::uint64_t seed);

// Train/test views for fold f of a k-fold spec (test = fold f).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> kfold_train_test(const SplitSpec& spec,
                                                                               std::size_t fold);

// Two-class synthetic set for smoke runs: rings with one node-type palette
// against hubs with another, plus label-noise on node types.
DatasetBundle make_synthetic_two_class(std::size_t n_graphs, std::uint64_t seed);

}  // namespace gssl
