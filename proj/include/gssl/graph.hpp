#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "gssl/tensor.hpp"

namespace gssl {

// One undirected graph. Edges are stored once per unordered pair with distinct
// endpoints; the directed expansion is implicit and symmetric.
struct Graph {
    Tensor node_features;                         // N x D
    std::vector<std::array<std::size_t, 2>> edges;  // unique undirected pairs, u != v
    std::optional<int> label;
    std::size_t id = 0;

    std::size_t num_nodes() const { return node_features.rows; }
    std::size_t feature_dim() const { return node_features.cols; }
};

// Throws InvalidArgument if endpoints are out of range, a self-loop is present,
// or an undirected pair appears twice.
void validate_graph(const Graph& g);

std::size_t node_degree(const Graph& g, std::size_t v);

// Block-diagonal view of several graphs. Node rows are stacked in graph order.
struct GraphBatch {
    std::vector<Graph> graphs;
    std::vector<std::size_t> node_offsets;  // size graphs+1, strictly increasing
    std::vector<std::size_t> graph_of_node;
    std::vector<std::array<std::size_t, 2>> edges;  // global indices
    Tensor features;                                // total nodes x D

    std::size_t total_nodes() const { return node_offsets.empty() ? 0 : node_offsets.back(); }
    std::size_t size() const { return graphs.size(); }
};

GraphBatch make_batch(const std::vector<Graph>& graphs);

struct MaskPlan {
    std::vector<std::size_t> masked_nodes;    // token_nodes ∪ replaced_nodes, sorted
    std::vector<std::size_t> token_nodes;
    std::vector<std::size_t> replaced_nodes;
    std::vector<std::size_t> replacement_src;  // source node per replaced node
    std::uint64_t rng_seed = 0;
};

struct AugmentSpec {
    double feat_mask_rate = 0.0;
    double drop_edge_rate = 0.0;
};

// Choose the masked set without touching features: round-half-up counts, at
// least one node masked when rate > 0.
MaskPlan plan_mask(const Graph& g, double rate, double replace_rate, std::uint64_t seed);

// Copy of g with token nodes set to mask_token and replaced nodes set to another
// node's original features. Pure; identical plan for identical seeds.
std::pair<Graph, MaskPlan> apply_mask(const Graph& g, double rate, double replace_rate,
                                      const Tensor& mask_token, std::uint64_t seed);

// Feature rows to zero and undirected edges to remove for one augmentation draw.
struct AugmentPlan {
    std::vector<std::size_t> zeroed_nodes;
    std::vector<std::size_t> dropped_edges;  // indices into g.edges
};

AugmentPlan plan_augment(const Graph& g, const AugmentSpec& spec, std::uint64_t seed);
Graph augment(const Graph& g, const AugmentSpec& spec, std::uint64_t seed);

// New graph with a super node at index 0 whose features are mask_token, connected
// to every original node; original indices shift by +1.
Graph add_prompt_supernode(const Graph& g, const Tensor& mask_token);

}  // namespace gssl
