#include "gssl/graph.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "gssl/errors.hpp"
#include "gssl/rng.hpp"

namespace gssl {

void validate_graph(const Graph& g) {
    const std::size_t n = g.num_nodes();
    if (n < 1) throw InvalidArgument("graph must have at least one node");
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& e : g.edges) {
        if (e[0] >= n || e[1] >= n)
            throw InvalidArgument("edge endpoint out of range: (" + std::to_string(e[0]) + "," +
                                  std::to_string(e[1]) + ") with N=" + std::to_string(n));
        if (e[0] == e[1]) throw InvalidArgument("self-loop at node " + std::to_string(e[0]));
        auto key = std::minmax(e[0], e[1]);
        if (!seen.insert(key).second)
            throw InvalidArgument("duplicate undirected edge (" + std::to_string(key.first) + "," +
                                  std::to_string(key.second) + ")");
    }
}

std::size_t node_degree(const Graph& g, std::size_t v) {
    std::size_t d = 0;
    for (const auto& e : g.edges) d += (e[0] == v) + (e[1] == v);
    return d;
}

GraphBatch make_batch(const std::vector<Graph>& graphs) {
    if (graphs.empty()) throw InvalidArgument("make_batch: empty graph list");
    GraphBatch b;
    b.graphs = graphs;
    b.node_offsets.push_back(0);
    const std::size_t dim = graphs.front().feature_dim();
    std::size_t total = 0;
    for (const auto& g : graphs) {
        if (g.feature_dim() != dim)
            throw InvalidArgument("make_batch: feature dim mismatch " + std::to_string(g.feature_dim()) +
                                  " vs " + std::to_string(dim));
        total += g.num_nodes();
        b.node_offsets.push_back(total);
    }
    b.features = Tensor(total, dim);
    b.graph_of_node.resize(total);
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
        const Graph& g = graphs[gi];
        const std::size_t off = b.node_offsets[gi];
        for (std::size_t v = 0; v < g.num_nodes(); ++v) {
            b.graph_of_node[off + v] = gi;
            for (std::size_t c = 0; c < dim; ++c) b.features.at(off + v, c) = g.node_features.at(v, c);
        }
        for (const auto& e : g.edges) b.edges.push_back({off + e[0], off + e[1]});
    }
    return b;
}

MaskPlan plan_mask(const Graph& g, double rate, double replace_rate, std::uint64_t seed) {
    if (rate < 0.0 || rate > 1.0) throw InvalidArgument("masking rate must be in [0,1]");
    if (replace_rate < 0.0 || replace_rate > 1.0) throw InvalidArgument("replace rate must be in [0,1]");
    const std::size_t n = g.num_nodes();
    MaskPlan plan;
    plan.rng_seed = seed;
    if (rate == 0.0 || n == 0) return plan;

    std::size_t m = round_count(rate * static_cast<double>(n));
    if (m == 0) m = 1;  // rate > 0 masks at least one node
    if (m > n) m = n;

    Rng rng(seed);
    plan.masked_nodes = rng.sample_indices(n, m);
    std::sort(plan.masked_nodes.begin(), plan.masked_nodes.end());

    std::size_t r = round_count(replace_rate * static_cast<double>(m));
    if (n < 2) r = 0;  // nothing to swap with
    auto pick = rng.sample_indices(m, r);
    std::vector<char> is_replaced(m, 0);
    for (std::size_t k : pick) is_replaced[k] = 1;
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t v = plan.masked_nodes[k];
        if (is_replaced[k]) {
            plan.replaced_nodes.push_back(v);
            std::size_t src = static_cast<std::size_t>(rng.below(n - 1));
            if (src >= v) ++src;  // uniform over nodes other than v
            plan.replacement_src.push_back(src);
        } else {
            plan.token_nodes.push_back(v);
        }
    }
    return plan;
}

std::pair<Graph, MaskPlan> apply_mask(const Graph& g, double rate, double replace_rate,
                                      const Tensor& mask_token, std::uint64_t seed) {
    if (mask_token.rows != 1 || mask_token.cols != g.feature_dim())
        throw InvalidArgument("apply_mask: mask token must be 1x" + std::to_string(g.feature_dim()));
    MaskPlan plan = plan_mask(g, rate, replace_rate, seed);
    Graph out = g;
    for (std::size_t v : plan.token_nodes)
        for (std::size_t c = 0; c < out.feature_dim(); ++c) out.node_features.at(v, c) = mask_token.at(0, c);
    for (std::size_t k = 0; k < plan.replaced_nodes.size(); ++k) {
        const std::size_t v = plan.replaced_nodes[k];
        const std::size_t src = plan.replacement_src[k];
        for (std::size_t c = 0; c < out.feature_dim(); ++c)
            out.node_features.at(v, c) = g.node_features.at(src, c);
    }
    return {std::move(out), std::move(plan)};
}

AugmentPlan plan_augment(const Graph& g, const AugmentSpec& spec, std::uint64_t seed) {
    if (spec.feat_mask_rate < 0.0 || spec.feat_mask_rate > 1.0 || spec.drop_edge_rate < 0.0 ||
        spec.drop_edge_rate > 1.0)
        throw InvalidArgument("augment rates must be in [0,1]");
    AugmentPlan plan;
    {
        Rng rng(Rng::derive(seed, 0xe1));
        const std::size_t k = round_count(spec.drop_edge_rate * static_cast<double>(g.edges.size()));
        plan.dropped_edges = rng.sample_indices(g.edges.size(), k);
        std::sort(plan.dropped_edges.begin(), plan.dropped_edges.end());
    }
    {
        Rng rng(Rng::derive(seed, 0xf2));
        const std::size_t k = round_count(spec.feat_mask_rate * static_cast<double>(g.num_nodes()));
        plan.zeroed_nodes = rng.sample_indices(g.num_nodes(), k);
        std::sort(plan.zeroed_nodes.begin(), plan.zeroed_nodes.end());
    }
    return plan;
}

Graph augment(const Graph& g, const AugmentSpec& spec, std::uint64_t seed) {
    const AugmentPlan plan = plan_augment(g, spec, seed);
    Graph out = g;
    if (!plan.dropped_edges.empty()) {
        out.edges.clear();
        std::size_t next = 0;
        for (std::size_t i = 0; i < g.edges.size(); ++i) {
            if (next < plan.dropped_edges.size() && plan.dropped_edges[next] == i) {
                ++next;
                continue;
            }
            out.edges.push_back(g.edges[i]);
        }
    }
    for (std::size_t v : plan.zeroed_nodes)
        for (std::size_t c = 0; c < out.feature_dim(); ++c) out.node_features.at(v, c) = 0.0;
    return out;
}

Graph add_prompt_supernode(const Graph& g, const Tensor& mask_token) {
    if (g.num_nodes() < 1) throw InvalidArgument("add_prompt_supernode: empty graph");
    if (mask_token.rows != 1 || mask_token.cols != g.feature_dim())
        throw InvalidArgument("add_prompt_supernode: token must be 1x" + std::to_string(g.feature_dim()));
    const std::size_t n = g.num_nodes();
    Graph out;
    out.label = g.label;
    out.id = g.id;
    out.node_features = Tensor(n + 1, g.feature_dim());
    for (std::size_t c = 0; c < g.feature_dim(); ++c) out.node_features.at(0, c) = mask_token.at(0, c);
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t c = 0; c < g.feature_dim(); ++c)
            out.node_features.at(v + 1, c) = g.node_features.at(v, c);
    out.edges.reserve(g.edges.size() + n);
    for (std::size_t v = 0; v < n; ++v) out.edges.push_back({0, v + 1});
    for (const auto& e : g.edges) out.edges.push_back({e[0] + 1, e[1] + 1});
    return out;
}

}  // namespace gssl
