#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "gssl/dataset.hpp"
#include "gssl/errors.hpp"
#include "gssl/graph.hpp"
#include "gssl/rng.hpp"

#include "test_util.hpp"

using namespace gssl;

namespace {

Graph path_graph(std::size_t n, std::size_t dim = 3) {
    Graph g;
    g.node_features = Tensor(n, dim);
    for (std::size_t v = 0; v < n; ++v) g.node_features.at(v, v % dim) = 1.0;
    for (std::size_t v = 0; v + 1 < n; ++v) g.edges.push_back({v, v + 1});
    return g;
}

Graph triangle() {
    Graph g;
    g.node_features = Tensor::from_rows({{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}});
    g.edges = {{0, 1}, {1, 2}, {0, 2}};
    return g;
}

bool no_duplicate_undirected(const Graph& g) {
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& e : g.edges) {
        if (e[0] == e[1]) return false;
        if (!seen.insert(std::minmax(e[0], e[1])).second) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("validate_graph catches bad structure") {
    Graph g = triangle();
    CHECK_NOTHROW(validate_graph(g));
    Graph self = g;
    self.edges.push_back({1, 1});
    CHECK_THROWS_AS(validate_graph(self), InvalidArgument);
    Graph dup = g;
    dup.edges.push_back({1, 0});
    CHECK_THROWS_AS(validate_graph(dup), InvalidArgument);
    Graph oob = g;
    oob.edges.push_back({0, 9});
    CHECK_THROWS_AS(validate_graph(oob), InvalidArgument);
}

TEST_CASE("mask plan counts: N=10 rate=0.5 no replacement") {
    Graph g = path_graph(10);
    Tensor token(1, 3);
    token.at(0, 0) = 9.0;
    auto [masked, plan] = apply_mask(g, 0.5, 0.0, token, 123);
    CHECK(plan.masked_nodes.size() == 5);
    CHECK(plan.token_nodes.size() == 5);
    CHECK(plan.replaced_nodes.empty());
    for (std::size_t v : plan.token_nodes) {
        CHECK(masked.node_features.at(v, 0) == 9.0);
        CHECK(masked.node_features.at(v, 1) == 0.0);
    }
    // input untouched
    for (std::size_t v = 0; v < 10; ++v)
        CHECK(g.node_features.at(v, v % 3) == 1.0);
}

TEST_CASE("mask plan counts: N=100 rate=0.5 replace=0.1 (direct enumeration)") {
    Rng rng(5);
    Graph g = testutil::random_graph(100, 4, 0.05, rng);
    Tensor token(1, 4);
    auto [masked, plan] = apply_mask(g, 0.5, 0.1, token, 77);
    CHECK(plan.masked_nodes.size() == 50);
    CHECK(plan.replaced_nodes.size() == 5);
    CHECK(plan.token_nodes.size() == 45);
    // token/replaced partition the masked set
    std::set<std::size_t> all(plan.masked_nodes.begin(), plan.masked_nodes.end());
    std::set<std::size_t> uni(plan.token_nodes.begin(), plan.token_nodes.end());
    for (std::size_t v : plan.replaced_nodes) CHECK(uni.insert(v).second);
    CHECK(uni == all);
    // replacement sources are other nodes
    for (std::size_t k = 0; k < plan.replaced_nodes.size(); ++k)
        CHECK(plan.replacement_src[k] != plan.replaced_nodes[k]);
}

TEST_CASE("mask rate 0 is identity, rate>0 masks at least one node") {
    Graph g = path_graph(7);
    Tensor token(1, 3);
    auto [masked, plan] = apply_mask(g, 0.0, 0.5, token, 1);
    CHECK(plan.masked_nodes.empty());
    for (std::size_t v = 0; v < 7; ++v)
        for (std::size_t c = 0; c < 3; ++c)
            CHECK(masked.node_features.at(v, c) == g.node_features.at(v, c));

    auto [m2, plan2] = apply_mask(g, 0.01, 0.0, token, 1);
    CHECK(plan2.masked_nodes.size() == 1);

    CHECK_THROWS_AS(apply_mask(g, 1.5, 0.0, token, 1), InvalidArgument);
    CHECK_THROWS_AS(apply_mask(g, 0.5, -0.1, token, 1), InvalidArgument);
}

TEST_CASE("mask determinism: same seed same plan, different seed differs") {
    Graph g = path_graph(40);
    const MaskPlan a = plan_mask(g, 0.5, 0.2, 99);
    const MaskPlan b = plan_mask(g, 0.5, 0.2, 99);
    CHECK(a.masked_nodes == b.masked_nodes);
    CHECK(a.token_nodes == b.token_nodes);
    CHECK(a.replaced_nodes == b.replaced_nodes);
    CHECK(a.replacement_src == b.replacement_src);
    const MaskPlan c = plan_mask(g, 0.5, 0.2, 100);
    CHECK(a.masked_nodes != c.masked_nodes);
}

TEST_CASE("augment identity and exact counts") {
    Graph g = path_graph(11);  // 10 edges
    Graph same = augment(g, AugmentSpec{0.0, 0.0}, 42);
    CHECK(same.edges.size() == g.edges.size());
    for (std::size_t v = 0; v < g.num_nodes(); ++v)
        for (std::size_t c = 0; c < 3; ++c)
            CHECK(same.node_features.at(v, c) == g.node_features.at(v, c));

    Graph dropped = augment(g, AugmentSpec{0.0, 0.3}, 42);
    CHECK(dropped.edges.size() == 7);  // exactly 3 of 10 removed
    CHECK(dropped.num_nodes() == g.num_nodes());
    CHECK(no_duplicate_undirected(dropped));

    Graph zeroed = augment(g, AugmentSpec{0.5, 0.0}, 42);
    std::size_t zero_rows = 0;
    for (std::size_t v = 0; v < zeroed.num_nodes(); ++v) {
        bool all_zero = true;
        for (std::size_t c = 0; c < 3; ++c) all_zero &= zeroed.node_features.at(v, c) == 0.0;
        zero_rows += all_zero;
    }
    CHECK(zero_rows == 6);  // round(0.5*11) = 6
}

TEST_CASE("augment replay: fixed seed reproduces the same plan") {
    Graph g = path_graph(4);
    const AugmentSpec spec{0.5, 0.0};
    const AugmentPlan p1 = plan_augment(g, spec, 7);
    const AugmentPlan p2 = plan_augment(g, spec, 7);
    CHECK(p1.zeroed_nodes == p2.zeroed_nodes);
    CHECK(p1.zeroed_nodes.size() == 2);
    Graph a1 = augment(g, spec, 7);
    Graph a2 = augment(g, spec, 7);
    for (std::size_t v = 0; v < 4; ++v)
        for (std::size_t c = 0; c < 3; ++c)
            CHECK(a1.node_features.at(v, c) == a2.node_features.at(v, c));
}

TEST_CASE("supernode: triangle grows to 4 nodes with degree-3 hub") {
    Graph g = triangle();
    Tensor token = Tensor::row({0.5, -0.5});
    Graph p = add_prompt_supernode(g, token);
    CHECK(p.num_nodes() == 4);
    CHECK(p.edges.size() == 6);  // 3 hub edges + 3 original
    CHECK(node_degree(p, 0) == 3);
    CHECK(p.node_features.at(0, 0) == 0.5);
    CHECK(p.node_features.at(0, 1) == -0.5);
    CHECK(no_duplicate_undirected(p));
    CHECK_NOTHROW(validate_graph(p));
    // original adjacency preserved under the +1 shift
    std::set<std::pair<std::size_t, std::size_t>> shifted;
    for (const auto& e : g.edges) shifted.insert(std::minmax(e[0] + 1, e[1] + 1));
    std::size_t found = 0;
    for (const auto& e : p.edges)
        if (e[0] != 0 && e[1] != 0) found += shifted.count(std::minmax(e[0], e[1]));
    CHECK(found == g.edges.size());
}

TEST_CASE("supernode: single node gives one edge") {
    Graph g;
    g.node_features = Tensor::from_rows({{1.0}});
    Tensor token(1, 1);
    Graph p = add_prompt_supernode(g, token);
    CHECK(p.num_nodes() == 2);
    CHECK(p.edges.size() == 1);
    CHECK(node_degree(p, 0) == 1);
}

TEST_CASE("relabeling commutes with supernode addition") {
    Rng rng(17);
    Graph g = testutil::random_graph(9, 3, 0.3, rng);
    std::vector<std::size_t> perm(9);
    for (std::size_t i = 0; i < 9; ++i) perm[i] = i;
    rng.shuffle(perm);
    Graph permuted = testutil::permuted_graph(g, perm);

    Tensor token = Tensor::row({1.0, 2.0, 3.0});
    Graph a = add_prompt_supernode(permuted, token);
    Graph b = add_prompt_supernode(g, token);
    // relabel b's original nodes with the same permutation (supernode stays 0)
    std::vector<std::size_t> lifted(10);
    lifted[0] = 0;
    for (std::size_t i = 0; i < 9; ++i) lifted[i + 1] = perm[i] + 1;
    Graph b_perm = testutil::permuted_graph(b, lifted);

    auto canon = [](const Graph& gr) {
        std::set<std::pair<std::size_t, std::size_t>> s;
        for (const auto& e : gr.edges) s.insert(std::minmax(e[0], e[1]));
        return s;
    };
    CHECK(canon(a) == canon(b_perm));
    for (std::size_t v = 0; v < 10; ++v)
        for (std::size_t c = 0; c < 3; ++c)
            CHECK(a.node_features.at(v, c) == b_perm.node_features.at(v, c));
}

TEST_CASE("batching matches per-graph layout") {
    Rng rng(23);
    std::vector<Graph> graphs = {testutil::random_graph(4, 3, 0.5, rng),
                                 testutil::random_graph(6, 3, 0.4, rng),
                                 testutil::random_graph(3, 3, 0.9, rng)};
    GraphBatch b = make_batch(graphs);
    CHECK(b.node_offsets == std::vector<std::size_t>{0, 4, 10, 13});
    CHECK(b.total_nodes() == 13);
    CHECK(b.graph_of_node[5] == 1);
    std::size_t edge_total = 0;
    for (const auto& g : graphs) edge_total += g.edges.size();
    CHECK(b.edges.size() == edge_total);
    for (const auto& e : b.edges) CHECK(b.graph_of_node[e[0]] == b.graph_of_node[e[1]]);
    // stacked features equal the originals
    for (std::size_t gi = 0; gi < 3; ++gi)
        for (std::size_t v = 0; v < graphs[gi].num_nodes(); ++v)
            for (std::size_t c = 0; c < 3; ++c)
                CHECK(b.features.at(b.node_offsets[gi] + v, c) == graphs[gi].node_features.at(v, c));

    std::vector<Graph> mixed = {path_graph(3, 2), path_graph(3, 5)};
    CHECK_THROWS_AS(make_batch(mixed), InvalidArgument);
}

TEST_CASE("supernode on a parsed MUTAG graph: N+1 nodes, hub degree N") {
    const DatasetBundle mutag = parse_tudataset("data", "MUTAG");
    const Graph* seventeen = nullptr;
    for (const auto& g : mutag.graphs)
        if (g.num_nodes() == 17) {
            seventeen = &g;
            break;
        }
    REQUIRE(seventeen != nullptr);
    Tensor token(1, seventeen->feature_dim());
    const Graph p = add_prompt_supernode(*seventeen, token);
    CHECK(p.num_nodes() == 18);
    CHECK(node_degree(p, 0) == 17);
    CHECK(p.edges.size() == seventeen->edges.size() + 17);
    CHECK_NOTHROW(validate_graph(p));
}

TEST_CASE("edge sets stay clean through masking and augmentation") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        Graph g = testutil::random_graph(12, 4, 0.35, rng);
        Tensor token(1, 4);
        auto [m, plan] = apply_mask(g, 0.4, 0.3, token, rng.next_u64());
        CHECK(no_duplicate_undirected(m));
        Graph a = augment(g, AugmentSpec{0.3, 0.4}, rng.next_u64());
        CHECK(no_duplicate_undirected(a));
        CHECK(a.num_nodes() == g.num_nodes());
        Graph p = add_prompt_supernode(a, token);
        CHECK(no_duplicate_undirected(p));
    }
}
