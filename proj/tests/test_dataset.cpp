#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "gssl/dataset.hpp"
#include "gssl/errors.hpp"

using namespace gssl;
namespace fs = std::filesystem;

namespace {

// Two-graph fixture with known answers: a labeled triangle and a single edge.
struct Fixture {
    fs::path root;

    Fixture() {
        root = fs::temp_directory_path() / ("gssl-fixture-" + std::to_string(::getpid()));
        fs::create_directories(root / "TINY");
        write("TINY_A.txt", "1, 2\n2, 1\n2, 3\n3, 2\n1, 3\n3, 1\n4, 5\n5, 4\n");
        write("TINY_graph_indicator.txt", "1\n1\n1\n2\n2\n");
        write("TINY_graph_labels.txt", "7\n-3\n");
        write("TINY_node_labels.txt", "2\n0\n2\n5\n0\n");
    }

    ~Fixture() { fs::remove_all(root); }

    void write(const std::string& name, const std::string& text) {
        std::ofstream out(root / "TINY" / name);
        out << text;
    }
};

}  // namespace

TEST_CASE("fixture parses to exact structure") {
    Fixture fx;
    const DatasetBundle bundle = parse_tudataset(fx.root.string(), "TINY");
    REQUIRE(bundle.size() == 2);
    CHECK(bundle.num_classes == 2);
    CHECK(bundle.feature_kind == FeatureKind::node_label_onehot);

    const Graph& tri = bundle.graphs[0];
    CHECK(tri.num_nodes() == 3);
    CHECK(tri.edges.size() == 3);  // directed duplicates collapsed
    CHECK(*tri.label == 1);        // labels {-3, 7} remap to {0, 1}
    const Graph& pair = bundle.graphs[1];
    CHECK(pair.num_nodes() == 2);
    CHECK(pair.edges.size() == 1);
    CHECK(*pair.label == 0);

    // node labels {0, 2, 5} one-hot in sorted order
    CHECK(bundle.feature_dim() == 3);
    CHECK(tri.node_features.at(0, 1) == 1.0);   // label 2 -> slot 1
    CHECK(tri.node_features.at(1, 0) == 1.0);   // label 0 -> slot 0
    CHECK(pair.node_features.at(0, 2) == 1.0);  // label 5 -> slot 2

    for (const auto& g : bundle.graphs) CHECK_NOTHROW(validate_graph(g));
}

TEST_CASE("parser errors carry file names and line numbers") {
    Fixture fx;
    fs::remove(fx.root / "TINY" / "TINY_graph_labels.txt");
    CHECK_THROWS_AS(parse_tudataset(fx.root.string(), "TINY"), IoError);
    CHECK_THROWS_AS(parse_tudataset(fx.root.string(), "NOPE"), IoError);

    Fixture fx2;
    fx2.write("TINY_A.txt", "1, 2\n2, 99\n");
    try {
        parse_tudataset(fx2.root.string(), "TINY");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("TINY_A.txt:2") != std::string::npos);
    }

    Fixture fx3;
    fx3.write("TINY_graph_indicator.txt", "1\n1\n9\n2\n2\n");
    CHECK_THROWS_AS(parse_tudataset(fx3.root.string(), "TINY"), ParseError);
}

TEST_CASE("MUTAG matches the published statistics") {
    const DatasetBundle mutag = parse_tudataset("data", "MUTAG");
    CHECK(mutag.size() == 188);
    CHECK(std::abs(mutag.avg_nodes() - 17.93) < 0.01);
    CHECK(mutag.num_classes == 2);
    CHECK(mutag.feature_dim() == 7);  // one-hot atom labels
    CHECK(std::abs(mutag.avg_undirected_edges() - 19.79) < 0.01);
}

TEST_CASE("PROTEINS matches the published statistics") {
    const DatasetBundle proteins = parse_tudataset("data", "PROTEINS");
    CHECK(proteins.size() == 1113);
    CHECK(std::abs(proteins.avg_nodes() - 39.06) < 0.01);
    CHECK(proteins.num_classes == 2);
    CHECK(proteins.feature_dim() == 3);
}

TEST_CASE("degree featurization") {
    Fixture fx;
    fs::remove(fx.root / "TINY" / "TINY_node_labels.txt");
    DatasetBundle bundle = parse_tudataset(fx.root.string(), "TINY");
    CHECK(bundle.feature_kind == FeatureKind::none);

    const DatasetBundle feat = degree_featurize(bundle, 5);
    CHECK(feat.feature_dim() == 6);
    // triangle nodes all have degree 2
    CHECK(feat.graphs[0].node_features.at(0, 2) == 1.0);
    CHECK(feat.graphs[0].node_features.at(0, 3) == 0.0);
    // pair nodes have degree 1
    CHECK(feat.graphs[1].node_features.at(0, 1) == 1.0);

    // capping: degree 2 with cap 1 lands in the top bucket
    const DatasetBundle capped = degree_featurize(bundle, 1);
    CHECK(capped.feature_dim() == 2);
    CHECK(capped.graphs[0].node_features.at(0, 1) == 1.0);

    // default cap = dataset max degree
    const DatasetBundle autod = degree_featurize(bundle);
    CHECK(autod.feature_dim() == 3);  // max degree 2
}

TEST_CASE("IMDB-BINARY featurizes to a uniform dimension across 1000 graphs") {
    DatasetBundle imdb = parse_tudataset("data", "IMDB-BINARY");
    CHECK(imdb.size() == 1000);
    CHECK(imdb.feature_kind == FeatureKind::none);
    const DatasetBundle feat = degree_featurize(imdb);
    const std::size_t dim = feat.feature_dim();
    CHECK(dim > 1);
    for (const auto& g : feat.graphs) CHECK(g.feature_dim() == dim);
}

TEST_CASE("kfold: exhaustive, disjoint, near-equal and reproducible") {
    const DatasetBundle mutag = parse_tudataset("data", "MUTAG");
    const SplitSpec spec = make_kfold(mutag, 10, 7);
    REQUIRE(spec.parts.size() == 10);
    std::set<std::size_t> seen;
    for (const auto& part : spec.parts) {
        CHECK(part.size() >= 18);
        CHECK(part.size() <= 19);
        for (std::size_t i : part) CHECK(seen.insert(i).second);  // pairwise disjoint
    }
    CHECK(seen.size() == 188);  // union covers the dataset

    const SplitSpec again = make_kfold(mutag, 10, 7);
    CHECK(spec.parts == again.parts);
    const SplitSpec other = make_kfold(mutag, 10, 8);
    CHECK(spec.parts != other.parts);

    auto [train, test] = kfold_train_test(spec, 3);
    CHECK(train.size() + test.size() == 188);
    for (std::size_t i : test) CHECK(!std::count(train.begin(), train.end(), i));
}

TEST_CASE("kfold infeasible on tiny datasets") {
    const DatasetBundle tiny = make_synthetic_two_class(2, 1);
    CHECK_THROWS_AS(make_kfold(tiny, 10, 1), InvalidArgument);
    CHECK_THROWS_AS(make_kfold(tiny, 1, 1), InvalidArgument);
}

TEST_CASE("label-rate split: stratified counts near the target") {
    const DatasetBundle proteins = parse_tudataset("data", "PROTEINS");
    const SplitSpec spec = make_label_rate(proteins, 0.1, 3);
    REQUIRE(spec.parts.size() == 2);
    const double labeled = static_cast<double>(spec.parts[0].size());
    CHECK(labeled >= 0.1 * 1113 - 2);  // within +-C of the target
    CHECK(labeled <= 0.1 * 1113 + 2);
    CHECK(spec.parts[0].size() + spec.parts[1].size() == 1113);
    std::set<std::size_t> train(spec.parts[0].begin(), spec.parts[0].end());
    for (std::size_t i : spec.parts[1]) CHECK(!train.count(i));
}

TEST_CASE("kshot split: exact per-class counts and infeasibility error") {
    const DatasetBundle synth = make_synthetic_two_class(40, 5);
    const SplitSpec one = make_kshot(synth, 1, 11);
    CHECK(one.parts[0].size() == 2);  // k per class, C=2
    const SplitSpec three = make_kshot(synth, 3, 11);
    CHECK(three.parts[0].size() == 6);
    CHECK(three.parts[0].size() + three.parts[1].size() == 40);
    int c0 = 0, c1 = 0;
    for (std::size_t i : three.parts[0]) (*synth.graphs[i].label == 0 ? c0 : c1)++;
    CHECK(c0 == 3);
    CHECK(c1 == 3);

    try {
        make_kshot(synth, 25, 1);
        FAIL("expected InvalidArgument");
    } catch (const InvalidArgument& e) {
        CHECK(std::string(e.what()).find("class") != std::string::npos);
    }
}

TEST_CASE("splits are independent draws per seed but identical per (spec, seed)") {
    const DatasetBundle synth = make_synthetic_two_class(30, 9);
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        CHECK(make_kshot(synth, 2, seed).parts == make_kshot(synth, 2, seed).parts);
        CHECK(make_label_rate(synth, 0.3, seed).parts == make_label_rate(synth, 0.3, seed).parts);
    }
}

TEST_CASE("cache round-trip preserves the checksum") {
    const DatasetBundle mutag = parse_tudataset("data", "MUTAG");
    const fs::path prefix = fs::temp_directory_path() / "gssl-cache-test";
    save_bundle_cache(mutag, prefix.string());
    const DatasetBundle loaded = load_bundle_cache(prefix.string());
    CHECK(loaded.checksum == mutag.checksum);
    CHECK(loaded.size() == mutag.size());
    CHECK(loaded.num_classes == mutag.num_classes);
    CHECK(loaded.feature_kind == mutag.feature_kind);
    // parse -> serialize -> parse equals the original bundle
    CHECK(bundle_checksum(loaded) == bundle_checksum(mutag));
    fs::remove(prefix.string() + ".idx.json");
    fs::remove(prefix.string() + ".feat.bin");
}

TEST_CASE("synthetic dataset is valid and balanced") {
    const DatasetBundle synth = make_synthetic_two_class(50, 123);
    CHECK(synth.size() == 50);
    CHECK(synth.num_classes == 2);
    int c0 = 0;
    for (const auto& g : synth.graphs) {
        CHECK_NOTHROW(validate_graph(g));
        c0 += *g.label == 0;
    }
    CHECK(c0 == 25);
    // deterministic given the seed
    const DatasetBundle again = make_synthetic_two_class(50, 123);
    CHECK(again.checksum == synth.checksum);
}
