#include "gssl/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "gssl/checkpoint.hpp"
#include "gssl/errors.hpp"
#include "gssl/rng.hpp"

namespace gssl {

std::string to_string(FeatureKind k) {
    switch (k) {
        case FeatureKind::node_label_onehot: return "node_label_onehot";
        case FeatureKind::degree_onehot: return "degree_onehot";
        default: return "none";
    }
}

double DatasetBundle::avg_nodes() const {
    if (graphs.empty()) return 0.0;
    std::size_t total = 0;
    for (const auto& g : graphs) total += g.num_nodes();
    return static_cast<double>(total) / static_cast<double>(graphs.size());
}

double DatasetBundle::avg_undirected_edges() const {
    if (graphs.empty()) return 0.0;
    std::size_t total = 0;
    for (const auto& g : graphs) total += g.edges.size();
    return static_cast<double>(total) / static_cast<double>(graphs.size());
}

std::size_t DatasetBundle::max_degree() const {
    std::size_t best = 0;
    for (const auto& g : graphs) {
        std::vector<std::size_t> deg(g.num_nodes(), 0);
        for (const auto& e : g.edges) {
            ++deg[e[0]];
            ++deg[e[1]];
        }
        for (std::size_t d : deg) best = std::max(best, d);
    }
    return best;
}

namespace {

std::vector<long long> read_int_lines(const std::string& path, bool required) {
    std::ifstream in(path);
    if (!in) {
        if (required) throw IoError("missing dataset file: " + path);
        return {};
    }
    std::vector<long long> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        char* end = nullptr;
        const long long v = std::strtoll(line.c_str(), &end, 10);
        if (end == line.c_str())
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected an integer, got '" + line +
                             "'");
        out.push_back(v);
    }
    return out;
}

}  // namespace

DatasetBundle parse_tudataset(const std::string& root, const std::string& name) {
    const std::string dir = root + "/" + name + "/" + name;
    const std::string a_path = dir + "_A.txt";

    const auto indicator = read_int_lines(dir + "_graph_indicator.txt", true);
    const auto graph_labels_raw = read_int_lines(dir + "_graph_labels.txt", true);
    const auto node_labels_raw = read_int_lines(dir + "_node_labels.txt", false);

    const std::size_t total_nodes = indicator.size();
    const std::size_t num_graphs = graph_labels_raw.size();
    if (num_graphs == 0) throw ParseError(dir + "_graph_labels.txt: no graphs");
    if (!node_labels_raw.empty() && node_labels_raw.size() != total_nodes)
        throw ParseError(dir + "_node_labels.txt: " + std::to_string(node_labels_raw.size()) +
                         " labels for " + std::to_string(total_nodes) + " nodes");

    // node -> graph and per-graph local index; indicator is 1-based and grouped.
    std::vector<std::size_t> nodes_per_graph(num_graphs, 0);
    std::vector<std::size_t> graph_of(total_nodes), local_of(total_nodes);
    for (std::size_t v = 0; v < total_nodes; ++v) {
        const long long gi = indicator[v];
        if (gi < 1 || static_cast<std::size_t>(gi) > num_graphs)
            throw ParseError(dir + "_graph_indicator.txt:" + std::to_string(v + 1) +
                             ": graph index " + std::to_string(gi) + " outside [1," +
                             std::to_string(num_graphs) + "]");
        graph_of[v] = static_cast<std::size_t>(gi - 1);
        local_of[v] = nodes_per_graph[graph_of[v]]++;
    }
    for (std::size_t g = 0; g < num_graphs; ++g)
        if (nodes_per_graph[g] == 0)
            throw ParseError(dir + "_graph_indicator.txt: graph " + std::to_string(g + 1) + " has no nodes");

    // contiguous class ids in sorted label order
    std::map<long long, int> class_of;
    for (long long l : graph_labels_raw) class_of.emplace(l, 0);
    {
        int next = 0;
        for (auto& [raw, id] : class_of) id = next++;
    }

    // node label vocabulary
    std::map<long long, std::size_t> nl_index;
    if (!node_labels_raw.empty()) {
        for (long long l : node_labels_raw) nl_index.emplace(l, 0);
        std::size_t next = 0;
        for (auto& [raw, id] : nl_index) id = next++;
    }
    const std::size_t feat_dim = nl_index.empty() ? 0 : nl_index.size();

    DatasetBundle bundle;
    bundle.name = name;
    bundle.num_classes = class_of.size();
    bundle.feature_kind = nl_index.empty() ? FeatureKind::none : FeatureKind::node_label_onehot;
    bundle.graphs.resize(num_graphs);
    for (std::size_t g = 0; g < num_graphs; ++g) {
        Graph& gr = bundle.graphs[g];
        gr.id = g;
        gr.label = class_of.at(graph_labels_raw[g]);
        gr.node_features = Tensor(nodes_per_graph[g], std::max<std::size_t>(feat_dim, 1));
    }
    if (!node_labels_raw.empty()) {
        for (std::size_t v = 0; v < total_nodes; ++v)
            bundle.graphs[graph_of[v]].node_features.at(local_of[v], nl_index.at(node_labels_raw[v])) = 1.0;
    }

    // edges: "u, v" per line, 1-based, directed duplicates collapse
    std::ifstream ain(a_path);
    if (!ain) throw IoError("missing dataset file: " + a_path);
    std::vector<std::set<std::pair<std::size_t, std::size_t>>> seen(num_graphs);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ain, line)) {
        ++lineno;
        if (line.empty()) continue;
        long long u = 0, v = 0;
        if (std::sscanf(line.c_str(), "%lld , %lld", &u, &v) != 2 &&
            std::sscanf(line.c_str(), "%lld,%lld", &u, &v) != 2)
            throw ParseError(a_path + ":" + std::to_string(lineno) + ": expected 'u, v', got '" + line + "'");
        if (u < 1 || v < 1 || static_cast<std::size_t>(u) > total_nodes ||
            static_cast<std::size_t>(v) > total_nodes)
            throw ParseError(a_path + ":" + std::to_string(lineno) + ": node index outside [1," +
                             std::to_string(total_nodes) + "]");
        const std::size_t ui = static_cast<std::size_t>(u - 1), vi = static_cast<std::size_t>(v - 1);
        if (graph_of[ui] != graph_of[vi])
            throw ParseError(a_path + ":" + std::to_string(lineno) + ": edge spans graphs " +
                             std::to_string(graph_of[ui] + 1) + " and " + std::to_string(graph_of[vi] + 1));
        if (ui == vi) continue;  // stray self-loops carry no information for these models
        const std::size_t g = graph_of[ui];
        const auto key = std::minmax(local_of[ui], local_of[vi]);
        if (seen[g].insert(key).second) bundle.graphs[g].edges.push_back({key.first, key.second});
    }

    bundle.checksum = bundle_checksum(bundle);
    return bundle;
}

DatasetBundle degree_featurize(const DatasetBundle& bundle, std::size_t cap) {
    if (cap == 0) cap = bundle.max_degree();
    DatasetBundle out = bundle;
    out.feature_kind = FeatureKind::degree_onehot;
    for (auto& g : out.graphs) {
        std::vector<std::size_t> deg(g.num_nodes(), 0);
        for (const auto& e : g.edges) {
            ++deg[e[0]];
            ++deg[e[1]];
        }
        g.node_features = Tensor(g.num_nodes(), cap + 1);
        for (std::size_t v = 0; v < g.num_nodes(); ++v)
            g.node_features.at(v, std::min(deg[v], cap)) = 1.0;
    }
    out.checksum = bundle_checksum(out);
    return out;
}

namespace {

struct Fnv {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    void feed(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    }
    void feed_double(double d) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(d));
        std::memcpy(&bits, &d, 8);
        feed(bits);
    }
};

}  // namespace

std::uint64_t bundle_checksum(const DatasetBundle& bundle) {
    Fnv f;
    f.feed(bundle.graphs.size());
    f.feed(bundle.num_classes);
    f.feed(static_cast<std::uint64_t>(bundle.feature_kind));
    for (const auto& g : bundle.graphs) {
        f.feed(g.num_nodes());
        f.feed(g.label ? static_cast<std::uint64_t>(*g.label + 1) : 0);
        std::vector<std::pair<std::size_t, std::size_t>> edges;
        edges.reserve(g.edges.size());
        for (const auto& e : g.edges) edges.push_back(std::minmax(e[0], e[1]));
        std::sort(edges.begin(), edges.end());
        for (const auto& e : edges) {
            f.feed(e.first);
            f.feed(e.second);
        }
        for (double v : g.node_features.data) f.feed_double(v);
    }
    return f.h;
}

namespace {

void stratified_indices_by_class(const DatasetBundle& bundle,
                                 std::vector<std::vector<std::size_t>>& by_class) {
    by_class.assign(bundle.num_classes, {});
    for (std::size_t i = 0; i < bundle.graphs.size(); ++i) {
        const auto& lab = bundle.graphs[i].label;
        if (!lab) throw InvalidArgument("split: graph " + std::to_string(i) + " has no label");
        by_class[static_cast<std::size_t>(*lab)].push_back(i);
    }
}

}  // namespace

SplitSpec make_kfold(const DatasetBundle& bundle, std::size_t k, std::uint64_t seed) {
    if (k < 2 || k > bundle.size())
        throw InvalidArgument("kfold: k=" + std::to_string(k) + " infeasible for " +
                              std::to_string(bundle.size()) + " graphs");
    SplitSpec spec;
    spec.kind = SplitSpec::Kind::kfold;
    spec.k = k;
    spec.seed = seed;
    spec.parts.assign(k, {});
    std::vector<std::vector<std::size_t>> by_class;
    stratified_indices_by_class(bundle, by_class);
    // Continuous fold cursor across classes keeps fold sizes within one of each
    // other while each class stays spread over all folds.
    std::size_t cursor = 0;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        Rng rng(Rng::derive(seed, 0x5f01, c));
        rng.shuffle(by_class[c]);
        for (std::size_t idx : by_class[c]) {
            spec.parts[cursor % k].push_back(idx);
            ++cursor;
        }
    }
    for (auto& part : spec.parts) std::sort(part.begin(), part.end());
    return spec;
}

SplitSpec make_label_rate(const DatasetBundle& bundle, double fraction, std::uint64_t seed) {
    if (fraction <= 0.0 || fraction > 1.0) throw InvalidArgument("label_rate: fraction must be in (0,1]");
    SplitSpec spec;
    spec.kind = SplitSpec::Kind::label_rate;
    spec.fraction = fraction;
    spec.seed = seed;
    spec.parts.assign(2, {});
    std::vector<std::vector<std::size_t>> by_class;
    stratified_indices_by_class(bundle, by_class);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        Rng rng(Rng::derive(seed, 0x5f02, c));
        rng.shuffle(by_class[c]);
        std::size_t take = round_count(fraction * static_cast<double>(by_class[c].size()));
        if (take == 0) take = 1;
        take = std::min(take, by_class[c].size());
        for (std::size_t i = 0; i < by_class[c].size(); ++i)
            spec.parts[i < take ? 0 : 1].push_back(by_class[c][i]);
    }
    std::sort(spec.parts[0].begin(), spec.parts[0].end());
    std::sort(spec.parts[1].begin(), spec.parts[1].end());
    return spec;
}

SplitSpec make_kshot(const DatasetBundle& bundle, std::size_t k, std::uint64_t seed) {
    if (k < 1) throw InvalidArgument("kshot: k must be >= 1");
    SplitSpec spec;
    spec.kind = SplitSpec::Kind::kshot;
    spec.k = k;
    spec.seed = seed;
    spec.parts.assign(2, {});
    std::vector<std::vector<std::size_t>> by_class;
    stratified_indices_by_class(bundle, by_class);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        if (by_class[c].size() < k)
            throw InvalidArgument("kshot: class " + std::to_string(c) + " has only " +
                                  std::to_string(by_class[c].size()) + " graphs, need " + std::to_string(k));
        Rng rng(Rng::derive(seed, 0x5f03, c));
        rng.shuffle(by_class[c]);
        for (std::size_t i = 0; i < by_class[c].size(); ++i)
            spec.parts[i < k ? 0 : 1].push_back(by_class[c][i]);
    }
    std::sort(spec.parts[0].begin(), spec.parts[0].end());
    std::sort(spec.parts[1].begin(), spec.parts[1].end());
    return spec;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> kfold_train_test(const SplitSpec& spec,
                                                                               std::size_t fold) {
    if (spec.kind != SplitSpec::Kind::kfold) throw InvalidArgument("kfold_train_test: not a kfold spec");
    if (fold >= spec.parts.size()) throw InvalidArgument("kfold_train_test: fold out of range");
    std::vector<std::size_t> train, test = spec.parts[fold];
    for (std::size_t f = 0; f < spec.parts.size(); ++f)
        if (f != fold) train.insert(train.end(), spec.parts[f].begin(), spec.parts[f].end());
    std::sort(train.begin(), train.end());
    return {std::move(train), std::move(test)};
}

void save_bundle_cache(const DatasetBundle& bundle, const std::string& prefix) {
    nlohmann::json idx;
    idx["name"] = bundle.name;
    idx["num_classes"] = bundle.num_classes;
    idx["feature_kind"] = to_string(bundle.feature_kind);
    idx["checksum"] = bundle.checksum;
    nlohmann::json graphs = nlohmann::json::array();
    std::size_t total_nodes = 0;
    for (const auto& g : bundle.graphs) {
        nlohmann::json jg;
        jg["n"] = g.num_nodes();
        jg["label"] = g.label ? nlohmann::json(*g.label) : nlohmann::json();
        nlohmann::json edges = nlohmann::json::array();
        for (const auto& e : g.edges) {
            edges.push_back(e[0]);
            edges.push_back(e[1]);
        }
        jg["edges"] = std::move(edges);
        graphs.push_back(std::move(jg));
        total_nodes += g.num_nodes();
    }
    idx["graphs"] = std::move(graphs);
    {
        std::ofstream out(prefix + ".idx.json", std::ios::trunc);
        if (!out) throw IoError("cannot write " + prefix + ".idx.json");
        out << idx.dump() << "\n";
    }
    Tensor features(total_nodes, bundle.feature_dim());
    std::size_t row = 0;
    for (const auto& g : bundle.graphs)
        for (std::size_t v = 0; v < g.num_nodes(); ++v, ++row)
            for (std::size_t c = 0; c < g.feature_dim(); ++c) features.at(row, c) = g.node_features.at(v, c);
    save_tensor_container(prefix + ".feat.bin", {{"name", bundle.name}}, {{"node_features", &features}});
}

DatasetBundle load_bundle_cache(const std::string& prefix) {
    std::ifstream in(prefix + ".idx.json");
    if (!in) throw IoError("cannot read " + prefix + ".idx.json");
    nlohmann::json idx = nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (idx.is_discarded()) throw ParseError(prefix + ".idx.json: malformed index");
    LoadedContainer feats = load_tensor_container(prefix + ".feat.bin");
    const Tensor& features = feats.tensors.at("node_features");

    DatasetBundle bundle;
    bundle.name = idx.at("name").get<std::string>();
    bundle.num_classes = idx.at("num_classes").get<std::size_t>();
    const std::string fk = idx.at("feature_kind").get<std::string>();
    bundle.feature_kind = fk == "node_label_onehot" ? FeatureKind::node_label_onehot
                          : fk == "degree_onehot"   ? FeatureKind::degree_onehot
                                                    : FeatureKind::none;
    std::size_t row = 0;
    std::size_t id = 0;
    for (const auto& jg : idx.at("graphs")) {
        Graph g;
        g.id = id++;
        const std::size_t n = jg.at("n").get<std::size_t>();
        if (!jg.at("label").is_null()) g.label = jg.at("label").get<int>();
        const auto& edges = jg.at("edges");
        for (std::size_t i = 0; i + 1 < edges.size(); i += 2)
            g.edges.push_back({edges[i].get<std::size_t>(), edges[i + 1].get<std::size_t>()});
        g.node_features = Tensor(n, features.cols);
        for (std::size_t v = 0; v < n; ++v, ++row)
            for (std::size_t c = 0; c < features.cols; ++c) g.node_features.at(v, c) = features.at(row, c);
        bundle.graphs.push_back(std::move(g));
    }
    if (row != features.rows) throw ParseError(prefix + ": feature row count disagrees with index");
    bundle.checksum = bundle_checksum(bundle);
    const std::uint64_t recorded = idx.at("checksum").get<std::uint64_t>();
    if (recorded != bundle.checksum)
        throw ParseError(prefix + ": cache checksum mismatch (stale or corrupted cache)");
    return bundle;
}

DatasetBundle make_synthetic_two_class(std::size_t n_graphs, std::uint64_t seed) {
    if (n_graphs < 2) throw InvalidArgument("synthetic: need at least 2 graphs");
    const std::size_t dim = 4;
    DatasetBundle bundle;
    bundle.name = "synthetic-2class";
    bundle.num_classes = 2;
    bundle.feature_kind = FeatureKind::node_label_onehot;
    Rng rng(Rng::derive(seed, 0x51f7));
    for (std::size_t i = 0; i < n_graphs; ++i) {
        const int label = static_cast<int>(i % 2);
        const std::size_t n = 8 + rng.below(7);
        Graph g;
        g.id = i;
        g.label = label;
        g.node_features = Tensor(n, dim);
        if (label == 0) {
            for (std::size_t v = 0; v < n; ++v) g.edges.push_back({v, (v + 1) % n});
        } else {
            // hub plus a short tail keeps density comparable to the ring
            for (std::size_t v = 1; v < n; ++v) g.edges.push_back({0, v});
            for (std::size_t v = 1; v + 1 < n; v += 2) g.edges.push_back({v, v + 1});
        }
        for (std::size_t v = 0; v < n; ++v) {
            std::size_t type;
            if (rng.uniform() < 0.15) {
                type = rng.below(dim);  // noise
            } else if (label == 0) {
                type = v % 2;  // palette {0,1}
            } else {
                type = 1 + v % 2;  // palette {1,2}, overlapping on 1
            }
            g.node_features.at(v, type) = 1.0;
        }
        bundle.graphs.push_back(std::move(g));
    }
    bundle.checksum = bundle_checksum(bundle);
    return bundle;
}

}  // namespace gssl
