#include "gssl/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include "gssl/errors.hpp"

namespace gssl {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

IniData parse_ini_text(const std::string& text, const std::string& origin) {
    IniData data;
    std::istringstream in(text);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            data[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        data[section][key] = value;
    }
    return data;
}

IniData parse_ini_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_ini_text(buf.str(), path);
}

void overlay(IniData& base, const IniData& over) {
    for (const auto& [section, kv] : over)
        for (const auto& [k, v] : kv) base[section][k] = v;
}

std::string canonical_ini_text(const IniData& ini) {
    std::string out;
    for (const auto& [section, kv] : ini) {
        out += "[" + section + "]\n";
        for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    }
    return out;
}

std::string config_hash_hex(const std::string& canonical_text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical_text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

class Reader {
public:
    Reader(const IniData& ini, std::string section) : ini_(ini), section_(std::move(section)) {}

    bool has(const std::string& key) const {
        auto sit = ini_.find(section_);
        return sit != ini_.end() && sit->second.count(key);
    }

    std::string str(const std::string& key, const std::string& fallback) const {
        return has(key) ? ini_.at(section_).at(key) : fallback;
    }

    double num(const std::string& key, double fallback) const {
        if (!has(key)) return fallback;
        const std::string& v = ini_.at(section_).at(key);
        char* end = nullptr;
        const double d = std::strtod(v.c_str(), &end);
        if (end == v.c_str() || *end != '\0')
            throw ConfigError("[" + section_ + "]." + key + ": expected a number, got '" + v + "'");
        return d;
    }

    std::size_t count(const std::string& key, std::size_t fallback) const {
        const double d = num(key, static_cast<double>(fallback));
        if (d < 0 || d != std::floor(d))
            throw ConfigError("[" + section_ + "]." + key + ": expected a nonnegative integer");
        return static_cast<std::size_t>(d);
    }

    bool flag(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const std::string v = str(key, "");
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ConfigError("[" + section_ + "]." + key + ": expected true/false, got '" + v + "'");
    }

private:
    const IniData& ini_;
    std::string section_;
};

}  // namespace

RunConfig run_config_from_ini(const IniData& ini) {
    static const std::map<std::string, std::set<std::string>> known = {
        {"run", {"dataset", "data_root", "out", "seed", "synthetic_size"}},
        {"model", {"hidden_size", "num_layer", "activation", "norm", "readout"}},
        {"pretrain",
         {"gamma", "masking_rate", "replace_rate", "temperature", "queue_size", "momentum", "feat_mask1",
          "feat_mask2", "drop_edge1", "drop_edge2", "batch_size", "epochs", "lr", "lambda_pre"}},
        {"prompt",
         {"mask_rate", "replace_rate", "gamma", "temperature", "epochs", "lr", "batch_size",
          "lambda_prompt", "mode", "fresh_head", "paper_constants"}},
        {"eval",
         {"protocol", "folds", "runs", "episodes", "shots", "label_rate", "probe_epochs", "probe_lr",
          "ft_epochs", "ft_lr", "ft_batch_size", "jobs", "method"}},
    };
    for (const auto& [section, kv] : ini) {
        auto sit = known.find(section);
        if (sit == known.end()) throw ConfigError("unknown config section [" + section + "]");
        for (const auto& [k, v] : kv)
            if (!sit->second.count(k)) throw ConfigError("unknown config key [" + section + "]." + k);
    }

    RunConfig cfg;
    Reader run(ini, "run");
    cfg.dataset = run.str("dataset", "");
    if (cfg.dataset.empty()) throw ConfigError("[run].dataset is required");
    cfg.data_root = run.str("data_root", cfg.data_root);
    cfg.out_dir = run.str("out", cfg.out_dir);
    cfg.seed = static_cast<std::uint64_t>(run.count("seed", 1));
    cfg.synthetic_size = run.count("synthetic_size", cfg.synthetic_size);

    Reader model(ini, "model");
    cfg.model.hidden_size = model.count("hidden_size", 64);
    cfg.model.num_layers = model.count("num_layer", 2);
    cfg.model.activation = activation_from_string(model.str("activation", "prelu"));
    cfg.model.norm = norm_from_string(model.str("norm", "batchnorm"));
    cfg.model.readout = readout_from_string(model.str("readout", "mean"));

    Reader pre(ini, "pretrain");
    cfg.pretrain.local.gamma = pre.num("gamma", 1.0);
    cfg.pretrain.local.masking_rate = pre.num("masking_rate", 0.5);
    cfg.pretrain.local.replace_rate = pre.num("replace_rate", 0.0);
    cfg.pretrain.global.temperature = pre.num("temperature", 2.0);
    cfg.pretrain.global.queue_size = pre.count("queue_size", 1024);
    cfg.pretrain.ema.momentum = pre.num("momentum", 0.999);
    cfg.pretrain.aug_online.feat_mask_rate = pre.num("feat_mask1", 0.0);
    cfg.pretrain.aug_target.feat_mask_rate = pre.num("feat_mask2", 0.0);
    cfg.pretrain.aug_online.drop_edge_rate = pre.num("drop_edge1", 0.0);
    cfg.pretrain.aug_target.drop_edge_rate = pre.num("drop_edge2", 0.0);
    cfg.pretrain.batch_size = pre.count("batch_size", 32);
    cfg.pretrain.epochs = pre.count("epochs", 100);
    cfg.pretrain.lr = pre.num("lr", 1e-3);
    cfg.pretrain.lambda_pre = pre.num("lambda_pre", 0.5);
    cfg.pretrain.seed = cfg.seed;

    Reader prompt(ini, "prompt");
    cfg.prompt.mask_rate = prompt.num("mask_rate", 0.1);
    cfg.prompt.replace_rate = prompt.num("replace_rate", 0.0);
    cfg.prompt.gamma = prompt.num("gamma", cfg.pretrain.local.gamma);
    cfg.prompt.temperature = prompt.num("temperature", cfg.pretrain.global.temperature);
    cfg.prompt.epochs = prompt.count("epochs", 50);
    cfg.prompt.lr = prompt.num("lr", 1e-3);
    cfg.prompt.batch_size = prompt.count("batch_size", 32);
    cfg.prompt.lambda_prompt = prompt.num("lambda_prompt", 0.1);
    cfg.prompt.mode = tune_mode_from_string(prompt.str("mode", "full"));
    cfg.prompt.fresh_head = prompt.flag("fresh_head", false);
    cfg.prompt.paper_constants = prompt.flag("paper_constants", false);
    cfg.prompt.seed = cfg.seed;

    Reader eval(ini, "eval");
    cfg.protocol = eval.str("protocol", "probe");
    cfg.eval.method_tag = eval.str("method", "model");
    cfg.eval.folds = eval.count("folds", 10);
    cfg.eval.runs = eval.count("runs", 5);
    cfg.eval.episodes = eval.count("episodes", 20);
    cfg.eval.shots = eval.count("shots", 1);
    cfg.eval.label_rate = eval.num("label_rate", 0.1);
    cfg.eval.probe_epochs = eval.count("probe_epochs", 800);
    cfg.eval.probe_lr = eval.num("probe_lr", 0.05);
    cfg.eval.ft.epochs = eval.count("ft_epochs", 30);
    cfg.eval.ft.lr = eval.num("ft_lr", 1e-3);
    cfg.eval.ft.batch_size = eval.count("ft_batch_size", 32);
    cfg.eval.jobs = eval.count("jobs", 1);
    cfg.eval.seed = cfg.seed;
    cfg.eval.prompt = cfg.prompt;

    cfg.config_hash = config_hash_hex(canonical_ini_text(ini));
    return cfg;
}

std::string find_preset_file(const std::string& name, const std::string& exe_dir) {
    std::vector<std::string> roots;
    if (const char* env = std::getenv("GSSL_PRESET_DIR")) roots.push_back(env);
    roots.push_back("presets");
    if (!exe_dir.empty()) {
        roots.push_back(exe_dir + "/presets");
        roots.push_back(exe_dir + "/../presets");
        roots.push_back(exe_dir + "/../../presets");
    }
    for (const auto& root : roots) {
        const std::string candidate = root + "/" + name + ".ini";
        if (std::filesystem::exists(candidate)) return candidate;
    }
    throw ConfigError("preset '" + name + "' not found under " +
                      (roots.empty() ? std::string("<no roots>") : roots.front() + ", ..."));
}

DatasetBundle load_dataset(const RunConfig& cfg) {
    if (cfg.dataset == "synthetic-2class") return make_synthetic_two_class(cfg.synthetic_size, cfg.seed);
    std::string root = cfg.data_root;
    if (const char* env = std::getenv("GSSL_DATA_ROOT")) root = env;
    DatasetBundle bundle = parse_tudataset(root, cfg.dataset);
    if (bundle.feature_kind == FeatureKind::none) bundle = degree_featurize(bundle);
    return bundle;
}

}  // namespace gssl
