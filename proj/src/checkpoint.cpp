#include "gssl/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "gssl/errors.hpp"

namespace gssl {

namespace {

constexpr char kMagic[] = "GSSLBIN1\n";
constexpr std::size_t kMagicLen = sizeof(kMagic) - 1;

void write_u64_le(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64_le(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

void save_tensor_container(const std::string& path, const nlohmann::json& meta,
                           const std::vector<std::pair<std::string, const Tensor*>>& tensors) {
    nlohmann::json header;
    header["meta"] = meta;
    nlohmann::json manifest = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, t] : tensors) {
        nlohmann::json e;
        e["name"] = name;
        e["rows"] = t->rows;
        e["cols"] = t->cols;
        e["dtype"] = "f64";
        e["offset"] = offset;
        e["trainable"] = t->requires_grad;
        manifest.push_back(e);
        offset += static_cast<std::uint64_t>(t->size()) * 8;
    }
    header["tensors"] = manifest;
    const std::string header_text = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out.write(kMagic, static_cast<std::streamsize>(kMagicLen));
    write_u64_le(out, header_text.size());
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    for (const auto& [name, t] : tensors)
        out.write(reinterpret_cast<const char*>(t->data.data()),
                  static_cast<std::streamsize>(t->size() * 8));
    if (!out) throw IoError("write failed for " + path);
}

LoadedContainer load_tensor_container(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::string magic(kMagicLen, '\0');
    in.read(magic.data(), static_cast<std::streamsize>(kMagicLen));
    if (!in || magic != kMagic) throw ParseError(path + ": not a tensor container");
    const std::uint64_t header_len = read_u64_le(in);
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw ParseError(path + ": truncated header");
    nlohmann::json header = nlohmann::json::parse(header_text, nullptr, /*allow_exceptions=*/false);
    if (header.is_discarded()) throw ParseError(path + ": malformed container header");

    LoadedContainer loaded;
    loaded.meta = header.value("meta", nlohmann::json::object());
    const std::streampos payload_start = in.tellg();
    for (const auto& e : header.at("tensors")) {
        const std::string name = e.at("name").get<std::string>();
        if (e.at("dtype").get<std::string>() != "f64")
            throw ParseError(path + ": unsupported dtype for tensor " + name);
        Tensor t(e.at("rows").get<std::size_t>(), e.at("cols").get<std::size_t>());
        t.requires_grad = e.value("trainable", false);
        in.seekg(payload_start + static_cast<std::streamoff>(e.at("offset").get<std::uint64_t>()));
        in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.size() * 8));
        if (!in) throw ParseError(path + ": truncated payload for tensor " + name);
        loaded.tensors.emplace(name, std::move(t));
    }
    return loaded;
}

namespace {

const std::vector<std::pair<std::string, ParameterSet ModelState::*>>& model_sets() {
    static const std::vector<std::pair<std::string, ParameterSet ModelState::*>> sets = {
        {"online_encoder", &ModelState::online_encoder},
        {"target_encoder", &ModelState::target_encoder},
        {"decoder", &ModelState::decoder},
        {"online_projector", &ModelState::online_projector},
        {"target_projector", &ModelState::target_projector},
        {"tokens", &ModelState::tokens},
        {"prototypes", &ModelState::prototypes},
        {"classifier", &ModelState::classifier},
        {"prompt_head", &ModelState::prompt_head},
    };
    return sets;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelState& model, const CheckpointMeta& meta) {
    nlohmann::json m;
    m["seed"] = meta.seed;
    m["config_hash"] = meta.config_hash;
    m["step_count"] = meta.step_count;
    m["dataset"] = meta.dataset;
    m["model"] = {{"input_dim", model.cfg.input_dim},
                  {"hidden_size", model.cfg.hidden_size},
                  {"num_layers", model.cfg.num_layers},
                  {"activation", to_string(model.cfg.activation)},
                  {"norm", to_string(model.cfg.norm)},
                  {"readout", to_string(model.cfg.readout)},
                  {"num_classes", model.cfg.num_classes}};

    std::vector<std::pair<std::string, const Tensor*>> tensors;
    for (const auto& [set_name, member] : model_sets()) {
        const ParameterSet& set = model.*member;
        for (const auto& [name, e] : set.entries())
            tensors.emplace_back(set_name + "/" + name, &e.value);
    }
    save_tensor_container(path, m, tensors);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    LoadedContainer c = load_tensor_container(path);
    LoadedCheckpoint out;
    const auto& mc = c.meta.at("model");
    out.model.cfg.input_dim = mc.at("input_dim").get<std::size_t>();
    out.model.cfg.hidden_size = mc.at("hidden_size").get<std::size_t>();
    out.model.cfg.num_layers = mc.at("num_layers").get<std::size_t>();
    out.model.cfg.activation = activation_from_string(mc.at("activation").get<std::string>());
    out.model.cfg.norm = norm_from_string(mc.at("norm").get<std::string>());
    out.model.cfg.readout = readout_from_string(mc.at("readout").get<std::string>());
    out.model.cfg.num_classes = mc.at("num_classes").get<std::size_t>();
    out.meta.seed = c.meta.at("seed").get<std::uint64_t>();
    out.meta.config_hash = c.meta.at("config_hash").get<std::string>();
    out.meta.step_count = c.meta.at("step_count").get<std::int64_t>();
    out.meta.dataset = c.meta.at("dataset").get<std::string>();

    for (auto& [full_name, tensor] : c.tensors) {
        const auto slash = full_name.find('/');
        if (slash == std::string::npos) throw ParseError(path + ": tensor name without set: " + full_name);
        const std::string set_name = full_name.substr(0, slash);
        const std::string name = full_name.substr(slash + 1);
        bool placed = false;
        for (const auto& [candidate, member] : model_sets()) {
            if (candidate == set_name) {
                (out.model.*member).add(name, tensor, tensor.requires_grad);
                placed = true;
                break;
            }
        }
        if (!placed) throw ParseError(path + ": unknown parameter set '" + set_name + "'");
    }
    return out;
}

}  // namespace gssl
