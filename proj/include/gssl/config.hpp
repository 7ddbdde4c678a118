#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "gssl/dataset.hpp"
#include "gssl/eval.hpp"
#include "gssl/nn.hpp"
#include "gssl/pretrain.hpp"
#include "gssl/prompt.hpp"

namespace gssl {

// Flat sectioned key=value text. '#' and ';' start comments. Later files overlay
// earlier ones key by key.
using IniData = std::map<std::string, std::map<std::string, std::string>>;

IniData parse_ini_text(const std::string& text, const std::string& origin);
IniData parse_ini_file(const std::string& path);
void overlay(IniData& base, const IniData& over);
std::string canonical_ini_text(const IniData& ini);

struct RunConfig {
    std::string dataset;
    std::string data_root = "data";
    std::string out_dir = "run-out";
    std::uint64_t seed = 1;
    std::size_t synthetic_size = 80;
    ModelConfig model;  // input_dim/num_classes are filled from the dataset
    PretrainConfig pretrain;
    PromptConfig prompt;
    ProtocolConfig eval;
    std::string protocol = "probe";
    std::string config_hash;  // over the merged canonical text
};

// Rejects unknown sections/keys with the full key path.
RunConfig run_config_from_ini(const IniData& ini);

std::string config_hash_hex(const std::string& canonical_text);

// Preset search: $GSSL_PRESET_DIR, ./presets, <exe_dir>/../presets.
std::string find_preset_file(const std::string& name, const std::string& exe_dir);

// Honors $GSSL_DATA_ROOT over cfg.data_root; degree-featurizes bundles that come
// back without node attributes; understands dataset = synthetic-2class.
DatasetBundle load_dataset(const RunConfig& cfg);

}  // namespace gssl
