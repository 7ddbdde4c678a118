#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "gssl/nn.hpp"
#include "gssl/tensor.hpp"

namespace gssl {

// Container layout: magic line, 8-byte little-endian header length, JSON header
// (metadata plus a manifest of name/shape/dtype/offset), then raw f64 payloads
// little-endian in manifest order. Save/load round-trips are byte-identical.
void save_tensor_container(const std::string& path, const nlohmann::json& meta,
                           const std::vector<std::pair<std::string, const Tensor*>>& tensors);

struct LoadedContainer {
    nlohmann::json meta;
    std::map<std::string, Tensor> tensors;
};
LoadedContainer load_tensor_container(const std::string& path);

struct CheckpointMeta {
    std::uint64_t seed = 0;
    std::string config_hash;
    std::int64_t step_count = 0;
    std::string dataset;
};

void save_checkpoint(const std::string& path, const ModelState& model, const CheckpointMeta& meta);

struct LoadedCheckpoint {
    ModelState model;
    CheckpointMeta meta;
};
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace gssl
