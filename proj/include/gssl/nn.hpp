#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gssl/graph.hpp"
#include "gssl/params.hpp"
#include "gssl/rng.hpp"
#include "gssl/tape.hpp"

namespace gssl {

enum class Activation { relu, prelu };
enum class NormKind { batchnorm, layernorm, none };
enum class ReadoutKind { mean, max, sum };

Activation activation_from_string(const std::string& s);
NormKind norm_from_string(const std::string& s);
ReadoutKind readout_from_string(const std::string& s);
std::string to_string(Activation a);
std::string to_string(NormKind n);
std::string to_string(ReadoutKind r);

struct ModelConfig {
    std::size_t input_dim = 0;
    std::size_t hidden_size = 64;
    std::size_t num_layers = 2;
    Activation activation = Activation::prelu;
    NormKind norm = NormKind::batchnorm;
    ReadoutKind readout = ReadoutKind::mean;
    std::size_t num_classes = 2;
};

// Tape leaves for one parameter set. Trainable entries become gradient leaves
// unless the whole set is bound frozen; running stats are never bound.
struct BoundSet {
    std::map<std::string, Tape::Var> vars;
    ParameterSet* set = nullptr;

    Tape::Var operator[](const std::string& name) const;
};

BoundSet bind_params(Tape& tape, ParameterSet& set, bool trainable = true);
// One entry per trainable tensor; zeros where the loss never reached the leaf.
GradMap collect_grads(const Tape& tape, const BoundSet& bound);

struct ForwardMode {
    bool train = false;
    bool update_stats = false;
};

// h' = MLP((1+eps) h_v + sum_{u in N(v)} h_u); MLP = linear -> norm -> act -> linear.
Tape::Var gin_layer_forward(Tape& tape, const BoundSet& bound, const std::string& prefix,
                            const ModelConfig& cfg, Tape::Var h,
                            const std::vector<std::array<std::size_t, 2>>& edges, ForwardMode mode);

Tape::Var encoder_forward(Tape& tape, const BoundSet& bound, const ModelConfig& cfg, Tape::Var x,
                          const GraphBatch& batch, ForwardMode mode);

// Linear re-projection, decoder-side re-mask of the listed rows, one GIN layer back to D.
Tape::Var decoder_forward(Tape& tape, const BoundSet& dec, Tape::Var dec_mask_token,
                          const ModelConfig& cfg, Tape::Var h,
                          const std::vector<std::size_t>& remask_rows, const GraphBatch& batch,
                          ForwardMode mode);

Tape::Var projector_forward(Tape& tape, const BoundSet& proj, const ModelConfig& cfg, Tape::Var g);

Tape::Var classifier_forward(Tape& tape, const BoundSet& cls, Tape::Var g);

Tape::Var readout(Tape& tape, Tape::Var h, const GraphBatch& batch, ReadoutKind kind);

// Everything one run trains or checkpoints. Target sets are congruent copies of
// their online counterparts, updated only by EMA. prompt_head stays empty unless
// prompt tuning asks for a fresh head.
struct ModelState {
    ModelConfig cfg;
    ParameterSet online_encoder;
    ParameterSet target_encoder;
    ParameterSet decoder;
    ParameterSet online_projector;
    ParameterSet target_projector;
    ParameterSet tokens;  // enc_mask (1xD), dec_mask (1xhidden)
    ParameterSet prototypes;
    ParameterSet classifier;
    ParameterSet prompt_head;
};

ParameterSet init_encoder(const ModelConfig& cfg, Rng& rng);
ParameterSet init_decoder(const ModelConfig& cfg, Rng& rng);
ParameterSet init_projector(const ModelConfig& cfg, Rng& rng);
ParameterSet init_tokens(const ModelConfig& cfg);
ParameterSet init_prototypes(const ModelConfig& cfg, Rng& rng);
ParameterSet init_classifier(const ModelConfig& cfg, Rng& rng);
ModelState init_model(const ModelConfig& cfg, std::uint64_t seed);

// Value-only forward of a batch through one encoder (+ optional projector),
// readout included. No gradients; BN running stats untouched unless requested.
struct EmbedOptions {
    bool use_target = false;
    bool train_mode_norms = false;
    bool apply_projector = false;
};
Tensor embed_batch(const ModelState& model, const GraphBatch& batch, const EmbedOptions& opts);

}  // namespace gssl
