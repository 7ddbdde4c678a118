#include "gssl/nn.hpp"

#include <cmath>

#include "gssl/errors.hpp"

namespace gssl {

Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "prelu") return Activation::prelu;
    throw InvalidArgument("unknown activation '" + s + "'");
}

NormKind norm_from_string(const std::string& s) {
    if (s == "batchnorm" || s == "bn") return NormKind::batchnorm;
    if (s == "layernorm" || s == "ln") return NormKind::layernorm;
    if (s == "none") return NormKind::none;
    throw InvalidArgument("unknown norm '" + s + "'");
}

ReadoutKind readout_from_string(const std::string& s) {
    if (s == "mean") return ReadoutKind::mean;
    if (s == "max") return ReadoutKind::max;
    if (s == "sum") return ReadoutKind::sum;
    throw InvalidArgument("unknown readout '" + s + "'");
}

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "prelu"; }
std::string to_string(NormKind n) {
    switch (n) {
        case NormKind::batchnorm: return "batchnorm";
        case NormKind::layernorm: return "layernorm";
        default: return "none";
    }
}
std::string to_string(ReadoutKind r) {
    switch (r) {
        case ReadoutKind::mean: return "mean";
        case ReadoutKind::max: return "max";
        default: return "sum";
    }
}

Tape::Var BoundSet::operator[](const std::string& name) const {
    auto it = vars.find(name);
    if (it == vars.end()) throw ContractViolation("bound set has no var '" + name + "'");
    return it->second;
}

BoundSet bind_params(Tape& tape, ParameterSet& set, bool trainable) {
    BoundSet b;
    b.set = &set;
    for (auto& [name, e] : set.entries()) {
        if (!e.trainable) continue;  // running stats reach batch_norm as raw buffers
        b.vars[name] = trainable ? tape.leaf(e.value) : tape.constant(e.value);
    }
    return b;
}

GradMap collect_grads(const Tape& tape, const BoundSet& bound) {
    GradMap g;
    for (const auto& [name, var] : bound.vars) g[name] = tape.grad(var);
    return g;
}

namespace {

Tensor glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    Tensor w(fan_in, fan_out);
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : w.data) v = rng.uniform(-a, a);
    return w;
}

void add_norm_params(ParameterSet& set, const std::string& prefix, std::size_t width, NormKind kind) {
    if (kind == NormKind::none) return;
    set.add(prefix + "norm.gamma", Tensor::full(1, width, 1.0));
    set.add(prefix + "norm.beta", Tensor(1, width));
    if (kind == NormKind::batchnorm) {
        set.add(prefix + "norm.run_mean", Tensor(1, width), /*trainable=*/false);
        set.add(prefix + "norm.run_var", Tensor::full(1, width, 1.0), /*trainable=*/false);
    }
}

void add_gin_layer_params(ParameterSet& set, const std::string& prefix, std::size_t in, std::size_t mlp_hidden,
                          std::size_t out, const ModelConfig& cfg, Rng& rng) {
    set.add(prefix + "lin1.w", glorot(in, mlp_hidden, rng));
    set.add(prefix + "lin1.b", Tensor(1, mlp_hidden));
    add_norm_params(set, prefix, mlp_hidden, cfg.norm);
    if (cfg.activation == Activation::prelu) set.add(prefix + "act.slope", Tensor::scalar(0.25));
    set.add(prefix + "lin2.w", glorot(mlp_hidden, out, rng));
    set.add(prefix + "lin2.b", Tensor(1, out));
    set.add(prefix + "eps", Tensor::scalar(0.0));
}

Tape::Var apply_norm(Tape& tape, const BoundSet& bound, const std::string& prefix, const ModelConfig& cfg,
                     Tape::Var x, ForwardMode mode) {
    switch (cfg.norm) {
        case NormKind::none: return x;
        case NormKind::layernorm:
            return tape.layer_norm(x, bound[prefix + "norm.gamma"], bound[prefix + "norm.beta"]);
        case NormKind::batchnorm:
            return tape.batch_norm(x, bound[prefix + "norm.gamma"], bound[prefix + "norm.beta"],
                                   &bound.set->at(prefix + "norm.run_mean"),
                                   &bound.set->at(prefix + "norm.run_var"), mode.train, mode.update_stats);
    }
    throw InvalidArgument("unreachable norm kind");
}

Tape::Var apply_activation(Tape& tape, const BoundSet& bound, const std::string& prefix,
                           const ModelConfig& cfg, Tape::Var x) {
    if (cfg.activation == Activation::relu) return tape.relu(x);
    return tape.prelu(x, bound[prefix + "act.slope"]);
}

Tape::Var linear(Tape& tape, const BoundSet& bound, const std::string& prefix, Tape::Var x) {
    return tape.add_rowvec(tape.matmul(x, bound[prefix + ".w"]), bound[prefix + ".b"]);
}

}  // namespace

Tape::Var gin_layer_forward(Tape& tape, const BoundSet& bound, const std::string& prefix,
                            const ModelConfig& cfg, Tape::Var h,
                            const std::vector<std::array<std::size_t, 2>>& edges, ForwardMode mode) {
    Tape::Var agg = tape.gin_aggregate(h, bound[prefix + "eps"], edges);
    Tape::Var z = linear(tape, bound, prefix + "lin1", agg);
    z = apply_norm(tape, bound, prefix, cfg, z, mode);
    z = apply_activation(tape, bound, prefix, cfg, z);
    return linear(tape, bound, prefix + "lin2", z);
}

Tape::Var encoder_forward(Tape& tape, const BoundSet& bound, const ModelConfig& cfg, Tape::Var x,
                          const GraphBatch& batch, ForwardMode mode) {
    Tape::Var h = x;
    for (std::size_t i = 0; i < cfg.num_layers; ++i)
        h = gin_layer_forward(tape, bound, "layer" + std::to_string(i) + ".", cfg, h, batch.edges, mode);
    return h;
}

Tape::Var decoder_forward(Tape& tape, const BoundSet& dec, Tape::Var dec_mask_token,
                          const ModelConfig& cfg, Tape::Var h,
                          const std::vector<std::size_t>& remask_rows, const GraphBatch& batch,
                          ForwardMode mode) {
    Tape::Var z = linear(tape, dec, "to_dec", h);
    if (!remask_rows.empty()) z = tape.replace_rows(z, remask_rows, dec_mask_token);
    return gin_layer_forward(tape, dec, "gin.", cfg, z, batch.edges, mode);
}

Tape::Var projector_forward(Tape& tape, const BoundSet& proj, const ModelConfig& cfg, Tape::Var g) {
    Tape::Var z = linear(tape, proj, "lin1", g);
    z = apply_activation(tape, proj, "", cfg, z);
    return linear(tape, proj, "lin2", z);
}

Tape::Var classifier_forward(Tape& tape, const BoundSet& cls, Tape::Var g) {
    return linear(tape, cls, "out", g);
}

Tape::Var readout(Tape& tape, Tape::Var h, const GraphBatch& batch, ReadoutKind kind) {
    switch (kind) {
        case ReadoutKind::mean: return tape.segment_mean(h, batch.node_offsets);
        case ReadoutKind::sum: return tape.segment_sum(h, batch.node_offsets);
        case ReadoutKind::max: return tape.segment_max(h, batch.node_offsets);
    }
    throw InvalidArgument("unknown readout kind");
}

ParameterSet init_encoder(const ModelConfig& cfg, Rng& rng) {
    ParameterSet set;
    for (std::size_t i = 0; i < cfg.num_layers; ++i) {
        const std::size_t in = i == 0 ? cfg.input_dim : cfg.hidden_size;
        add_gin_layer_params(set, "layer" + std::to_string(i) + ".", in, cfg.hidden_size, cfg.hidden_size,
                             cfg, rng);
    }
    return set;
}

ParameterSet init_decoder(const ModelConfig& cfg, Rng& rng) {
    ParameterSet set;
    set.add("to_dec.w", glorot(cfg.hidden_size, cfg.hidden_size, rng));
    set.add("to_dec.b", Tensor(1, cfg.hidden_size));
    add_gin_layer_params(set, "gin.", cfg.hidden_size, cfg.hidden_size, cfg.input_dim, cfg, rng);
    return set;
}

ParameterSet init_projector(const ModelConfig& cfg, Rng& rng) {
    ParameterSet set;
    set.add("lin1.w", glorot(cfg.hidden_size, cfg.hidden_size, rng));
    set.add("lin1.b", Tensor(1, cfg.hidden_size));
    if (cfg.activation == Activation::prelu) set.add("act.slope", Tensor::scalar(0.25));
    set.add("lin2.w", glorot(cfg.hidden_size, cfg.hidden_size, rng));
    set.add("lin2.b", Tensor(1, cfg.hidden_size));
    return set;
}

ParameterSet init_tokens(const ModelConfig& cfg) {
    ParameterSet set;
    set.add("enc_mask", Tensor(1, cfg.input_dim));
    set.add("dec_mask", Tensor(1, cfg.hidden_size));
    return set;
}

ParameterSet init_prototypes(const ModelConfig& cfg, Rng& rng) {
    ParameterSet set;
    Tensor p(cfg.num_classes, cfg.hidden_size);
    for (std::size_t r = 0; r < p.rows; ++r) {
        double norm = 0.0;
        for (std::size_t c = 0; c < p.cols; ++c) {
            p.at(r, c) = rng.gaussian();
            norm += p.at(r, c) * p.at(r, c);
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) norm = 1.0;
        for (std::size_t c = 0; c < p.cols; ++c) p.at(r, c) /= norm;
    }
    set.add("proto", std::move(p));
    return set;
}

ParameterSet init_classifier(const ModelConfig& cfg, Rng& rng) {
    ParameterSet set;
    set.add("out.w", glorot(cfg.hidden_size, cfg.num_classes, rng));
    set.add("out.b", Tensor(1, cfg.num_classes));
    return set;
}

ModelState init_model(const ModelConfig& cfg, std::uint64_t seed) {
    if (cfg.input_dim == 0) throw InvalidArgument("init_model: input_dim must be set");
    ModelState m;
    m.cfg = cfg;
    Rng enc_rng(Rng::derive(seed, 1));
    Rng dec_rng(Rng::derive(seed, 2));
    Rng proj_rng(Rng::derive(seed, 3));
    Rng proto_rng(Rng::derive(seed, 4));
    Rng cls_rng(Rng::derive(seed, 5));
    m.online_encoder = init_encoder(cfg, enc_rng);
    m.target_encoder = m.online_encoder;
    m.decoder = init_decoder(cfg, dec_rng);
    m.online_projector = init_projector(cfg, proj_rng);
    m.target_projector = m.online_projector;
    m.tokens = init_tokens(cfg);
    m.prototypes = init_prototypes(cfg, proto_rng);
    m.classifier = init_classifier(cfg, cls_rng);
    return m;
}

Tensor embed_batch(const ModelState& model, const GraphBatch& batch, const EmbedOptions& opts) {
    Tape tape;
    // const_cast is confined to value-only forwards: frozen binds never write.
    auto& enc = const_cast<ParameterSet&>(opts.use_target ? model.target_encoder : model.online_encoder);
    auto& proj =
        const_cast<ParameterSet&>(opts.use_target ? model.target_projector : model.online_projector);
    BoundSet benc = bind_params(tape, enc, /*trainable=*/false);
    ForwardMode mode{opts.train_mode_norms, /*update_stats=*/false};
    Tape::Var x = tape.constant(batch.features);
    Tape::Var h = encoder_forward(tape, benc, model.cfg, x, batch, mode);
    Tape::Var g = readout(tape, h, batch, model.cfg.readout);
    if (opts.apply_projector) {
        BoundSet bproj = bind_params(tape, proj, /*trainable=*/false);
        g = projector_forward(tape, bproj, model.cfg, g);
    }
    return tape.value(g);
}

}  // namespace gssl
