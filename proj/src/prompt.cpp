#include "gssl/prompt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gssl/errors.hpp"
#include "gssl/losses.hpp"
#include "gssl/rng.hpp"

namespace gssl {

TuneMode tune_mode_from_string(const std::string& s) {
    if (s == "full") return TuneMode::full;
    if (s == "frozen") return TuneMode::frozen;
    throw InvalidArgument("unknown tuning mode '" + s + "'");
}

std::string to_string(TuneMode m) { return m == TuneMode::full ? "full" : "frozen"; }

void validate(const PromptConfig& cfg) {
    if (cfg.lambda_prompt < 0.0 || cfg.lambda_prompt > 1.0)
        throw InvalidArgument("lambda_prompt must be in [0,1]");
    if (cfg.mask_rate < 0.0 || cfg.mask_rate > 1.0 || cfg.replace_rate < 0.0 || cfg.replace_rate > 1.0)
        throw InvalidArgument("prompt mask/replace rate must be in [0,1]");
    if (cfg.gamma < 1.0) throw InvalidArgument("gamma must be >= 1");
    if (cfg.temperature <= 0.0) throw InvalidArgument("temperature must be positive");
    if (cfg.batch_size < 1) throw InvalidArgument("batch size must be >= 1");
}

PromptRun::PromptRun(ModelState* model, const PromptConfig& cfg)
    : model_(model), cfg_(cfg), opt_(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8}) {
    validate(cfg_);
    if (cfg_.fresh_head && model_->prompt_head.empty()) {
        Rng rng(Rng::derive(cfg_.seed, 0x6ead));
        model_->prompt_head = init_projector(model_->cfg, rng);
    }
    if (cfg_.mode == TuneMode::full) {
        opt_.attach("enc", &model_->online_encoder);
        opt_.attach("dec", &model_->decoder);
        opt_.attach("tok", &model_->tokens);
        opt_.attach("proj", cfg_.fresh_head ? &model_->prompt_head : &model_->online_projector);
    } else if (cfg_.fresh_head) {
        opt_.attach("proj", &model_->prompt_head);
    }
    opt_.attach("proto", &model_->prototypes);
}

PromptEpochMetrics PromptRun::run_epoch(const std::vector<Graph>& graphs, const std::vector<int>& labels,
                                        std::size_t epoch_index) {
    if (graphs.empty()) throw InvalidArgument("prompt tuning: empty training set");
    if (labels.size() != graphs.size())
        throw ContractViolation("prompt tuning: every graph needs a label");
    ModelState& model = *model_;
    const PromptConfig& cfg = cfg_;
    const bool frozen = cfg.mode == TuneMode::frozen;

    std::vector<std::size_t> order(graphs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(Rng::derive(cfg.seed, 0xb0, epoch_index));
    shuffle_rng.shuffle(order);

    PromptEpochMetrics metrics;
    std::size_t batches = 0;
    std::size_t correct = 0, seen = 0;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batches) {
        const std::size_t stop = std::min(order.size(), start + cfg.batch_size);

        std::vector<Graph> prompted;
        std::vector<MaskPlan> plans;
        std::vector<int> batch_labels;
        const Tensor zero_token(1, graphs.front().feature_dim());
        for (std::size_t slot = start; slot < stop; ++slot) {
            const Graph& g = graphs[order[slot]];
            const std::uint64_t mask_seed = Rng::derive(cfg.seed, 0xb1, epoch_index, slot);
            MaskPlan plan = plan_mask(g, cfg.mask_rate, cfg.replace_rate, mask_seed);
            Graph gp = add_prompt_supernode(g, zero_token);  // real token row placed on the tape
            for (std::size_t k = 0; k < plan.replaced_nodes.size(); ++k)
                for (std::size_t c = 0; c < g.feature_dim(); ++c)
                    gp.node_features.at(plan.replaced_nodes[k] + 1, c) =
                        g.node_features.at(plan.replacement_src[k], c);
            prompted.push_back(std::move(gp));
            plans.push_back(std::move(plan));
            batch_labels.push_back(labels[order[slot]]);
        }
        GraphBatch batch = make_batch(prompted);

        std::vector<std::size_t> token_rows, masked_rows, super_rows;
        Tensor x_true(0, 0);
        {
            std::size_t total_masked = 0;
            for (const auto& p : plans) total_masked += p.masked_nodes.size();
            x_true = Tensor(total_masked, graphs.front().feature_dim());
            std::size_t row = 0;
            for (std::size_t gi = 0; gi < plans.size(); ++gi) {
                const std::size_t off = batch.node_offsets[gi];
                super_rows.push_back(off);  // super node sits at local index 0
                for (std::size_t v : plans[gi].token_nodes) token_rows.push_back(off + 1 + v);
                const Graph& g = graphs[order[start + gi]];
                for (std::size_t v : plans[gi].masked_nodes) {
                    masked_rows.push_back(off + 1 + v);
                    for (std::size_t c = 0; c < g.feature_dim(); ++c)
                        x_true.at(row, c) = g.node_features.at(v, c);
                    ++row;
                }
            }
        }
        // the masked super node receives the same learnable token as masked nodes
        std::vector<std::size_t> all_token_rows = super_rows;
        all_token_rows.insert(all_token_rows.end(), token_rows.begin(), token_rows.end());

        Tape tape;
        BoundSet enc = bind_params(tape, model.online_encoder, !frozen);
        BoundSet dec = bind_params(tape, model.decoder, !frozen);
        BoundSet tok = bind_params(tape, model.tokens, !frozen);
        const bool head_trainable = cfg.fresh_head || !frozen;
        BoundSet proj = bind_params(tape, cfg.fresh_head ? model.prompt_head : model.online_projector,
                                    head_trainable);
        BoundSet proto = bind_params(tape, model.prototypes, true);

        ForwardMode mode{/*train=*/!frozen, /*update_stats=*/!frozen};
        Tape::Var x = tape.replace_rows(tape.constant(batch.features), all_token_rows, tok["enc_mask"]);
        Tape::Var h = encoder_forward(tape, enc, model.cfg, x, batch, mode);
        Tape::Var x_rec_all =
            decoder_forward(tape, dec, tok["dec_mask"], model.cfg, h, masked_rows, batch, mode);
        ScaledCosineResult local =
            scaled_cosine_error(tape, x_true, tape.select_rows(x_rec_all, masked_rows), cfg.gamma);

        Tape::Var g_sup = tape.select_rows(h, super_rows);
        Tape::Var z = projector_forward(tape, proj, model.cfg, g_sup);
        SpclResult proto_loss =
            spcl_loss(tape, z, batch_labels, proto["proto"], cfg.temperature, cfg.paper_constants);

        Tape::Var loss = tape.add(tape.scale(local.loss, cfg.lambda_prompt),
                                  tape.scale(proto_loss.loss, 1.0 - cfg.lambda_prompt));
        const double loss_v = tape.value(loss).item();
        if (!std::isfinite(loss_v))
            throw NumericAbort("prompt tuning: non-finite loss at epoch " + std::to_string(epoch_index) +
                               " batch " + std::to_string(start / cfg.batch_size) + " (seed " +
                               std::to_string(cfg.seed) + ")");
        tape.backward(loss);

        std::map<std::string, GradMap> grads;
        if (!frozen) {
            grads["enc"] = collect_grads(tape, enc);
            grads["dec"] = collect_grads(tape, dec);
            grads["tok"] = collect_grads(tape, tok);
        }
        if (opt_.attached("proj")) grads["proj"] = collect_grads(tape, proj);
        grads["proto"] = collect_grads(tape, proto);
        opt_.step(grads);

        // batch-level training accuracy against the current prototypes
        const Tensor zv = tape.value(z);
        const Tensor pv = tape.value(proto["proto"]);
        for (std::size_t i = 0; i < zv.rows; ++i) {
            Tensor zi(1, zv.cols);
            for (std::size_t c = 0; c < zv.cols; ++c) zi.at(0, c) = zv.at(i, c);
            if (predict_scores(zi, pv).predicted == batch_labels[i]) ++correct;
            ++seen;
        }

        metrics.loss_local += tape.value(local.loss).item();
        metrics.loss_proto += tape.value(proto_loss.loss).item();
    }

    metrics.loss_local /= static_cast<double>(batches);
    metrics.loss_proto /= static_cast<double>(batches);
    metrics.train_accuracy = seen ? static_cast<double>(correct) / static_cast<double>(seen) : 0.0;
    return metrics;
}

std::int64_t run_prompt_tune(ModelState& model, const std::vector<Graph>& graphs,
                             const std::vector<int>& labels, const PromptConfig& cfg,
                             const PromptEpochSink& sink) {
    PromptRun run(&model, cfg);
    for (std::size_t e = 1; e <= cfg.epochs; ++e) {
        const PromptEpochMetrics m = run.run_epoch(graphs, labels, e);
        if (sink) sink(e, m);
    }
    return run.step_count();
}

std::vector<Tensor> prompt_embed_all(const ModelState& model, const std::vector<Graph>& graphs) {
    if (graphs.empty()) return {};
    std::vector<Graph> prompted;
    prompted.reserve(graphs.size());
    const Tensor& token = model.tokens.at("enc_mask");
    for (const auto& g : graphs) prompted.push_back(add_prompt_supernode(g, token));
    GraphBatch batch = make_batch(prompted);

    Tape tape;
    auto& enc = const_cast<ParameterSet&>(model.online_encoder);
    auto& head = const_cast<ParameterSet&>(model.prompt_head.empty() ? model.online_projector
                                                                     : model.prompt_head);
    BoundSet benc = bind_params(tape, enc, false);
    BoundSet bproj = bind_params(tape, head, false);
    ForwardMode mode{/*train=*/false, /*update_stats=*/false};
    Tape::Var x = tape.constant(batch.features);
    Tape::Var h = encoder_forward(tape, benc, model.cfg, x, batch, mode);
    std::vector<std::size_t> super_rows;
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) super_rows.push_back(batch.node_offsets[gi]);
    Tape::Var z = projector_forward(tape, bproj, model.cfg, tape.select_rows(h, super_rows));
    const Tensor zv = tape.value(z);

    std::vector<Tensor> out;
    out.reserve(graphs.size());
    for (std::size_t i = 0; i < zv.rows; ++i) {
        Tensor zi(1, zv.cols);
        for (std::size_t c = 0; c < zv.cols; ++c) zi.at(0, c) = zv.at(i, c);
        out.push_back(std::move(zi));
    }
    return out;
}

Tensor prompt_embed(const ModelState& model, const Graph& g) {
    return prompt_embed_all(model, {g}).front();
}

Prediction predict_scores(const Tensor& z_sup, const Tensor& prototypes) {
    if (z_sup.rows != 1 || z_sup.cols != prototypes.cols)
        throw InvalidArgument("predict_scores: embedding must be 1x" + std::to_string(prototypes.cols));
    const double zn = z_sup.row_norm(0);
    if (zn == 0.0) throw DegenerateInput("predict_scores: zero-norm super-node embedding");
    const std::size_t num_classes = prototypes.rows;
    std::vector<double> sims(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c) {
        const double pn = prototypes.row_norm(c);
        if (pn == 0.0) throw DegenerateInput("predict_scores: zero-norm prototype " + std::to_string(c));
        double dot = 0.0;
        for (std::size_t k = 0; k < z_sup.cols; ++k) dot += z_sup.at(0, k) * prototypes.at(c, k);
        sims[c] = dot / (zn * pn);
    }
    double m = -std::numeric_limits<double>::infinity();
    for (double s : sims) m = std::max(m, s);
    double z = 0.0;
    for (double s : sims) z += std::exp(s - m);
    Prediction pred;
    pred.probs.resize(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c) pred.probs[c] = std::exp(sims[c] - m) / z;
    pred.predicted = 0;
    for (std::size_t c = 1; c < num_classes; ++c)
        if (pred.probs[c] > pred.probs[pred.predicted]) pred.predicted = static_cast<int>(c);
    return pred;
}

Prediction predict(const ModelState& model, const Graph& g) {
    return predict_scores(prompt_embed(model, g), model.prototypes.at("proto"));
}

std::vector<Prediction> predict_batch(const ModelState& model, const std::vector<Graph>& graphs) {
    std::vector<Prediction> out;
    out.reserve(graphs.size());
    const Tensor& protos = model.prototypes.at("proto");
    for (const Tensor& z : prompt_embed_all(model, graphs)) out.push_back(predict_scores(z, protos));
    return out;
}

}  // namespace gssl
