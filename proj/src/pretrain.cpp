#include "gssl/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gssl/errors.hpp"
#include "gssl/losses.hpp"
#include "gssl/rng.hpp"

namespace gssl {

void validate(const PretrainConfig& cfg) {
    if (cfg.lambda_pre < 0.0 || cfg.lambda_pre > 1.0)
        throw InvalidArgument("lambda_pre must be in [0,1]");
    if (cfg.local.gamma < 1.0) throw InvalidArgument("gamma must be >= 1");
    if (cfg.global.temperature <= 0.0) throw InvalidArgument("temperature must be positive");
    if (cfg.ema.momentum < 0.0 || cfg.ema.momentum >= 1.0)
        throw InvalidArgument("ema momentum must be in [0,1)");
    if (cfg.batch_size < 1) throw InvalidArgument("batch size must be >= 1");
    if (cfg.local.masking_rate < 0.0 || cfg.local.masking_rate > 1.0 || cfg.local.replace_rate < 0.0 ||
        cfg.local.replace_rate > 1.0)
        throw InvalidArgument("masking/replace rate must be in [0,1]");
}

PretrainRun::PretrainRun(ModelState* model, const PretrainConfig& cfg)
    : model_(model), cfg_(cfg), opt_(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8}), queue_(cfg.global.queue_size) {
    validate(cfg_);
    opt_.attach("enc", &model_->online_encoder);
    opt_.attach("dec", &model_->decoder);
    opt_.attach("tok", &model_->tokens);
    opt_.attach("proj", &model_->online_projector);
}

namespace {

double grad_sq_norm(const GradMap& grads) {
    double s = 0.0;
    for (const auto& [name, g] : grads)
        for (double v : g.data) s += v * v;
    return s;
}

}  // namespace

EpochMetrics PretrainRun::run_epoch(const std::vector<Graph>& graphs, std::size_t epoch_index) {
    if (graphs.empty()) throw InvalidArgument("pretrain: empty dataset");
    ModelState& model = *model_;
    const PretrainConfig& cfg = cfg_;

    std::vector<std::size_t> order(graphs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(Rng::derive(cfg.seed, 0xe9, epoch_index));
    shuffle_rng.shuffle(order);

    EpochMetrics metrics;
    std::size_t batches = 0;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batches) {
        const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
        const std::size_t batch_id = start / cfg.batch_size;

        // ---- view assembly ----
        std::vector<Graph> view1, view2;
        std::vector<MaskPlan> plans;
        view1.reserve(stop - start);
        view2.reserve(stop - start);
        for (std::size_t slot = start; slot < stop; ++slot) {
            const Graph& g = graphs[order[slot]];
            const std::uint64_t mask_seed = Rng::derive(cfg.seed, 0xa1, epoch_index, slot);
            const std::uint64_t aug1_seed = Rng::derive(cfg.seed, 0xa2, epoch_index, slot);
            const std::uint64_t aug2_seed = Rng::derive(cfg.seed, 0xa3, epoch_index, slot);
            MaskPlan plan = plan_mask(g, cfg.local.masking_rate, cfg.local.replace_rate, mask_seed);
            Graph g1 = augment(g, cfg.aug_online, aug1_seed);
            // replaced nodes carry another node's original features
            for (std::size_t k = 0; k < plan.replaced_nodes.size(); ++k)
                for (std::size_t c = 0; c < g.feature_dim(); ++c)
                    g1.node_features.at(plan.replaced_nodes[k], c) =
                        g.node_features.at(plan.replacement_src[k], c);
            view1.push_back(std::move(g1));
            view2.push_back(augment(g, cfg.aug_target, aug2_seed));
            plans.push_back(std::move(plan));
        }
        GraphBatch batch1 = make_batch(view1);
        GraphBatch batch2 = make_batch(view2);

        std::vector<std::size_t> token_rows, masked_rows;
        for (std::size_t gi = 0; gi < plans.size(); ++gi) {
            const std::size_t off = batch1.node_offsets[gi];
            for (std::size_t v : plans[gi].token_nodes) token_rows.push_back(off + v);
            for (std::size_t v : plans[gi].masked_nodes) masked_rows.push_back(off + v);
        }
        Tensor x_true(masked_rows.size(), batch1.features.cols);
        {
            std::size_t row = 0;
            for (std::size_t gi = 0; gi < plans.size(); ++gi) {
                const Graph& g = graphs[order[start + gi]];
                for (std::size_t v : plans[gi].masked_nodes) {
                    for (std::size_t c = 0; c < g.feature_dim(); ++c)
                        x_true.at(row, c) = g.node_features.at(v, c);
                    ++row;
                }
            }
        }

        // ---- target branch: values only, no gradient linkage ----
        Tensor z2 = embed_batch(model, batch2,
                                EmbedOptions{/*use_target=*/true, /*train_mode_norms=*/true,
                                             /*apply_projector=*/true});

        // ---- online branch ----
        Tape tape;
        BoundSet enc = bind_params(tape, model.online_encoder, true);
        BoundSet dec = bind_params(tape, model.decoder, true);
        BoundSet tok = bind_params(tape, model.tokens, true);
        BoundSet proj = bind_params(tape, model.online_projector, true);

        ForwardMode mode{/*train=*/true, /*update_stats=*/true};
        Tape::Var x = tape.replace_rows(tape.constant(batch1.features), token_rows, tok["enc_mask"]);
        Tape::Var h1 = encoder_forward(tape, enc, model.cfg, x, batch1, mode);
        Tape::Var x_rec_all = decoder_forward(tape, dec, tok["dec_mask"], model.cfg, h1, masked_rows,
                                              batch1, mode);
        ScaledCosineResult local =
            scaled_cosine_error(tape, x_true, tape.select_rows(x_rec_all, masked_rows), cfg.local.gamma);

        Tape::Var g1 = readout(tape, h1, batch1, model.cfg.readout);
        Tape::Var z1 = projector_forward(tape, proj, model.cfg, g1);
        NtXentResult global = nt_xent_with_queue(tape, z1, z2, queue_, cfg.global.temperature);

        Tape::Var loss = tape.add(tape.scale(local.loss, cfg.lambda_pre),
                                  tape.scale(global.loss, 1.0 - cfg.lambda_pre));

        const double loss_v = tape.value(loss).item();
        const double local_v = tape.value(local.loss).item();
        const double global_v = tape.value(global.loss).item();
        if (!std::isfinite(loss_v))
            throw NumericAbort("pretrain: non-finite loss at epoch " + std::to_string(epoch_index) +
                               " batch " + std::to_string(batch_id) + " (seed " + std::to_string(cfg.seed) +
                               ")");

        tape.backward(loss);
        std::map<std::string, GradMap> grads;
        grads["enc"] = collect_grads(tape, enc);
        grads["dec"] = collect_grads(tape, dec);
        grads["tok"] = collect_grads(tape, tok);
        grads["proj"] = collect_grads(tape, proj);

        double gsq = 0.0;
        for (const auto& [key, gm] : grads) gsq += grad_sq_norm(gm);

        opt_.step(grads);
        ema_update(model.target_encoder, model.online_encoder, cfg.ema.momentum);
        ema_update(model.target_projector, model.online_projector, cfg.ema.momentum);
        queue_.push_rows(z2);

        metrics.loss_local += local_v;
        metrics.skipped_recon_rows += local.skipped_rows;
        metrics.loss_global += global_v;
        metrics.loss_pre += loss_v;
        metrics.grad_norm += std::sqrt(gsq);
    }

    metrics.loss_local /= static_cast<double>(batches);
    metrics.loss_global /= static_cast<double>(batches);
    metrics.loss_pre /= static_cast<double>(batches);
    metrics.grad_norm /= static_cast<double>(batches);
    metrics.queue_fill = queue_.size();
    return metrics;
}

std::int64_t run_pretrain(ModelState& model, const std::vector<Graph>& graphs, const PretrainConfig& cfg,
                          const EpochSink& sink) {
    PretrainRun run(&model, cfg);
    for (std::size_t e = 1; e <= cfg.epochs; ++e) {
        const EpochMetrics m = run.run_epoch(graphs, e);
        if (sink) sink(e, m);
    }
    return run.step_count();
}

}  // namespace gssl
