#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "gssl/graph.hpp"
#include "gssl/nn.hpp"
#include "gssl/params.hpp"
#include "gssl/queue.hpp"

namespace gssl {

struct LocalLossConfig {
    double gamma = 1.0;  // >= 1
    double masking_rate = 0.5;
    double replace_rate = 0.0;
};

struct GlobalLossConfig {
    double temperature = 2.0;
    std::size_t queue_size = 1024;
};

struct PretrainConfig {
    double lambda_pre = 0.5;
    std::size_t batch_size = 32;
    std::size_t epochs = 100;
    double lr = 1e-3;
    EMAConfig ema;
    LocalLossConfig local;
    GlobalLossConfig global;
    AugmentSpec aug_online;  // composed with masking on the online view
    AugmentSpec aug_target;  // target view augmentation
    std::uint64_t seed = 1;
};

void validate(const PretrainConfig& cfg);

struct EpochMetrics {
    double loss_local = 0.0;
    double loss_global = 0.0;
    double loss_pre = 0.0;
    double grad_norm = 0.0;
    std::size_t queue_fill = 0;
    std::size_t skipped_recon_rows = 0;  // zero-norm truth rows the cosine error cannot score
};

// One pre-training run: owns the optimizer and the dynamic queue, which persists
// across epochs and starts empty. The model's online sets are updated by Adam,
// the target sets by EMA, once per batch.
class PretrainRun {
public:
    PretrainRun(ModelState* model, const PretrainConfig& cfg);

    EpochMetrics run_epoch(const std::vector<Graph>& graphs, std::size_t epoch_index);

    const DynamicQueue& queue() const { return queue_; }
    std::int64_t step_count() const { return opt_.step_count(); }

private:
    ModelState* model_;
    PretrainConfig cfg_;
    AdamOptimizer opt_;
    DynamicQueue queue_;
};

using EpochSink = std::function<void(std::size_t epoch, const EpochMetrics&)>;

// Per epoch: shuffle, then per batch run both branches and update.
// Returns total optimizer steps.
std::int64_t run_pretrain(ModelState& model, const std::vector<Graph>& graphs, const PretrainConfig& cfg,
                          const EpochSink& sink = nullptr);

}  // namespace gssl
