#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "gssl/graph.hpp"
#include "gssl/nn.hpp"
#include "gssl/params.hpp"

namespace gssl {

enum class TuneMode { full, frozen };

TuneMode tune_mode_from_string(const std::string& s);
std::string to_string(TuneMode m);

struct PromptConfig {
    double lambda_prompt = 0.1;
    double mask_rate = 0.1;      // low-rate masking of original nodes
    double replace_rate = 0.0;
    double gamma = 1.0;          // scaled-cosine exponent of the auxiliary loss
    double temperature = 2.0;
    std::size_t epochs = 50;
    double lr = 1e-3;
    std::size_t batch_size = 32;
    TuneMode mode = TuneMode::full;
    bool fresh_head = false;       // new projector instead of the pre-trained f_o
    bool paper_constants = false;  // printed SPCL normalization instead of means
    std::uint64_t seed = 1;
};

void validate(const PromptConfig& cfg);

struct PromptEpochMetrics {
    double loss_local = 0.0;
    double loss_proto = 0.0;
    double train_accuracy = 0.0;
};

// Prompt tuning over a labeled subset. Full mode trains encoder, decoder, tokens,
// projector and prototypes; frozen mode trains prototypes (plus the fresh head if
// requested) and leaves every pre-trained tensor untouched, running stats
// included (frozen forwards use eval-mode norms).
class PromptRun {
public:
    PromptRun(ModelState* model, const PromptConfig& cfg);

    PromptEpochMetrics run_epoch(const std::vector<Graph>& graphs, const std::vector<int>& labels,
                                 std::size_t epoch_index);

    std::int64_t step_count() const { return opt_.step_count(); }

private:
    ModelState* model_;
    PromptConfig cfg_;
    AdamOptimizer opt_;
};

using PromptEpochSink = std::function<void(std::size_t epoch, const PromptEpochMetrics&)>;

std::int64_t run_prompt_tune(ModelState& model, const std::vector<Graph>& graphs,
                             const std::vector<int>& labels, const PromptConfig& cfg,
                             const PromptEpochSink& sink = nullptr);

struct Prediction {
    std::vector<double> probs;  // one per class, sums to 1
    int predicted = 0;          // argmax, ties to the lowest class index
};

// Super-node embedding in the contrast space used during tuning: add the masked
// super node, run the frozen encoder in eval mode, project H[0].
Tensor prompt_embed(const ModelState& model, const Graph& g);
std::vector<Tensor> prompt_embed_all(const ModelState& model, const std::vector<Graph>& graphs);

// Softmax over cosine similarities against the prototype rows (no temperature).
// Invariant under positive scaling of the embedding.
Prediction predict_scores(const Tensor& z_sup, const Tensor& prototypes);

Prediction predict(const ModelState& model, const Graph& g);
std::vector<Prediction> predict_batch(const ModelState& model, const std::vector<Graph>& graphs);

}  // namespace gssl
