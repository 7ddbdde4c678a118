#include "gssl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <mutex>
#include <thread>

#include "gssl/errors.hpp"
#include "gssl/losses.hpp"
#include "gssl/rng.hpp"
#include "gssl/tape.hpp"

namespace gssl {

namespace {

constexpr std::size_t kEmbedChunk = 256;

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    std::exception_ptr first_error;
    std::mutex error_mu;
    for (std::size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += jobs) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : workers) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

Tensor rows_of(const Tensor& m, const std::vector<std::size_t>& idx) {
    Tensor out(idx.size(), m.cols);
    for (std::size_t k = 0; k < idx.size(); ++k)
        for (std::size_t c = 0; c < m.cols; ++c) out.at(k, c) = m.at(idx[k], c);
    return out;
}

std::vector<int> labels_of(const DatasetBundle& bundle, const std::vector<std::size_t>& idx) {
    std::vector<int> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(*bundle.graphs[i].label);
    return out;
}

std::vector<Graph> graphs_of(const DatasetBundle& bundle, const std::vector<std::size_t>& idx) {
    std::vector<Graph> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(bundle.graphs[i]);
    return out;
}

}  // namespace

Tensor embed_frozen(const ModelState& model, const std::vector<Graph>& graphs) {
    if (graphs.empty()) return Tensor(0, model.cfg.hidden_size);
    Tensor out(graphs.size(), model.cfg.hidden_size);
    for (std::size_t start = 0; start < graphs.size(); start += kEmbedChunk) {
        const std::size_t stop = std::min(graphs.size(), start + kEmbedChunk);
        std::vector<Graph> chunk(graphs.begin() + static_cast<std::ptrdiff_t>(start),
                                 graphs.begin() + static_cast<std::ptrdiff_t>(stop));
        const Tensor emb = embed_batch(model, make_batch(chunk), EmbedOptions{});
        for (std::size_t r = 0; r < emb.rows; ++r)
            for (std::size_t c = 0; c < emb.cols; ++c) out.at(start + r, c) = emb.at(r, c);
    }
    return out;
}

ProbeModel train_probe(const Tensor& embeddings, const std::vector<int>& labels, std::size_t num_classes,
                       std::size_t epochs, double lr) {
    if (embeddings.rows != labels.size())
        throw InvalidArgument("train_probe: row/label count mismatch");
    if (embeddings.rows == 0) throw InvalidArgument("train_probe: empty training set");
    {
        std::vector<char> present(num_classes, 0);
        std::size_t distinct = 0;
        for (int y : labels) {
            if (y < 0 || static_cast<std::size_t>(y) >= num_classes)
                throw InvalidArgument("train_probe: label outside [0,C)");
            if (!present[static_cast<std::size_t>(y)]) {
                present[static_cast<std::size_t>(y)] = 1;
                ++distinct;
            }
        }
        if (distinct < 2) throw InvalidArgument("train_probe: single-class training set");
    }

    ProbeModel probe{Tensor(embeddings.cols, num_classes), Tensor(1, num_classes)};
    AdamMoments moments;
    ParameterSet params;
    params.add("w", probe.w);
    params.add("b", probe.b);
    std::vector<std::size_t> own(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) own[i] = static_cast<std::size_t>(labels[i]);
    const AdamConfig adam{lr, 0.9, 0.999, 1e-8};

    for (std::size_t t = 1; t <= epochs; ++t) {
        Tape tape;
        Tape::Var x = tape.constant(embeddings);
        Tape::Var w = tape.leaf(params.at("w"));
        Tape::Var b = tape.leaf(params.at("b"));
        Tape::Var logits = tape.add_rowvec(tape.matmul(x, w), b);
        Tape::Var nll = tape.sub(tape.logsumexp_rows(logits), tape.select_per_row(logits, own));
        Tape::Var loss = tape.mean_all(nll);
        tape.backward(loss);
        GradMap grads;
        grads["w"] = tape.grad(w);
        grads["b"] = tape.grad(b);
        adam_step(params, grads, moments, adam, static_cast<std::int64_t>(t));
    }
    probe.w = params.at("w");
    probe.b = params.at("b");
    return probe;
}

namespace {

Tensor probe_logits(const ProbeModel& probe, const Tensor& embeddings) {
    Tensor logits(embeddings.rows, probe.w.cols);
    for (std::size_t r = 0; r < embeddings.rows; ++r)
        for (std::size_t c = 0; c < probe.w.cols; ++c) {
            double s = probe.b.at(0, c);
            for (std::size_t k = 0; k < embeddings.cols; ++k)
                s += embeddings.at(r, k) * probe.w.at(k, c);
            logits.at(r, c) = s;
        }
    return logits;
}

}  // namespace

std::vector<int> probe_predict(const ProbeModel& probe, const Tensor& embeddings) {
    const Tensor logits = probe_logits(probe, embeddings);
    std::vector<int> preds(embeddings.rows, 0);
    for (std::size_t r = 0; r < logits.rows; ++r)
        for (std::size_t c = 1; c < logits.cols; ++c)
            if (logits.at(r, c) > logits.at(r, static_cast<std::size_t>(preds[r])))
                preds[r] = static_cast<int>(c);
    return preds;
}

std::vector<double> probe_scores_binary(const ProbeModel& probe, const Tensor& embeddings) {
    if (probe.w.cols != 2) throw InvalidArgument("probe_scores_binary: probe is not binary");
    const Tensor logits = probe_logits(probe, embeddings);
    std::vector<double> scores(embeddings.rows);
    for (std::size_t r = 0; r < logits.rows; ++r) scores[r] = logits.at(r, 1) - logits.at(r, 0);
    return scores;
}

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.size() != labels.size()) throw InvalidArgument("accuracy: length mismatch");
    if (predictions.empty()) throw InvalidArgument("accuracy: empty input");
    std::size_t ok = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) ok += predictions[i] == labels[i];
    return static_cast<double>(ok) / static_cast<double>(predictions.size());
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw InvalidArgument("roc_auc: length mismatch");
    std::size_t pos = 0, neg = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) throw InvalidArgument("roc_auc: labels must be 0/1");
        y ? ++pos : ++neg;
    }
    if (pos == 0 || neg == 0) throw UndefinedMetric("roc_auc: needs both classes present");
    double won = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            if (scores[i] > scores[j])
                won += 1.0;
            else if (scores[i] == scores[j])
                won += 0.5;
        }
    }
    return won / (static_cast<double>(pos) * static_cast<double>(neg));
}

MetricRecord aggregate_runs(const std::string& dataset, const std::string& method,
                            const std::string& split_desc, const std::string& metric_kind,
                            const std::vector<double>& values) {
    if (values.empty()) throw InvalidArgument("aggregate_runs: no values");
    MetricRecord rec;
    rec.dataset = dataset;
    rec.method = method;
    rec.split_desc = split_desc;
    rec.metric_kind = metric_kind;
    rec.run_count = values.size();
    rec.per_run = values;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    rec.mean = mean;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        rec.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return rec;
}

void fine_tune(ModelState& model, const std::vector<Graph>& graphs, const std::vector<int>& labels,
               const FineTuneConfig& cfg) {
    if (graphs.empty()) throw InvalidArgument("fine_tune: empty training set");
    if (graphs.size() != labels.size()) throw ContractViolation("fine_tune: label per graph required");
    AdamOptimizer opt(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
    opt.attach("enc", &model.online_encoder);
    opt.attach("cls", &model.classifier);

    std::vector<std::size_t> order(graphs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng rng(Rng::derive(cfg.seed, 0xf7, epoch));
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            std::vector<Graph> chunk;
            std::vector<std::size_t> own;
            for (std::size_t s = start; s < stop; ++s) {
                chunk.push_back(graphs[order[s]]);
                own.push_back(static_cast<std::size_t>(labels[order[s]]));
            }
            GraphBatch batch = make_batch(chunk);
            Tape tape;
            BoundSet enc = bind_params(tape, model.online_encoder, true);
            BoundSet cls = bind_params(tape, model.classifier, true);
            ForwardMode mode{true, true};
            Tape::Var h = encoder_forward(tape, enc, model.cfg, tape.constant(batch.features), batch, mode);
            Tape::Var g = readout(tape, h, batch, model.cfg.readout);
            Tape::Var logits = classifier_forward(tape, cls, g);
            Tape::Var nll = tape.sub(tape.logsumexp_rows(logits), tape.select_per_row(logits, own));
            Tape::Var loss = tape.mean_all(nll);
            if (!std::isfinite(tape.value(loss).item()))
                throw NumericAbort("fine_tune: non-finite loss at epoch " + std::to_string(epoch));
            tape.backward(loss);
            std::map<std::string, GradMap> grads;
            grads["enc"] = collect_grads(tape, enc);
            grads["cls"] = collect_grads(tape, cls);
            opt.step(grads);
        }
    }
}

std::vector<int> classify(const ModelState& model, const std::vector<Graph>& graphs) {
    const Tensor emb = embed_frozen(model, graphs);
    ProbeModel head{model.classifier.at("out.w"), model.classifier.at("out.b")};
    return probe_predict(head, emb);
}

Protocol protocol_from_string(const std::string& s) {
    if (s == "probe" || s == "unsupervised-probe") return Protocol::unsupervised_probe;
    if (s == "semisup-ft") return Protocol::semisup_ft;
    if (s == "semisup-prompt") return Protocol::semisup_prompt;
    if (s == "fewshot-ft") return Protocol::fewshot_ft;
    if (s == "fewshot-prompt") return Protocol::fewshot_prompt;
    throw InvalidArgument("unknown protocol '" + s + "'");
}

std::string to_string(Protocol p) {
    switch (p) {
        case Protocol::unsupervised_probe: return "unsupervised-probe";
        case Protocol::semisup_ft: return "semisup-ft";
        case Protocol::semisup_prompt: return "semisup-prompt";
        case Protocol::fewshot_ft: return "fewshot-ft";
        default: return "fewshot-prompt";
    }
}

namespace {

void require_labels(const DatasetBundle& bundle) {
    for (const auto& g : bundle.graphs)
        if (!g.label) throw InvalidArgument("protocol requires labels for every graph");
}

MetricRecord protocol_probe(const DatasetBundle& bundle, const ModelState& model,
                            const ProtocolConfig& cfg) {
    const Tensor emb = embed_frozen(model, bundle.graphs);
    std::vector<double> per_run(cfg.runs, 0.0);
    parallel_for(cfg.runs, cfg.jobs, [&](std::size_t r) {
        const SplitSpec spec = make_kfold(bundle, cfg.folds, cfg.seed + r);
        double acc_sum = 0.0;
        for (std::size_t f = 0; f < cfg.folds; ++f) {
            auto [train_idx, test_idx] = kfold_train_test(spec, f);
            const ProbeModel probe = train_probe(rows_of(emb, train_idx), labels_of(bundle, train_idx),
                                                 bundle.num_classes, cfg.probe_epochs, cfg.probe_lr);
            acc_sum += accuracy(probe_predict(probe, rows_of(emb, test_idx)), labels_of(bundle, test_idx));
        }
        per_run[r] = acc_sum / static_cast<double>(cfg.folds);
    });
    return aggregate_runs(bundle.name, cfg.method_tag,
                          std::to_string(cfg.folds) + "-fold cv, " + std::to_string(cfg.runs) + " runs",
                          "accuracy", per_run);
}

MetricRecord protocol_semisup_ft(const DatasetBundle& bundle, const ModelState& model,
                                 const ProtocolConfig& cfg) {
    std::vector<double> per_run(cfg.runs, 0.0);
    parallel_for(cfg.runs, cfg.jobs, [&](std::size_t r) {
        const SplitSpec spec = make_label_rate(bundle, cfg.label_rate, cfg.seed + r);
        ModelState tuned = model;
        Rng rng(Rng::derive(cfg.seed + r, 0xc15));
        tuned.classifier = init_classifier(tuned.cfg, rng);  // fresh head per run
        FineTuneConfig ft = cfg.ft;
        ft.seed = cfg.seed + r;
        fine_tune(tuned, graphs_of(bundle, spec.parts[0]), labels_of(bundle, spec.parts[0]), ft);
        per_run[r] = accuracy(classify(tuned, graphs_of(bundle, spec.parts[1])),
                              labels_of(bundle, spec.parts[1]));
    });
    const int pct = static_cast<int>(std::lround(cfg.label_rate * 100));
    return aggregate_runs(bundle.name, cfg.method_tag,
                          std::to_string(pct) + "% labels, " + std::to_string(cfg.runs) + " runs",
                          "accuracy", per_run);
}

MetricRecord protocol_semisup_prompt(const DatasetBundle& bundle, const ModelState& model,
                                     const ProtocolConfig& cfg) {
    std::vector<double> per_run(cfg.runs, 0.0);
    parallel_for(cfg.runs, cfg.jobs, [&](std::size_t r) {
        const SplitSpec spec = make_label_rate(bundle, cfg.label_rate, cfg.seed + r);
        ModelState tuned = model;
        Rng rng(Rng::derive(cfg.seed + r, 0xc16));
        tuned.prototypes = init_prototypes(tuned.cfg, rng);  // fresh bank per run
        PromptConfig pc = cfg.prompt;
        pc.mode = TuneMode::full;
        pc.seed = cfg.seed + r;
        run_prompt_tune(tuned, graphs_of(bundle, spec.parts[0]), labels_of(bundle, spec.parts[0]), pc);
        std::vector<int> preds;
        for (const auto& p : predict_batch(tuned, graphs_of(bundle, spec.parts[1])))
            preds.push_back(p.predicted);
        per_run[r] = accuracy(preds, labels_of(bundle, spec.parts[1]));
    });
    const int pct = static_cast<int>(std::lround(cfg.label_rate * 100));
    return aggregate_runs(bundle.name, cfg.method_tag,
                          std::to_string(pct) + "% labels, " + std::to_string(cfg.runs) + " runs",
                          "accuracy", per_run);
}

MetricRecord protocol_fewshot_ft(const DatasetBundle& bundle, const ModelState& model,
                                 const ProtocolConfig& cfg) {
    const Tensor emb = embed_frozen(model, bundle.graphs);
    std::vector<double> per_episode(cfg.episodes, 0.0);
    parallel_for(cfg.episodes, cfg.jobs, [&](std::size_t e) {
        const SplitSpec spec = make_kshot(bundle, cfg.shots, cfg.seed + e);
        const ProbeModel probe =
            train_probe(rows_of(emb, spec.parts[0]), labels_of(bundle, spec.parts[0]), bundle.num_classes,
                        cfg.probe_epochs, cfg.probe_lr);
        per_episode[e] = accuracy(probe_predict(probe, rows_of(emb, spec.parts[1])),
                                  labels_of(bundle, spec.parts[1]));
    });
    return aggregate_runs(bundle.name, cfg.method_tag,
                          std::to_string(cfg.shots) + "-shot, " + std::to_string(cfg.episodes) +
                              " episodes",
                          "accuracy", per_episode);
}

MetricRecord protocol_fewshot_prompt(const DatasetBundle& bundle, const ModelState& model,
                                     const ProtocolConfig& cfg) {
    std::vector<double> per_episode(cfg.episodes, 0.0);
    parallel_for(cfg.episodes, cfg.jobs, [&](std::size_t e) {
        const SplitSpec spec = make_kshot(bundle, cfg.shots, cfg.seed + e);
        ModelState tuned = model;
        Rng rng(Rng::derive(cfg.seed + e, 0xc17));
        tuned.prototypes = init_prototypes(tuned.cfg, rng);  // fresh bank per episode
        PromptConfig pc = cfg.prompt;
        pc.mode = TuneMode::frozen;
        pc.seed = cfg.seed + e;
        run_prompt_tune(tuned, graphs_of(bundle, spec.parts[0]), labels_of(bundle, spec.parts[0]), pc);
        std::vector<int> preds;
        for (const auto& p : predict_batch(tuned, graphs_of(bundle, spec.parts[1])))
            preds.push_back(p.predicted);
        per_episode[e] = accuracy(preds, labels_of(bundle, spec.parts[1]));
    });
    return aggregate_runs(bundle.name, cfg.method_tag,
                          std::to_string(cfg.shots) + "-shot, " + std::to_string(cfg.episodes) +
                              " episodes",
                          "accuracy", per_episode);
}

}  // namespace

MetricRecord run_protocol(const DatasetBundle& bundle, const ModelState& model, Protocol protocol,
                          const ProtocolConfig& cfg) {
    require_labels(bundle);
    switch (protocol) {
        case Protocol::unsupervised_probe: return protocol_probe(bundle, model, cfg);
        case Protocol::semisup_ft: return protocol_semisup_ft(bundle, model, cfg);
        case Protocol::semisup_prompt: return protocol_semisup_prompt(bundle, model, cfg);
        case Protocol::fewshot_ft: return protocol_fewshot_ft(bundle, model, cfg);
        case Protocol::fewshot_prompt: return protocol_fewshot_prompt(bundle, model, cfg);
    }
    throw InvalidArgument("unreachable protocol");
}

std::vector<MetricRecord> published_reference_points() {
    auto ref = [](const std::string& dataset, const std::string& method, const std::string& split,
                  double mean, double stddev) {
        MetricRecord r;
        r.dataset = dataset;
        r.method = method;
        r.split_desc = split;
        r.metric_kind = "accuracy";
        r.mean = mean / 100.0;
        r.stddev = stddev / 100.0;
        r.run_count = 0;  // reference row, not a measurement
        return r;
    };
    return {
        ref("MUTAG", "pretrain+svm-probe", "reference: 10-fold cv, 5 runs", 88.83, 1.44),
        ref("MUTAG", "pretrain+ft", "reference: 1-shot", 58.68, 2.28),
        ref("MUTAG", "prompt-tune", "reference: 1-shot", 72.88, 5.20),
        ref("DD", "prompt-tune", "reference: 10% labels", 75.37, 0.16),
    };
}

}  // namespace gssl
