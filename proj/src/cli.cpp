#include "gssl/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "gssl/checkpoint.hpp"
#include "gssl/errors.hpp"
#include "gssl/metrics.hpp"

namespace gssl {

namespace fs = std::filesystem;

RunConfig resolve_config(const CliOptions& opts) {
    IniData merged;
    if (!opts.preset.empty()) overlay(merged, parse_ini_file(find_preset_file(opts.preset, opts.exe_dir)));
    if (!opts.config_path.empty()) overlay(merged, parse_ini_file(opts.config_path));
    if (merged.empty()) throw ConfigError("no configuration given: pass --preset and/or --config");
    if (opts.seed) merged["run"]["seed"] = std::to_string(*opts.seed);
    if (!opts.out.empty()) merged["run"]["out"] = opts.out;
    if (opts.jobs) merged["eval"]["jobs"] = std::to_string(*opts.jobs);
    if (!opts.mode.empty()) merged["prompt"]["mode"] = opts.mode;
    if (!opts.protocol.empty()) merged["eval"]["protocol"] = opts.protocol;
    return run_config_from_ini(merged);
}

namespace {

ModelConfig complete_model_cfg(const RunConfig& cfg, const DatasetBundle& bundle) {
    ModelConfig mc = cfg.model;
    mc.input_dim = bundle.feature_dim();
    mc.num_classes = bundle.num_classes;
    return mc;
}

LoadedCheckpoint load_compatible_checkpoint(const std::string& path, const DatasetBundle& bundle) {
    LoadedCheckpoint ck = load_checkpoint(path);
    if (ck.model.cfg.input_dim != bundle.feature_dim())
        throw ContractViolation("checkpoint input dim " + std::to_string(ck.model.cfg.input_dim) +
                                " is incompatible with dataset feature dim " +
                                std::to_string(bundle.feature_dim()));
    return ck;
}

}  // namespace

int cmd_pretrain(const RunConfig& cfg) {
    const DatasetBundle bundle = load_dataset(cfg);
    fs::create_directories(cfg.out_dir);
    ModelState model = init_model(complete_model_cfg(cfg, bundle), cfg.seed);

    MetricLog log(cfg.out_dir + "/metrics-pretrain.jsonl", "pretrain", cfg.config_hash);
    const std::int64_t steps =
        run_pretrain(model, bundle.graphs, cfg.pretrain, [&](std::size_t epoch, const EpochMetrics& m) {
            log.record(static_cast<std::int64_t>(epoch), "loss_local", m.loss_local);
            log.record(static_cast<std::int64_t>(epoch), "loss_global", m.loss_global);
            log.record(static_cast<std::int64_t>(epoch), "loss_pre", m.loss_pre);
            log.record(static_cast<std::int64_t>(epoch), "grad_norm", m.grad_norm);
            log.record(static_cast<std::int64_t>(epoch), "queue_fill",
                       static_cast<double>(m.queue_fill));
            log.record(static_cast<std::int64_t>(epoch), "skipped_recon_rows",
                       static_cast<double>(m.skipped_recon_rows));
        });

    const std::string ckpt = cfg.out_dir + "/checkpoint.bin";
    save_checkpoint(ckpt, model, CheckpointMeta{cfg.seed, cfg.config_hash, steps, bundle.name});
    std::cout << "pretrained " << bundle.name << " for " << cfg.pretrain.epochs << " epochs (" << steps
              << " steps) -> " << ckpt << "\n";
    return 0;
}

int cmd_prompt_tune(const RunConfig& cfg, const std::string& checkpoint_path) {
    if (checkpoint_path.empty()) throw ConfigError("prompt-tune requires --checkpoint");
    const DatasetBundle bundle = load_dataset(cfg);
    fs::create_directories(cfg.out_dir);
    LoadedCheckpoint ck = load_compatible_checkpoint(checkpoint_path, bundle);

    // Labeled subset for tuning: the configured label-rate split (1.0 = all graphs).
    std::vector<std::size_t> train_idx;
    if (cfg.eval.label_rate >= 1.0) {
        train_idx.resize(bundle.size());
        for (std::size_t i = 0; i < train_idx.size(); ++i) train_idx[i] = i;
    } else {
        train_idx = make_label_rate(bundle, cfg.eval.label_rate, cfg.seed).parts[0];
    }
    std::vector<Graph> graphs;
    std::vector<int> labels;
    for (std::size_t i : train_idx) {
        graphs.push_back(bundle.graphs[i]);
        if (!bundle.graphs[i].label) throw ContractViolation("prompt-tune: graph without label");
        labels.push_back(*bundle.graphs[i].label);
    }

    MetricLog log(cfg.out_dir + "/metrics-prompt.jsonl", "prompt-tune", cfg.config_hash);
    const std::int64_t steps = run_prompt_tune(ck.model, graphs, labels, cfg.prompt,
                                               [&](std::size_t epoch, const PromptEpochMetrics& m) {
                                                   const auto e = static_cast<std::int64_t>(epoch);
                                                   log.record(e, "loss_local", m.loss_local);
                                                   log.record(e, "loss_proto", m.loss_proto);
                                                   log.record(e, "train_accuracy", m.train_accuracy);
                                               });

    const std::string out_ckpt = cfg.out_dir + "/checkpoint-tuned.bin";
    save_checkpoint(out_ckpt, ck.model,
                    CheckpointMeta{cfg.seed, cfg.config_hash, ck.meta.step_count + steps, bundle.name});

    // structured prediction records over the whole dataset
    {
        std::ofstream out(cfg.out_dir + "/predictions.jsonl", std::ios::trunc);
        if (!out) throw IoError("cannot write " + cfg.out_dir + "/predictions.jsonl");
        const auto preds = predict_batch(ck.model, bundle.graphs);
        for (std::size_t i = 0; i < preds.size(); ++i) {
            nlohmann::json row;
            row["graph_id"] = bundle.graphs[i].id;
            row["probs"] = preds[i].probs;
            row["predicted"] = preds[i].predicted;
            row["config_hash"] = cfg.config_hash;
            out << row.dump() << "\n";
        }
    }

    std::cout << "prompt-tuned " << bundle.name << " (" << to_string(cfg.prompt.mode) << " mode, "
              << graphs.size() << " labeled graphs) -> " << out_ckpt << "\n";
    return 0;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& checkpoint_path) {
    const DatasetBundle bundle = load_dataset(cfg);
    fs::create_directories(cfg.out_dir);

    ModelState model;
    // default method tag is the protocol, so report cells never collide
    std::string method = cfg.eval.method_tag == "model" ? cfg.protocol : cfg.eval.method_tag;
    if (checkpoint_path.empty() || checkpoint_path == "random") {
        model = init_model(complete_model_cfg(cfg, bundle), cfg.seed);
        method += "/random-init";
    } else {
        model = load_compatible_checkpoint(checkpoint_path, bundle).model;
    }

    ProtocolConfig pc = cfg.eval;
    pc.method_tag = method;
    const Protocol protocol = protocol_from_string(cfg.protocol);
    const MetricRecord rec = run_protocol(bundle, model, protocol, pc);
    append_metric_record(cfg.out_dir + "/results.jsonl", rec, cfg.config_hash);
    std::cout << format_record_line(rec) << "\n";
    return 0;
}

int cmd_report(const std::string& run_dir) {
    const std::string path = run_dir + "/results.jsonl";
    if (!fs::exists(path)) {
        std::cerr << "report: no results at " << path << " (zero records)\n";
        return 2;
    }
    const auto recs = read_metric_records(path);
    if (recs.empty()) {
        std::cerr << "report: zero records in " << path << "\n";
        return 2;
    }
    // Pool runs of the same cell and recompute the aggregate.
    std::map<std::string, std::pair<MetricRecord, std::vector<double>>> cells;
    for (const auto& rec : recs) {
        const std::string key = rec.dataset + "|" + rec.method + "|" + rec.split_desc + "|" +
                                rec.metric_kind;
        auto it = cells.find(key);
        if (it == cells.end())
            cells.emplace(key, std::make_pair(rec, rec.per_run));
        else
            it->second.second.insert(it->second.second.end(), rec.per_run.begin(), rec.per_run.end());
    }
    std::vector<MetricRecord> merged;
    for (const auto& [key, cell] : cells) {
        const MetricRecord& proto = cell.first;
        merged.push_back(aggregate_runs(proto.dataset, proto.method, proto.split_desc, proto.metric_kind,
                                        cell.second));
    }
    const std::string out_path = run_dir + "/report.jsonl";
    std::ofstream clear(out_path, std::ios::trunc);
    clear.close();
    std::cout << "dataset        | method             | split                  | result\n";
    std::cout << "---------------+--------------------+------------------------+----------------------\n";
    for (const auto& rec : merged) {
        std::cout << format_record_line(rec) << "\n";
        append_metric_record(out_path, rec, "");
    }
    return 0;
}

int exit_code_for_current_exception() {
    try {
        throw;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const InvalidArgument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return 1;
    } catch (const NumericAbort& e) {
        std::cerr << "numeric abort: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const ContractViolation& e) {
        std::cerr << "contract violation: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace gssl
