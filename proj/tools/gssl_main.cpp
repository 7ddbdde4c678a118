#include <CLI11.hpp>

#include <filesystem>

#include "gssl/cli.hpp"

namespace {

std::string exe_dir_of(const char* argv0) {
    std::error_code ec;
    auto p = std::filesystem::canonical(argv0, ec);
    if (ec) return "";
    return p.parent_path().string();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"graph self-supervised pre-training and prompt tuning"};
    app.require_subcommand(1);

    gssl::CliOptions opts;
    opts.exe_dir = exe_dir_of(argv[0]);
    std::string run_dir;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", opts.config_path, "config file (ini)");
        cmd->add_option("--preset", opts.preset, "named preset from presets/");
        cmd->add_option("--seed", opts.seed, "run seed");
        cmd->add_option("--out", opts.out, "output directory");
        cmd->add_option("--jobs", opts.jobs, "parallel fold/episode workers");
    };

    CLI::App* pretrain = app.add_subcommand("pretrain", "self-supervised pre-training");
    add_common(pretrain);

    CLI::App* tune = app.add_subcommand("prompt-tune", "verbalizer-free prompt tuning");
    add_common(tune);
    tune->add_option("--checkpoint", opts.checkpoint, "pre-trained checkpoint")->required();
    tune->add_option("--mode", opts.mode, "full | frozen");

    CLI::App* evaluate = app.add_subcommand("evaluate", "downstream evaluation protocols");
    add_common(evaluate);
    evaluate->add_option("--checkpoint", opts.checkpoint,
                         "checkpoint to evaluate ('random' for a fresh encoder)");
    evaluate->add_option("--protocol", opts.protocol,
                         "probe | semisup-ft | semisup-prompt | fewshot-ft | fewshot-prompt");
    evaluate->add_option("--mode", opts.mode, "prompt tuning mode for prompt protocols");

    CLI::App* report = app.add_subcommand("report", "aggregate results of a run directory");
    report->add_option("--run", run_dir, "run directory with results.jsonl")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (report->parsed()) return gssl::cmd_report(run_dir);
        const gssl::RunConfig cfg = gssl::resolve_config(opts);
        if (pretrain->parsed()) return gssl::cmd_pretrain(cfg);
        if (tune->parsed()) return gssl::cmd_prompt_tune(cfg, opts.checkpoint);
        if (evaluate->parsed()) return gssl::cmd_evaluate(cfg, opts.checkpoint);
    } catch (...) {
        return gssl::exit_code_for_current_exception();
    }
    return 1;
}
