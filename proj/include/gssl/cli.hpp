#pragma once

#include <optional>
#include <string>

#include "gssl/config.hpp"

namespace gssl {

struct CliOptions {
    std::string config_path;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string checkpoint;
    std::optional<std::size_t> jobs;
    std::string mode;      // full | frozen
    std::string protocol;  // overrides [eval].protocol
    std::string exe_dir;
};

// preset file < config file < command-line flags.
RunConfig resolve_config(const CliOptions& opts);

// Each command returns a process exit code; exceptions are mapped by the caller:
// 0 success, 1 config error, 2 data error, 3 numeric abort.
int cmd_pretrain(const RunConfig& cfg);
int cmd_prompt_tune(const RunConfig& cfg, const std::string& checkpoint_path);
// checkpoint_path may be "random" to evaluate a freshly initialized encoder.
int cmd_evaluate(const RunConfig& cfg, const std::string& checkpoint_path);
int cmd_report(const std::string& run_dir);

int exit_code_for_current_exception();

}  // namespace gssl
