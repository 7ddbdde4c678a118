#pragma once

#include <stdexcept>
#include <string>

namespace gssl {

// Caller passed something outside an operation's contract (bad rate, shape mismatch
// on a public surface, unknown enum value).
struct InvalidArgument : std::invalid_argument {
    explicit InvalidArgument(const std::string& msg) : std::invalid_argument(msg) {}
};

// Two internal components disagree (incongruent parameter sets, missing gradient
// entry, incompatible checkpoint). Indicates a bug or a stale artifact.
struct ContractViolation : std::logic_error {
    explicit ContractViolation(const std::string& msg) : std::logic_error(msg) {}
};

// Numerically meaningless input reached a kernel (zero-norm vector in a cosine).
struct DegenerateInput : std::runtime_error {
    explicit DegenerateInput(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem-level failure; message names the path.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed dataset or config text; message carries file and line.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training produced a non-finite loss; message carries seed and batch id.
struct NumericAbort : std::runtime_error {
    explicit NumericAbort(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Metric has no defined value on this input (ROC-AUC with one class present).
struct UndefinedMetric : std::runtime_error {
    explicit UndefinedMetric(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace gssl
