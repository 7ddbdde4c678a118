#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "gssl/eval.hpp"

namespace gssl {

// Line-delimited JSON records {stage, epoch, metric, value, ts}. The ts field is
// operator convenience; determinism contracts compare logs with ts stripped.
class MetricLog {
public:
    MetricLog(const std::string& path, const std::string& stage, const std::string& config_hash);

    void record(std::int64_t epoch, const std::string& metric, double value);
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::string stage_;
    std::ofstream out_;
};

struct MetricRow {
    std::string stage;
    std::int64_t epoch = 0;
    std::string metric;
    double value = 0.0;
};

// Data rows only (run headers are skipped); ts is dropped on read.
std::vector<MetricRow> read_metric_log(const std::string& path);

// True when both logs carry identical records (bit-exact values, ts ignored).
bool logs_equivalent(const std::string& path_a, const std::string& path_b);

// MetricRecord rows as JSONL for the report command.
void append_metric_record(const std::string& path, const MetricRecord& rec, const std::string& config_hash);
std::vector<MetricRecord> read_metric_records(const std::string& path);

std::string format_record_line(const MetricRecord& rec);

}  // namespace gssl
