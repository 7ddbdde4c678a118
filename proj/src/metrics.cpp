#include "gssl/metrics.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>

#include <json.hpp>

#include "gssl/errors.hpp"

namespace gssl {

namespace {

std::string now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

MetricLog::MetricLog(const std::string& path, const std::string& stage, const std::string& config_hash)
    : path_(path), stage_(stage), out_(path, std::ios::trunc) {
    if (!out_) throw IoError("cannot write metric log: " + path);
    nlohmann::json header;
    header["type"] = "run-header";
    header["stage"] = stage;
    header["config_hash"] = config_hash;
    header["ts"] = now_iso8601();
    out_ << header.dump() << "\n";
    out_.flush();
}

void MetricLog::record(std::int64_t epoch, const std::string& metric, double value) {
    nlohmann::json row;
    row["stage"] = stage_;
    row["epoch"] = epoch;
    row["metric"] = metric;
    row["value"] = value;
    row["ts"] = now_iso8601();
    out_ << row.dump() << "\n";
    out_.flush();
}

std::vector<MetricRow> read_metric_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read metric log: " + path);
    std::vector<MetricRow> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ParseError(path + ": malformed metric line: " + line);
        if (j.value("type", "") == "run-header") continue;
        MetricRow row;
        row.stage = j.at("stage").get<std::string>();
        row.epoch = j.at("epoch").get<std::int64_t>();
        row.metric = j.at("metric").get<std::string>();
        row.value = j.at("value").get<double>();
        rows.push_back(std::move(row));
    }
    return rows;
}

bool logs_equivalent(const std::string& path_a, const std::string& path_b) {
    const auto a = read_metric_log(path_a);
    const auto b = read_metric_log(path_b);
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].stage != b[i].stage || a[i].epoch != b[i].epoch || a[i].metric != b[i].metric)
            return false;
        // bit-exact: compare the doubles directly, not within a tolerance
        if (!(a[i].value == b[i].value) && !(std::isnan(a[i].value) && std::isnan(b[i].value)))
            return false;
    }
    return true;
}

void append_metric_record(const std::string& path, const MetricRecord& rec,
                          const std::string& config_hash) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw IoError("cannot append to " + path);
    nlohmann::json j;
    j["dataset"] = rec.dataset;
    j["method"] = rec.method;
    j["split"] = rec.split_desc;
    j["metric"] = rec.metric_kind;
    j["mean"] = rec.mean;
    j["std"] = rec.stddev;
    j["runs"] = rec.run_count;
    j["per_run"] = rec.per_run;
    j["config_hash"] = config_hash;
    j["ts"] = now_iso8601();
    out << j.dump() << "\n";
}

std::vector<MetricRecord> read_metric_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::vector<MetricRecord> recs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ParseError(path + ": malformed record: " + line);
        MetricRecord rec;
        rec.dataset = j.at("dataset").get<std::string>();
        rec.method = j.at("method").get<std::string>();
        rec.split_desc = j.at("split").get<std::string>();
        rec.metric_kind = j.at("metric").get<std::string>();
        rec.mean = j.at("mean").get<double>();
        rec.stddev = j.at("std").get<double>();
        rec.run_count = j.at("runs").get<std::size_t>();
        if (j.count("per_run")) rec.per_run = j.at("per_run").get<std::vector<double>>();
        recs.push_back(std::move(rec));
    }
    return recs;
}

std::string format_record_line(const MetricRecord& rec) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-14s | %-18s | %-22s | %s %.2f ± %.2f (%zu runs)",
                  rec.dataset.c_str(), rec.method.c_str(), rec.split_desc.c_str(),
                  rec.metric_kind == "accuracy" ? "acc" : rec.metric_kind.c_str(), rec.mean * 100.0,
                  rec.stddev * 100.0, rec.run_count);
    return buf;
}

}  // namespace gssl
