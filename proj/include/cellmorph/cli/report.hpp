#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cellmorph::cli {

struct MetricRow {
    std::string name;
    double value = 0;
};

struct CategoryRow {
    std::string name;
    std::int64_t support = 0;
    double recall = 0;
};

struct EvaluationReport {
    std::string dataset_id;
    std::string task;  // "segmentation" or "classification"
    std::vector<MetricRow> metrics;
    std::vector<CategoryRow> per_category;
    std::uint64_t config_fingerprint = 0;
    std::string timestamp;  // excluded from regeneration equality

    void add(const std::string& name, double value) { metrics.push_back({name, value}); }
};

std::string current_timestamp();

// Writes <base>.txt (human-readable) and <base>.json (machine-readable).
// Everything except the timestamp is a pure function of checkpoint,
// manifest, and seed.
void write_report(const std::filesystem::path& base, const EvaluationReport& report);

}  // namespace cellmorph::cli
