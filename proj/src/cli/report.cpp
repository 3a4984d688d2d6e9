#include "cellmorph/cli/report.hpp"

#include <nlohmann/json.hpp>

#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "cellmorph/core/error.hpp"

namespace cellmorph::cli {

std::string current_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

void write_report(const std::filesystem::path& base, const EvaluationReport& report) {
    {
        std::ofstream os(base.string() + ".txt");
        if (!os) throw ValidationError(base.string() + ".txt: cannot write report");
        os << "dataset:     " << report.dataset_id << "\n";
        os << "task:        " << report.task << "\n";
        os << "fingerprint: " << std::hex << std::setw(16) << std::setfill('0')
           << report.config_fingerprint << std::dec << std::setfill(' ') << "\n";
        os << "generated:   " << report.timestamp << "\n\n";
        os << "metrics\n";
        for (const auto& m : report.metrics)
            os << "  " << std::left << std::setw(20) << m.name << std::right << std::fixed
               << std::setprecision(4) << m.value << "\n";
        if (!report.per_category.empty()) {
            os << "\nper category\n";
            for (const auto& c : report.per_category)
                os << "  " << std::left << std::setw(20) << c.name << std::right << std::setw(8)
                   << c.support << "  " << std::fixed << std::setprecision(4) << c.recall
                   << "\n";
        }
    }
    nlohmann::json j;
    j["dataset_id"] = report.dataset_id;
    j["task"] = report.task;
    j["config_fingerprint"] = report.config_fingerprint;
    j["timestamp"] = report.timestamp;
    j["metrics"] = nlohmann::json::object();
    for (const auto& m : report.metrics) j["metrics"][m.name] = m.value;
    j["per_category"] = nlohmann::json::array();
    for (const auto& c : report.per_category)
        j["per_category"].push_back(
            {{"name", c.name}, {"support", c.support}, {"recall", c.recall}});
    std::ofstream os(base.string() + ".json");
    if (!os) throw ValidationError(base.string() + ".json: cannot write report");
    os << j.dump(2) << "\n";
}

}  // namespace cellmorph::cli
