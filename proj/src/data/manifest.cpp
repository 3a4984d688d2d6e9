#include "cellmorph/data/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"

namespace cellmorph::data {

using nlohmann::json;

std::vector<std::string> DatasetManifest::categories() const {
    std::vector<std::string> out;
    for (const auto& e : entries) {
        if (!e.category_label) continue;
        if (std::find(out.begin(), out.end(), *e.category_label) == out.end())
            out.push_back(*e.category_label);
    }
    return out;
}

void DatasetManifest::validate() const {
    std::set<std::string> images, labels;
    const bool classification = is_classification();
    for (const auto& e : entries) {
        if (e.image_path.empty()) throw ValidationError("manifest: entry with empty image_path");
        if (!images.insert(e.image_path).second)
            throw ValidationError("manifest: duplicate image_path " + e.image_path);
        if (!e.label_path.empty() && !labels.insert(e.label_path).second)
            throw ValidationError("manifest: duplicate label_path " + e.label_path);
        if (e.category_label.has_value() != classification)
            throw ValidationError("manifest: category_label must be present on all entries or "
                                  "none (offending entry: " + e.image_path + ")");
    }
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError(path.string() + ": cannot open manifest");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": invalid JSON: " + e.what());
    }
    DatasetManifest m;
    try {
        m.schema_version = j.at("schema_version").get<int>();
        for (const auto& je : j.at("entries")) {
            ManifestEntry e;
            e.image_path = je.at("image_path").get<std::string>();
            e.label_path = je.value("label_path", "");
            e.patient_id = je.value("patient_id", "");
            e.source_id = je.value("source_id", "");
            e.magnification = parse_magnification(je.value("magnification", "20x"));
            if (je.contains("category_label"))
                e.category_label = je.at("category_label").get<std::string>();
            m.entries.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": bad manifest structure: " + e.what());
    }
    if (m.schema_version != 1)
        throw ValidationError(path.string() + ": unsupported schema_version " +
                              std::to_string(m.schema_version));
    m.validate();
    return m;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
    manifest.validate();
    json j;
    j["schema_version"] = manifest.schema_version;
    j["entries"] = json::array();
    for (const auto& e : manifest.entries) {
        json je;
        je["image_path"] = e.image_path;
        if (!e.label_path.empty()) je["label_path"] = e.label_path;
        je["patient_id"] = e.patient_id;
        je["source_id"] = e.source_id;
        je["magnification"] = to_string(e.magnification);
        if (e.category_label) je["category_label"] = *e.category_label;
        j["entries"].push_back(std::move(je));
    }
    std::ofstream out(path);
    if (!out) throw ValidationError(path.string() + ": cannot open for writing");
    out << j.dump(2) << "\n";
}

SplitResult split_stratified(const DatasetManifest& manifest,
                             const std::array<double, 3>& ratios, std::uint64_t seed) {
    const double total_ratio = ratios[0] + ratios[1] + ratios[2];
    for (const double r : ratios)
        if (r < 0) throw ValidationError("split: ratios must be non-negative");
    if (std::abs(total_ratio - 1.0) > 1e-9)
        throw ValidationError("split: ratios must sum to 1, got " + std::to_string(total_ratio));

    std::map<std::string, std::vector<std::size_t>> by_patient;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        const auto& pid = manifest.entries[i].patient_id;
        if (pid.empty())
            throw ValidationError("split: entry " + manifest.entries[i].image_path +
                                  " has no patient_id");
        by_patient[pid].push_back(i);
    }

    std::vector<std::string> patients;
    patients.reserve(by_patient.size());
    for (const auto& [pid, idx] : by_patient) patients.push_back(pid);
    // Fisher-Yates with our own draws, so the order is stable across
    // standard-library implementations.
    Rng rng = derive_rng(seed, 0x5f175);
    for (std::size_t i = patients.size(); i > 1; --i)
        std::swap(patients[i - 1], patients[std::size_t(rng() % i)]);

    SplitResult out;
    const double n = double(manifest.entries.size());
    std::array<double, 3> assigned{0, 0, 0};
    std::array<DatasetManifest*, 3> splits{&out.train, &out.val, &out.test};
    const double max_ratio = std::max({ratios[0], ratios[1], ratios[2]});
    for (const auto& pid : patients) {
        const auto& idx = by_patient[pid];
        if (double(idx.size()) / n > max_ratio + 1e-12)
            out.warnings.push_back("patient " + pid + " holds " + std::to_string(idx.size()) +
                                   " of " + std::to_string(std::size_t(n)) +
                                   " entries, more than the largest split ratio");
        int best = 0;
        double best_deficit = ratios[0] * n - assigned[0];
        for (int s = 1; s < 3; ++s) {
            const double deficit = ratios[s] * n - assigned[s];
            if (deficit > best_deficit) {
                best_deficit = deficit;
                best = s;
            }
        }
        for (const auto i : idx) splits[std::size_t(best)]->entries.push_back(manifest.entries[i]);
        assigned[std::size_t(best)] += double(idx.size());
    }
    for (auto* s : splits) s->schema_version = manifest.schema_version;
    return out;
}

}  // namespace cellmorph::data
