#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cellmorph/core/rng.hpp"
#include "cellmorph/data/types.hpp"

namespace cellmorph::data {

struct ManifestEntry {
    std::string image_path;
    std::string label_path;  // empty for classification entries
    std::string patient_id;
    std::string source_id;
    Magnification magnification = Magnification::x20;
    std::optional<std::string> category_label;
};

// One manifest describes one dataset: either segmentation samples (no
// category labels) or classification samples (every entry labeled).
struct DatasetManifest {
    int schema_version = 1;
    std::vector<ManifestEntry> entries;

    bool is_classification() const {
        return !entries.empty() && entries.front().category_label.has_value();
    }

    // Distinct category labels in first-appearance order.
    std::vector<std::string> categories() const;

    void validate() const;
};

DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

struct SplitResult {
    DatasetManifest train, val, test;
    std::vector<std::string> warnings;
};

// Patient-stratified split: patients are shuffled by seed, then each is
// assigned whole to the split with the largest remaining entry deficit, so
// no patient ever crosses splits and split sizes track the ratios up to one
// patient group.
SplitResult split_stratified(const DatasetManifest& manifest,
                             const std::array<double, 3>& ratios, std::uint64_t seed);

}  // namespace cellmorph::data
