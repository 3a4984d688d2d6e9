#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "cellmorph/train/curriculum.hpp"

namespace cellmorph::cli {

// Optional per-stage knobs applied on top of the plan defaults; zero (or -1
// where zero is meaningful) keeps the default. They exist so smoke runs can
// shrink the schedule without a custom plan.
struct StageOverrides {
    int batch_size = 0;
    int crop = 0;
    int patience = 0;
    int max_epochs = 0;
    int fine_tune_epochs = -1;
};

struct RunConfig {
    std::string plan = "segmentation";  // or "classification"
    std::string preset = "tiny";
    std::string policy = "moderate";  // augmentation preset
    train::ManifestSet manifests;
    std::string output_dir;
    std::string segnet_checkpoint;  // frozen segnet for the classification plan
    std::uint64_t seed = 1;
    int threads = 1;  // device hint
    StageOverrides overrides;

    void validate() const;
};

// Strict parse: any key not in the schema is an error naming the key.
RunConfig read_run_config(const std::filesystem::path& path);

// Environment overrides: CELLMORPH_<KEY> (e.g. CELLMORPH_PRESET,
// CELLMORPH_MANIFESTS_COMBINED) replace the corresponding config value.
void apply_env_overrides(RunConfig& cfg);

// Applies overrides to every stage of a plan.
void apply_overrides(train::CurriculumPlan& plan, const StageOverrides& o);

}  // namespace cellmorph::cli
