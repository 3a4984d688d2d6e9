#include "cellmorph/cli/config.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <set>

#include "cellmorph/augment/policy.hpp"
#include "cellmorph/model/backbone.hpp"

namespace cellmorph::cli {

namespace {

using json = nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const std::string& where) {
    for (const auto& [key, _] : j.items())
        if (!known.count(key))
            throw ValidationError("config: unknown key " + where + key);
}

}  // namespace

void RunConfig::validate() const {
    if (plan != "segmentation" && plan != "classification")
        throw ValidationError("config: plan must be segmentation or classification, got " +
                              plan);
    model::BackboneConfig::preset(preset);
    augment::AugmentationPolicy::preset(policy);
    if (output_dir.empty()) throw ValidationError("config: output_dir is required");
    if (threads < 1) throw ValidationError("config: threads must be positive");
}

RunConfig read_run_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ValidationError(path.string() + ": cannot open config");
    json j;
    try {
        j = json::parse(is);
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    try {
        RunConfig cfg;
        reject_unknown(j, {"plan", "preset", "policy", "manifests", "output_dir",
                           "segnet_checkpoint", "seed", "threads", "overrides"},
                       "");
        cfg.plan = j.value("plan", cfg.plan);
        cfg.preset = j.value("preset", cfg.preset);
        cfg.policy = j.value("policy", cfg.policy);
        cfg.output_dir = j.value("output_dir", cfg.output_dir);
        cfg.segnet_checkpoint = j.value("segnet_checkpoint", cfg.segnet_checkpoint);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.threads = j.value("threads", cfg.threads);
        if (j.contains("manifests")) {
            const json& m = j["manifests"];
            reject_unknown(m, {"pretrain", "combined", "classification", "val_pretrain",
                               "val_combined", "val_classification"},
                           "manifests.");
            cfg.manifests.pretrain = m.value("pretrain", "");
            cfg.manifests.combined = m.value("combined", "");
            cfg.manifests.classification = m.value("classification", "");
            cfg.manifests.val_pretrain = m.value("val_pretrain", "");
            cfg.manifests.val_combined = m.value("val_combined", "");
            cfg.manifests.val_classification = m.value("val_classification", "");
        }
        if (j.contains("overrides")) {
            const json& o = j["overrides"];
            reject_unknown(o, {"batch_size", "crop", "patience", "max_epochs",
                               "fine_tune_epochs"},
                           "overrides.");
            cfg.overrides.batch_size = o.value("batch_size", 0);
            cfg.overrides.crop = o.value("crop", 0);
            cfg.overrides.patience = o.value("patience", 0);
            cfg.overrides.max_epochs = o.value("max_epochs", 0);
            cfg.overrides.fine_tune_epochs = o.value("fine_tune_epochs", -1);
        }
        return cfg;
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void apply_env_overrides(RunConfig& cfg) {
    auto get = [](const char* name) -> const char* { return std::getenv(name); };
    if (const char* v = get("CELLMORPH_PLAN")) cfg.plan = v;
    if (const char* v = get("CELLMORPH_PRESET")) cfg.preset = v;
    if (const char* v = get("CELLMORPH_POLICY")) cfg.policy = v;
    if (const char* v = get("CELLMORPH_OUTPUT_DIR")) cfg.output_dir = v;
    if (const char* v = get("CELLMORPH_SEGNET_CHECKPOINT")) cfg.segnet_checkpoint = v;
    if (const char* v = get("CELLMORPH_SEED")) cfg.seed = std::strtoull(v, nullptr, 10);
    if (const char* v = get("CELLMORPH_THREADS")) cfg.threads = int(std::strtol(v, nullptr, 10));
    if (const char* v = get("CELLMORPH_MANIFESTS_PRETRAIN")) cfg.manifests.pretrain = v;
    if (const char* v = get("CELLMORPH_MANIFESTS_COMBINED")) cfg.manifests.combined = v;
    if (const char* v = get("CELLMORPH_MANIFESTS_CLASSIFICATION"))
        cfg.manifests.classification = v;
    if (const char* v = get("CELLMORPH_MANIFESTS_VAL_PRETRAIN"))
        cfg.manifests.val_pretrain = v;
    if (const char* v = get("CELLMORPH_MANIFESTS_VAL_COMBINED"))
        cfg.manifests.val_combined = v;
    if (const char* v = get("CELLMORPH_MANIFESTS_VAL_CLASSIFICATION"))
        cfg.manifests.val_classification = v;
}

void apply_overrides(train::CurriculumPlan& plan, const StageOverrides& o) {
    for (auto& s : plan.stages) {
        if (o.batch_size > 0) s.batch_size = o.batch_size;
        if (o.crop > 0) s.crop = o.crop;
        if (o.patience > 0) s.stop.patience = o.patience;
        if (o.max_epochs > 0) s.max_epochs = o.max_epochs;
        if (o.fine_tune_epochs >= 0) s.fine_tune_epochs = o.fine_tune_epochs;
    }
}

}  // namespace cellmorph::cli
