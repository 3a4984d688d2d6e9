#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cellmorph/augment/policy.hpp"
#include "cellmorph/metrics/losses.hpp"
#include "cellmorph/model/clsnet.hpp"
#include "cellmorph/model/segnet.hpp"

namespace cellmorph::train {

enum class ModelTarget { segnet, clsnet, clsnet_pretrain_variant, encoder_only };
enum class SegInputSource { none, noise, frozen_segnet };

const char* to_string(ModelTarget t);
const char* to_string(SegInputSource s);

struct StopRule {
    enum class Kind { convergence, fixed_epochs };
    Kind kind = Kind::convergence;
    int patience = 5;
    double min_delta = 1e-4;
    int epochs = 0;

    static StopRule convergence(int patience = 5, double min_delta = 1e-4) {
        StopRule r;
        r.kind = Kind::convergence;
        r.patience = patience;
        r.min_delta = min_delta;
        return r;
    }
    static StopRule fixed_epochs(int n) {
        StopRule r;
        r.kind = Kind::fixed_epochs;
        r.epochs = n;
        return r;
    }
};

// Per-term loss weights for a stage. bce/cce drive the segmentation heads;
// cls drives the category head of classification-target stages.
struct StageLoss {
    double bce = 1.0;
    double cce = 1.0;
    double cls = 1.0;
};

struct StageSpec {
    std::string name;
    std::string train_manifest;
    std::string val_manifest;  // empty disables validation monitoring
    ModelTarget target = ModelTarget::segnet;
    StageLoss loss;
    SegInputSource seg_input = SegInputSource::none;
    double lr = 1e-4;
    double fine_tune_lr = 2e-5;
    int fine_tune_epochs = 2;
    int batch_size = 36;
    int crop = 224;
    int max_epochs = 1000;  // hard cap so a convergence stage always terminates
    StopRule stop;
    std::vector<std::string> frozen;  // parameter name prefixes held fixed
    std::uint64_t seed = 1;
};

struct CurriculumPlan {
    std::vector<StageSpec> stages;
    std::vector<std::string> provenance;  // one line per produced checkpoint
};

// Manifest paths feeding the default plans. The val_* entries are optional;
// stages with a convergence stop require the matching one.
struct ManifestSet {
    std::string pretrain;        // nuclei-only pool, used by stage 1 then dropped
    std::string combined;        // typed segmentation pool
    std::string classification;  // category-labelled pool
    std::string val_pretrain;
    std::string val_combined;
    std::string val_classification;
};

// The five-stage segmentation curriculum: pretrain on the throwaway pool,
// nuclei-only on the combined pool, both heads at equal weight, encoder
// alone against category labels, then the combined stages once more.
CurriculumPlan default_segmentation_plan(const ManifestSet& m);

// The three-step classification curriculum: the encoder first learns under
// noise in place of segmentation planes, then briefly against a frozen
// segnet's real output, and finally drives the category head.
CurriculumPlan default_classification_plan(const ManifestSet& m, int category_count);

// Errors name the offending stage (missing manifest, bad stop rule).
void validate_plan(const CurriculumPlan& plan);

// Convergence decision: stop once no score improved on the running best by
// more than min_delta for `patience` consecutive epochs. Scores are
// higher-is-better.
bool monitor_validation(const std::vector<double>& history, int patience,
                        double min_delta = 1e-4);

// Deterministic per-epoch shuffle; resuming a stage reproduces the exact
// order of an uninterrupted run.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch);

// Models a stage may touch. Only those a target needs must be present;
// frozen_segnet provides input planes and is never written to.
struct StageModels {
    model::SegModel<float>* segnet = nullptr;
    model::ClsModel<float>* clsnet = nullptr;
    model::ClsPretrainModel<float>* cls_pretrain = nullptr;
    const model::SegModel<float>* frozen_segnet = nullptr;
};

struct StageOptions {
    std::filesystem::path out_dir;
    std::filesystem::path data_root;  // manifest-relative paths resolve here
    augment::AugmentationPolicy policy = augment::AugmentationPolicy::off();
    std::string preset = "tiny";
    std::vector<std::string> categories;  // category order for cls targets
    std::uint64_t input_fingerprint = 0;  // checkpoint chain link
    bool resume = false;
};

struct EpochLog {
    int epoch = 0;
    std::string phase;  // "main" or "fine_tune"
    double train_loss = 0;
    double val_score = 0;  // higher is better
    bool has_val = false;
};

struct StageResult {
    std::filesystem::path checkpoint;
    std::vector<EpochLog> epochs;
    bool aborted = false;  // non-finite loss; checkpoint holds last-good weights
    std::uint64_t output_fingerprint = 0;
};

// Runs one stage: Adam at spec.lr until the stop rule fires, then
// spec.fine_tune_epochs more at spec.fine_tune_lr. Appends one JSONL line
// per epoch to <out_dir>/train_log.jsonl, keeps an atomic resume checkpoint
// per epoch, and writes <out_dir>/<stage>.ckpt at the end.
StageResult run_stage(const StageSpec& spec, const StageModels& models,
                      const StageOptions& opt);

}  // namespace cellmorph::train
