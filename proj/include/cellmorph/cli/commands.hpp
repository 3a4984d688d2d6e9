#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cellmorph::cli {

struct HarmonizeArgs {
    std::string input;  // ingest description (JSON)
    std::string output_dir;
    std::vector<double> split;  // empty, or train/val/test ratios
    std::uint64_t seed = 1;
};
int cmd_harmonize(const HarmonizeArgs& args);

struct AugmentPreviewArgs {
    std::string input;  // 4-channel sample or plain RGB PNG
    std::string output_dir;
    std::string policy = "extreme";
    int count = 8;
    std::uint64_t seed = 1;
};
int cmd_augment_preview(const AugmentPreviewArgs& args);

struct TrainArgs {
    std::string config;
    std::string preset;  // overrides the config when set
    std::uint64_t seed = 0;
    bool has_seed = false;
    bool resume = false;
    bool force = false;
};
int cmd_train(const TrainArgs& args);

struct EvaluateArgs {
    std::string checkpoint;
    std::string manifest;
    std::string task;  // "segmentation" or "classification"
    std::string output;  // report base path
    std::uint64_t seed = 1;
};
int cmd_evaluate(const EvaluateArgs& args);

struct InferArgs {
    std::string checkpoint;
    std::string output_dir;
    std::vector<std::string> images;
    bool overlay = false;
};
int cmd_infer(const InferArgs& args);

struct ExtractArgs {
    std::string checkpoint;
    std::string manifest;
    std::string output;  // feature table (JSON)
};
int cmd_extract_features(const ExtractArgs& args);

struct FitLinearArgs {
    std::string train_features;
    std::string test_features;
    std::string output;  // optional report base path
    std::uint64_t seed = 1;
};
int cmd_fit_linear(const FitLinearArgs& args);

}  // namespace cellmorph::cli
