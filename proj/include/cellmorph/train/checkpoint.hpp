#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cellmorph/nn/param.hpp"

namespace cellmorph::train {

// Header of the binary checkpoint format. input_fingerprint links a
// checkpoint to the weights it was trained from, forming a verifiable chain
// across curriculum stages (0 means trained from scratch).
struct CheckpointMeta {
    std::string preset;
    std::string model_kind;
    std::vector<std::string> categories;
    std::string stage;
    int epoch = 0;
    std::uint64_t weights_fingerprint = 0;
    std::uint64_t input_fingerprint = 0;
};

// Writes atomically: the file appears under its final name only once fully
// written, so a crash mid-save cannot leave a truncated checkpoint behind.
void save_checkpoint(const std::filesystem::path& path, const CheckpointMeta& meta,
                     const nn::ParamRefs<float>& params);

// Reads only the header.
CheckpointMeta peek_checkpoint(const std::filesystem::path& path);

// Fills params from the file. The stored tensor set must match the model's
// parameter names and sizes exactly; any difference is an error naming the
// offending tensor.
CheckpointMeta load_checkpoint(const std::filesystem::path& path,
                               const nn::ParamRefs<float>& params);

}  // namespace cellmorph::train
