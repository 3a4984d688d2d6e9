#pragma once

#include <cstdint>
#include <vector>

#include "cellmorph/nn/ops.hpp"

namespace cellmorph::cli {

struct LinearProtocolResult {
    double accuracy = 0;
    double balanced_accuracy = 0;
    int categories = 0;
};

// Max-margin linear protocol over exported feature vectors: features are
// standardized on the train split, one-vs-rest L2-regularized hinge
// classifiers are fit by dual coordinate descent at a fixed C = 1, and
// accuracy plus balanced accuracy are reported on the test split. The pass
// order is drawn from the seed, so results are reproducible.
LinearProtocolResult fit_linear_protocol(const std::vector<nn::Vec<float>>& train_x,
                                         const std::vector<int>& train_y,
                                         const std::vector<nn::Vec<float>>& test_x,
                                         const std::vector<int>& test_y, std::uint64_t seed);

}  // namespace cellmorph::cli
