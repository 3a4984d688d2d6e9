#pragma once

#include <map>
#include <vector>

#include "cellmorph/core/error.hpp"

namespace cellmorph::metrics {

inline double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size() || truth.empty())
        throw ValidationError("accuracy: need equal, non-empty label vectors");
    std::size_t ok = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == truth[i];
    return double(ok) / double(pred.size());
}

// Mean per-class recall over the classes that occur in the ground truth.
inline double balanced_accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size() || truth.empty())
        throw ValidationError("balanced_accuracy: need equal, non-empty label vectors");
    std::map<int, std::pair<std::size_t, std::size_t>> per_class;  // class -> (correct, total)
    for (std::size_t i = 0; i < truth.size(); ++i) {
        auto& [correct, total] = per_class[truth[i]];
        ++total;
        correct += pred[i] == truth[i];
    }
    double sum = 0;
    for (const auto& [cls, ct] : per_class) sum += double(ct.first) / double(ct.second);
    return sum / double(per_class.size());
}

}  // namespace cellmorph::metrics
