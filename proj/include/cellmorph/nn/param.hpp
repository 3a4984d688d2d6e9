#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace cellmorph::nn {

// A named trainable array. Gradient storage is allocated on first use so
// that building a large model for inspection stays cheap.
template <typename Scalar>
struct Param {
    using Vec = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

    std::string name;
    Vec value;
    Vec grad;
    bool trainable = true;

    std::int64_t size() const { return value.size(); }

    void ensure_grad() {
        if (grad.size() != value.size()) grad = Vec::Zero(value.size());
    }

    void zero_grad() {
        if (grad.size() > 0) grad.setZero();
    }

    // Accumulates g into the gradient unless the param is frozen.
    template <typename Expr>
    void add_grad(const Expr& g) {
        if (!trainable) return;
        ensure_grad();
        grad += g;
    }
};

// Flat view over a model's parameters; the order is the construction order
// and is part of the checkpoint contract.
template <typename Scalar>
using ParamRefs = std::vector<Param<Scalar>*>;

template <typename Scalar>
std::int64_t total_size(const ParamRefs<Scalar>& params) {
    std::int64_t n = 0;
    for (const auto* p : params) n += p->size();
    return n;
}

// FNV-1a over the raw value bytes; used for frozen-part integrity checks
// and checkpoint chain provenance.
template <typename Scalar>
std::uint64_t fingerprint(const ParamRefs<Scalar>& params) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto* p : params) {
        const auto* bytes = reinterpret_cast<const std::uint8_t*>(p->value.data());
        const std::size_t n = std::size_t(p->value.size()) * sizeof(Scalar);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= bytes[i];
            h *= 1099511628211ULL;
        }
    }
    return h;
}

template <typename Scalar>
ParamRefs<Scalar> select_by_prefix(const ParamRefs<Scalar>& params, const std::string& prefix) {
    ParamRefs<Scalar> out;
    for (auto* p : params)
        if (p->name.rfind(prefix, 0) == 0) out.push_back(p);
    return out;
}

template <typename Scalar>
void set_trainable_by_prefix(const ParamRefs<Scalar>& params, const std::string& prefix,
                             bool trainable) {
    for (auto* p : select_by_prefix(params, prefix)) p->trainable = trainable;
}

}  // namespace cellmorph::nn
