#include "cellmorph/cli/linear.hpp"

#include <algorithm>
#include <cmath>

#include "cellmorph/core/rng.hpp"
#include "cellmorph/metrics/classification.hpp"

namespace cellmorph::cli {

namespace {

using Vecd = Eigen::VectorXd;

constexpr double kC = 1.0;
constexpr int kMaxPasses = 200;
constexpr double kTol = 1e-4;

// Dual coordinate descent for the L1-loss one-vs-rest SVM: maximizes the
// dual with alpha in [0, C], keeping w = sum alpha_i y_i x_i incrementally.
Vecd fit_binary(const std::vector<Vecd>& x, const std::vector<double>& y,
                const std::vector<double>& qii, Rng& rng) {
    const std::size_t n = x.size();
    const auto dim = x.front().size();
    Vecd w = Vecd::Zero(dim);
    std::vector<double> alpha(n, 0.0);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    for (int pass = 0; pass < kMaxPasses; ++pass) {
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
        double max_violation = 0;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t i = order[k];
            const double g = y[i] * w.dot(x[i]) - 1.0;
            double pg = g;
            if (alpha[i] <= 0.0) pg = std::min(g, 0.0);
            else if (alpha[i] >= kC) pg = std::max(g, 0.0);
            max_violation = std::max(max_violation, std::abs(pg));
            if (pg == 0.0) continue;
            const double old = alpha[i];
            alpha[i] = std::clamp(old - g / qii[i], 0.0, kC);
            w += (alpha[i] - old) * y[i] * x[i];
        }
        if (max_violation < kTol) break;
    }
    return w;
}

}  // namespace

LinearProtocolResult fit_linear_protocol(const std::vector<nn::Vec<float>>& train_x,
                                         const std::vector<int>& train_y,
                                         const std::vector<nn::Vec<float>>& test_x,
                                         const std::vector<int>& test_y, std::uint64_t seed) {
    if (train_x.empty() || train_x.size() != train_y.size())
        throw ValidationError("fit_linear: train features and labels misaligned");
    if (test_x.empty() || test_x.size() != test_y.size())
        throw ValidationError("fit_linear: test features and labels misaligned");
    const auto dim = train_x.front().size();
    for (const auto& v : train_x)
        if (v.size() != dim) throw ValidationError("fit_linear: inconsistent feature length");
    for (const auto& v : test_x)
        if (v.size() != dim) throw ValidationError("fit_linear: inconsistent feature length");

    const auto [lo_it, hi_it] = std::minmax_element(train_y.begin(), train_y.end());
    if (*lo_it < 0) throw ValidationError("fit_linear: negative training label");
    if (*lo_it == *hi_it)
        throw ValidationError("fit_linear: training labels hold a single category");
    const int categories = *hi_it + 1;
    for (int label : test_y)
        if (label < 0 || label >= categories)
            throw ValidationError("fit_linear: test label outside the training categories");

    // Standardize on the train split; the constant 1 appended after scaling
    // carries the bias.
    Vecd mean = Vecd::Zero(dim), var = Vecd::Zero(dim);
    for (const auto& v : train_x) mean += v.cast<double>().matrix();
    mean /= double(train_x.size());
    for (const auto& v : train_x) {
        const Vecd d = v.cast<double>().matrix() - mean;
        var += d.cwiseProduct(d);
    }
    var /= double(train_x.size());
    const Vecd inv_std = (var.array() + 1e-12).sqrt().inverse().matrix();

    auto standardize = [&](const nn::Vec<float>& v) {
        Vecd z(dim + 1);
        z.head(dim) = (v.cast<double>().matrix() - mean).cwiseProduct(inv_std);
        z[dim] = 1.0;
        return z;
    };
    std::vector<Vecd> xtr(train_x.size());
    for (std::size_t i = 0; i < train_x.size(); ++i) xtr[i] = standardize(train_x[i]);
    std::vector<double> qii(xtr.size());
    for (std::size_t i = 0; i < xtr.size(); ++i) qii[i] = std::max(xtr[i].squaredNorm(), 1e-12);

    std::vector<Vecd> weights;
    weights.reserve(std::size_t(categories));
    for (int c = 0; c < categories; ++c) {
        std::vector<double> y(xtr.size());
        for (std::size_t i = 0; i < xtr.size(); ++i) y[i] = train_y[i] == c ? 1.0 : -1.0;
        Rng rng = derive_rng(seed, 0x11EA80000ULL + std::uint64_t(c));
        weights.push_back(fit_binary(xtr, y, qii, rng));
    }

    std::vector<int> pred(test_x.size());
    for (std::size_t i = 0; i < test_x.size(); ++i) {
        const Vecd z = standardize(test_x[i]);
        int best = 0;
        double best_score = weights[0].dot(z);
        for (int c = 1; c < categories; ++c) {
            const double s = weights[std::size_t(c)].dot(z);
            if (s > best_score) {
                best_score = s;
                best = c;
            }
        }
        pred[i] = best;
    }

    LinearProtocolResult r;
    r.categories = categories;
    r.accuracy = metrics::accuracy(pred, test_y);
    r.balanced_accuracy = metrics::balanced_accuracy(pred, test_y);
    return r;
}

}  // namespace cellmorph::cli
