#include "cellmorph/train/curriculum.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <thread>

#include "cellmorph/augment/transforms.hpp"
#include "cellmorph/data/manifest.hpp"
#include "cellmorph/data/png_io.hpp"
#include "cellmorph/data/sample_io.hpp"
#include "cellmorph/train/adam.hpp"
#include "cellmorph/train/checkpoint.hpp"

namespace cellmorph::train {

namespace fs = std::filesystem;
using json = nlohmann::json;

const char* to_string(ModelTarget t) {
    switch (t) {
        case ModelTarget::segnet: return "segnet";
        case ModelTarget::clsnet: return "clsnet";
        case ModelTarget::clsnet_pretrain_variant: return "clsnet_pretrain";
        case ModelTarget::encoder_only: return "encoder_only";
    }
    return "?";
}

const char* to_string(SegInputSource s) {
    switch (s) {
        case SegInputSource::none: return "none";
        case SegInputSource::noise: return "noise";
        case SegInputSource::frozen_segnet: return "frozen_segnet";
    }
    return "?";
}

bool monitor_validation(const std::vector<double>& history, int patience, double min_delta) {
    if (history.empty()) return false;
    double best = history[0];
    std::size_t best_i = 0;
    for (std::size_t i = 1; i < history.size(); ++i) {
        if (history[i] > best + min_delta) {
            best = history[i];
            best_i = i;
        }
    }
    return history.size() - 1 - best_i >= std::size_t(patience);
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t(0));
    Rng rng = derive_rng(seed, 0xE70C00000000ULL + std::uint64_t(std::uint32_t(epoch)));
    for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
    return idx;
}

// ---- Plans -----------------------------------------------------------------

namespace {

StageSpec seg_stage(const std::string& name, const std::string& train, const std::string& val,
                    std::uint64_t seed) {
    StageSpec s;
    s.name = name;
    s.train_manifest = train;
    s.val_manifest = val;
    s.target = ModelTarget::segnet;
    s.batch_size = 36;
    s.seed = seed;
    return s;
}

}  // namespace

CurriculumPlan default_segmentation_plan(const ManifestSet& m) {
    CurriculumPlan plan;

    StageSpec s1 = seg_stage("seg1_pretrain", m.pretrain, m.val_pretrain, 101);
    plan.stages.push_back(s1);

    StageSpec s2 = seg_stage("seg2_nuclei_bce", m.combined, m.val_combined, 102);
    s2.loss.cce = 0.0;
    plan.stages.push_back(s2);

    StageSpec s3 = seg_stage("seg3_joint", m.combined, m.val_combined, 103);
    plan.stages.push_back(s3);

    StageSpec s4;
    s4.name = "seg4_encoder_categories";
    s4.train_manifest = m.classification;
    s4.val_manifest = m.val_classification;
    s4.target = ModelTarget::encoder_only;
    s4.batch_size = 36;
    s4.seed = 104;
    plan.stages.push_back(s4);

    StageSpec s5 = seg_stage("seg5_joint_refresh", m.combined, m.val_combined, 105);
    plan.stages.push_back(s5);
    return plan;
}

CurriculumPlan default_classification_plan(const ManifestSet& m, int category_count) {
    if (category_count < 2)
        throw ValidationError("classification plan needs at least 2 categories, got " +
                              std::to_string(category_count));
    CurriculumPlan plan;

    StageSpec c1;
    c1.name = "cls1_noise_pretrain";
    c1.train_manifest = m.combined;
    c1.val_manifest = m.val_combined;
    c1.target = ModelTarget::clsnet_pretrain_variant;
    c1.seg_input = SegInputSource::noise;
    c1.batch_size = 64;
    c1.seed = 201;
    plan.stages.push_back(c1);

    StageSpec c2 = c1;
    c2.name = "cls2_frozen_segnet";
    c2.seg_input = SegInputSource::frozen_segnet;
    c2.stop = StopRule::fixed_epochs(5);
    c2.seed = 202;
    plan.stages.push_back(c2);

    StageSpec c3;
    c3.name = "cls3_head";
    c3.train_manifest = m.classification;
    c3.val_manifest = m.val_classification;
    c3.target = ModelTarget::clsnet;
    c3.seg_input = SegInputSource::frozen_segnet;
    c3.batch_size = 64;
    c3.seed = 203;
    plan.stages.push_back(c3);
    return plan;
}

void validate_plan(const CurriculumPlan& plan) {
    if (plan.stages.empty()) throw ValidationError("plan has no stages");
    for (const auto& s : plan.stages) {
        if (s.name.empty()) throw ValidationError("plan has an unnamed stage");
        if (s.train_manifest.empty())
            throw ValidationError("stage " + s.name + ": no train manifest");
        if (!fs::exists(s.train_manifest))
            throw ValidationError("stage " + s.name + ": train manifest " + s.train_manifest +
                                  " does not exist");
        if (!s.val_manifest.empty() && !fs::exists(s.val_manifest))
            throw ValidationError("stage " + s.name + ": val manifest " + s.val_manifest +
                                  " does not exist");
        if (s.stop.kind == StopRule::Kind::convergence) {
            if (s.stop.patience < 1)
                throw ValidationError("stage " + s.name + ": patience must be positive");
            if (s.val_manifest.empty())
                throw ValidationError("stage " + s.name +
                                      ": convergence stop needs a validation manifest");
        } else if (s.stop.epochs < 1) {
            throw ValidationError("stage " + s.name + ": fixed_epochs must be positive");
        }
        if (s.batch_size < 1) throw ValidationError("stage " + s.name + ": bad batch size");
        if (s.crop < 32 || s.crop % 32 != 0)
            throw ValidationError("stage " + s.name + ": crop must be a positive multiple of 32");
        const bool wide = s.target == ModelTarget::clsnet ||
                          s.target == ModelTarget::clsnet_pretrain_variant;
        if (wide && s.seg_input == SegInputSource::none)
            throw ValidationError("stage " + s.name +
                                  ": classification targets need a seg-input source");
        if (!wide && s.seg_input != SegInputSource::none)
            throw ValidationError("stage " + s.name + ": seg-input set on a 3-channel target");
    }
}

// ---- Stage runner ----------------------------------------------------------

namespace {

// One prepared example: model input plus whichever target applies.
struct Item {
    Tensor<float> input;
    Tensor<float> nuclei_target;
    Tensor<int> type_labels;
    int category = -1;
};

using Batch = std::vector<Item>;

// Single-producer bounded queue: one worker prepares batches in index order
// while the training loop consumes them, so preparation overlaps the math
// without disturbing determinism.
class BatchFeeder {
public:
    BatchFeeder(std::size_t batches, std::function<Batch(std::size_t)> make)
        : make_(std::move(make)), total_(batches) {
        worker_ = std::thread([this] { run(); });
    }

    ~BatchFeeder() {
        {
            std::lock_guard<std::mutex> lk(mu_);
            stop_ = true;
        }
        space_.notify_all();
        worker_.join();
    }

    std::optional<Batch> next() {
        std::unique_lock<std::mutex> lk(mu_);
        data_.wait(lk, [&] { return !queue_.empty() || done_; });
        if (error_) std::rethrow_exception(error_);
        if (queue_.empty()) return std::nullopt;
        Batch b = std::move(queue_.front());
        queue_.pop_front();
        space_.notify_one();
        return b;
    }

private:
    void run() {
        try {
            for (std::size_t i = 0; i < total_; ++i) {
                Batch b = make_(i);
                std::unique_lock<std::mutex> lk(mu_);
                space_.wait(lk, [&] { return queue_.size() < kDepth || stop_; });
                if (stop_) return;
                queue_.push_back(std::move(b));
                data_.notify_one();
            }
        } catch (...) {
            std::lock_guard<std::mutex> lk(mu_);
            error_ = std::current_exception();
        }
        {
            std::lock_guard<std::mutex> lk(mu_);
            done_ = true;
        }
        data_.notify_all();
    }

    static constexpr std::size_t kDepth = 2;
    std::function<Batch(std::size_t)> make_;
    std::size_t total_;
    std::mutex mu_;
    std::condition_variable data_, space_;
    std::deque<Batch> queue_;
    bool stop_ = false, done_ = false;
    std::exception_ptr error_;
    std::thread worker_;
};

Tensor<float> nuclei_target_from(const ImageU8& label) {
    Tensor<float> t(label.h, label.w, 1);
    for (std::int64_t i = 0; i < t.size(); ++i)
        t.array()[i] = label.pixels[std::size_t(i)] > 0 ? 1.0f : 0.0f;
    return t;
}

Tensor<int> type_labels_from(const ImageU8& label) {
    Tensor<int> t(label.h, label.w, 1);
    for (std::int64_t i = 0; i < t.size(); ++i) t.array()[i] = int(label.pixels[std::size_t(i)]);
    return t;
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_relative() ? base / path : path;
}

void append_log_line(const fs::path& file, const json& j) {
    std::ofstream os(file, std::ios::app);
    if (!os) throw ValidationError(file.string() + ": cannot append to log");
    os << j.dump() << "\n";
}

std::vector<EpochLog> read_stage_log(const fs::path& file, const std::string& stage) {
    std::vector<EpochLog> out;
    std::ifstream is(file);
    if (!is) return out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception&) {
            continue;
        }
        if (j.value("stage", "") != stage) continue;
        EpochLog e;
        e.epoch = j.value("epoch", 0);
        e.phase = j.value("phase", "main");
        e.train_loss = j.value("train_loss", 0.0);
        e.has_val = j.contains("val_score");
        if (e.has_val) e.val_score = j["val_score"].get<double>();
        out.push_back(e);
    }
    return out;
}

}  // namespace

StageResult run_stage(const StageSpec& spec, const StageModels& models,
                      const StageOptions& opt) {
    CurriculumPlan probe;
    probe.stages.push_back(spec);
    {
        // Stage-level checks reuse the plan validator; manifest paths are
        // resolved against the data root first.
        CurriculumPlan resolved = probe;
        resolved.stages[0].train_manifest =
            resolve(opt.data_root, spec.train_manifest).string();
        if (!spec.val_manifest.empty())
            resolved.stages[0].val_manifest =
                resolve(opt.data_root, spec.val_manifest).string();
        validate_plan(resolved);
    }

    const bool wide_input = spec.target == ModelTarget::clsnet ||
                            spec.target == ModelTarget::clsnet_pretrain_variant;
    const bool category_target =
        spec.target == ModelTarget::clsnet || spec.target == ModelTarget::encoder_only;

    if (spec.target == ModelTarget::segnet && !models.segnet)
        throw ValidationError("stage " + spec.name + ": no segnet bound");
    if (spec.target == ModelTarget::encoder_only && !models.segnet)
        throw ValidationError("stage " + spec.name + ": no segnet bound");
    if (spec.target == ModelTarget::clsnet && !models.clsnet)
        throw ValidationError("stage " + spec.name + ": no clsnet bound");
    if (spec.target == ModelTarget::clsnet_pretrain_variant && !models.cls_pretrain)
        throw ValidationError("stage " + spec.name + ": no clsnet pretrain model bound");
    if (spec.seg_input == SegInputSource::frozen_segnet && !models.frozen_segnet)
        throw ValidationError("stage " + spec.name + ": no frozen segnet bound");

    // Data.
    const data::DatasetManifest train_man =
        data::read_manifest(resolve(opt.data_root, spec.train_manifest));
    train_man.validate();
    if (train_man.entries.empty())
        throw ValidationError("stage " + spec.name + ": train manifest is empty");
    data::DatasetManifest val_man;
    const bool has_val = !spec.val_manifest.empty();
    if (has_val) {
        val_man = data::read_manifest(resolve(opt.data_root, spec.val_manifest));
        val_man.validate();
    }
    const fs::path train_base = resolve(opt.data_root, spec.train_manifest).parent_path();
    const fs::path val_base =
        has_val ? resolve(opt.data_root, spec.val_manifest).parent_path() : fs::path();

    std::map<std::string, int> category_index;
    if (category_target) {
        if (!train_man.is_classification())
            throw ValidationError("stage " + spec.name +
                                  ": target needs a classification manifest");
        std::vector<std::string> cats =
            opt.categories.empty() ? train_man.categories() : opt.categories;
        for (std::size_t i = 0; i < cats.size(); ++i) category_index[cats[i]] = int(i);
    }
    auto category_of = [&](const data::ManifestEntry& e) {
        auto it = category_index.find(e.category_label.value_or(""));
        if (it == category_index.end())
            throw ValidationError("stage " + spec.name + ": unknown category " +
                                  e.category_label.value_or("<none>") + " for " + e.image_path);
        return it->second;
    };

    // Target plumbing: parameter list, per-item step, validation score.
    nn::ParamRefs<float> params;
    nn::Dense<float> temp_head;  // encoder_only scaffolding, dropped at stage end
    if (spec.target == ModelTarget::segnet || spec.target == ModelTarget::encoder_only)
        params = models.segnet->params();
    else if (spec.target == ModelTarget::clsnet)
        params = models.clsnet->params();
    else
        params = models.cls_pretrain->params();
    if (spec.target == ModelTarget::encoder_only) {
        Rng head_rng = derive_rng(spec.seed, 0x4EAD);
        temp_head = nn::Dense<float>("stage.head", models.segnet->config().final_width,
                                     int(category_index.size()), head_rng);
        params = {};
        models.segnet->encoder().collect(params);
        temp_head.collect(params);
    }

    // Freezing: remember which params this stage flipped so they are
    // restored on every exit path; already-frozen ones stay frozen.
    struct Unfreezer {
        std::vector<nn::Param<float>*> flipped;
        ~Unfreezer() {
            for (auto* p : flipped) p->trainable = true;
        }
    } guard;
    for (const auto& prefix : spec.frozen)
        for (auto* p : nn::select_by_prefix(params, prefix))
            if (p->trainable) {
                p->trainable = false;
                guard.flipped.push_back(p);
            }

    const metrics::LossWeights seg_w{spec.loss.bce, spec.loss.cce};

    // Builds the model input for one decoded crop.
    auto build_input = [&](Tensor<float> rgb, Rng& rng) -> Tensor<float> {
        if (!wide_input) return rgb;
        if (spec.seg_input == SegInputSource::noise)
            return model::fuse_noise_input(rgb, rng);
        return model::fuse_input(rgb, models.frozen_segnet->forward(rgb));
    };

    auto make_item = [&](const data::ManifestEntry& e, const fs::path& base, bool training,
                         Rng& rng) {
        Item it;
        if (category_target) {
            ImageU8 image = data::read_png(resolve(base, e.image_path));
            if (image.c != 3)
                throw ValidationError(e.image_path + ": classification samples must be RGB");
            augment::AugmentedPair pair;
            if (training) {
                pair = augment::augment(image, nullptr, opt.policy, rng);
                pair = augment::crop_random(pair, spec.crop, rng);
            } else {
                pair.image = to_float<float>(image);
                pair = augment::crop_center(pair, spec.crop);
            }
            it.input = build_input(std::move(pair.image), rng);
            it.category = category_of(e);
        } else {
            data::SamplePlanes planes = data::read_sample(resolve(base, e.image_path));
            augment::AugmentedPair pair;
            if (training) {
                pair = augment::augment(planes.image, &planes.label_plane, opt.policy, rng);
                pair = augment::crop_random(pair, spec.crop, rng);
            } else {
                pair.image = to_float<float>(planes.image);
                pair.label = planes.label_plane;
                pair = augment::crop_center(pair, spec.crop);
            }
            it.nuclei_target = nuclei_target_from(pair.label);
            it.type_labels = type_labels_from(pair.label);
            it.input = build_input(std::move(pair.image), rng);
        }
        return it;
    };

    // Per-item training step; returns the item's loss at the stage weights.
    // Gradients are scaled by inv_batch so a batch averages its items.
    auto train_item = [&](const Item& it, double inv_batch, Rng& step_rng) -> double {
        switch (spec.target) {
            case ModelTarget::segnet:
            case ModelTarget::clsnet_pretrain_variant: {
                model::SegOut<float> out =
                    spec.target == ModelTarget::segnet
                        ? models.segnet->forward_train(it.input)
                        : models.cls_pretrain->forward_train(it.input);
                auto L = metrics::combined_seg_loss(out.nuclei, it.nuclei_target, out.types,
                                                    it.type_labels, seg_w);
                if (!std::isfinite(L.total)) return L.total;
                L.grad_nuclei.array() *= float(inv_batch);
                L.grad_types.array() *= float(inv_batch);
                if (spec.target == ModelTarget::segnet)
                    models.segnet->backward(L.grad_nuclei, L.grad_types);
                else
                    models.cls_pretrain->backward(L.grad_nuclei, L.grad_types);
                return L.total;
            }
            case ModelTarget::clsnet: {
                model::ClsOut<float> out = models.clsnet->forward_train(it.input, step_rng);
                const double loss = spec.loss.cls * metrics::cce_loss_vec(out.probs, it.category);
                if (!std::isfinite(loss)) return loss;
                nn::Vec<float> g = metrics::cce_grad_vec(out.probs, it.category);
                g *= float(spec.loss.cls * inv_batch);
                models.clsnet->backward(g);
                return loss;
            }
            case ModelTarget::encoder_only: {
                model::EncoderOut<float> enc =
                    models.segnet->encoder().forward_train(it.input);
                nn::Vec<float> feat = nn::global_avg_pool(enc.features);
                nn::Vec<float> probs = nn::softmax_vec(temp_head.forward_train(feat));
                const double loss = spec.loss.cls * metrics::cce_loss_vec(probs, it.category);
                if (!std::isfinite(loss)) return loss;
                nn::Vec<float> g = metrics::cce_grad_vec(probs, it.category);
                g *= float(spec.loss.cls * inv_batch);
                nn::Vec<float> gf = temp_head.backward(nn::softmax_vec_backward(g, probs));
                models.segnet->encoder().backward(
                    nn::global_avg_pool_backward(gf, enc.features.h(), enc.features.w()));
                return loss;
            }
        }
        return 0;
    };

    // Validation score, higher is better: accuracy for category targets,
    // negated loss otherwise. Deterministic per item across epochs.
    auto val_score = [&]() -> double {
        double loss_sum = 0;
        std::int64_t correct = 0;
        for (std::size_t i = 0; i < val_man.entries.size(); ++i) {
            Rng rng = derive_rng(spec.seed, 0x7A100000ULL + i);
            Item it = make_item(val_man.entries[i], val_base, false, rng);
            switch (spec.target) {
                case ModelTarget::segnet:
                case ModelTarget::clsnet_pretrain_variant: {
                    model::SegOut<float> out = spec.target == ModelTarget::segnet
                                                   ? models.segnet->forward(it.input)
                                                   : models.cls_pretrain->forward(it.input);
                    loss_sum += metrics::combined_seg_loss(out.nuclei, it.nuclei_target,
                                                           out.types, it.type_labels, seg_w)
                                    .total;
                    break;
                }
                case ModelTarget::clsnet: {
                    const auto out = models.clsnet->forward(it.input);
                    int arg = 0;
                    out.probs.maxCoeff(&arg);
                    correct += arg == it.category;
                    break;
                }
                case ModelTarget::encoder_only: {
                    nn::Vec<float> feat = nn::global_avg_pool(
                        models.segnet->encoder().forward(it.input, false).features);
                    nn::Vec<float> probs = nn::softmax_vec(temp_head.forward(feat));
                    int arg = 0;
                    probs.maxCoeff(&arg);
                    correct += arg == it.category;
                    break;
                }
            }
        }
        const double n = double(val_man.entries.size());
        return category_target ? double(correct) / n : -loss_sum / n;
    };

    // Output locations.
    fs::create_directories(opt.out_dir);
    const fs::path log_path = opt.out_dir / "train_log.jsonl";
    const fs::path final_path = opt.out_dir / (spec.name + ".ckpt");
    const fs::path resume_path = opt.out_dir / (spec.name + ".resume.ckpt");

    CheckpointMeta meta;
    meta.preset = opt.preset;
    meta.model_kind = spec.target == ModelTarget::encoder_only
                          ? "segnet"
                          : std::string(to_string(spec.target));
    meta.categories = opt.categories;
    meta.stage = spec.name;
    meta.input_fingerprint = opt.input_fingerprint;

    // The checkpoint stores the persistent model, never the temporary head.
    const nn::ParamRefs<float> save_params =
        spec.target == ModelTarget::encoder_only ? models.segnet->params() : params;

    StageResult result;

    // Resume: the JSONL log is the source of truth for completed epochs and
    // the validation history; weights come from the per-epoch checkpoint.
    std::vector<double> val_history;
    int main_epochs = 0, ft_epochs = 0;
    if (opt.resume) {
        if (fs::exists(final_path)) {
            const CheckpointMeta done = load_checkpoint(final_path, save_params);
            result.checkpoint = final_path;
            result.epochs = read_stage_log(log_path, spec.name);
            result.output_fingerprint = done.weights_fingerprint;
            return result;
        }
        result.epochs = read_stage_log(log_path, spec.name);
        for (const auto& e : result.epochs) {
            (e.phase == "fine_tune" ? ft_epochs : main_epochs) += 1;
            if (e.has_val && e.phase == "main") val_history.push_back(e.val_score);
        }
        if (!result.epochs.empty()) {
            if (!fs::exists(resume_path))
                throw ValidationError("stage " + spec.name +
                                      ": log shows progress but no resume checkpoint");
            load_checkpoint(resume_path, save_params);
        }
    }

    Adam<float> adam(spec.lr);
    int epoch = main_epochs + ft_epochs;

    // Last-good weights for the NaN abort path.
    std::vector<nn::Param<float>::Vec> good;
    good.reserve(save_params.size());
    for (const auto* p : save_params) good.push_back(p->value);
    auto snapshot = [&] {
        for (std::size_t i = 0; i < save_params.size(); ++i) good[i] = save_params[i]->value;
    };
    auto restore = [&] {
        for (std::size_t i = 0; i < save_params.size(); ++i) save_params[i]->value = good[i];
    };

    // Runs one training epoch; nullopt means a non-finite loss was hit.
    auto train_epoch = [&](int ep) -> std::optional<double> {
        const auto order = epoch_order(train_man.entries.size(), spec.seed, ep);
        const std::size_t nb = (order.size() + spec.batch_size - 1) / spec.batch_size;
        Rng prep_rng = derive_rng(spec.seed, 0x11E900000000ULL + std::uint64_t(ep));
        Rng step_rng = derive_rng(spec.seed, 0x57E900000000ULL + std::uint64_t(ep));
        BatchFeeder feeder(nb, [&](std::size_t b) {
            Batch batch;
            const std::size_t lo = b * spec.batch_size;
            const std::size_t hi = std::min(order.size(), lo + spec.batch_size);
            batch.reserve(hi - lo);
            for (std::size_t i = lo; i < hi; ++i)
                batch.push_back(
                    make_item(train_man.entries[order[i]], train_base, true, prep_rng));
            return batch;
        });
        double loss_sum = 0;
        std::size_t count = 0;
        while (auto batch = feeder.next()) {
            const double inv = 1.0 / double(batch->size());
            for (const Item& it : *batch) {
                const double li = train_item(it, inv, step_rng);
                if (!std::isfinite(li)) return std::nullopt;
                loss_sum += li;
            }
            adam.step(params);
            count += batch->size();
        }
        return loss_sum / double(count);
    };

    auto finish = [&](bool aborted) {
        meta.epoch = result.epochs.empty() ? 0 : result.epochs.back().epoch;
        save_checkpoint(final_path, meta, save_params);
        fs::remove(resume_path);
        result.checkpoint = final_path;
        result.aborted = aborted;
        result.output_fingerprint = nn::fingerprint(save_params);
        return result;
    };

    // One epoch of either phase: train, validate, log, checkpoint.
    auto run_one = [&](const char* phase) -> bool {
        ++epoch;
        const auto train_loss = train_epoch(epoch);
        if (!train_loss) return false;
        EpochLog e;
        e.epoch = epoch;
        e.phase = phase;
        e.train_loss = *train_loss;
        json j{{"stage", spec.name}, {"epoch", epoch}, {"phase", phase},
               {"train_loss", *train_loss}, {"lr", adam.lr()}};
        if (has_val) {
            e.val_score = val_score();
            e.has_val = true;
            j["val_score"] = e.val_score;
        }
        append_log_line(log_path, j);
        result.epochs.push_back(e);
        meta.epoch = epoch;
        save_checkpoint(resume_path, meta, save_params);
        snapshot();
        return true;
    };

    // Main phase at the initial rate.
    bool main_done = false;
    if (spec.stop.kind == StopRule::Kind::fixed_epochs)
        main_done = main_epochs >= spec.stop.epochs;
    else if (main_epochs > 0 || ft_epochs > 0)
        main_done = ft_epochs > 0 || main_epochs >= spec.max_epochs ||
                    monitor_validation(val_history, spec.stop.patience, spec.stop.min_delta);
    while (!main_done) {
        if (!run_one("main")) {
            restore();
            return finish(true);
        }
        ++main_epochs;
        if (has_val && result.epochs.back().has_val)
            val_history.push_back(result.epochs.back().val_score);
        if (spec.stop.kind == StopRule::Kind::fixed_epochs)
            main_done = main_epochs >= spec.stop.epochs;
        else
            main_done = main_epochs >= spec.max_epochs ||
                        monitor_validation(val_history, spec.stop.patience, spec.stop.min_delta);
    }

    // Fine-tune phase at the reduced rate.
    adam.set_lr(spec.fine_tune_lr);
    while (ft_epochs < spec.fine_tune_epochs) {
        if (!run_one("fine_tune")) {
            restore();
            return finish(true);
        }
        ++ft_epochs;
    }

    return finish(false);
}

}  // namespace cellmorph::train
