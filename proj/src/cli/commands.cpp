#include "cellmorph/cli/commands.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "cellmorph/augment/transforms.hpp"
#include "cellmorph/cli/config.hpp"
#include "cellmorph/cli/linear.hpp"
#include "cellmorph/cli/report.hpp"
#include "cellmorph/data/harmonize.hpp"
#include "cellmorph/data/manifest.hpp"
#include "cellmorph/data/png_io.hpp"
#include "cellmorph/data/sample_io.hpp"
#include "cellmorph/metrics/classification.hpp"
#include "cellmorph/metrics/segmentation.hpp"
#include "cellmorph/model/infer.hpp"
#include "cellmorph/train/checkpoint.hpp"
#include "cellmorph/train/curriculum.hpp"

namespace cellmorph::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_relative() ? base / path : path;
}

json parse_json_file(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw ValidationError(path.string() + ": cannot open");
    try {
        return json::parse(is);
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

ImageU8 strip_to_rgb(const ImageU8& img) {
    if (img.c == 3) return img;
    if (img.c != 4)
        throw ValidationError("expected an RGB or RGBA image, got " + std::to_string(img.c) +
                              " channels");
    ImageU8 rgb(img.h, img.w, 3);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int ch = 0; ch < 3; ++ch) rgb.at(y, x, ch) = img.at(y, x, ch);
    return rgb;
}

// ---- checkpoint-backed model bundles --------------------------------------

struct LoadedModels {
    model::BackboneConfig cfg;
    train::CheckpointMeta meta;
    std::unique_ptr<model::SegModel<float>> seg;
    std::unique_ptr<model::ClsModel<float>> cls;

    bool has_cls() const { return cls != nullptr; }
};

LoadedModels load_models(const fs::path& path) {
    LoadedModels m;
    m.meta = train::peek_checkpoint(path);
    m.cfg = model::BackboneConfig::preset(m.meta.preset);
    Rng rng = derive_rng(0, 0);
    if (m.meta.model_kind == "segnet") {
        m.seg = std::make_unique<model::SegModel<float>>(m.cfg, rng);
        m.meta = train::load_checkpoint(path, m.seg->params());
    } else if (m.meta.model_kind == "pipeline") {
        m.seg = std::make_unique<model::SegModel<float>>(m.cfg, rng);
        m.cls = std::make_unique<model::ClsModel<float>>(m.cfg, int(m.meta.categories.size()),
                                                         rng);
        nn::ParamRefs<float> refs = m.seg->params();
        for (auto* p : m.cls->params()) refs.push_back(p);
        m.meta = train::load_checkpoint(path, refs);
    } else {
        throw ValidationError(path.string() + ": checkpoint kind " + m.meta.model_kind +
                              " is not runnable here (need segnet or pipeline)");
    }
    return m;
}

void save_pipeline(const fs::path& path, const std::string& preset,
                   const std::vector<std::string>& categories, std::uint64_t input_fp,
                   model::SegModel<float>& seg, model::ClsModel<float>& cls) {
    train::CheckpointMeta meta;
    meta.preset = preset;
    meta.model_kind = "pipeline";
    meta.categories = categories;
    meta.stage = "final";
    meta.input_fingerprint = input_fp;
    nn::ParamRefs<float> refs = seg.params();
    for (auto* p : cls.params()) refs.push_back(p);
    train::save_checkpoint(path, meta, refs);
}

// Colored type view where the nucleus head fires; the original tissue shows
// through at half intensity elsewhere.
ImageU8 make_overlay(const ImageU8& rgb, const model::SegOut<float>& out) {
    ImageU8 overlay(rgb.h, rgb.w, 3);
    for (int y = 0; y < rgb.h; ++y) {
        for (int x = 0; x < rgb.w; ++x) {
            if (out.nuclei.at(y, x, 0) > 0.5f) {
                int best = 1;
                float bv = out.types.at(y, x, 1);
                for (int t = 2; t <= metrics::kNumCellTypes; ++t)
                    if (out.types.at(y, x, t) > bv) {
                        bv = out.types.at(y, x, t);
                        best = t;
                    }
                const auto& c = data::kTypeColors[std::size_t(best - 1)];
                for (int ch = 0; ch < 3; ++ch)
                    overlay.at(y, x, ch) =
                        std::uint8_t((int(c[std::size_t(ch)]) + rgb.at(y, x, ch)) / 2);
            } else {
                for (int ch = 0; ch < 3; ++ch)
                    overlay.at(y, x, ch) = std::uint8_t(rgb.at(y, x, ch) / 2);
            }
        }
    }
    return overlay;
}

Tensor<float> nuclei_target_from(const ImageU8& label) {
    Tensor<float> t(label.h, label.w, 1);
    for (std::int64_t i = 0; i < t.size(); ++i)
        t.array()[i] = label.pixels[std::size_t(i)] > 0 ? 1.0f : 0.0f;
    return t;
}

}  // namespace

// ---- harmonize -------------------------------------------------------------

int cmd_harmonize(const HarmonizeArgs& args) {
    const fs::path in_path = args.input;
    const fs::path base = in_path.parent_path();
    const json j = parse_json_file(in_path);
    if (!j.contains("samples") || !j["samples"].is_array())
        throw ValidationError(args.input + ": expected a top-level samples array");

    const fs::path out(args.output_dir);
    fs::create_directories(out / "samples");
    fs::create_directories(out / "instances");

    data::DatasetManifest manifest;
    std::size_t index = 0;
    for (const json& s : j["samples"]) {
        data::RawSegmentationSample raw;
        try {
            raw.image = data::read_png(resolve(base, s.at("image").get<std::string>()));
            raw.instance_map =
                data::read_png16(resolve(base, s.at("instances").get<std::string>()));
            if (s.contains("cell_types"))
                for (const auto& [id, t] : s.at("cell_types").items())
                    raw.cell_types[std::uint16_t(std::stoul(id))] = t.get<int>();
            raw.patient_id = s.at("patient_id").get<std::string>();
            raw.source_id = s.value("source_id", std::string("unknown"));
            raw.magnification =
                data::parse_magnification(s.value("magnification", std::string("20x")));
        } catch (const json::exception& e) {
            throw ValidationError(args.input + ": sample " + std::to_string(index) + ": " +
                                  e.what());
        }

        data::HarmonizedSample h =
            data::resample_to_reference_magnification(data::harmonize(raw), raw.magnification);

        std::ostringstream name;
        name << "sample_" << std::setw(6) << std::setfill('0') << index;
        const std::string sample_rel = "samples/" + name.str() + ".png";
        const std::string inst_rel = "instances/" + name.str() + ".png";
        data::write_sample(out / sample_rel, h.image, h.label_plane);
        data::write_png16(out / inst_rel, h.instances);

        data::ManifestEntry entry;
        entry.image_path = sample_rel;
        entry.label_path = inst_rel;
        entry.patient_id = h.patient_id;
        entry.source_id = h.source_id;
        entry.magnification = data::Magnification::x20;
        manifest.entries.push_back(entry);
        ++index;
    }
    manifest.validate();
    data::write_manifest(out / "manifest.json", manifest);
    std::cout << "harmonized " << manifest.entries.size() << " samples into " << out.string()
              << "\n";

    if (!args.split.empty()) {
        if (args.split.size() != 3)
            throw ValidationError("--split needs exactly three ratios");
        const data::SplitResult split = data::split_stratified(
            manifest, {args.split[0], args.split[1], args.split[2]}, args.seed);
        data::write_manifest(out / "manifest_train.json", split.train);
        data::write_manifest(out / "manifest_val.json", split.val);
        data::write_manifest(out / "manifest_test.json", split.test);
        for (const auto& w : split.warnings) std::cerr << "warning: " << w << "\n";
        std::cout << "split " << split.train.entries.size() << "/" << split.val.entries.size()
                  << "/" << split.test.entries.size() << " (train/val/test)\n";
    }
    return 0;
}

// ---- augment-preview -------------------------------------------------------

int cmd_augment_preview(const AugmentPreviewArgs& args) {
    const augment::AugmentationPolicy policy = augment::AugmentationPolicy::preset(args.policy);
    if (args.count < 1) throw ValidationError("--count must be positive");

    ImageU8 image;
    ImageU8 label;
    bool has_label = false;
    const ImageU8 input = data::read_png(args.input);
    if (input.c == 4) {
        const data::SamplePlanes planes = data::read_sample(args.input);
        image = planes.image;
        label = planes.label_plane;
        has_label = true;
    } else {
        image = strip_to_rgb(input);
    }

    fs::create_directories(args.output_dir);
    Rng rng = derive_rng(args.seed, 0xA96);
    for (int i = 0; i < args.count; ++i) {
        const augment::AugmentedPair pair =
            augment::augment(image, has_label ? &label : nullptr, policy, rng);
        std::ostringstream name;
        name << "preview_" << std::setw(3) << std::setfill('0') << i;
        data::write_png(fs::path(args.output_dir) / (name.str() + ".png"),
                        to_u8(pair.image));
        if (pair.has_label()) {
            ImageU8 colored(pair.label.h, pair.label.w, 3);
            for (int y = 0; y < pair.label.h; ++y)
                for (int x = 0; x < pair.label.w; ++x) {
                    const int v = pair.label.at(y, x, 0);
                    for (int ch = 0; ch < 3; ++ch)
                        colored.at(y, x, ch) =
                            v >= 1 && v <= 6 ? data::kTypeColors[std::size_t(v - 1)]
                                                                [std::size_t(ch)]
                            : v == data::kUnknownLabel ? std::uint8_t(255)
                                                       : std::uint8_t(0);
                }
            data::write_png(fs::path(args.output_dir) / (name.str() + "_label.png"), colored);
        }
    }
    std::cout << "wrote " << args.count << " previews to " << args.output_dir << "\n";
    return 0;
}

// ---- train -------------------------------------------------------------------

namespace {

void run_plan(train::CurriculumPlan& plan, const train::StageModels& models,
              train::StageOptions opt) {
    for (const auto& spec : plan.stages) {
        std::cout << "stage " << spec.name << " [" << train::to_string(spec.target)
                  << "] ..." << std::flush;
        const train::StageResult r = train::run_stage(spec, models, opt);
        if (r.aborted)
            throw UserError("stage " + spec.name +
                            " aborted on a non-finite loss; last good checkpoint: " +
                            r.checkpoint.string());
        std::ostringstream fp;
        fp << std::hex << std::setw(16) << std::setfill('0') << r.output_fingerprint;
        plan.provenance.push_back(spec.name + " -> " + r.checkpoint.string() + " (" +
                                  fp.str() + ")");
        std::cout << " done: " << r.epochs.size() << " epochs, final train loss "
                  << (r.epochs.empty() ? 0.0 : r.epochs.back().train_loss) << "\n";
        opt.input_fingerprint = r.output_fingerprint;
    }
}

}  // namespace

int cmd_train(const TrainArgs& args) {
    RunConfig cfg = read_run_config(args.config);
    apply_env_overrides(cfg);
    if (!args.preset.empty()) cfg.preset = args.preset;
    if (args.has_seed) cfg.seed = args.seed;
    cfg.validate();

    const fs::path out(cfg.output_dir);
    if (fs::exists(out) && !fs::is_empty(out) && !args.resume && !args.force)
        throw UserError(cfg.output_dir +
                        " already exists; pass --resume to continue or --force to write into it");
    fs::create_directories(out);

    const model::BackboneConfig backbone = model::BackboneConfig::preset(cfg.preset);
    train::StageOptions opt;
    opt.out_dir = out;
    opt.data_root = fs::absolute(fs::path(args.config)).parent_path();
    opt.policy = augment::AugmentationPolicy::preset(cfg.policy);
    opt.preset = cfg.preset;
    opt.resume = args.resume;

    if (cfg.plan == "segmentation") {
        train::CurriculumPlan plan = train::default_segmentation_plan(cfg.manifests);
        for (std::size_t k = 0; k < plan.stages.size(); ++k)
            plan.stages[k].seed = cfg.seed * 1000 + k;
        apply_overrides(plan, cfg.overrides);

        Rng rng = derive_rng(cfg.seed, 0x5E6);
        model::SegModel<float> seg(backbone, rng);
        train::StageModels models;
        models.segnet = &seg;
        run_plan(plan, models, opt);

        train::CheckpointMeta meta;
        meta.preset = cfg.preset;
        meta.model_kind = "segnet";
        meta.stage = "final";
        meta.input_fingerprint = 0;
        train::save_checkpoint(out / "segnet_final.ckpt", meta, seg.params());
        std::cout << "final segnet checkpoint: " << (out / "segnet_final.ckpt").string()
                  << "\n";
        for (const auto& line : plan.provenance) std::cout << "  " << line << "\n";
        return 0;
    }

    // Classification plan: a trained segnet provides the fused input planes
    // and donates its stem weights to the 11-channel encoder.
    if (cfg.segnet_checkpoint.empty())
        throw UserError("classification plan needs segnet_checkpoint in the config");
    LoadedModels frozen = load_models(resolve(opt.data_root, cfg.segnet_checkpoint));
    if (frozen.meta.preset != cfg.preset)
        throw UserError("segnet checkpoint preset " + frozen.meta.preset +
                        " does not match configured preset " + cfg.preset);

    if (cfg.manifests.classification.empty())
        throw UserError("classification plan needs manifests.classification");
    const data::DatasetManifest cls_manifest =
        data::read_manifest(resolve(opt.data_root, cfg.manifests.classification));
    cls_manifest.validate();
    const std::vector<std::string> categories = cls_manifest.categories();

    train::CurriculumPlan plan =
        train::default_classification_plan(cfg.manifests, int(categories.size()));
    for (std::size_t k = 0; k < plan.stages.size(); ++k)
        plan.stages[k].seed = cfg.seed * 1000 + 500 + k;
    apply_overrides(plan, cfg.overrides);

    Rng rng = derive_rng(cfg.seed, 0xC15);
    model::ClsModel<float> cls(backbone, int(categories.size()), rng);
    model::inflate_stem(frozen.seg->encoder().stem(), cls.encoder()->stem());
    model::ClsPretrainModel<float> pre(cls.encoder(), rng);

    train::StageModels models;
    models.clsnet = &cls;
    models.cls_pretrain = &pre;
    models.frozen_segnet = frozen.seg.get();
    opt.categories = categories;
    opt.input_fingerprint = frozen.meta.weights_fingerprint;
    run_plan(plan, models, opt);

    save_pipeline(out / "pipeline_final.ckpt", cfg.preset, categories,
                  frozen.meta.weights_fingerprint, *frozen.seg, cls);
    std::cout << "final pipeline checkpoint: " << (out / "pipeline_final.ckpt").string()
              << "\n";
    for (const auto& line : plan.provenance) std::cout << "  " << line << "\n";
    return 0;
}

// ---- evaluate ----------------------------------------------------------------

int cmd_evaluate(const EvaluateArgs& args) {
    if (args.task != "segmentation" && args.task != "classification")
        throw ValidationError("--task must be segmentation or classification");
    LoadedModels m = load_models(args.checkpoint);
    const fs::path man_path(args.manifest);
    const data::DatasetManifest manifest = data::read_manifest(man_path);
    manifest.validate();
    const fs::path base = man_path.parent_path();

    EvaluationReport report;
    report.dataset_id = args.manifest;
    report.task = args.task;
    report.config_fingerprint = m.meta.weights_fingerprint;
    report.timestamp = current_timestamp();

    if (args.task == "segmentation") {
        double dice_sum = 0, bpq_sum = 0, mpq_sum = 0;
        std::array<double, metrics::kNumCellTypes> type_sum{};
        std::array<std::int64_t, metrics::kNumCellTypes> type_n{};
        for (const auto& e : manifest.entries) {
            if (e.label_path.empty())
                throw ValidationError(e.image_path +
                                      ": no instance map; segmentation evaluation needs one");
            const data::SamplePlanes planes = data::read_sample(resolve(base, e.image_path));
            const ImageU16 gt_inst = data::read_png16(resolve(base, e.label_path));
            const model::SegOut<float> out =
                model::segment_padded(*m.seg, to_float<float>(planes.image));
            dice_sum += metrics::dice(out.nuclei, nuclei_target_from(planes.label_plane));
            const ImageU16 pred_inst = metrics::extract_instances(out.nuclei);
            const ImageU8 pred_type = metrics::argmax_types(out.types);
            const metrics::PqResult pq =
                metrics::panoptic_quality(gt_inst, planes.label_plane, pred_inst, pred_type);
            bpq_sum += pq.pq;
            mpq_sum += pq.multi_pq;
            for (int t = 0; t < metrics::kNumCellTypes; ++t)
                if (pq.type_present[std::size_t(t)]) {
                    type_sum[std::size_t(t)] += pq.per_type[std::size_t(t)];
                    ++type_n[std::size_t(t)];
                }
        }
        const double n = double(manifest.entries.size());
        report.add("dice", dice_sum / n);
        report.add("binary_pq", bpq_sum / n);
        report.add("multi_pq", mpq_sum / n);
        for (int t = 0; t < metrics::kNumCellTypes; ++t)
            if (type_n[std::size_t(t)] > 0)
                report.per_category.push_back({data::kLabelNames[std::size_t(t) + 1],
                                               type_n[std::size_t(t)],
                                               type_sum[std::size_t(t)] /
                                                   double(type_n[std::size_t(t)])});
    } else {
        if (!m.has_cls())
            throw ValidationError(args.checkpoint +
                                  ": classification evaluation needs a pipeline checkpoint");
        if (!manifest.is_classification())
            throw ValidationError(args.manifest + ": manifest has no category labels");
        std::map<std::string, int> index;
        for (std::size_t i = 0; i < m.meta.categories.size(); ++i)
            index[m.meta.categories[i]] = int(i);
        for (const auto& c : manifest.categories())
            if (!index.count(c))
                throw ValidationError("category " + c +
                                      " is not in the checkpoint's category set");
        std::vector<int> truth, pred;
        for (const auto& e : manifest.entries) {
            const ImageU8 rgb = strip_to_rgb(data::read_png(resolve(base, e.image_path)));
            const model::ClsOut<float> out =
                model::classify_padded(*m.seg, *m.cls, to_float<float>(rgb));
            int arg = 0;
            out.probs.maxCoeff(&arg);
            pred.push_back(arg);
            truth.push_back(index.at(*e.category_label));
        }
        report.add("accuracy", metrics::accuracy(pred, truth));
        report.add("balanced_accuracy", metrics::balanced_accuracy(pred, truth));
        for (std::size_t c = 0; c < m.meta.categories.size(); ++c) {
            std::int64_t support = 0, correct = 0;
            for (std::size_t i = 0; i < truth.size(); ++i)
                if (truth[i] == int(c)) {
                    ++support;
                    correct += pred[i] == int(c);
                }
            if (support > 0)
                report.per_category.push_back(
                    {m.meta.categories[c], support, double(correct) / double(support)});
        }
    }

    if (!args.output.empty()) write_report(args.output, report);
    for (const auto& mr : report.metrics)
        std::cout << mr.name << " " << std::fixed << std::setprecision(4) << mr.value << "\n";
    return 0;
}

// ---- infer -------------------------------------------------------------------

int cmd_infer(const InferArgs& args) {
    LoadedModels m = load_models(args.checkpoint);
    if (args.images.empty()) throw ValidationError("no input images given");
    fs::create_directories(args.output_dir);

    json results = json::array();
    int failures = 0;
    for (const std::string& path : args.images) {
        try {
            const ImageU8 rgb = strip_to_rgb(data::read_png(path));
            const Tensor<float> x = to_float<float>(rgb);
            const model::SegOut<float> out = model::segment_padded(*m.seg, x);
            const std::string stem = fs::path(path).stem().string();

            ImageU8 nuclei(rgb.h, rgb.w, 1);
            for (std::int64_t i = 0; i < out.nuclei.size(); ++i)
                nuclei.pixels[std::size_t(i)] =
                    std::uint8_t(std::lround(out.nuclei.array()[i] * 255.0f));
            data::write_png(fs::path(args.output_dir) / (stem + ".nuclei.png"), nuclei);
            data::write_png(fs::path(args.output_dir) / (stem + ".types.png"),
                            metrics::argmax_types(out.types));
            if (args.overlay)
                data::write_png(fs::path(args.output_dir) / (stem + ".overlay.png"),
                                make_overlay(rgb, out));

            json entry{{"image", path}};
            if (m.has_cls()) {
                const model::ClsOut<float> cls_out = model::classify_padded(*m.seg, *m.cls, x);
                int arg = 0;
                cls_out.probs.maxCoeff(&arg);
                entry["category"] = m.meta.categories[std::size_t(arg)];
                json probs = json::object();
                for (std::size_t c = 0; c < m.meta.categories.size(); ++c)
                    probs[m.meta.categories[c]] = cls_out.probs[Eigen::Index(c)];
                entry["probs"] = probs;
            }
            results.push_back(entry);
            std::cout << path << ": ok\n";
        } catch (const std::exception& e) {
            std::cerr << path << ": " << e.what() << "\n";
            ++failures;
        }
    }
    std::ofstream os(fs::path(args.output_dir) / "results.json");
    os << results.dump(2) << "\n";
    return failures == 0 ? 0 : 1;
}

// ---- extract-features ----------------------------------------------------------

int cmd_extract_features(const ExtractArgs& args) {
    LoadedModels m = load_models(args.checkpoint);
    if (!m.has_cls())
        throw ValidationError(args.checkpoint +
                              ": feature extraction needs a pipeline checkpoint");
    const fs::path man_path(args.manifest);
    const data::DatasetManifest manifest = data::read_manifest(man_path);
    manifest.validate();
    const fs::path base = man_path.parent_path();

    json samples = json::array();
    std::int64_t feat_len = -1;
    for (const auto& e : manifest.entries) {
        const ImageU8 rgb = strip_to_rgb(data::read_png(resolve(base, e.image_path)));
        const model::ClsOut<float> out =
            model::classify_padded(*m.seg, *m.cls, to_float<float>(rgb));
        feat_len = out.features.size();
        json row{{"id", e.image_path}};
        if (e.category_label) row["category"] = *e.category_label;
        row["features"] = std::vector<float>(out.features.data(),
                                             out.features.data() + out.features.size());
        samples.push_back(std::move(row));
    }
    json table{{"schema_version", 1},
               {"feature_length", feat_len},
               {"checkpoint_fingerprint", m.meta.weights_fingerprint},
               {"samples", samples}};
    std::ofstream os(args.output);
    if (!os) throw ValidationError(args.output + ": cannot write feature table");
    os << table.dump() << "\n";
    std::cout << "wrote " << samples.size() << " feature vectors of length " << feat_len
              << "\n";
    return 0;
}

// ---- fit-linear -----------------------------------------------------------------

namespace {

struct FeatureTable {
    std::vector<nn::Vec<float>> features;
    std::vector<std::string> categories;  // per sample
    std::uint64_t fingerprint = 0;
};

FeatureTable read_feature_table(const fs::path& path) {
    const json j = parse_json_file(path);
    FeatureTable t;
    try {
        if (j.value("schema_version", 0) != 1)
            throw ValidationError(path.string() + ": unsupported feature table version");
        t.fingerprint = j.value("checkpoint_fingerprint", std::uint64_t(0));
        for (const json& row : j.at("samples")) {
            const auto vals = row.at("features").get<std::vector<float>>();
            nn::Vec<float> v(Eigen::Index(vals.size()));
            for (std::size_t i = 0; i < vals.size(); ++i) v[Eigen::Index(i)] = vals[i];
            t.features.push_back(std::move(v));
            if (!row.contains("category"))
                throw ValidationError(path.string() + ": sample " +
                                      row.value("id", std::string("?")) + " has no category");
            t.categories.push_back(row.at("category").get<std::string>());
        }
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    if (t.features.empty()) throw ValidationError(path.string() + ": empty feature table");
    return t;
}

}  // namespace

int cmd_fit_linear(const FitLinearArgs& args) {
    const FeatureTable train_t = read_feature_table(args.train_features);
    const FeatureTable test_t = read_feature_table(args.test_features);

    std::map<std::string, int> index;
    std::vector<std::string> names;
    for (const auto& c : train_t.categories)
        if (!index.count(c)) {
            index[c] = int(names.size());
            names.push_back(c);
        }
    auto to_labels = [&](const std::vector<std::string>& cats, const std::string& which) {
        std::vector<int> y;
        y.reserve(cats.size());
        for (const auto& c : cats) {
            auto it = index.find(c);
            if (it == index.end())
                throw ValidationError(which + " split has category " + c +
                                      " absent from the train split");
            y.push_back(it->second);
        }
        return y;
    };
    const std::vector<int> train_y = to_labels(train_t.categories, "train");
    const std::vector<int> test_y = to_labels(test_t.categories, "test");

    const LinearProtocolResult r = fit_linear_protocol(train_t.features, train_y,
                                                       test_t.features, test_y, args.seed);
    std::cout << "accuracy " << std::fixed << std::setprecision(4) << r.accuracy << "\n";
    std::cout << "balanced_accuracy " << std::fixed << std::setprecision(4)
              << r.balanced_accuracy << "\n";

    if (!args.output.empty()) {
        EvaluationReport report;
        report.dataset_id = args.test_features;
        report.task = "classification";
        report.config_fingerprint = test_t.fingerprint;
        report.timestamp = current_timestamp();
        report.add("accuracy", r.accuracy);
        report.add("balanced_accuracy", r.balanced_accuracy);
        write_report(args.output, report);
    }
    return 0;
}

}  // namespace cellmorph::cli
