#include <CLI11.hpp>

#include <functional>
#include <iostream>

#include "cellmorph/cli/commands.hpp"
#include "cellmorph/core/error.hpp"

using namespace cellmorph;

int main(int argc, char** argv) {
    CLI::App app{"cellmorph: nuclei-aware histology segmentation and classification"};
    app.require_subcommand(1);
    std::function<int()> run;

    cli::HarmonizeArgs harmonize;
    auto* h = app.add_subcommand("harmonize", "Convert raw samples into the unified store");
    h->add_option("--input", harmonize.input, "Ingest description (JSON)")->required();
    h->add_option("--output", harmonize.output_dir, "Output dataset directory")->required();
    h->add_option("--split", harmonize.split, "Train/val/test ratios")->expected(3);
    h->add_option("--seed", harmonize.seed, "Split seed");
    h->callback([&] { run = [&] { return cli::cmd_harmonize(harmonize); }; });

    cli::AugmentPreviewArgs preview;
    auto* p = app.add_subcommand("augment-preview", "Write augmented variants of one sample");
    p->add_option("--input", preview.input, "Sample (4-channel) or RGB PNG")->required();
    p->add_option("--output", preview.output_dir, "Output directory")->required();
    p->add_option("--policy", preview.policy, "off, moderate, or extreme");
    p->add_option("--count", preview.count, "Number of variants");
    p->add_option("--seed", preview.seed, "Sampling seed");
    p->callback([&] { run = [&] { return cli::cmd_augment_preview(preview); }; });

    cli::TrainArgs train;
    auto* t = app.add_subcommand("train", "Run a training curriculum from a config file");
    t->add_option("--config", train.config, "Run configuration (JSON)")->required();
    t->add_option("--preset", train.preset, "Backbone preset override (reference, tiny)");
    auto* seed_opt = t->add_option("--seed", train.seed, "Seed override");
    t->add_flag("--resume", train.resume, "Continue an interrupted run");
    t->add_flag("--force", train.force, "Write into an existing output directory");
    t->callback([&] {
        train.has_seed = seed_opt->count() > 0;
        run = [&] { return cli::cmd_train(train); };
    });

    cli::EvaluateArgs evaluate;
    auto* e = app.add_subcommand("evaluate", "Score a checkpoint against a manifest");
    e->add_option("--checkpoint", evaluate.checkpoint, "Model checkpoint")->required();
    e->add_option("--manifest", evaluate.manifest, "Dataset manifest")->required();
    e->add_option("--task", evaluate.task, "segmentation or classification")->required();
    e->add_option("--output", evaluate.output, "Report base path (.txt/.json added)");
    e->add_option("--seed", evaluate.seed, "Protocol seed");
    e->callback([&] { run = [&] { return cli::cmd_evaluate(evaluate); }; });

    cli::InferArgs infer;
    auto* i = app.add_subcommand("infer", "Run inference on images of any resolution");
    i->add_option("--checkpoint", infer.checkpoint, "Model checkpoint")->required();
    i->add_option("--output", infer.output_dir, "Output directory")->required();
    i->add_flag("--overlay", infer.overlay, "Write type-colored overlays");
    i->add_option("images", infer.images, "Input PNGs")->required();
    i->callback([&] { run = [&] { return cli::cmd_infer(infer); }; });

    cli::ExtractArgs extract;
    auto* x = app.add_subcommand("extract-features", "Export pooled features per sample");
    x->add_option("--checkpoint", extract.checkpoint, "Pipeline checkpoint")->required();
    x->add_option("--manifest", extract.manifest, "Dataset manifest")->required();
    x->add_option("--output", extract.output, "Feature table (JSON)")->required();
    x->callback([&] { run = [&] { return cli::cmd_extract_features(extract); }; });

    cli::FitLinearArgs fit;
    auto* f = app.add_subcommand("fit-linear", "Max-margin protocol over exported features");
    f->add_option("--train", fit.train_features, "Train feature table")->required();
    f->add_option("--test", fit.test_features, "Test feature table")->required();
    f->add_option("--output", fit.output, "Report base path");
    f->add_option("--seed", fit.seed, "Protocol seed");
    f->callback([&] { run = [&] { return cli::cmd_fit_linear(fit); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 1;
    }

    try {
        return run();
    } catch (const UserError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    } catch (const std::exception& err) {
        std::cerr << "internal error: " << err.what() << "\n";
        return 2;
    }
}
