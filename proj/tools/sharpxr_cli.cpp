#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "sharpxr/bench.hpp"
#include "sharpxr/checkpoint.hpp"
#include "sharpxr/dataset.hpp"
#include "sharpxr/image.hpp"
#include "sharpxr/metrics.hpp"
#include "sharpxr/noise.hpp"
#include "sharpxr/phantom.hpp"
#include "sharpxr/trainer.hpp"

namespace fs = std::filesystem;
using namespace sharpxr;

namespace {

// Exit codes: 0 ok, 1 runtime failure, 2 usage error.
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// Errors go to stderr as one line: `error: <kind>: <message>`.
int fail(const std::string& kind, std::string message, int code) {
    for (char& c : message)
        if (c == '\n' || c == '\r') c = ' ';
    std::cerr << "error: " << kind << ": " << message << "\n";
    return code;
}

struct PhantomArgs {
    int count = 200;
    int size = 64;
    std::uint64_t seed = 42;
    std::string out;
};

struct NoiseArgs {
    double eta = 100.0;
    double sigma = 10.0;
    std::uint64_t seed = 42;
    std::string in, out;
};

struct TrainArgs {
    std::string variant = "full";
    std::string data;
    int epochs = 50;
    std::string width_scale = "1";
    int batch = 4;
    double lr = 1e-4;
    int patience = 10;
    std::uint64_t seed = 42;
    std::string out;
};

struct EvalArgs {
    std::string ckpt, data, out;
    std::string mode = "overall";
    std::string format = "csv";
    std::uint64_t seed = 42;
};

struct AblateArgs {
    std::string data, out;
    int epochs = 20;
    std::string width_scale = "1/4";
    int batch = 4;
    double lr = 1e-4;
    int patience = 10;
    std::uint64_t seed = 42;
};

struct MetricsArgs {
    std::string ref, test;
};

// Datasets on disk are split with the run seed, so train and eval invoked
// with the same seed agree on the held-out test images.
DatasetSplits load_splits(const std::string& dir, std::uint64_t seed) {
    return stratified_split(load_dataset(dir), {}, seed);
}

void log_epoch(const std::string& prefix, const EpochRecord& r) {
    std::fprintf(stderr, "%sepoch %d train_rmse %.6f val_rmse %.6f val_psnr %.3f (%.1fs)\n", prefix.c_str(), r.epoch,
                 r.train_rmse, r.val_rmse, r.val_psnr, r.seconds);
}

int run_phantom(const PhantomArgs& a) {
    const auto ds = generate_dataset(a.count, a.size, a.seed, a.out);
    std::printf("wrote %zu phantoms (%zu normal, %zu pneumonia) to %s\n", ds.size(), ds.count_label(0),
                ds.count_label(1), a.out.c_str());
    return 0;
}

int run_noise(const NoiseArgs& a) {
    const NoiseParams p{a.eta, a.sigma};
    p.validate();
    Rng rng(derive_seed("cli.noise", {a.seed}));
    save_image(apply_noise(load_image(a.in), p, rng), a.out);
    return 0;
}

int run_train(const TrainArgs& a) {
    TrainConfig cfg;
    cfg.model.variant = parse_variant(a.variant);
    cfg.model.width_divisor = parse_width_divisor(a.width_scale);
    cfg.max_epochs = a.epochs;
    cfg.batch_size = a.batch;
    cfg.learning_rate = a.lr;
    cfg.early_stop_patience = a.patience;
    cfg.seed = a.seed;
    cfg.validate();

    const auto splits = load_splits(a.data, a.seed);
    const auto result = train(splits.train, splits.val, cfg, [](const EpochRecord& r) { log_epoch("", r); });
    const fs::path out(a.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    save_checkpoint(result.best, out);
    save_checkpoint(result.last, fs::path(a.out + ".last"));
    fs::path log_path = out;
    log_path.replace_extension(".csv");
    result.log.write_csv(log_path);
    if (result.abort_reason) return fail("training", *result.abort_reason, kExitFailure);
    std::printf("best epoch %d of %zu, checkpoint %s, log %s\n", result.best_epoch, result.log.rows.size(),
                out.c_str(), log_path.c_str());
    return 0;
}

int run_eval(const EvalArgs& a) {
    if (a.mode != "overall" && a.mode != "grid") throw CLI::ValidationError("--mode", "must be overall or grid");
    const ReportFormat fmt = a.format == "md" ? ReportFormat::Markdown : ReportFormat::Csv;
    const auto splits = load_splits(a.data, a.seed);
    const auto report = a.mode == "grid" ? eval_grid(a.ckpt, splits.test, a.seed)
                                         : eval_overall(a.ckpt, splits.test, a.seed);
    if (a.out.empty()) {
        std::cout << (fmt == ReportFormat::Csv ? report_to_csv(report) : report_to_markdown(report));
    } else {
        emit_report(report, fmt, a.out);
    }
    return 0;
}

int run_ablate(const AblateArgs& a) {
    TrainConfig cfg;
    cfg.model.width_divisor = parse_width_divisor(a.width_scale);
    cfg.max_epochs = a.epochs;
    cfg.batch_size = a.batch;
    cfg.learning_rate = a.lr;
    cfg.early_stop_patience = a.patience;
    cfg.seed = a.seed;
    cfg.validate();

    const auto splits = load_splits(a.data, a.seed);
    const auto result = run_ablation(splits, cfg, [](Variant v, const EpochRecord& r) {
        log_epoch(std::string(variant_name(v)) + " ", r);
    });
    const fs::path dir(a.out);
    fs::create_directories(dir);
    for (std::size_t i = 0; i < result.checkpoints.size(); ++i) {
        const std::string name(variant_name(kAllVariants[i]));
        save_checkpoint(result.checkpoints[i], dir / (name + ".ckpt"));
        result.logs[i].write_csv(dir / (name + ".csv"));
    }
    emit_report(result.report, ReportFormat::Csv, dir / "ablation.csv");
    emit_report(result.report, ReportFormat::Markdown, dir / "ablation.md");
    if (!result.report.rows.empty()) {
        emit_report(BenchReport{{result.noisy_reference}}, ReportFormat::Csv, dir / "noisy_reference.csv");
    }
    if (result.failure) return fail("ablation", *result.failure, kExitFailure);
    std::cout << report_to_markdown(result.report);
    return 0;
}

int run_metrics(const MetricsArgs& a) {
    const auto r = evaluate_all(load_image(a.ref), load_image(a.test));
    std::printf("rmse,psnr,ssim,snr\n%.4f,%.2f,%.4f,%.2f\n", r.rmse, r.psnr, r.ssim, r.snr);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Poisson-Gaussian X-ray denoising: phantoms, training, evaluation"};
    app.require_subcommand(1);

    PhantomArgs pa;
    auto* phantom = app.add_subcommand("phantom", "Synthetic chest phantoms");
    auto* generate = phantom->add_subcommand("generate", "Write a labeled phantom dataset");
    phantom->require_subcommand(1);
    generate->add_option("--count", pa.count, "Number of images")->check(CLI::PositiveNumber);
    generate->add_option("--size", pa.size, "Image side in pixels (multiple of 16, >= 32)");
    generate->add_option("--seed", pa.seed, "Root seed");
    generate->add_option("--out", pa.out, "Output directory")->required();

    NoiseArgs na;
    auto* noise = app.add_subcommand("noise", "Poisson-Gaussian degradation");
    auto* apply = noise->add_subcommand("apply", "Degrade one PGM image");
    noise->require_subcommand(1);
    apply->add_option("--eta", na.eta, "Poisson rate scale");
    apply->add_option("--sigma", na.sigma, "Gaussian std in 8-bit gray levels");
    apply->add_option("--seed", na.seed, "Seed");
    apply->add_option("--in", na.in, "Input PGM")->required();
    apply->add_option("--out", na.out, "Output PGM")->required();

    TrainArgs ta;
    auto* train_cmd = app.add_subcommand("train", "Train one variant");
    train_cmd->add_option("--variant", ta.variant, "single | dual | dual-laplacian | full");
    train_cmd->add_option("--data", ta.data, "Dataset root (<class>/*.pgm)")->required();
    train_cmd->add_option("--epochs", ta.epochs, "Maximum epochs");
    train_cmd->add_option("--width-scale", ta.width_scale, "Channel width scale: 1, 1/2, 1/4, 1/8, 1/16");
    train_cmd->add_option("--batch", ta.batch, "Batch size");
    train_cmd->add_option("--lr", ta.lr, "Adam learning rate");
    train_cmd->add_option("--patience", ta.patience, "Early-stopping patience in epochs");
    train_cmd->add_option("--seed", ta.seed, "Root seed (split, init, noise, shuffle)");
    train_cmd->add_option("--out", ta.out, "Checkpoint path; loss log is written beside it")->required();

    EvalArgs ea;
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the held-out split");
    eval->add_option("--ckpt", ea.ckpt, "Checkpoint")->required();
    eval->add_option("--data", ea.data, "Dataset root")->required();
    eval->add_option("--mode", ea.mode, "overall | grid")->check(CLI::IsMember({"overall", "grid"}));
    eval->add_option("--seed", ea.seed, "Run seed (use the training seed)");
    eval->add_option("--format", ea.format, "csv | md")->check(CLI::IsMember({"csv", "md"}));
    eval->add_option("--out", ea.out, "Report path (stdout if omitted)");

    AblateArgs aa;
    auto* ablate = app.add_subcommand("ablate", "Train and evaluate all four variants");
    ablate->add_option("--data", aa.data, "Dataset root")->required();
    ablate->add_option("--epochs", aa.epochs, "Maximum epochs per variant");
    ablate->add_option("--width-scale", aa.width_scale, "Channel width scale");
    ablate->add_option("--batch", aa.batch, "Batch size");
    ablate->add_option("--lr", aa.lr, "Adam learning rate");
    ablate->add_option("--patience", aa.patience, "Early-stopping patience in epochs");
    ablate->add_option("--seed", aa.seed, "Root seed");
    ablate->add_option("--out", aa.out, "Output directory")->required();

    MetricsArgs ma;
    auto* metrics = app.add_subcommand("metrics", "RMSE, PSNR, SSIM, SNR of a test image against a reference");
    metrics->add_option("--ref", ma.ref, "Reference PGM")->required();
    metrics->add_option("--test", ma.test, "Test PGM")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what(), kExitUsage);
    }

    try {
        if (generate->parsed()) return run_phantom(pa);
        if (apply->parsed()) return run_noise(na);
        if (train_cmd->parsed()) return run_train(ta);
        if (eval->parsed()) return run_eval(ea);
        if (ablate->parsed()) return run_ablate(aa);
        if (metrics->parsed()) return run_metrics(ma);
    } catch (const CLI::Error& e) {
        return fail("usage", e.what(), kExitUsage);
    } catch (const ImageError& e) {
        return fail("image", e.what(), kExitFailure);
    } catch (const CheckpointError& e) {
        return fail("checkpoint", e.what(), kExitFailure);
    } catch (const MetricError& e) {
        return fail("metric", e.what(), kExitFailure);
    } catch (const TrainingError& e) {
        return fail("training", e.what(), kExitFailure);
    } catch (const std::invalid_argument& e) {
        return fail("invalid-argument", e.what(), kExitUsage);
    } catch (const std::exception& e) {
        return fail("runtime", e.what(), kExitFailure);
    }
    return fail("usage", "no command given", kExitUsage);
}
