#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sharpxr/dataset.hpp"
#include "sharpxr/metrics.hpp"
#include "sharpxr/model.hpp"
#include "sharpxr/trainer.hpp"

namespace sharpxr {

inline constexpr const char* kNoisyInputTag = "noisy-input";

struct BenchRow {
    std::string model;
    std::optional<double> sigma;  // gray levels; nullopt = mixed ("all")
    std::optional<double> eta;
    double rmse_mean = 0.0, rmse_std = 0.0;
    double psnr_mean = 0.0, psnr_std = 0.0;
    double ssim_mean = 0.0, ssim_std = 0.0;
    double snr_mean = 0.0, snr_std = 0.0;
    int n = 0;
};

struct BenchReport {
    std::vector<BenchRow> rows;

    std::vector<BenchRow> rows_for(const std::string& model) const;
};

/// Mean and sample standard deviation (0 for a single image) of each metric.
BenchRow summarize(const std::string& model, std::optional<double> sigma, std::optional<double> eta,
                   const std::vector<MetricsRecord>& records);

using Denoiser = std::function<Image(const Image&)>;

std::string model_tag(Variant v);

/// Clamped inference with a fixed network.
Denoiser network_denoiser(const Network<float>& net);

/// Two rows: the noisy-input reference, then `tag`. Test noise follows the
/// eval-mode pairing of the trainer with split name "test".
BenchReport eval_overall(const Denoiser& model, const std::string& tag, const LabeledDataset& test,
                         std::uint64_t run_seed);
BenchReport eval_overall(const std::filesystem::path& ckpt, const LabeledDataset& test, std::uint64_t run_seed);

/// Re-noises the test set at each noise_grid() cell. Six noisy-input rows,
/// then six `tag` rows, each group in grid order.
BenchReport eval_grid(const Denoiser& model, const std::string& tag, const LabeledDataset& test,
                      std::uint64_t run_seed);
BenchReport eval_grid(const std::filesystem::path& ckpt, const LabeledDataset& test, std::uint64_t run_seed);

struct AblationResult {
    BenchReport report;         // one row per trained variant, in kAllVariants order
    BenchRow noisy_reference;
    std::vector<LossLog> logs;
    std::vector<ParamStore> checkpoints;
    std::optional<std::string> failure;  // set when a variant failed; rows hold what completed
};

using AblationProgress = std::function<void(Variant, const EpochRecord&)>;

/// Trains all four variants with identical hyperparameters and seeds, then
/// evaluates each best-validation checkpoint on the test split.
AblationResult run_ablation(const DatasetSplits& splits, const TrainConfig& base, const AblationProgress& progress = {});

enum class ReportFormat { Csv, Markdown };

inline constexpr const char* kReportCsvHeader =
    "model,sigma,eta,rmse_mean,rmse_std,psnr_mean,psnr_std,ssim_mean,ssim_std,snr_mean,snr_std,n";

std::string report_to_csv(const BenchReport& report);
std::string report_to_markdown(const BenchReport& report);
BenchReport parse_report_csv(const std::string& text);
void emit_report(const BenchReport& report, ReportFormat format, const std::filesystem::path& path);

}  // namespace sharpxr
