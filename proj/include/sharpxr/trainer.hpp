#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sharpxr/dataset.hpp"
#include "sharpxr/image.hpp"
#include "sharpxr/model.hpp"

namespace sharpxr {

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    int batch_size = 4;
    int max_epochs = 50;
    int early_stop_patience = 10;
    std::uint64_t seed = 42;
    ModelConfig model;
    AugmentConfig augment;

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    double train_rmse = 0.0;
    double val_rmse = 0.0;
    double val_psnr = 0.0;
    double seconds = 0.0;
};

struct LossLog {
    std::vector<EpochRecord> rows;

    /// `epoch,train_rmse,val_rmse,val_psnr,seconds`
    std::string to_csv() const;
    void write_csv(const std::filesystem::path& path) const;
};

/// Fixed-precision text used in the loss log for a metric value.
std::string format_log_value(double v);

/// Batch-wide RMSE: sqrt of the mean squared error over every element. When
/// `grad` is given it receives d(loss)/d(pred); at zero loss the gradient is
/// taken as zero.
template <class T>
T rmse_loss(const FeatureMap<T>& pred, const FeatureMap<T>& target, FeatureMap<T>* grad = nullptr);

template <class T>
struct AdamState {
    std::vector<std::vector<T>> m;
    std::vector<std::vector<T>> v;
    long step = 0;
};

/// One bias-corrected Adam update. Throws TrainingError on a non-finite
/// gradient before touching any parameter.
template <class T>
void adam_step(std::vector<std::vector<T>>& params, const std::vector<std::vector<T>>& grads, AdamState<T>& state,
               const TrainConfig& cfg);

enum class PairMode { Train, Eval };

struct NoisyPair {
    Image noisy;
    Image clean;
};

/// Train mode augments the clean image then applies freshly sampled noise,
/// seeded by (run_seed, epoch, index). Eval mode skips augmentation and seeds
/// by (split_name, index, run_seed), so the pairs never change across epochs.
std::vector<NoisyPair> make_pairs(const LabeledDataset& split, PairMode mode, int epoch, std::uint64_t run_seed,
                                  std::string_view split_name, const AugmentConfig& augment = {});

struct ValidationMetrics {
    double rmse = 0.0;  // mean of per-image RMSE
    double psnr = 0.0;  // mean of per-image PSNR
};

/// Clamped inference over `pairs`, one image at a time.
ValidationMetrics evaluate_pairs(const Network<float>& net, const std::vector<NoisyPair>& pairs);

struct TrainResult {
    ParamStore best;  // lowest validation RMSE
    ParamStore last;
    LossLog log;
    int best_epoch = 0;
    std::optional<std::string> abort_reason;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch Adam on the RMSE loss with per-epoch validation and early
/// stopping on validation RMSE.
TrainResult train(const LabeledDataset& train_split, const LabeledDataset& val_split, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

}  // namespace sharpxr
