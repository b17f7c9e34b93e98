#include "sharpxr/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "sharpxr/metrics.hpp"
#include "sharpxr/noise.hpp"
#include "sharpxr/rng.hpp"

namespace sharpxr {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0) || !(adam_eps > 0.0)) {
        throw std::invalid_argument("invalid Adam hyperparameters");
    }
    if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
    if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
    if (early_stop_patience < 1) throw std::invalid_argument("early_stop_patience must be >= 1");
    model.validate();
    augment.validate();
}

std::string format_log_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9f", v);
    return buf;
}

std::string LossLog::to_csv() const {
    std::string out = "epoch,train_rmse,val_rmse,val_psnr,seconds\n";
    char secs[32];
    for (const auto& r : rows) {
        std::snprintf(secs, sizeof(secs), "%.3f", r.seconds);
        out += std::to_string(r.epoch) + "," + format_log_value(r.train_rmse) + "," + format_log_value(r.val_rmse) +
               "," + format_log_value(r.val_psnr) + "," + secs + "\n";
    }
    return out;
}

void LossLog::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write loss log: " + path.string());
    out << to_csv();
}

template <class T>
T rmse_loss(const FeatureMap<T>& pred, const FeatureMap<T>& target, FeatureMap<T>* grad) {
    if (!pred.same_shape(target)) {
        throw std::invalid_argument("rmse_loss: shape mismatch " + pred.shape_string() + " vs " + target.shape_string());
    }
    double sse = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = static_cast<double>(pred.data[i]) - static_cast<double>(target.data[i]);
        sse += d * d;
    }
    const double n = static_cast<double>(pred.size());
    const double loss = std::sqrt(sse / n);
    if (grad) {
        *grad = FeatureMap<T>(pred.n, pred.c, pred.h, pred.w);
        if (loss > 0.0) {
            const double scale = 1.0 / (n * loss);
            for (std::size_t i = 0; i < pred.size(); ++i) {
                grad->data[i] = static_cast<T>((static_cast<double>(pred.data[i]) - target.data[i]) * scale);
            }
        }
    }
    return static_cast<T>(loss);
}

template float rmse_loss<float>(const FeatureMap<float>&, const FeatureMap<float>&, FeatureMap<float>*);
template double rmse_loss<double>(const FeatureMap<double>&, const FeatureMap<double>&, FeatureMap<double>*);

template <class T>
void adam_step(std::vector<std::vector<T>>& params, const std::vector<std::vector<T>>& grads, AdamState<T>& state,
               const TrainConfig& cfg) {
    if (grads.size() != params.size()) throw std::invalid_argument("adam_step: gradient count mismatch");
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (grads[i].size() != params[i].size()) throw std::invalid_argument("adam_step: gradient shape mismatch");
        for (T g : grads[i]) {
            if (!std::isfinite(static_cast<double>(g))) {
                throw TrainingError("non-finite gradient in parameter tensor " + std::to_string(i));
            }
        }
    }
    if (state.m.empty()) {
        for (const auto& p : params) {
            state.m.emplace_back(p.size(), T(0));
            state.v.emplace_back(p.size(), T(0));
        }
    }
    state.step += 1;
    const double b1 = cfg.beta1;
    const double b2 = cfg.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i];
        auto& m = state.m[i];
        auto& v = state.v[i];
        const auto& g = grads[i];
        for (std::size_t k = 0; k < p.size(); ++k) {
            const double gk = g[k];
            const double mk = b1 * m[k] + (1.0 - b1) * gk;
            const double vk = b2 * v[k] + (1.0 - b2) * gk * gk;
            m[k] = static_cast<T>(mk);
            v[k] = static_cast<T>(vk);
            const double mhat = mk / bc1;
            const double vhat = vk / bc2;
            p[k] = static_cast<T>(p[k] - cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps));
        }
    }
}

template void adam_step<float>(std::vector<std::vector<float>>&, const std::vector<std::vector<float>>&,
                               AdamState<float>&, const TrainConfig&);
template void adam_step<double>(std::vector<std::vector<double>>&, const std::vector<std::vector<double>>&,
                                AdamState<double>&, const TrainConfig&);

std::vector<NoisyPair> make_pairs(const LabeledDataset& split, PairMode mode, int epoch, std::uint64_t run_seed,
                                  std::string_view split_name, const AugmentConfig& augment_cfg) {
    if (split.empty()) throw std::invalid_argument("make_pairs: empty split");
    std::vector<NoisyPair> pairs;
    pairs.reserve(split.size());
    for (std::size_t i = 0; i < split.size(); ++i) {
        const Image& img = split.items[i].image;
        if (mode == PairMode::Train) {
            Rng rng(derive_seed("pair.train", {run_seed, static_cast<std::uint64_t>(epoch), i}));
            Image clean = augment(img, augment_cfg, rng);
            const NoiseParams p = sample_params(rng);
            Image noisy = apply_noise(clean, p, rng);
            pairs.push_back({std::move(noisy), std::move(clean)});
        } else {
            Rng rng(derive_seed(std::string("pair.eval.") + std::string(split_name), {i, run_seed}));
            const NoiseParams p = sample_params(rng);
            pairs.push_back({apply_noise(img, p, rng), img});
        }
    }
    return pairs;
}

ValidationMetrics evaluate_pairs(const Network<float>& net, const std::vector<NoisyPair>& pairs) {
    ValidationMetrics m;
    for (const auto& p : pairs) {
        const Image out = denoise_image(net, p.noisy);
        const double r = rmse(p.clean, out);
        m.rmse += r;
        m.psnr += psnr_from_rmse(r);
    }
    m.rmse /= static_cast<double>(pairs.size());
    m.psnr /= static_cast<double>(pairs.size());
    return m;
}

TrainResult train(const LabeledDataset& train_split, const LabeledDataset& val_split, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
    cfg.validate();
    if (train_split.empty() || val_split.empty()) throw std::invalid_argument("train and validation splits must be non-empty");
    const Image& probe = train_split.items.front().image;
    if (probe.height() % 16 != 0 || probe.width() % 16 != 0) {
        throw std::invalid_argument("image dimensions must be divisible by 16");
    }

    Network<float> net(init_params(cfg.model, cfg.seed));
    AdamState<float> adam;
    const auto val_pairs = make_pairs(val_split, PairMode::Eval, 0, cfg.seed, "val");

    TrainResult result;
    result.best = net.to_store(0, cfg.seed);
    double best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;

    const std::size_t n = train_split.size();
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();

        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        Rng shuffle_rng(derive_seed("shuffle", {cfg.seed, static_cast<std::uint64_t>(epoch)}));
        for (std::size_t i = n - 1; i > 0; --i) {
            std::swap(order[i], order[static_cast<std::size_t>(shuffle_rng.uniform_int(0, static_cast<int>(i)))]);
        }
        const auto pairs = make_pairs(train_split, PairMode::Train, epoch, cfg.seed, "train", cfg.augment);

        double loss_sum = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
            std::vector<Image> noisy;
            std::vector<Image> clean;
            for (std::size_t k = start; k < end; ++k) {
                noisy.push_back(pairs[order[k]].noisy);
                clean.push_back(pairs[order[k]].clean);
            }
            const auto x = images_to_batch(noisy);
            const auto y = images_to_batch(clean);
            Network<float>::Tape tape;
            const auto pred = net.forward(x, tape);
            FeatureMap<float> dpred;
            const float loss = rmse_loss(pred, y, &dpred);
            if (!std::isfinite(loss)) {
                result.abort_reason = "non-finite loss at epoch " + std::to_string(epoch);
                result.last = net.to_store(epoch, cfg.seed);
                return result;
            }
            try {
                adam_step(net.params(), net.backward(tape, dpred), adam, cfg);
            } catch (const TrainingError& e) {
                result.abort_reason = std::string(e.what()) + " at epoch " + std::to_string(epoch);
                result.last = net.to_store(epoch, cfg.seed);
                return result;
            }
            loss_sum += loss;
            ++batches;
        }

        const auto val = evaluate_pairs(net, val_pairs);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_rmse = loss_sum / batches;
        rec.val_rmse = val.rmse;
        rec.val_psnr = val.psnr;
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.log.rows.push_back(rec);
        if (on_epoch) on_epoch(rec);

        if (val.rmse < best_val) {
            best_val = val.rmse;
            result.best = net.to_store(epoch, cfg.seed);
            result.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= cfg.early_stop_patience) {
            result.last = net.to_store(epoch, cfg.seed);
            return result;
        }
        result.last = net.to_store(epoch, cfg.seed);
    }
    return result;
}

}  // namespace sharpxr
