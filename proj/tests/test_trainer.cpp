#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "model_util.hpp"
#include "sharpxr/checkpoint.hpp"
#include "sharpxr/phantom.hpp"
#include "sharpxr/trainer.hpp"
#include "test_util.hpp"

using namespace sharpxr;
using FM = FeatureMap<double>;

namespace {

FM random_map(int n, int h, int w, std::uint64_t seed) {
    FM m(n, 1, h, w);
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<double> u(0, 1);
    for (double& v : m.data) v = u(eng);
    return m;
}

TrainConfig tiny_config(int epochs) {
    TrainConfig cfg;
    cfg.model = {Variant::Full, 16};
    cfg.max_epochs = epochs;
    cfg.learning_rate = 1e-3;
    cfg.seed = 9;
    return cfg;
}

DatasetSplits tiny_splits() {
    return stratified_split(make_phantom_dataset(24, 32, 3), {}, 3);
}

}  // namespace

TEST(RmseLoss, AnalyticValues) {
    const FM t = random_map(2, 8, 8, 1);
    FM g;
    EXPECT_EQ(rmse_loss(t, t, &g), 0.0);
    for (double v : g.data) EXPECT_EQ(v, 0.0);
    FM p = t;
    for (double& v : p.data) v += 0.1;
    EXPECT_NEAR(rmse_loss(p, t), 0.1, 1e-12);
    EXPECT_THROW(rmse_loss(p, random_map(1, 8, 8, 2)), std::invalid_argument);
}

TEST(RmseLoss, BatchWideNotPerImage) {
    FM p(2, 1, 2, 2, 0.0), t(2, 1, 2, 2, 0.0);
    for (int i = 0; i < 4; ++i) p.data[i] = 0.2;  // image 0 error 0.2, image 1 error 0
    EXPECT_NEAR(rmse_loss(p, t), std::sqrt(0.04 / 2), 1e-15);
}

TEST(RmseLoss, GradientMatchesFiniteDifference) {
    FM p = random_map(2, 8, 8, 3);
    const FM t = random_map(2, 8, 8, 4);
    FM g;
    rmse_loss(p, t, &g);
    const double h = 1e-6;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double s = p.data[i];
        p.data[i] = s + h;
        const double up = rmse_loss(p, t);
        p.data[i] = s - h;
        const double dn = rmse_loss(p, t);
        p.data[i] = s;
        const double num = (up - dn) / (2 * h);
        EXPECT_LT(std::abs(num - g.data[i]) / std::max(std::abs(num), 1e-12), 1e-6) << i;
    }
}

TEST(Adam, ZeroGradientLeavesParamsAndDecaysMoments) {
    TrainConfig cfg;
    std::vector<std::vector<double>> params = {{1.0, -2.0}};
    AdamState<double> st;
    adam_step(params, {{0.5, -0.5}}, st, cfg);
    const auto after_first = params;
    const auto m1 = st.m, v1 = st.v;
    adam_step(params, {{0.0, 0.0}}, st, cfg);
    for (int k = 0; k < 2; ++k) {
        EXPECT_NEAR(st.m[0][k], 0.9 * m1[0][k], 1e-18);
        EXPECT_NEAR(st.v[0][k], 0.999 * v1[0][k], 1e-18);
    }
    // From a fresh state a zero gradient is an exact no-op.
    std::vector<std::vector<double>> fresh = {{1.0, -2.0}};
    AdamState<double> st0;
    adam_step(fresh, {{0.0, 0.0}}, st0, cfg);
    EXPECT_EQ(fresh[0][0], 1.0);
    EXPECT_EQ(fresh[0][1], -2.0);
    (void)after_first;
}

TEST(Adam, FirstStepIsLrTimesSign) {
    TrainConfig cfg;
    for (double g : {3.0, -0.02, 1e-3}) {
        std::vector<std::vector<double>> p = {{0.0}};
        AdamState<double> st;
        adam_step(p, {{g}}, st, cfg);
        EXPECT_NEAR(p[0][0], -cfg.learning_rate * g / (std::abs(g) + cfg.adam_eps), 1e-15);
        EXPECT_NEAR(p[0][0], -cfg.learning_rate * (g > 0 ? 1 : -1), 1e-9);
    }
}

TEST(Adam, ScalarQuadraticConverges) {
    TrainConfig cfg;
    cfg.learning_rate = 1e-3;
    std::vector<std::vector<double>> theta = {{1.0}};
    AdamState<double> st;
    for (int i = 0; i < 5000; ++i) adam_step(theta, {{theta[0][0]}}, st, cfg);
    EXPECT_LT(std::abs(theta[0][0]), 1e-2);
}

TEST(Adam, DefaultRateMovesAtMostLrPerStep) {
    // Each Adam step moves a scalar by roughly lr at most, so 5000 steps at
    // lr 1e-4 cannot travel the unit distance to the optimum.
    TrainConfig cfg;
    std::vector<std::vector<double>> theta = {{1.0}};
    AdamState<double> st;
    for (int i = 0; i < 5000; ++i) {
        const double before = theta[0][0];
        adam_step(theta, {{theta[0][0]}}, st, cfg);
        EXPECT_LE(std::abs(theta[0][0] - before), cfg.learning_rate * (1 + 1e-6));
    }
    EXPECT_GT(theta[0][0], 0.49);
}

TEST(Adam, RejectsNonFiniteGradientWithoutUpdating) {
    TrainConfig cfg;
    std::vector<std::vector<double>> p = {{1.0}, {2.0}};
    AdamState<double> st;
    EXPECT_THROW(adam_step(p, {{0.5}, {std::nan("")}}, st, cfg), TrainingError);
    EXPECT_EQ(p[0][0], 1.0);
    EXPECT_EQ(st.step, 0);
    EXPECT_THROW(adam_step(p, {{0.5}}, st, cfg), std::invalid_argument);
}

TEST(TrainConfig, Validation) {
    TrainConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.batch_size = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.learning_rate = -1;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(MakePairs, EvalPairsStableAcrossEpochs) {
    const auto ds = make_phantom_dataset(6, 32, 1);
    const auto a = make_pairs(ds, PairMode::Eval, 1, 42, "val");
    const auto b = make_pairs(ds, PairMode::Eval, 7, 42, "val");
    ASSERT_EQ(a.size(), 6u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].noisy, b[i].noisy);
        EXPECT_EQ(a[i].clean, ds.items[i].image);
        EXPECT_NE(a[i].noisy, a[i].clean);
    }
    const auto other_split = make_pairs(ds, PairMode::Eval, 1, 42, "test");
    EXPECT_NE(other_split[0].noisy, a[0].noisy);
    const auto other_seed = make_pairs(ds, PairMode::Eval, 1, 43, "val");
    EXPECT_NE(other_seed[0].noisy, a[0].noisy);
}

TEST(MakePairs, TrainPairsVaryByEpochAndAreReproducible) {
    const auto ds = make_phantom_dataset(4, 32, 1);
    const auto e1 = make_pairs(ds, PairMode::Train, 1, 42, "train");
    const auto e1b = make_pairs(ds, PairMode::Train, 1, 42, "train");
    const auto e2 = make_pairs(ds, PairMode::Train, 2, 42, "train");
    for (std::size_t i = 0; i < ds.size(); ++i) {
        EXPECT_EQ(e1[i].noisy, e1b[i].noisy);
        EXPECT_EQ(e1[i].clean, e1b[i].clean);
        EXPECT_NE(e1[i].noisy, e2[i].noisy);
    }
    // Without augmentation the clean target is the dataset image itself.
    const auto plain = make_pairs(ds, PairMode::Train, 1, 42, "train", AugmentConfig::identity());
    for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(plain[i].clean, ds.items[i].image);
    EXPECT_THROW(make_pairs(LabeledDataset{}, PairMode::Train, 1, 1, "train"), std::invalid_argument);
}

TEST(LossLog, CsvLayout) {
    LossLog log;
    log.rows.push_back({1, 0.25, 0.125, 18.0617997398, 1.5});
    EXPECT_EQ(log.to_csv(), "epoch,train_rmse,val_rmse,val_psnr,seconds\n1,0.250000000,0.125000000,18.061799740,1.500\n");
}

TEST(Train, DeterministicAndUpdatesEveryTensor) {
    const auto splits = tiny_splits();
    const auto cfg = tiny_config(2);
    const auto a = train(splits.train, splits.val, cfg);
    const auto b = train(splits.train, splits.val, cfg);
    ASSERT_FALSE(a.abort_reason.has_value());
    ASSERT_EQ(a.log.rows.size(), 2u);
    EXPECT_EQ(a.best, b.best);
    EXPECT_EQ(a.last, b.last);
    for (std::size_t i = 0; i < a.log.rows.size(); ++i) {
        EXPECT_EQ(a.log.rows[i].train_rmse, b.log.rows[i].train_rmse);
        EXPECT_EQ(a.log.rows[i].val_rmse, b.log.rows[i].val_rmse);
        EXPECT_EQ(a.log.rows[i].epoch, static_cast<int>(i) + 1);
    }
    const ParamStore init = init_params(cfg.model, cfg.seed);
    ASSERT_EQ(init.tensors.size(), a.last.tensors.size());
    for (std::size_t i = 0; i < init.tensors.size(); ++i) {
        EXPECT_NE(init.tensors[i].data, a.last.tensors[i].data) << init.tensors[i].name;
    }
    EXPECT_NO_THROW(a.best.audit());
}

TEST(Train, ReloadedCheckpointReproducesLoggedValidation) {
    const auto splits = tiny_splits();
    const auto cfg = tiny_config(3);
    const auto r = train(splits.train, splits.val, cfg);
    test::TempDir dir("train_ckpt");
    save_checkpoint(r.best, dir / "best.ckpt");
    const Network<float> net(load_checkpoint(dir / "best.ckpt"));
    const auto val = evaluate_pairs(net, make_pairs(splits.val, PairMode::Eval, 0, cfg.seed, "val"));
    const auto& logged = r.log.rows[static_cast<std::size_t>(r.best_epoch - 1)];
    EXPECT_EQ(format_log_value(val.rmse), format_log_value(logged.val_rmse));
    EXPECT_EQ(format_log_value(val.psnr), format_log_value(logged.val_psnr));
    EXPECT_EQ(val.rmse, logged.val_rmse);
    EXPECT_EQ(r.best.epoch, r.best_epoch);
}

TEST(Train, PatienceOneStillRunsTwoEpochs) {
    const auto ds = make_phantom_dataset(8, 32, 4);
    auto cfg = tiny_config(5);
    cfg.early_stop_patience = 1;
    const auto r = train(ds, ds, cfg);
    EXPECT_GE(r.log.rows.size(), 2u);
}

TEST(Train, RejectsBadInputs) {
    const auto ds = make_phantom_dataset(4, 32, 4);
    EXPECT_THROW(train(LabeledDataset{}, ds, tiny_config(1)), std::invalid_argument);
    EXPECT_THROW(train(ds, LabeledDataset{}, tiny_config(1)), std::invalid_argument);
}
