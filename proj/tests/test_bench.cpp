#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "sharpxr/bench.hpp"
#include "sharpxr/checkpoint.hpp"
#include "sharpxr/noise.hpp"
#include "sharpxr/phantom.hpp"
#include "test_util.hpp"

using namespace sharpxr;

namespace {

const Denoiser kIdentity = [](const Image& x) { return x; };

void expect_same_stats(const BenchRow& a, const BenchRow& b) {
    EXPECT_EQ(a.rmse_mean, b.rmse_mean);
    EXPECT_EQ(a.rmse_std, b.rmse_std);
    EXPECT_EQ(a.psnr_mean, b.psnr_mean);
    EXPECT_EQ(a.psnr_std, b.psnr_std);
    EXPECT_EQ(a.ssim_mean, b.ssim_mean);
    EXPECT_EQ(a.ssim_std, b.ssim_std);
    EXPECT_EQ(a.snr_mean, b.snr_mean);
    EXPECT_EQ(a.snr_std, b.snr_std);
    EXPECT_EQ(a.n, b.n);
}

BenchRow sample_row(const std::string& model, std::optional<double> s, std::optional<double> e) {
    BenchRow r;
    r.model = model;
    r.sigma = s;
    r.eta = e;
    r.rmse_mean = 0.0123456;
    r.rmse_std = 0.001;
    r.psnr_mean = 32.5;
    r.psnr_std = 1.25;
    r.ssim_mean = 0.91;
    r.ssim_std = 0.02;
    r.snr_mean = 25.0;
    r.snr_std = 0.5;
    r.n = 30;
    return r;
}

}  // namespace

TEST(Summarize, MeanAndSampleStd) {
    std::vector<MetricsRecord> recs = {{0.1, 20, 0.5, 10}, {0.3, 10, 0.7, 14}};
    const auto r = summarize("m", std::nullopt, std::nullopt, recs);
    EXPECT_DOUBLE_EQ(r.rmse_mean, 0.2);
    EXPECT_DOUBLE_EQ(r.rmse_std, std::sqrt(0.02));
    EXPECT_DOUBLE_EQ(r.psnr_mean, 15.0);
    EXPECT_DOUBLE_EQ(r.snr_std, std::sqrt(8.0));
    EXPECT_EQ(r.n, 2);
    const auto one = summarize("m", 5.0, 300.0, {recs[0]});
    EXPECT_EQ(one.rmse_std, 0.0);
    EXPECT_THROW(summarize("m", std::nullopt, std::nullopt, {}), std::invalid_argument);
}

TEST(EvalOverall, IdentityModelMatchesNoisyReference) {
    const auto ds = make_phantom_dataset(6, 32, 2);
    const auto rep = eval_overall(kIdentity, "identity", ds, 42);
    ASSERT_EQ(rep.rows.size(), 2u);
    EXPECT_EQ(rep.rows[0].model, kNoisyInputTag);
    EXPECT_EQ(rep.rows[1].model, "identity");
    EXPECT_FALSE(rep.rows[0].sigma.has_value());
    expect_same_stats(rep.rows[0], rep.rows[1]);
    EXPECT_EQ(rep.rows[0].n, 6);
    // Same noise as the trainer's eval pairs on the "test" split.
    const auto pairs = make_pairs(ds, PairMode::Eval, 0, 42, "test");
    double ps = 0;
    for (const auto& p : pairs) ps += psnr(p.clean, p.noisy);
    EXPECT_NEAR(rep.rows[0].psnr_mean, ps / 6, 1e-12);
}

TEST(EvalOverall, CleanOracleBeatsNoisy) {
    const auto ds = make_phantom_dataset(4, 32, 2);
    // A "model" that returns the matching clean image.
    std::map<std::vector<float>, Image> lookup;
    for (const auto& p : make_pairs(ds, PairMode::Eval, 0, 1, "test"))
        lookup[{p.noisy.pixels().begin(), p.noisy.pixels().end()}] = p.clean;
    const Denoiser oracle = [&](const Image& x) { return lookup.at({x.pixels().begin(), x.pixels().end()}); };
    const auto rep = eval_overall(oracle, "oracle", ds, 1);
    EXPECT_EQ(rep.rows[1].rmse_mean, 0.0);
    EXPECT_EQ(rep.rows[1].psnr_mean, kInfiniteDb);
    EXPECT_EQ(rep.rows[1].ssim_mean, 1.0);
}

TEST(EvalGrid, RowsFollowGridOrder) {
    const auto ds = make_phantom_dataset(6, 32, 3);
    const auto rep = eval_grid(kIdentity, "identity", ds, 42);
    ASSERT_EQ(rep.rows.size(), 12u);
    const auto noisy = rep.rows_for(kNoisyInputTag);
    const auto model = rep.rows_for("identity");
    ASSERT_EQ(noisy.size(), 6u);
    ASSERT_EQ(model.size(), 6u);
    const auto grid = noise_grid();
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_EQ(*noisy[i].sigma, grid[i].sigma8);
        EXPECT_EQ(*noisy[i].eta, grid[i].eta);
        EXPECT_EQ(*model[i].sigma, grid[i].sigma8);
        expect_same_stats(noisy[i], model[i]);
    }
    EXPECT_EQ(*model.front().sigma, 5.0);
    EXPECT_EQ(*model.front().eta, 300.0);
    EXPECT_EQ(*model.back().sigma, 30.0);
    EXPECT_EQ(*model.back().eta, 100.0);
}

TEST(EvalGrid, DeterministicAndSeparatedFromOverall) {
    const auto ds = make_phantom_dataset(4, 32, 3);
    EXPECT_EQ(report_to_csv(eval_grid(kIdentity, "id", ds, 5)), report_to_csv(eval_grid(kIdentity, "id", ds, 5)));
    EXPECT_NE(report_to_csv(eval_grid(kIdentity, "id", ds, 5)), report_to_csv(eval_grid(kIdentity, "id", ds, 6)));
}

TEST(EvalGrid, NoisyPsnrDecreasesOverFirstFiveCells) {
    const auto ds = make_phantom_dataset(40, 64, 11);
    const auto noisy = eval_grid(kIdentity, "id", ds, 42).rows_for(kNoisyInputTag);
    for (std::size_t i = 1; i < 5; ++i) EXPECT_LT(noisy[i].psnr_mean, noisy[i - 1].psnr_mean) << i;
}

TEST(Eval, RejectsBadInput) {
    EXPECT_THROW(eval_overall(kIdentity, "id", LabeledDataset{}, 1), std::invalid_argument);
    LabeledDataset odd;
    odd.items.push_back({Image(20, 20, 0.5f), 0});
    EXPECT_THROW(eval_grid(kIdentity, "id", odd, 1), std::invalid_argument);
}

TEST(EvalOverall, CheckpointPathUsesVariantTag) {
    test::TempDir dir("bench_ckpt");
    save_checkpoint(init_params({Variant::DualOnly, 16}, 1), dir / "m.ckpt");
    const auto rep = eval_overall(dir / "m.ckpt", make_phantom_dataset(2, 32, 1), 3);
    ASSERT_EQ(rep.rows.size(), 2u);
    EXPECT_EQ(rep.rows[1].model, "sharpxr-dual");
    EXPECT_THROW(eval_overall(dir / "missing.ckpt", make_phantom_dataset(2, 32, 1), 3), CheckpointError);
}

TEST(Report, EmptyCsvIsHeaderOnly) {
    EXPECT_EQ(report_to_csv({}), std::string(kReportCsvHeader) + "\n");
    EXPECT_TRUE(parse_report_csv(report_to_csv({})).rows.empty());
}

TEST(Report, CsvRoundTrip) {
    BenchReport rep;
    rep.rows.push_back(sample_row("noisy-input", std::nullopt, std::nullopt));
    rep.rows.push_back(sample_row("sharpxr-full", 15.0, 150.0));
    const std::string csv = report_to_csv(rep);
    const BenchReport back = parse_report_csv(csv);
    ASSERT_EQ(back.rows.size(), 2u);
    EXPECT_EQ(report_to_csv(back), csv);
    EXPECT_FALSE(back.rows[0].sigma.has_value());
    EXPECT_EQ(*back.rows[1].eta, 150.0);
    EXPECT_EQ(back.rows[1].n, 30);
    EXPECT_NE(csv.find("sharpxr-full,15,150,0.012346,"), std::string::npos);
    EXPECT_THROW(parse_report_csv("model,x\n"), std::invalid_argument);
    EXPECT_THROW(parse_report_csv(std::string(kReportCsvHeader) + "\na,b\n"), std::invalid_argument);
}

TEST(Report, MarkdownShape) {
    BenchReport rep;
    rep.rows.push_back(sample_row("noisy-input", std::nullopt, std::nullopt));
    rep.rows.push_back(sample_row("sharpxr-full", 5.0, 300.0));
    rep.rows.push_back(sample_row("sharpxr-single", 5.0, 300.0));
    const std::string md = report_to_markdown(rep);
    std::istringstream in(md);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    ASSERT_EQ(lines.size(), rep.rows.size() + 2);
    EXPECT_NE(lines[2].find("0.0123 ± 0.0010"), std::string::npos);
    EXPECT_NE(lines[2].find("32.50 ± 1.25"), std::string::npos);
    EXPECT_NE(lines[2].find("0.9100 ± 0.0200"), std::string::npos);
    EXPECT_EQ(lines[1].find_first_not_of("|-"), std::string::npos);
    const std::string empty = report_to_markdown({});
    EXPECT_EQ(std::count(empty.begin(), empty.end(), '\n'), 2);
}

TEST(Report, EmitWritesChosenFormat) {
    test::TempDir dir("bench_emit");
    BenchReport rep;
    rep.rows.push_back(sample_row("x", 10.0, 200.0));
    emit_report(rep, ReportFormat::Csv, dir / "r.csv");
    emit_report(rep, ReportFormat::Markdown, dir / "r.md");
    std::ifstream c(dir / "r.csv"), m(dir / "r.md");
    std::stringstream cs, ms;
    cs << c.rdbuf();
    ms << m.rdbuf();
    EXPECT_EQ(cs.str(), report_to_csv(rep));
    EXPECT_EQ(ms.str(), report_to_markdown(rep));
    EXPECT_THROW(emit_report(rep, ReportFormat::Csv, "/nonexistent/dir/r.csv"), std::runtime_error);
}
