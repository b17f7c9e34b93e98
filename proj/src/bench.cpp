#include "sharpxr/bench.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sharpxr/checkpoint.hpp"
#include "sharpxr/noise.hpp"
#include "sharpxr/rng.hpp"

namespace sharpxr {

std::vector<BenchRow> BenchReport::rows_for(const std::string& model) const {
    std::vector<BenchRow> out;
    for (const auto& r : rows) {
        if (r.model == model) out.push_back(r);
    }
    return out;
}

namespace {

std::pair<double, double> mean_std(const std::vector<MetricsRecord>& recs, double MetricsRecord::*field) {
    double sum = 0.0;
    for (const auto& r : recs) sum += r.*field;
    const double mean = sum / static_cast<double>(recs.size());
    if (recs.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (const auto& r : recs) ss += (r.*field - mean) * (r.*field - mean);
    return {mean, std::sqrt(ss / static_cast<double>(recs.size() - 1))};
}

void check_dims(const LabeledDataset& test) {
    if (test.empty()) throw std::invalid_argument("test split is empty");
    for (const auto& it : test.items) {
        if (it.image.height() % 16 != 0 || it.image.width() % 16 != 0) {
            throw std::invalid_argument("test image " + std::to_string(it.image.height()) + "x" +
                                        std::to_string(it.image.width()) + " is not divisible by 16");
        }
    }
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

std::string noise_field(const std::optional<double>& v) { return v ? fmt("%g", *v) : "all"; }

}  // namespace

BenchRow summarize(const std::string& model, std::optional<double> sigma, std::optional<double> eta,
                   const std::vector<MetricsRecord>& records) {
    if (records.empty()) throw std::invalid_argument("cannot summarize zero images");
    BenchRow row;
    row.model = model;
    row.sigma = sigma;
    row.eta = eta;
    std::tie(row.rmse_mean, row.rmse_std) = mean_std(records, &MetricsRecord::rmse);
    std::tie(row.psnr_mean, row.psnr_std) = mean_std(records, &MetricsRecord::psnr);
    std::tie(row.ssim_mean, row.ssim_std) = mean_std(records, &MetricsRecord::ssim);
    std::tie(row.snr_mean, row.snr_std) = mean_std(records, &MetricsRecord::snr);
    row.n = static_cast<int>(records.size());
    return row;
}

std::string model_tag(Variant v) { return "sharpxr-" + std::string(variant_name(v)); }

Denoiser network_denoiser(const Network<float>& net) {
    return [&net](const Image& img) { return denoise_image(net, img); };
}

BenchReport eval_overall(const Denoiser& model, const std::string& tag, const LabeledDataset& test,
                         std::uint64_t run_seed) {
    check_dims(test);
    const auto pairs = make_pairs(test, PairMode::Eval, 0, run_seed, "test");
    std::vector<MetricsRecord> noisy;
    std::vector<MetricsRecord> denoised;
    for (const auto& p : pairs) {
        noisy.push_back(evaluate_all(p.clean, p.noisy));
        denoised.push_back(evaluate_all(p.clean, model(p.noisy)));
    }
    BenchReport r;
    r.rows.push_back(summarize(kNoisyInputTag, std::nullopt, std::nullopt, noisy));
    r.rows.push_back(summarize(tag, std::nullopt, std::nullopt, denoised));
    return r;
}

BenchReport eval_overall(const std::filesystem::path& ckpt, const LabeledDataset& test, std::uint64_t run_seed) {
    const Network<float> net(load_checkpoint(ckpt));
    return eval_overall(network_denoiser(net), model_tag(net.config().variant), test, run_seed);
}

BenchReport eval_grid(const Denoiser& model, const std::string& tag, const LabeledDataset& test,
                      std::uint64_t run_seed) {
    check_dims(test);
    BenchReport noisy_rows;
    BenchReport model_rows;
    const auto& grid = noise_grid();
    for (std::size_t cell = 0; cell < grid.size(); ++cell) {
        std::vector<MetricsRecord> noisy;
        std::vector<MetricsRecord> denoised;
        for (std::size_t i = 0; i < test.size(); ++i) {
            const Image& clean = test.items[i].image;
            Rng rng(derive_seed("grid.test", {cell, i, run_seed}));
            const Image noisy_img = apply_noise(clean, grid[cell], rng);
            noisy.push_back(evaluate_all(clean, noisy_img));
            denoised.push_back(evaluate_all(clean, model(noisy_img)));
        }
        noisy_rows.rows.push_back(summarize(kNoisyInputTag, grid[cell].sigma8, grid[cell].eta, noisy));
        model_rows.rows.push_back(summarize(tag, grid[cell].sigma8, grid[cell].eta, denoised));
    }
    BenchReport r = std::move(noisy_rows);
    r.rows.insert(r.rows.end(), model_rows.rows.begin(), model_rows.rows.end());
    return r;
}

BenchReport eval_grid(const std::filesystem::path& ckpt, const LabeledDataset& test, std::uint64_t run_seed) {
    const Network<float> net(load_checkpoint(ckpt));
    return eval_grid(network_denoiser(net), model_tag(net.config().variant), test, run_seed);
}

AblationResult run_ablation(const DatasetSplits& splits, const TrainConfig& base, const AblationProgress& progress) {
    AblationResult result;
    for (Variant v : kAllVariants) {
        TrainConfig cfg = base;
        cfg.model.variant = v;
        EpochCallback cb;
        if (progress) cb = [&progress, v](const EpochRecord& rec) { progress(v, rec); };
        TrainResult tr;
        try {
            tr = train(splits.train, splits.val, cfg, cb);
        } catch (const std::exception& e) {
            result.failure = model_tag(v) + ": " + e.what();
            return result;
        }
        result.logs.push_back(tr.log);
        if (tr.abort_reason) {
            result.failure = model_tag(v) + ": " + *tr.abort_reason;
            return result;
        }
        const Network<float> net(tr.best);
        const auto overall = eval_overall(network_denoiser(net), model_tag(v), splits.test, base.seed);
        result.noisy_reference = overall.rows[0];
        result.report.rows.push_back(overall.rows[1]);
        result.checkpoints.push_back(std::move(tr.best));
    }
    return result;
}

std::string report_to_csv(const BenchReport& report) {
    std::string out = std::string(kReportCsvHeader) + "\n";
    for (const auto& r : report.rows) {
        out += r.model + "," + noise_field(r.sigma) + "," + noise_field(r.eta);
        for (double v : {r.rmse_mean, r.rmse_std, r.psnr_mean, r.psnr_std, r.ssim_mean, r.ssim_std, r.snr_mean,
                         r.snr_std}) {
            out += "," + fmt("%.6f", v);
        }
        out += "," + std::to_string(r.n) + "\n";
    }
    return out;
}

std::string report_to_markdown(const BenchReport& report) {
    std::vector<std::array<std::string, 7>> cells;
    cells.push_back({"Model", "Sigma", "Eta", "RMSE", "PSNR", "SSIM", "SNR"});
    for (const auto& r : report.rows) {
        cells.push_back({r.model, noise_field(r.sigma), noise_field(r.eta),
                         fmt("%.4f", r.rmse_mean) + " ± " + fmt("%.4f", r.rmse_std),
                         fmt("%.2f", r.psnr_mean) + " ± " + fmt("%.2f", r.psnr_std),
                         fmt("%.4f", r.ssim_mean) + " ± " + fmt("%.4f", r.ssim_std),
                         fmt("%.2f", r.snr_mean) + " ± " + fmt("%.2f", r.snr_std)});
    }
    // Column widths in code points; "±" is two bytes in UTF-8.
    auto width = [](const std::string& s) {
        std::size_t w = 0;
        for (unsigned char c : s) w += (c & 0xC0) != 0x80;
        return w;
    };
    std::array<std::size_t, 7> widths{};
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], width(row[c]));
    }
    auto line = [&](const std::array<std::string, 7>& row) {
        std::string s = "|";
        for (std::size_t c = 0; c < row.size(); ++c) {
            s += " " + row[c] + std::string(widths[c] - width(row[c]), ' ') + " |";
        }
        return s + "\n";
    };
    std::string out = line(cells[0]);
    out += "|";
    for (std::size_t w : widths) out += std::string(w + 2, '-') + "|";
    out += "\n";
    for (std::size_t i = 1; i < cells.size(); ++i) out += line(cells[i]);
    return out;
}

BenchReport parse_report_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kReportCsvHeader) throw std::invalid_argument("report CSV header mismatch");
    BenchReport report;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (f.size() != 12) throw std::invalid_argument("report CSV row has " + std::to_string(f.size()) + " fields");
        BenchRow r;
        r.model = f[0];
        if (f[1] != "all") r.sigma = std::stod(f[1]);
        if (f[2] != "all") r.eta = std::stod(f[2]);
        double* vals[] = {&r.rmse_mean, &r.rmse_std, &r.psnr_mean, &r.psnr_std,
                          &r.ssim_mean, &r.ssim_std, &r.snr_mean,  &r.snr_std};
        for (int k = 0; k < 8; ++k) *vals[k] = std::stod(f[3 + k]);
        r.n = std::stoi(f[11]);
        report.rows.push_back(std::move(r));
    }
    return report;
}

void emit_report(const BenchReport& report, ReportFormat format, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path.string());
    out << (format == ReportFormat::Csv ? report_to_csv(report) : report_to_markdown(report));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace sharpxr
