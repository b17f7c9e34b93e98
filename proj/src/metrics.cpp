#include "sharpxr/metrics.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace sharpxr {

namespace {

void require_same_dims(const Image& a, const Image& b) {
    if (a.height() != b.height() || a.width() != b.width()) {
        throw MetricError("image dimensions differ: " + std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                          " vs " + std::to_string(b.height()) + "x" + std::to_string(b.width()));
    }
    if (a.empty()) throw MetricError("empty image");
}

double sum_squared_error(const Image& a, const Image& b) {
    double acc = 0.0;
    const auto pa = a.pixels();
    const auto pb = b.pixels();
    for (std::size_t i = 0; i < pa.size(); ++i) {
        const double d = static_cast<double>(pb[i]) - static_cast<double>(pa[i]);
        acc += d * d;
    }
    return acc;
}

std::vector<double> gaussian_kernel_1d(int size, double sigma) {
    std::vector<double> k(static_cast<std::size_t>(size));
    const double c = 0.5 * (size - 1);
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        const double d = i - c;
        k[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += k[static_cast<std::size_t>(i)];
    }
    for (double& v : k) v /= sum;
    return k;
}

// Separable valid-mode filter of a row-major h x w field.
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w, const std::vector<double>& k) {
    const int n = static_cast<int>(k.size());
    const int ow = w - n + 1;
    const int oh = h - n + 1;
    std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += k[static_cast<std::size_t>(j)] * src[static_cast<std::size_t>(y) * w + x + j];
            tmp[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) acc += k[static_cast<std::size_t>(i)] * tmp[static_cast<std::size_t>(y + i) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    }
    return out;
}

}  // namespace

double rmse(const Image& ref, const Image& test) {
    require_same_dims(ref, test);
    return std::sqrt(sum_squared_error(ref, test) / static_cast<double>(ref.size()));
}

double psnr_from_rmse(double rmse_value) {
    if (rmse_value <= 0.0) return kInfiniteDb;
    return 20.0 * std::log10(1.0 / rmse_value);
}

double psnr(const Image& ref, const Image& test) { return psnr_from_rmse(rmse(ref, test)); }

double snr(const Image& ref, const Image& test) {
    require_same_dims(ref, test);
    double signal = 0.0;
    for (float v : ref.pixels()) signal += static_cast<double>(v) * v;
    if (signal == 0.0) throw MetricError("SNR undefined for an all-zero reference");
    const double noise = sum_squared_error(ref, test);
    if (noise == 0.0) return kInfiniteDb;
    return 10.0 * std::log10(signal / noise);
}

double ssim(const Image& ref, const Image& test, const SsimConfig& cfg) {
    require_same_dims(ref, test);
    const int h = ref.height();
    const int w = ref.width();
    if (h < cfg.window || w < cfg.window) {
        throw MetricError("image smaller than the " + std::to_string(cfg.window) + "x" + std::to_string(cfg.window) +
                          " SSIM window");
    }
    const auto k = gaussian_kernel_1d(cfg.window, cfg.sigma);
    const std::size_t n = ref.size();
    std::vector<double> a(n), b(n), aa(n), bb(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = ref.pixels()[i];
        b[i] = test.pixels()[i];
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    const auto mu_a = filter_valid(a, h, w, k);
    const auto mu_b = filter_valid(b, h, w, k);
    const auto e_aa = filter_valid(aa, h, w, k);
    const auto e_bb = filter_valid(bb, h, w, k);
    const auto e_ab = filter_valid(ab, h, w, k);

    const double c1 = (cfg.k1 * cfg.dynamic_range) * (cfg.k1 * cfg.dynamic_range);
    const double c2 = (cfg.k2 * cfg.dynamic_range) * (cfg.k2 * cfg.dynamic_range);
    double total = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double var_a = e_aa[i] - mu_a[i] * mu_a[i];
        const double var_b = e_bb[i] - mu_b[i] * mu_b[i];
        const double cov = e_ab[i] - mu_a[i] * mu_b[i];
        const double num = (2.0 * (mu_a[i] * mu_b[i]) + c1) * (2.0 * cov + c2);
        const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (var_a + var_b + c2);
        total += num / den;
    }
    return total / static_cast<double>(mu_a.size());
}

MetricsRecord evaluate_all(const Image& ref, const Image& test) {
    MetricsRecord r;
    r.rmse = rmse(ref, test);
    r.psnr = psnr_from_rmse(r.rmse);
    r.ssim = ssim(ref, test);
    r.snr = snr(ref, test);
    return r;
}

}  // namespace sharpxr
