#pragma once

#include <stdexcept>

#include "sharpxr/image.hpp"

namespace sharpxr {

class MetricError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Reported in place of +inf dB for identical images.
inline constexpr double kInfiniteDb = 99.0;

struct SsimConfig {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
};

struct MetricsRecord {
    double rmse = 0.0;
    double psnr = 0.0;  // dB
    double ssim = 0.0;
    double snr = 0.0;   // dB
};

double rmse(const Image& ref, const Image& test);

/// 20 log10(1 / rmse); kInfiniteDb at rmse == 0.
double psnr_from_rmse(double rmse_value);
double psnr(const Image& ref, const Image& test);

/// 10 log10(sum ref^2 / sum (test - ref)^2). Throws for an all-zero reference.
double snr(const Image& ref, const Image& test);

/// Mean SSIM over every window position that lies fully inside the image.
double ssim(const Image& ref, const Image& test, const SsimConfig& cfg = {});

MetricsRecord evaluate_all(const Image& ref, const Image& test);

}  // namespace sharpxr
