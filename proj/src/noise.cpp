#include "sharpxr/noise.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace sharpxr {

namespace {

constexpr double kInversionLimit = 30.0;
constexpr double kMaxLambda = 1e6;

// log(k!) from a table below 32 and a Stirling series above; the series error
// at k >= 32 is far below double precision.
double log_factorial(std::int64_t k) {
    static const std::vector<double> table = [] {
        std::vector<double> t(32);
        t[0] = 0.0;
        for (int i = 1; i < 32; ++i) t[i] = t[i - 1] + std::log(static_cast<double>(i));
        return t;
    }();
    if (k < 32) return table[static_cast<std::size_t>(k)];
    const double x = static_cast<double>(k) + 1.0;
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // lgamma(x) for x = k + 1
    return (x - 0.5) * std::log(x) - x + 0.91893853320467274178 +
           inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0))));
}

std::int64_t poisson_inversion(double lambda, Rng& rng) {
    const double p0 = std::exp(-lambda);
    for (;;) {
        const double u = rng.uniform01();
        std::int64_t k = 0;
        double p = p0;
        double cdf = p0;
        while (u > cdf) {
            ++k;
            p *= lambda / static_cast<double>(k);
            cdf += p;
            if (p == 0.0 || k > 1000) break;
        }
        if (u <= cdf) return k;
        // cdf rounded short of u in the far tail; redraw.
    }
}

// Hörmann (1993), "The transformed rejection method for generating Poisson
// random variables".
std::int64_t poisson_ptrs(double lambda, Rng& rng) {
    const double slam = std::sqrt(lambda);
    const double loglam = std::log(lambda);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        const double u = rng.uniform01() - 0.5;
        const double v = rng.uniform01();
        const double us = 0.5 - std::abs(u);
        const auto k = static_cast<std::int64_t>(std::floor((2.0 * a / us + b) * u + lambda + 0.43));
        if (us >= 0.07 && v <= vr) return k;
        if (k < 0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
            -lambda + static_cast<double>(k) * loglam - log_factorial(k)) {
            return k;
        }
    }
}

}  // namespace

void NoiseParams::validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("eta must be positive and finite");
    if (!(sigma8 >= 0.0) || !std::isfinite(sigma8)) throw std::invalid_argument("sigma8 must be >= 0");
}

NoiseParams sample_params(Rng& rng) {
    NoiseParams p;
    p.eta = rng.uniform(NoiseParams::kEtaMin, NoiseParams::kEtaMax);
    p.sigma8 = rng.uniform(NoiseParams::kSigmaMin, NoiseParams::kSigmaMax);
    return p;
}

std::int64_t poisson_sample(double lambda, Rng& rng) {
    if (!std::isfinite(lambda) || lambda < 0.0) {
        throw std::invalid_argument("poisson rate must be finite and non-negative");
    }
    if (lambda > kMaxLambda) throw std::invalid_argument("poisson rate above 1e6");
    if (lambda == 0.0) return 0;
    return lambda < kInversionLimit ? poisson_inversion(lambda, rng) : poisson_ptrs(lambda, rng);
}

Image apply_noise(const Image& img, const NoiseParams& p, Rng& rng) {
    p.validate();
    const double gauss_std = p.sigma8 / 255.0;
    std::vector<float> out(img.size());
    const auto px = img.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) {
        const auto k = poisson_sample(p.eta * static_cast<double>(px[i]), rng);
        const double g = gauss_std * rng.normal();
        out[i] = static_cast<float>(static_cast<double>(k) / p.eta + g);
    }
    return Image::clamped(img.height(), img.width(), std::move(out));
}

const NoiseGrid& noise_grid() {
    static const NoiseGrid grid = {{
        {300.0, 5.0},
        {200.0, 10.0},
        {150.0, 15.0},
        {100.0, 20.0},
        {50.0, 25.0},
        {100.0, 30.0},
    }};
    return grid;
}

}  // namespace sharpxr
