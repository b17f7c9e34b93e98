#pragma once

#include <array>
#include <cstdint>

#include "sharpxr/image.hpp"
#include "sharpxr/rng.hpp"

namespace sharpxr {

// Low-dose degradation: noisy = Poisson(eta * x) / eta + N(0, (sigma8 / 255)^2),
// clamped to [0, 1].
//
// NOTE: sigma8 is in 8-bit gray levels, not unit intensity. The admissible
// range [5, 30] would otherwise swamp a [0, 1] signal, so it is divided by
// 255 before use.
struct NoiseParams {
    double eta = 100.0;   // photons per unit intensity
    double sigma8 = 10.0; // Gaussian std in gray levels

    static constexpr double kEtaMin = 50.0;
    static constexpr double kEtaMax = 300.0;
    static constexpr double kSigmaMin = 5.0;
    static constexpr double kSigmaMax = 30.0;

    void validate() const;
    bool operator==(const NoiseParams&) const = default;
};

/// eta ~ U[50, 300], then sigma8 ~ U[5, 30].
NoiseParams sample_params(Rng& rng);

/// Exact Poisson draw. Sequential-search inversion below lambda = 30,
/// transformed rejection with squeeze (PTRS) above. Throws
/// std::invalid_argument for negative, non-finite, or > 1e6 rates.
std::int64_t poisson_sample(double lambda, Rng& rng);

/// Per pixel, one Poisson draw followed by one normal draw.
Image apply_noise(const Image& img, const NoiseParams& p, Rng& rng);

using NoiseGrid = std::array<NoiseParams, 6>;

/// The fixed (sigma8, eta) evaluation grid, in reporting order.
const NoiseGrid& noise_grid();

}  // namespace sharpxr
