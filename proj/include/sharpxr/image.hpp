#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "sharpxr/rng.hpp"

namespace sharpxr {

class ImageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Single-channel grayscale image, row-major, intensities in [0, 1].
class Image {
public:
    Image() = default;
    Image(int height, int width, float fill = 0.0f);
    /// Takes ownership of `pixels`; throws ImageError if the size is wrong or
    /// any value lies outside [0, 1].
    Image(int height, int width, std::vector<float> pixels);

    /// Clamps every value into [0, 1] (NaN maps to 0).
    static Image clamped(int height, int width, std::vector<float> values);

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return pixels_.size(); }
    bool empty() const { return pixels_.empty(); }

    float at(int row, int col) const { return pixels_[static_cast<std::size_t>(row) * width_ + col]; }
    std::span<const float> pixels() const { return pixels_; }

    bool operator==(const Image&) const = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<float> pixels_;
};

/// Reads an 8-bit binary PGM (P5, maxval 255).
Image load_image(const std::filesystem::path& path);

/// Writes an 8-bit binary PGM. Values are quantized with round-half-up.
void save_image(const Image& img, const std::filesystem::path& path);

std::uint8_t quantize_u8(float v);

/// Snaps every pixel to the nearest 1/255 step, as a save/load round trip would.
Image quantize(const Image& img);

/// Bilinear resize with half-pixel-center alignment and edge replication.
Image resize_bilinear(const Image& img, int out_h, int out_w);

Image flip_horizontal(const Image& img);

/// Rotates by `degrees` (counter-clockwise) about the image center with
/// bilinear sampling; samples falling outside the source read as 0.
Image rotate(const Image& img, double degrees);

/// x -> clamp((x - 0.5) * contrast + 0.5 + brightness)
Image adjust_intensity(const Image& img, double contrast, double brightness);

struct AugmentConfig {
    double flip_prob = 0.5;
    double brightness_delta_max = 0.10;
    double contrast_min = 0.9;
    double contrast_max = 1.1;
    double rotation_deg_max = 15.0;

    static AugmentConfig identity() { return {0.0, 0.0, 1.0, 1.0, 0.0}; }
    void validate() const;
};

/// Flip, then brightness/contrast jitter, then rotation. Draw order from
/// `rng` is fixed: flip, contrast, brightness, angle.
Image augment(const Image& img, const AugmentConfig& cfg, Rng& rng);

}  // namespace sharpxr
