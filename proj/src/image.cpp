#include "sharpxr/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

namespace sharpxr {

Image::Image(int height, int width, float fill) : height_(height), width_(width) {
    if (height <= 0 || width <= 0) throw ImageError("image dimensions must be positive");
    if (!(fill >= 0.0f && fill <= 1.0f)) throw ImageError("fill value outside [0,1]");
    pixels_.assign(static_cast<std::size_t>(height) * width, fill);
}

Image::Image(int height, int width, std::vector<float> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
    if (height <= 0 || width <= 0) throw ImageError("image dimensions must be positive");
    if (pixels_.size() != static_cast<std::size_t>(height) * width) {
        throw ImageError("pixel buffer size does not match " + std::to_string(height) + "x" +
                         std::to_string(width));
    }
    for (float p : pixels_) {
        if (!(p >= 0.0f && p <= 1.0f)) throw ImageError("pixel value outside [0,1]");
    }
}

Image Image::clamped(int height, int width, std::vector<float> values) {
    for (float& v : values) v = (v >= 0.0f) ? std::min(v, 1.0f) : 0.0f;
    return Image(height, width, std::move(values));
}

namespace {

// Skips whitespace and '#' comments, then reads one unsigned integer.
int read_header_int(std::istream& in, const std::string& what) {
    int c = in.peek();
    while (c != EOF) {
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
        c = in.peek();
    }
    long value = 0;
    bool any = false;
    while (std::isdigit(in.peek())) {
        value = value * 10 + (in.get() - '0');
        any = true;
        if (value > 1'000'000) throw ImageError("PGM " + what + " too large");
    }
    if (!any) throw ImageError("malformed PGM header: expected " + what);
    return static_cast<int>(value);
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageError("cannot open image: " + path.string());
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P') throw ImageError("not a PNM file: " + path.string());
    if (magic[1] == '6' || magic[1] == '3') {
        throw ImageError("multi-channel image not supported: " + path.string());
    }
    if (magic[1] != '5') throw ImageError("unsupported PNM variant P" + std::string(1, magic[1]));

    const int width = read_header_int(in, "width");
    const int height = read_header_int(in, "height");
    const int maxval = read_header_int(in, "maxval");
    if (width <= 0 || height <= 0) throw ImageError("PGM has zero dimension: " + path.string());
    if (maxval != 255) {
        throw ImageError("unsupported bit depth (maxval " + std::to_string(maxval) + "), need 8-bit");
    }
    if (!std::isspace(in.get())) throw ImageError("malformed PGM header: " + path.string());

    const std::size_t n = static_cast<std::size_t>(width) * height;
    std::vector<unsigned char> bytes(n);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) throw ImageError("truncated PGM data: " + path.string());

    std::vector<float> pixels(n);
    std::transform(bytes.begin(), bytes.end(), pixels.begin(),
                   [](unsigned char v) { return static_cast<float>(v) / 255.0f; });
    return Image(height, width, std::move(pixels));
}

std::uint8_t quantize_u8(float v) {
    const double scaled = std::floor(static_cast<double>(v) * 255.0 + 0.5);
    return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

Image quantize(const Image& img) {
    std::vector<float> out(img.size());
    std::transform(img.pixels().begin(), img.pixels().end(), out.begin(),
                   [](float v) { return static_cast<float>(quantize_u8(v)) / 255.0f; });
    return Image(img.height(), img.width(), std::move(out));
}

void save_image(const Image& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ImageError("cannot write image: " + path.string());
    out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
    std::vector<std::uint8_t> bytes(img.size());
    std::transform(img.pixels().begin(), img.pixels().end(), bytes.begin(), quantize_u8);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ImageError("write failed: " + path.string());
}

Image resize_bilinear(const Image& img, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw ImageError("resize target dimensions must be >= 1");
    if (out_h == img.height() && out_w == img.width()) return img;

    const int in_h = img.height();
    const int in_w = img.width();
    const double sy = static_cast<double>(in_h) / out_h;
    const double sx = static_cast<double>(in_w) / out_w;
    std::vector<float> out(static_cast<std::size_t>(out_h) * out_w);
    for (int y = 0; y < out_h; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(in_h - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, in_h - 1);
        const double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(in_w - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, in_w - 1);
            const double wx = fx - x0;
            const double top = img.at(y0, x0) * (1.0 - wx) + img.at(y0, x1) * wx;
            const double bot = img.at(y1, x0) * (1.0 - wx) + img.at(y1, x1) * wx;
            out[static_cast<std::size_t>(y) * out_w + x] = static_cast<float>(top * (1.0 - wy) + bot * wy);
        }
    }
    return Image::clamped(out_h, out_w, std::move(out));
}

Image flip_horizontal(const Image& img) {
    std::vector<float> out(img.pixels().begin(), img.pixels().end());
    for (int y = 0; y < img.height(); ++y) {
        auto row = out.begin() + static_cast<std::ptrdiff_t>(y) * img.width();
        std::reverse(row, row + img.width());
    }
    return Image(img.height(), img.width(), std::move(out));
}

Image rotate(const Image& img, double degrees) {
    if (degrees == 0.0) return img;
    const int h = img.height();
    const int w = img.width();
    const double theta = degrees * std::numbers::pi / 180.0;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double cy = 0.5 * (h - 1);
    const double cx = 0.5 * (w - 1);

    auto sample = [&](int y, int x) -> double {
        return (y < 0 || y >= h || x < 0 || x >= w) ? 0.0 : img.at(y, x);
    };

    std::vector<float> out(img.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            // Inverse map: destination pixel -> source coordinate.
            const double dx = x - cx;
            const double dy = y - cy;
            const double sx = c * dx - s * dy + cx;
            const double sy = s * dx + c * dy + cy;
            const double fx = std::floor(sx);
            const double fy = std::floor(sy);
            const int x0 = static_cast<int>(fx);
            const int y0 = static_cast<int>(fy);
            const double wx = sx - fx;
            const double wy = sy - fy;
            const double top = sample(y0, x0) * (1.0 - wx) + sample(y0, x0 + 1) * wx;
            const double bot = sample(y0 + 1, x0) * (1.0 - wx) + sample(y0 + 1, x0 + 1) * wx;
            out[static_cast<std::size_t>(y) * w + x] = static_cast<float>(top * (1.0 - wy) + bot * wy);
        }
    }
    return Image::clamped(h, w, std::move(out));
}

Image adjust_intensity(const Image& img, double contrast, double brightness) {
    if (contrast == 1.0 && brightness == 0.0) return img;
    std::vector<float> out(img.size());
    std::transform(img.pixels().begin(), img.pixels().end(), out.begin(), [&](float x) {
        return static_cast<float>((x - 0.5) * contrast + 0.5 + brightness);
    });
    return Image::clamped(img.height(), img.width(), std::move(out));
}

void AugmentConfig::validate() const {
    if (!(flip_prob >= 0.0 && flip_prob <= 1.0)) throw ImageError("flip_prob must lie in [0,1]");
    if (!(rotation_deg_max >= 0.0)) throw ImageError("rotation_deg_max must be >= 0");
    if (!(brightness_delta_max >= 0.0)) throw ImageError("brightness_delta_max must be >= 0");
    if (!(contrast_min > 0.0 && contrast_min <= contrast_max)) throw ImageError("invalid contrast range");
}

Image augment(const Image& img, const AugmentConfig& cfg, Rng& rng) {
    cfg.validate();
    const bool flip = rng.bernoulli(cfg.flip_prob);
    const double contrast = rng.uniform(cfg.contrast_min, cfg.contrast_max);
    const double brightness = rng.uniform(-cfg.brightness_delta_max, cfg.brightness_delta_max);
    const double angle = rng.uniform(-cfg.rotation_deg_max, cfg.rotation_deg_max);

    Image out = flip ? flip_horizontal(img) : img;
    out = adjust_intensity(out, contrast, brightness);
    return rotate(out, angle);
}

}  // namespace sharpxr
