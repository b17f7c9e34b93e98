#include "sharpxr/phantom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "sharpxr/rng.hpp"

namespace sharpxr {

namespace {

struct Ellipse {
    double cx, cy, ax, ay;
};

struct Rib {
    double y0;         // centerline offset, fraction of size
    double amplitude;  // intensity
    double width_px;
    double wave_amp;   // centerline sine amplitude, fraction of size
    double wave_phase;
};

struct TextureWave {
    double kx, ky, phase, weight;
};

struct Opacity {
    Ellipse shape;
    double delta;
};

// Random draws happen only here, from integer-state generators. Rendering
// below is a deterministic function of these parameters.
struct PhantomPlan {
    std::array<Ellipse, 2> lungs;
    std::vector<Rib> ribs;
    std::vector<TextureWave> texture;
    std::vector<Opacity> opacities;
};

PhantomPlan plan_phantom(const PhantomSpec& spec) {
    PhantomPlan plan;
    Rng rng(derive_seed("phantom.base", {spec.seed}));
    auto jitter = [&rng](double v) { return v * rng.uniform(0.9, 1.1); };

    plan.lungs[0] = {jitter(0.31), jitter(0.47), jitter(0.15), jitter(0.29)};
    plan.lungs[1] = {jitter(0.69), jitter(0.47), jitter(0.15), jitter(0.29)};

    const int n_ribs = rng.uniform_int(6, 9);
    const double scale = spec.size / 256.0;
    for (int i = 0; i < n_ribs; ++i) {
        Rib r;
        r.y0 = 0.18 + 0.64 * (i + rng.uniform(0.25, 0.75)) / n_ribs;
        r.amplitude = rng.uniform(0.10, 0.18);
        r.width_px = std::max(1.0, rng.uniform(2.0, 4.0) * scale);
        r.wave_amp = rng.uniform(0.02, 0.05);
        r.wave_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        plan.ribs.push_back(r);
    }

    for (int i = 0; i < 4; ++i) {
        TextureWave t;
        t.kx = rng.uniform(0.5, 2.5);
        t.ky = rng.uniform(0.5, 2.5);
        t.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        t.weight = rng.uniform(0.5, 1.0);
        plan.texture.push_back(t);
    }

    if (spec.class_label == 1) {
        Rng orng(derive_seed("phantom.opacity", {spec.seed}));
        const int n = orng.uniform_int(1, 3);
        for (int i = 0; i < n; ++i) {
            const Ellipse& lung = plan.lungs[static_cast<std::size_t>(orng.uniform_int(0, 1))];
            const double r = 0.55 * std::sqrt(orng.uniform01());
            const double t = orng.uniform(0.0, 2.0 * std::numbers::pi);
            Opacity o;
            o.shape = {lung.cx + r * lung.ax * std::cos(t), lung.cy + r * lung.ay * std::sin(t),
                       orng.uniform(0.04, 0.08), orng.uniform(0.04, 0.09)};
            o.delta = orng.uniform(0.12, 0.25);
            plan.opacities.push_back(o);
        }
    }
    return plan;
}

double smoothstep(double edge0, double edge1, double x) {
    const double t = std::clamp((x - edge0) / (edge1 - edge0), 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

// Soft lung membership: 1 inside, 0 beyond the transition band.
double lung_weight(const Ellipse& e, double u, double v) {
    const double dx = (u - e.cx) / e.ax;
    const double dy = (v - e.cy) / e.ay;
    const double r = std::sqrt(dx * dx + dy * dy);
    return 1.0 - smoothstep(0.9, 1.05, r);
}

}  // namespace

void PhantomSpec::validate() const {
    if (size < 32 || size % 16 != 0) throw std::invalid_argument("phantom size must be >= 32 and divisible by 16");
    if (class_label != 0 && class_label != 1) throw std::invalid_argument("phantom class label must be 0 or 1");
}

PhantomLayers render_phantom(const PhantomSpec& spec) {
    spec.validate();
    const PhantomPlan plan = plan_phantom(spec);
    const int n = spec.size;
    const std::size_t npx = static_cast<std::size_t>(n) * n;

    PhantomLayers out;
    out.lung_mask.assign(npx, 0);
    out.rib_mask.assign(npx, 0);
    out.background_mask.assign(npx, 0);
    std::vector<float> px(npx);

    double tex_norm = 0.0;
    for (const auto& t : plan.texture) tex_norm += t.weight;
    double min_width = 1e9;
    double max_width = 0.0;
    for (const auto& r : plan.ribs) {
        min_width = std::min(min_width, r.width_px);
        max_width = std::max(max_width, r.width_px);
    }

    for (int y = 0; y < n; ++y) {
        const double v = (y + 0.5) / n;
        for (int x = 0; x < n; ++x) {
            const double u = (x + 0.5) / n;
            const std::size_t i = static_cast<std::size_t>(y) * n + x;

            double value = 0.55 + 0.20 * v;

            const double lung = std::max(lung_weight(plan.lungs[0], u, v), lung_weight(plan.lungs[1], u, v));
            value *= 1.0 - 0.55 * lung;

            double rib_sum = 0.0;
            double nearest_rib_px = 1e9;
            for (const auto& r : plan.ribs) {
                const double center = r.y0 + r.wave_amp * std::sin(2.0 * std::numbers::pi * u + r.wave_phase);
                const double dist_px = std::abs(v - center) * n;
                nearest_rib_px = std::min(nearest_rib_px, dist_px);
                const double half = 0.5 * r.width_px;
                rib_sum += r.amplitude * std::exp(-(dist_px * dist_px) / (half * half));
            }
            value += rib_sum;

            double tex = 0.0;
            for (const auto& t : plan.texture) {
                tex += t.weight * std::sin(2.0 * std::numbers::pi * (t.kx * u + t.ky * v) + t.phase);
            }
            value += 0.03 * tex / tex_norm;

            double opacity = 0.0;
            for (const auto& o : plan.opacities) {
                const double dx = (u - o.shape.cx) / o.shape.ax;
                const double dy = (v - o.shape.cy) / o.shape.ay;
                opacity += o.delta * std::exp(-0.5 * (dx * dx + dy * dy) * 4.0);
            }
            if (spec.class_label == 1) value += opacity * lung;

            px[i] = static_cast<float>(std::clamp(value, 0.0, 1.0));
            out.lung_mask[i] = lung > 0.0 ? 1 : 0;
            out.rib_mask[i] = nearest_rib_px <= 0.5 * min_width ? 1 : 0;

            const double dl0 = std::hypot((u - plan.lungs[0].cx) / plan.lungs[0].ax, (v - plan.lungs[0].cy) / plan.lungs[0].ay);
            const double dl1 = std::hypot((u - plan.lungs[1].cx) / plan.lungs[1].ax, (v - plan.lungs[1].cy) / plan.lungs[1].ay);
            const bool near_lung_edge = std::abs(dl0 - 1.0) < 0.25 || std::abs(dl1 - 1.0) < 0.25;
            const bool far_from_ribs = nearest_rib_px > 2.0 * max_width + 2.0;
            const bool interior = x > 0 && y > 0 && x < n - 1 && y < n - 1;
            out.background_mask[i] = (far_from_ribs && !near_lung_edge && interior) ? 1 : 0;
        }
    }
    out.image = Image(n, n, std::move(px));
    return out;
}

Image generate_phantom(const PhantomSpec& spec) { return render_phantom(spec).image; }

LabeledDataset make_phantom_dataset(int count, int size, std::uint64_t seed) {
    if (count < 2) throw std::invalid_argument("phantom dataset needs at least 2 images");
    LabeledDataset ds;
    ds.class_names = {kPhantomClassNames[0], kPhantomClassNames[1]};
    for (int i = 0; i < count; ++i) {
        PhantomSpec spec{size, derive_seed("phantom.item", {seed, static_cast<std::uint64_t>(i)}), i % 2};
        ds.items.push_back({generate_phantom(spec), spec.class_label});
    }
    return ds;
}

LabeledDataset generate_dataset(int count, int size, std::uint64_t seed, const std::filesystem::path& out_dir) {
    LabeledDataset ds = make_phantom_dataset(count, size, seed);
    namespace fs = std::filesystem;
    std::error_code ec;
    for (const char* name : kPhantomClassNames) {
        fs::create_directories(out_dir / name, ec);
        if (ec) throw ImageError("cannot create dataset directory " + (out_dir / name).string() + ": " + ec.message());
    }
    for (std::size_t i = 0; i < ds.size(); ++i) {
        char file[32];
        std::snprintf(file, sizeof(file), "phantom_%05zu.pgm", i);
        save_image(ds.items[i].image, out_dir / kPhantomClassNames[ds.items[i].label] / file);
        // Match what load_dataset will read back.
        ds.items[i].image = quantize(ds.items[i].image);
    }
    return ds;
}

}  // namespace sharpxr
