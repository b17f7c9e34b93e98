#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sharpxr/dataset.hpp"
#include "sharpxr/image.hpp"

namespace sharpxr {

struct PhantomSpec {
    int size = 256;
    std::uint64_t seed = 0;
    int class_label = 0;  // 0 = clear lungs, 1 = opacity present

    void validate() const;
};

/// Rendered phantom plus the masks it was built from. Masks are 1 where the
/// structure has any support, 0 elsewhere.
struct PhantomLayers {
    Image image;
    std::vector<std::uint8_t> lung_mask;
    std::vector<std::uint8_t> rib_mask;
    // Pixels well away from ribs and lung boundaries.
    std::vector<std::uint8_t> background_mask;
};

PhantomLayers render_phantom(const PhantomSpec& spec);

/// Chest-radiograph-like synthetic image, fully determined by `spec`.
Image generate_phantom(const PhantomSpec& spec);

inline constexpr const char* kPhantomClassNames[2] = {"normal", "pneumonia"};

/// Writes `count` phantoms (alternating labels, starting with 0) to
/// `<out_dir>/<class_name>/phantom_NNNNN.pgm` and returns them in memory in
/// generation order.
LabeledDataset generate_dataset(int count, int size, std::uint64_t seed, const std::filesystem::path& out_dir);

/// In-memory variant of generate_dataset; no files are written.
LabeledDataset make_phantom_dataset(int count, int size, std::uint64_t seed);

}  // namespace sharpxr
