#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sharpxr/image.hpp"

namespace sharpxr {

struct LabeledItem {
    Image image;
    int label = 0;
};

struct LabeledDataset {
    std::vector<LabeledItem> items;
    std::vector<std::string> class_names;

    std::size_t size() const { return items.size(); }
    bool empty() const { return items.empty(); }
    std::size_t count_label(int label) const;
};

struct SplitFractions {
    double train = 0.75;
    double val = 0.10;
    double test = 0.15;
};

struct DatasetSplits {
    LabeledDataset train;
    LabeledDataset val;
    LabeledDataset test;
};

/// Splits each class independently after a seeded shuffle. Per-class counts
/// take the floor of fraction * class_size, and leftover items go to the
/// splits with the largest fractional remainders (ties to the earlier split).
/// Items inside each split keep their original dataset order.
DatasetSplits stratified_split(const LabeledDataset& ds, const SplitFractions& fractions, std::uint64_t seed);

/// Per-split item counts for a class of `n` items.
std::array<std::size_t, 3> apportion(std::size_t n, const SplitFractions& fractions);

/// Loads `<root>/<class_name>/<image>.pgm`; labels follow the sorted class
/// directory names and files are read in sorted order.
LabeledDataset load_dataset(const std::filesystem::path& root);

}  // namespace sharpxr
