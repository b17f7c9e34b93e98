#include "sharpxr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sharpxr {

std::size_t LabeledDataset::count_label(int label) const {
    return static_cast<std::size_t>(
        std::count_if(items.begin(), items.end(), [label](const LabeledItem& it) { return it.label == label; }));
}

std::array<std::size_t, 3> apportion(std::size_t n, const SplitFractions& fractions) {
    const std::array<double, 3> f = {fractions.train, fractions.val, fractions.test};
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (int s = 0; s < 3; ++s) {
        const double quota = f[s] * static_cast<double>(n);
        counts[s] = static_cast<std::size_t>(std::floor(quota));
        remainder[s] = quota - static_cast<double>(counts[s]);
        assigned += counts[s];
    }
    std::array<int, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < n; ++k, ++assigned) counts[order[k % 3]] += 1;
    return counts;
}

DatasetSplits stratified_split(const LabeledDataset& ds, const SplitFractions& fractions, std::uint64_t seed) {
    const double sum = fractions.train + fractions.val + fractions.test;
    if (std::abs(sum - 1.0) > 1e-9 || fractions.train <= 0.0 || fractions.val < 0.0 || fractions.test < 0.0) {
        throw std::invalid_argument("split fractions must be non-negative and sum to 1");
    }
    if (ds.empty()) throw std::invalid_argument("cannot split an empty dataset");

    int max_label = 0;
    for (const auto& it : ds.items) {
        if (it.label < 0) throw std::invalid_argument("negative class label");
        max_label = std::max(max_label, it.label);
    }

    std::array<std::vector<std::size_t>, 3> picked;
    for (int label = 0; label <= max_label; ++label) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (ds.items[i].label == label) idx.push_back(i);
        }
        if (idx.empty()) throw std::invalid_argument("class " + std::to_string(label) + " has no items");
        if (idx.size() < 3) throw std::invalid_argument("class " + std::to_string(label) + " has fewer than 3 items");

        Rng rng(derive_seed("stratified_split", {seed, static_cast<std::uint64_t>(label)}));
        for (std::size_t i = idx.size() - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i)));
            std::swap(idx[i], idx[j]);
        }
        const auto counts = apportion(idx.size(), fractions);
        std::size_t offset = 0;
        for (int s = 0; s < 3; ++s) {
            picked[s].insert(picked[s].end(), idx.begin() + offset, idx.begin() + offset + counts[s]);
            offset += counts[s];
        }
    }

    DatasetSplits out;
    std::array<LabeledDataset*, 3> dst = {&out.train, &out.val, &out.test};
    for (int s = 0; s < 3; ++s) {
        std::sort(picked[s].begin(), picked[s].end());
        dst[s]->class_names = ds.class_names;
        for (std::size_t i : picked[s]) dst[s]->items.push_back(ds.items[i]);
    }
    return out;
}

LabeledDataset load_dataset(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root)) throw ImageError("dataset root is not a directory: " + root.string());

    std::vector<fs::path> class_dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory()) class_dirs.push_back(entry.path());
    }
    std::sort(class_dirs.begin(), class_dirs.end());
    if (class_dirs.empty()) throw ImageError("dataset root has no class directories: " + root.string());

    LabeledDataset ds;
    for (std::size_t label = 0; label < class_dirs.size(); ++label) {
        ds.class_names.push_back(class_dirs[label].filename().string());
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(class_dirs[label])) {
            if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) ds.items.push_back({load_image(f), static_cast<int>(label)});
    }
    return ds;
}

}  // namespace sharpxr
