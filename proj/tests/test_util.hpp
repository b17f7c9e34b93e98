#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "sharpxr/image.hpp"

namespace sharpxr::test {

inline Image random_image(int h, int w, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    std::vector<float> px(static_cast<std::size_t>(h) * w);
    for (float& v : px) v = u(eng);
    return Image(h, w, std::move(px));
}

// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("sharpxr_" + tag + "_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace sharpxr::test
