#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sharpxr {

/// Dense NCHW activation tensor.
template <class T>
struct FeatureMap {
    int n = 0;
    int c = 0;
    int h = 0;
    int w = 0;
    std::vector<T> data;

    FeatureMap() = default;
    FeatureMap(int n_, int c_, int h_, int w_, T fill = T(0))
        : n(n_), c(c_), h(h_), w(w_), data(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {
        if (n_ <= 0 || c_ <= 0 || h_ <= 0 || w_ <= 0) throw std::invalid_argument("feature map dims must be positive");
    }

    std::size_t size() const { return data.size(); }
    std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
    std::size_t sample_stride() const { return static_cast<std::size_t>(c) * h * w; }

    T& at(int b, int ch, int y, int x) { return data[((static_cast<std::size_t>(b) * c + ch) * h + y) * w + x]; }
    T at(int b, int ch, int y, int x) const { return data[((static_cast<std::size_t>(b) * c + ch) * h + y) * w + x]; }

    T* sample(int b) { return data.data() + static_cast<std::size_t>(b) * sample_stride(); }
    const T* sample(int b) const { return data.data() + static_cast<std::size_t>(b) * sample_stride(); }

    bool same_shape(const FeatureMap& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
    std::string shape_string() const {
        return "[" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," + std::to_string(w) + "]";
    }

    template <class U>
    FeatureMap<U> cast() const {
        FeatureMap<U> out;
        out.n = n;
        out.c = c;
        out.h = h;
        out.w = w;
        out.data.assign(data.begin(), data.end());
        return out;
    }

    bool operator==(const FeatureMap&) const = default;
};

}  // namespace sharpxr
