#include "sharpxr/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

namespace sharpxr::layers {

namespace {

template <class T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <class T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;

// cols is (channels * k * k) x (h * w), row-major.
template <class T>
void im2col(const T* x, int channels, int h, int w, int k, int pad, T* cols) {
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    for (int c = 0; c < channels; ++c) {
        const T* plane = x + static_cast<std::size_t>(c) * hw;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                T* row = cols + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * hw;
                for (int y = 0; y < h; ++y) {
                    const int sy = y + ky - pad;
                    T* dst = row + static_cast<std::size_t>(y) * w;
                    if (sy < 0 || sy >= h) {
                        std::fill(dst, dst + w, T(0));
                        continue;
                    }
                    const T* src = plane + static_cast<std::size_t>(sy) * w;
                    const int off = kx - pad;
                    const int x_begin = std::max(0, -off);
                    const int x_end = std::min(w, w - off);
                    std::fill(dst, dst + x_begin, T(0));
                    std::copy(src + x_begin + off, src + x_end + off, dst + x_begin);
                    std::fill(dst + x_end, dst + w, T(0));
                }
            }
        }
    }
}

template <class T>
void col2im(const T* cols, int channels, int h, int w, int k, int pad, T* dx) {
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    std::fill(dx, dx + channels * hw, T(0));
    for (int c = 0; c < channels; ++c) {
        T* plane = dx + static_cast<std::size_t>(c) * hw;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const T* row = cols + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * hw;
                for (int y = 0; y < h; ++y) {
                    const int sy = y + ky - pad;
                    if (sy < 0 || sy >= h) continue;
                    const T* src = row + static_cast<std::size_t>(y) * w;
                    T* dst = plane + static_cast<std::size_t>(sy) * w;
                    const int off = kx - pad;
                    const int x_begin = std::max(0, -off);
                    const int x_end = std::min(w, w - off);
                    for (int x = x_begin; x < x_end; ++x) dst[x + off] += src[x];
                }
            }
        }
    }
}

void check(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

}  // namespace

template <class T>
FeatureMap<T> conv2d(const FeatureMap<T>& x, std::span<const T> weight, std::span<const T> bias, int out_channels,
                     int kernel, int pad) {
    const int kdim = x.c * kernel * kernel;
    check(weight.size() == static_cast<std::size_t>(out_channels) * kdim, "conv2d: weight size mismatch for input " +
                                                                              x.shape_string());
    check(bias.size() == static_cast<std::size_t>(out_channels), "conv2d: bias size mismatch");
    check(2 * pad == kernel - 1, "conv2d: only 'same' padding is supported");

    FeatureMap<T> y(x.n, out_channels, x.h, x.w);
    const Eigen::Index hw = static_cast<Eigen::Index>(x.plane());
    ConstMatMap<T> wmat(weight.data(), out_channels, kdim);
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bvec(bias.data(), out_channels);
    std::vector<T> cols;
    if (kernel != 1) cols.resize(static_cast<std::size_t>(kdim) * hw);
    for (int b = 0; b < x.n; ++b) {
        const T* src = x.sample(b);
        if (kernel != 1) {
            im2col(src, x.c, x.h, x.w, kernel, pad, cols.data());
            src = cols.data();
        }
        ConstMatMap<T> cmat(src, kdim, hw);
        MatMap<T> ymat(y.sample(b), out_channels, hw);
        ymat.noalias() = wmat * cmat;
        ymat.colwise() += bvec;
    }
    return y;
}

template <class T>
void conv2d_backward(const FeatureMap<T>& x, const FeatureMap<T>& dy, std::span<const T> weight, int kernel, int pad,
                     std::span<T> dweight, std::span<T> dbias, FeatureMap<T>* dx) {
    const int kdim = x.c * kernel * kernel;
    const int cout = dy.c;
    check(dy.n == x.n && dy.h == x.h && dy.w == x.w, "conv2d_backward: gradient shape mismatch");
    check(dweight.size() == weight.size() && dbias.size() == static_cast<std::size_t>(cout),
          "conv2d_backward: gradient buffer size mismatch");

    const Eigen::Index hw = static_cast<Eigen::Index>(x.plane());
    ConstMatMap<T> wmat(weight.data(), cout, kdim);
    MatMap<T> dwmat(dweight.data(), cout, kdim);
    if (dx) *dx = FeatureMap<T>(x.n, x.c, x.h, x.w);

    std::vector<T> cols;
    std::vector<T> dcols;
    if (kernel != 1) {
        cols.resize(static_cast<std::size_t>(kdim) * hw);
        if (dx) dcols.resize(cols.size());
    }
    for (int b = 0; b < x.n; ++b) {
        const T* src = x.sample(b);
        if (kernel != 1) {
            im2col(src, x.c, x.h, x.w, kernel, pad, cols.data());
            src = cols.data();
        }
        ConstMatMap<T> cmat(src, kdim, hw);
        ConstMatMap<T> dymat(dy.sample(b), cout, hw);
        dwmat.noalias() += dymat * cmat.transpose();
        // Plain loop: Eigen reductions peel by pointer alignment, which would
        // make the summation order allocation-dependent.
        for (int co = 0; co < cout; ++co) {
            const T* row = dy.sample(b) + static_cast<std::size_t>(co) * hw;
            T acc = T(0);
            for (Eigen::Index i = 0; i < hw; ++i) acc += row[i];
            dbias[co] += acc;
        }
        if (dx) {
            if (kernel == 1) {
                MatMap<T> dxmat(dx->sample(b), kdim, hw);
                dxmat.noalias() = wmat.transpose() * dymat;
            } else {
                MatMap<T> dcmat(dcols.data(), kdim, hw);
                dcmat.noalias() = wmat.transpose() * dymat;
                col2im(dcols.data(), x.c, x.h, x.w, kernel, pad, dx->sample(b));
            }
        }
    }
}

template <class T>
FeatureMap<T> conv_transpose2x2(const FeatureMap<T>& x, std::span<const T> weight, std::span<const T> bias,
                                int out_channels) {
    check(weight.size() == static_cast<std::size_t>(x.c) * out_channels * 4,
          "conv_transpose2x2: weight size mismatch for input " + x.shape_string());
    check(bias.size() == static_cast<std::size_t>(out_channels), "conv_transpose2x2: bias size mismatch");

    FeatureMap<T> y(x.n, out_channels, 2 * x.h, 2 * x.w);
    const Eigen::Index hw = static_cast<Eigen::Index>(x.plane());
    ConstMatMap<T> wmat(weight.data(), x.c, out_channels * 4);
    RowMatrix<T> ycol(out_channels * 4, hw);
    for (int b = 0; b < x.n; ++b) {
        ConstMatMap<T> xmat(x.sample(b), x.c, hw);
        ycol.noalias() = wmat.transpose() * xmat;
        for (int co = 0; co < out_channels; ++co) {
            for (int a = 0; a < 2; ++a) {
                for (int bb = 0; bb < 2; ++bb) {
                    const T* row = ycol.data() + (static_cast<std::size_t>(co) * 4 + a * 2 + bb) * hw;
                    for (int yy = 0; yy < x.h; ++yy) {
                        for (int xx = 0; xx < x.w; ++xx) {
                            y.at(b, co, 2 * yy + a, 2 * xx + bb) = row[yy * x.w + xx] + bias[co];
                        }
                    }
                }
            }
        }
    }
    return y;
}

template <class T>
void conv_transpose2x2_backward(const FeatureMap<T>& x, const FeatureMap<T>& dy, std::span<const T> weight,
                                std::span<T> dweight, std::span<T> dbias, FeatureMap<T>* dx) {
    const int cout = dy.c;
    check(dy.n == x.n && dy.h == 2 * x.h && dy.w == 2 * x.w, "conv_transpose2x2_backward: gradient shape mismatch");
    check(dweight.size() == weight.size() && dbias.size() == static_cast<std::size_t>(cout),
          "conv_transpose2x2_backward: gradient buffer size mismatch");

    const Eigen::Index hw = static_cast<Eigen::Index>(x.plane());
    ConstMatMap<T> wmat(weight.data(), x.c, cout * 4);
    MatMap<T> dwmat(dweight.data(), x.c, cout * 4);
    if (dx) *dx = FeatureMap<T>(x.n, x.c, x.h, x.w);
    RowMatrix<T> dycol(cout * 4, hw);
    for (int b = 0; b < x.n; ++b) {
        for (int co = 0; co < cout; ++co) {
            T bias_acc = T(0);
            for (int a = 0; a < 2; ++a) {
                for (int bb = 0; bb < 2; ++bb) {
                    T* row = dycol.data() + (static_cast<std::size_t>(co) * 4 + a * 2 + bb) * hw;
                    for (int yy = 0; yy < x.h; ++yy) {
                        for (int xx = 0; xx < x.w; ++xx) {
                            const T g = dy.at(b, co, 2 * yy + a, 2 * xx + bb);
                            row[yy * x.w + xx] = g;
                            bias_acc += g;
                        }
                    }
                }
            }
            dbias[co] += bias_acc;
        }
        ConstMatMap<T> xmat(x.sample(b), x.c, hw);
        dwmat.noalias() += xmat * dycol.transpose();
        if (dx) {
            MatMap<T> dxmat(dx->sample(b), x.c, hw);
            dxmat.noalias() = wmat * dycol;
        }
    }
}

template <class T>
void relu_inplace(FeatureMap<T>& x) {
    for (T& v : x.data) v = v > T(0) ? v : T(0);
}

template <class T>
void relu_backward_inplace(const FeatureMap<T>& y, FeatureMap<T>& dy) {
    check(y.same_shape(dy), "relu_backward: shape mismatch");
    for (std::size_t i = 0; i < dy.data.size(); ++i) {
        if (!(y.data[i] > T(0))) dy.data[i] = T(0);
    }
}

template <class T>
FeatureMap<T> maxpool2x2(const FeatureMap<T>& x, std::vector<std::uint32_t>& argmax) {
    check(x.h % 2 == 0 && x.w % 2 == 0, "maxpool2x2: odd spatial size " + x.shape_string());
    FeatureMap<T> y(x.n, x.c, x.h / 2, x.w / 2);
    argmax.resize(y.size());
    std::size_t o = 0;
    for (int b = 0; b < x.n; ++b) {
        for (int c = 0; c < x.c; ++c) {
            for (int yy = 0; yy < y.h; ++yy) {
                for (int xx = 0; xx < y.w; ++xx, ++o) {
                    std::size_t best = ((static_cast<std::size_t>(b) * x.c + c) * x.h + 2 * yy) * x.w + 2 * xx;
                    T best_v = x.data[best];
                    for (int a = 0; a < 2; ++a) {
                        for (int bb = 0; bb < 2; ++bb) {
                            const std::size_t idx =
                                ((static_cast<std::size_t>(b) * x.c + c) * x.h + 2 * yy + a) * x.w + 2 * xx + bb;
                            if (x.data[idx] > best_v) {
                                best_v = x.data[idx];
                                best = idx;
                            }
                        }
                    }
                    y.data[o] = best_v;
                    argmax[o] = static_cast<std::uint32_t>(best);
                }
            }
        }
    }
    return y;
}

template <class T>
FeatureMap<T> maxpool2x2_backward(const FeatureMap<T>& x_shape, const FeatureMap<T>& dy,
                                  const std::vector<std::uint32_t>& argmax) {
    check(argmax.size() == dy.size(), "maxpool2x2_backward: index size mismatch");
    FeatureMap<T> dx(x_shape.n, x_shape.c, x_shape.h, x_shape.w);
    for (std::size_t i = 0; i < dy.size(); ++i) dx.data[argmax[i]] += dy.data[i];
    return dx;
}

template <class T>
FeatureMap<T> concat_channels(const FeatureMap<T>& a, const FeatureMap<T>& b) {
    check(a.n == b.n && a.h == b.h && a.w == b.w,
          "concat_channels: shape mismatch " + a.shape_string() + " vs " + b.shape_string());
    FeatureMap<T> out(a.n, a.c + b.c, a.h, a.w);
    for (int s = 0; s < a.n; ++s) {
        T* dst = out.sample(s);
        dst = std::copy(a.sample(s), a.sample(s) + a.sample_stride(), dst);
        std::copy(b.sample(s), b.sample(s) + b.sample_stride(), dst);
    }
    return out;
}

template <class T>
void split_channels(const FeatureMap<T>& ab, int split, FeatureMap<T>& a, FeatureMap<T>& b) {
    check(split > 0 && split < ab.c, "split_channels: invalid split");
    a = FeatureMap<T>(ab.n, split, ab.h, ab.w);
    b = FeatureMap<T>(ab.n, ab.c - split, ab.h, ab.w);
    for (int s = 0; s < ab.n; ++s) {
        const T* src = ab.sample(s);
        std::copy(src, src + a.sample_stride(), a.sample(s));
        std::copy(src + a.sample_stride(), src + ab.sample_stride(), b.sample(s));
    }
}

// Border samples replicate the nearest edge pixel, so a spatially constant
// plane has zero response everywhere. The eight neighbours are summed as a
// balanced tree, which keeps that zero exact in floating point.
template <class T>
FeatureMap<T> laplacian(const FeatureMap<T>& f) {
    FeatureMap<T> out(f.n, f.c, f.h, f.w);
    for (int b = 0; b < f.n; ++b) {
        for (int c = 0; c < f.c; ++c) {
            for (int y = 0; y < f.h; ++y) {
                const int ym = std::max(y - 1, 0);
                const int yp = std::min(y + 1, f.h - 1);
                for (int x = 0; x < f.w; ++x) {
                    const int xm = std::max(x - 1, 0);
                    const int xp = std::min(x + 1, f.w - 1);
                    const T s = ((f.at(b, c, ym, xm) + f.at(b, c, ym, x)) + (f.at(b, c, ym, xp) + f.at(b, c, y, xm))) +
                                ((f.at(b, c, y, xp) + f.at(b, c, yp, xm)) + (f.at(b, c, yp, x) + f.at(b, c, yp, xp)));
                    out.at(b, c, y, x) = T(8) * f.at(b, c, y, x) - s;
                }
            }
        }
    }
    return out;
}

template <class T>
FeatureMap<T> laplacian_enhance(const FeatureMap<T>& f) {
    FeatureMap<T> out = laplacian(f);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = f.data[i] + out.data[i];
    return out;
}

// Transpose of laplacian_enhance: each output gradient is scattered back
// through the same clamped neighbourhood it was read from.
template <class T>
FeatureMap<T> laplacian_enhance_backward(const FeatureMap<T>& dy) {
    FeatureMap<T> dx(dy.n, dy.c, dy.h, dy.w);
    for (int b = 0; b < dy.n; ++b) {
        for (int c = 0; c < dy.c; ++c) {
            for (int y = 0; y < dy.h; ++y) {
                for (int x = 0; x < dy.w; ++x) {
                    const T g = dy.at(b, c, y, x);
                    dx.at(b, c, y, x) += T(9) * g;
                    for (int oy = -1; oy <= 1; ++oy) {
                        const int sy = std::clamp(y + oy, 0, dy.h - 1);
                        for (int ox = -1; ox <= 1; ++ox) {
                            if (oy == 0 && ox == 0) continue;
                            const int sx = std::clamp(x + ox, 0, dy.w - 1);
                            dx.at(b, c, sy, sx) -= g;
                        }
                    }
                }
            }
        }
    }
    return dx;
}

template <class T>
FeatureMap<T> softmax2(const FeatureMap<T>& logits) {
    check(logits.c == 2, "softmax2: expected 2 channels, got " + logits.shape_string());
    FeatureMap<T> alpha(logits.n, 2, logits.h, logits.w);
    const std::size_t plane = logits.plane();
    for (int b = 0; b < logits.n; ++b) {
        const T* z = logits.sample(b);
        T* a = alpha.sample(b);
        for (std::size_t i = 0; i < plane; ++i) {
            const T m = std::max(z[i], z[plane + i]);
            const T e0 = std::exp(z[i] - m);
            const T e1 = std::exp(z[plane + i] - m);
            const T s = e0 + e1;
            a[i] = e0 / s;
            a[plane + i] = e1 / s;
        }
    }
    return alpha;
}

template <class T>
FeatureMap<T> softmax2_backward(const FeatureMap<T>& alpha, const FeatureMap<T>& dalpha) {
    check(alpha.same_shape(dalpha), "softmax2_backward: shape mismatch");
    FeatureMap<T> dz(alpha.n, 2, alpha.h, alpha.w);
    const std::size_t plane = alpha.plane();
    for (int b = 0; b < alpha.n; ++b) {
        const T* a = alpha.sample(b);
        const T* da = dalpha.sample(b);
        T* out = dz.sample(b);
        for (std::size_t i = 0; i < plane; ++i) {
            const T dot = a[i] * da[i] + a[plane + i] * da[plane + i];
            out[i] = a[i] * (da[i] - dot);
            out[plane + i] = a[plane + i] * (da[plane + i] - dot);
        }
    }
    return dz;
}

#define SHARPXR_INSTANTIATE_LAYERS(T)                                                                              \
    template FeatureMap<T> conv2d<T>(const FeatureMap<T>&, std::span<const T>, std::span<const T>, int, int, int); \
    template void conv2d_backward<T>(const FeatureMap<T>&, const FeatureMap<T>&, std::span<const T>, int, int,     \
                                     std::span<T>, std::span<T>, FeatureMap<T>*);                                  \
    template FeatureMap<T> conv_transpose2x2<T>(const FeatureMap<T>&, std::span<const T>, std::span<const T>, int); \
    template void conv_transpose2x2_backward<T>(const FeatureMap<T>&, const FeatureMap<T>&, std::span<const T>,    \
                                                std::span<T>, std::span<T>, FeatureMap<T>*);                       \
    template void relu_inplace<T>(FeatureMap<T>&);                                                                 \
    template void relu_backward_inplace<T>(const FeatureMap<T>&, FeatureMap<T>&);                                  \
    template FeatureMap<T> maxpool2x2<T>(const FeatureMap<T>&, std::vector<std::uint32_t>&);                       \
    template FeatureMap<T> maxpool2x2_backward<T>(const FeatureMap<T>&, const FeatureMap<T>&,                      \
                                                  const std::vector<std::uint32_t>&);                              \
    template FeatureMap<T> concat_channels<T>(const FeatureMap<T>&, const FeatureMap<T>&);                         \
    template void split_channels<T>(const FeatureMap<T>&, int, FeatureMap<T>&, FeatureMap<T>&);                    \
    template FeatureMap<T> laplacian<T>(const FeatureMap<T>&);                                                     \
    template FeatureMap<T> laplacian_enhance<T>(const FeatureMap<T>&);                                             \
    template FeatureMap<T> laplacian_enhance_backward<T>(const FeatureMap<T>&);                                    \
    template FeatureMap<T> softmax2<T>(const FeatureMap<T>&);                                                      \
    template FeatureMap<T> softmax2_backward<T>(const FeatureMap<T>&, const FeatureMap<T>&);

SHARPXR_INSTANTIATE_LAYERS(float)
SHARPXR_INSTANTIATE_LAYERS(double)

#undef SHARPXR_INSTANTIATE_LAYERS

}  // namespace sharpxr::layers
