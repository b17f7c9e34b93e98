#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sharpxr/tensor.hpp"

// Layer kernels with matching backward passes. Weight layouts follow the
// common convention: conv [out, in, k, k], transposed conv [in, out, 2, 2].
// Backward functions accumulate (+=) into weight/bias gradients and
// overwrite input gradients.
namespace sharpxr::layers {

/// Stride-1 convolution with zero padding `pad`.
template <class T>
FeatureMap<T> conv2d(const FeatureMap<T>& x, std::span<const T> weight, std::span<const T> bias, int out_channels,
                     int kernel, int pad);

template <class T>
void conv2d_backward(const FeatureMap<T>& x, const FeatureMap<T>& dy, std::span<const T> weight, int kernel, int pad,
                     std::span<T> dweight, std::span<T> dbias, FeatureMap<T>* dx);

/// 2x2 kernel, stride 2: doubles H and W.
template <class T>
FeatureMap<T> conv_transpose2x2(const FeatureMap<T>& x, std::span<const T> weight, std::span<const T> bias,
                                int out_channels);

template <class T>
void conv_transpose2x2_backward(const FeatureMap<T>& x, const FeatureMap<T>& dy, std::span<const T> weight,
                                std::span<T> dweight, std::span<T> dbias, FeatureMap<T>* dx);

template <class T>
void relu_inplace(FeatureMap<T>& x);

/// dy *= (y > 0), where y is the ReLU output.
template <class T>
void relu_backward_inplace(const FeatureMap<T>& y, FeatureMap<T>& dy);

/// 2x2 max pooling, stride 2. `argmax` receives the flat input index of each
/// selected element (first maximum in row-major window order).
template <class T>
FeatureMap<T> maxpool2x2(const FeatureMap<T>& x, std::vector<std::uint32_t>& argmax);

template <class T>
FeatureMap<T> maxpool2x2_backward(const FeatureMap<T>& x_shape, const FeatureMap<T>& dy,
                                  const std::vector<std::uint32_t>& argmax);

template <class T>
FeatureMap<T> concat_channels(const FeatureMap<T>& a, const FeatureMap<T>& b);

/// Inverse of concat_channels for gradients: first `split` channels to `a`.
template <class T>
void split_channels(const FeatureMap<T>& ab, int split, FeatureMap<T>& a, FeatureMap<T>& b);

/// Fixed 3x3 stencil [[-1,-1,-1],[-1,8,-1],[-1,-1,-1]].
inline constexpr int kLaplacianStencil[3][3] = {{-1, -1, -1}, {-1, 8, -1}, {-1, -1, -1}};

/// Depthwise Laplacian response. Out-of-range neighbours replicate the
/// nearest edge pixel, so constant planes map to exactly zero.
template <class T>
FeatureMap<T> laplacian(const FeatureMap<T>& f);

/// f + laplacian(f).
template <class T>
FeatureMap<T> laplacian_enhance(const FeatureMap<T>& f);

/// Adjoint of laplacian_enhance.
template <class T>
FeatureMap<T> laplacian_enhance_backward(const FeatureMap<T>& dy);

/// Two-channel per-pixel softmax over logits [B,2,H,W].
template <class T>
FeatureMap<T> softmax2(const FeatureMap<T>& logits);

/// Gradient of the logits given alpha = softmax2(logits) and d(alpha).
template <class T>
FeatureMap<T> softmax2_backward(const FeatureMap<T>& alpha, const FeatureMap<T>& dalpha);

}  // namespace sharpxr::layers
