#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sharpxr/image.hpp"
#include "sharpxr/tensor.hpp"

namespace sharpxr {

enum class Variant {
    SingleDecoder,          // encoder + denoise decoder
    DualOnly,               // both decoders on raw skips, fixed 0.5/0.5 average
    DualLaplacianNoFusion,  // edge decoder on Laplacian-enhanced skips, fixed average
    Full,                   // enhanced skips + learnable softmax fusion
};

inline constexpr std::array<Variant, 4> kAllVariants = {Variant::SingleDecoder, Variant::DualOnly,
                                                        Variant::DualLaplacianNoFusion, Variant::Full};

/// CLI / checkpoint spelling: single, dual, dual-laplacian, full.
std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view name);

struct ModelConfig {
    static constexpr int kBaseChannels = 64;
    static constexpr int kDepth = 4;

    Variant variant = Variant::Full;
    int width_divisor = 1;  // width scale = 1 / width_divisor, divisor in {1, 2, 4, 8, 16}
    int fusion_hidden = 16;

    double width_scale() const { return 1.0 / width_divisor; }
    std::string width_scale_string() const;

    /// Channels at encoder depth d (0..3); d == 4 is the bottleneck.
    int channels(int depth) const;

    bool has_edge_decoder() const { return variant != Variant::SingleDecoder; }
    bool enhances_skips() const {
        return variant == Variant::DualLaplacianNoFusion || variant == Variant::Full;
    }
    bool has_fusion() const { return variant == Variant::Full; }

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

/// Accepts "1/4", "0.25", "1".
int parse_width_divisor(std::string_view text);

struct ParamSpec {
    std::string name;
    std::vector<std::uint32_t> shape;
    std::size_t numel() const;
};

/// Every learnable tensor of the configured network, in canonical order.
/// The Laplacian stencil is fixed and never appears here.
std::vector<ParamSpec> param_layout(const ModelConfig& cfg);
std::size_t param_count(const ModelConfig& cfg);

struct NamedTensor {
    std::string name;
    std::vector<std::uint32_t> shape;
    std::vector<float> data;

    bool operator==(const NamedTensor&) const = default;
};

/// Named float32 weights plus the metadata a checkpoint carries.
struct ParamStore {
    ModelConfig config;
    int epoch = 0;
    std::uint64_t seed = 0;
    std::vector<NamedTensor> tensors;

    const NamedTensor* find(std::string_view name) const;
    NamedTensor* find(std::string_view name);
    std::size_t scalar_count() const;

    /// Throws std::invalid_argument unless the tensors match param_layout(config)
    /// exactly (names, order, shapes) and every value is finite.
    void audit() const;

    bool operator==(const ParamStore&) const = default;
};

/// He-normal weights (std = sqrt(2 / fan_in)), zero biases. Each tensor draws
/// from its own stream derived from (seed, tensor index).
ParamStore init_params(const ModelConfig& cfg, std::uint64_t seed);

enum class Head { Denoise, Edge };

template <class T>
struct EncoderOutput {
    std::array<FeatureMap<T>, 4> skips;  // f1..f4, full resolution first
    FeatureMap<T> bottleneck;
};

template <class T>
struct FusionOutput {
    FeatureMap<T> xhat;
    FeatureMap<T> alpha;  // [B,2,H,W], alpha1 then alpha2
};

/// Parameter gradients aligned with param_layout order.
template <class T>
using Gradients = std::vector<std::vector<T>>;

template <class T>
class Network {
public:
    struct Tape;

    /// Audits `store` against its config and converts the weights to T.
    explicit Network(const ParamStore& store);

    const ModelConfig& config() const { return config_; }
    const std::vector<ParamSpec>& layout() const { return layout_; }
    std::vector<std::vector<T>>& params() { return params_; }
    const std::vector<std::vector<T>>& params() const { return params_; }
    int index_of(std::string_view name) const;

    EncoderOutput<T> encode(const FeatureMap<T>& x) const;
    FeatureMap<T> decode(Head head, const FeatureMap<T>& bottleneck, const std::array<FeatureMap<T>, 4>& skips) const;
    FusionOutput<T> fuse(const FeatureMap<T>& xd, const FeatureMap<T>& xe) const;

    /// Unclamped network output, routed per variant.
    FeatureMap<T> forward(const FeatureMap<T>& x) const;
    FeatureMap<T> forward(const FeatureMap<T>& x, Tape& tape) const;

    /// Gradients of every parameter given d(loss)/d(output) for the forward
    /// pass recorded in `tape`.
    Gradients<T> backward(const Tape& tape, const FeatureMap<T>& dout) const;

    Gradients<T> zero_gradients() const;

    /// Float32 snapshot of the current weights.
    ParamStore to_store(int epoch, std::uint64_t seed) const;

private:
    struct ConvRef {
        int weight = -1;
        int bias = -1;
        int in = 0;
        int out = 0;
        int kernel = 3;
    };
    struct EncoderStage {
        ConvRef conv1, conv2;
    };
    struct DecoderStage {
        ConvRef up, conv1, conv2;
    };
    struct DecoderRefs {
        std::array<DecoderStage, 4> stages;  // indexed by depth
        ConvRef out;
    };

    struct ConvTape {
        FeatureMap<T> in;
        FeatureMap<T> mid;
        FeatureMap<T> out;
    };
    struct EncoderTape {
        std::array<ConvTape, 5> stages;  // 4 levels + bottleneck
        std::array<std::vector<std::uint32_t>, 4> pool_argmax;
    };
    struct DecoderTape {
        std::array<FeatureMap<T>, 4> up_in;
        std::array<ConvTape, 4> stages;  // in = concatenated [skip, up]
        FeatureMap<T> out;
    };
    struct FusionTape {
        FeatureMap<T> cat;
        FeatureMap<T> hidden;
        FeatureMap<T> alpha;
    };

public:
    struct Tape {
        FeatureMap<T> input;
        EncoderTape encoder;
        std::array<FeatureMap<T>, 4> enhanced_skips;
        DecoderTape denoise;
        DecoderTape edge;
        FusionTape fusion;
    };

private:
    std::span<const T> tensor(int idx) const { return params_[static_cast<std::size_t>(idx)]; }
    ConvRef conv_ref(const std::string& prefix, int in, int out, int kernel) const;

    FeatureMap<T> conv_relu(const ConvRef& c, const FeatureMap<T>& x) const;
    void double_conv(const ConvRef& c1, const ConvRef& c2, const FeatureMap<T>& x, ConvTape& t) const;
    void double_conv_backward(const ConvRef& c1, const ConvRef& c2, const ConvTape& t, FeatureMap<T> dout,
                              Gradients<T>& g, FeatureMap<T>* dx) const;

    EncoderOutput<T> encode(const FeatureMap<T>& x, EncoderTape& t) const;
    FeatureMap<T> decode(const DecoderRefs& refs, const FeatureMap<T>& bottleneck,
                         const std::array<FeatureMap<T>, 4>& skips, DecoderTape& t) const;
    FusionOutput<T> fuse(const FeatureMap<T>& xd, const FeatureMap<T>& xe, FusionTape& t) const;

    void decode_backward(const DecoderRefs& refs, const DecoderTape& t, const FeatureMap<T>& dout, Gradients<T>& g,
                         FeatureMap<T>& dbottleneck, std::array<FeatureMap<T>, 4>& dskips) const;

    ModelConfig config_;
    std::vector<ParamSpec> layout_;
    std::vector<std::vector<T>> params_;
    std::array<EncoderStage, 5> encoder_;
    DecoderRefs denoise_;
    std::optional<DecoderRefs> edge_;
    ConvRef fusion1_, fusion2_;
};

extern template class Network<float>;
extern template class Network<double>;

FeatureMap<float> images_to_batch(std::span<const Image> images);
Image map_to_image(const FeatureMap<float>& fm, int sample);

/// Inference: forward pass, then clamp to [0, 1].
Image denoise_image(const Network<float>& net, const Image& img);

}  // namespace sharpxr
