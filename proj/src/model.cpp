#include "sharpxr/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "sharpxr/layers.hpp"
#include "sharpxr/rng.hpp"

namespace sharpxr {

std::string_view variant_name(Variant v) {
    switch (v) {
        case Variant::SingleDecoder: return "single";
        case Variant::DualOnly: return "dual";
        case Variant::DualLaplacianNoFusion: return "dual-laplacian";
        case Variant::Full: return "full";
    }
    return "unknown";
}

Variant parse_variant(std::string_view name) {
    for (Variant v : kAllVariants) {
        if (variant_name(v) == name) return v;
    }
    throw std::invalid_argument("unknown variant '" + std::string(name) + "' (expected single|dual|dual-laplacian|full)");
}

std::string ModelConfig::width_scale_string() const {
    return width_divisor == 1 ? "1" : "1/" + std::to_string(width_divisor);
}

int ModelConfig::channels(int depth) const {
    const int base = (kBaseChannels + width_divisor / 2) / width_divisor;
    return base << depth;
}

void ModelConfig::validate() const {
    switch (width_divisor) {
        case 1: case 2: case 4: case 8: case 16: break;
        default: throw std::invalid_argument("width scale must be one of 1, 1/2, 1/4, 1/8, 1/16");
    }
    if (fusion_hidden < 1) throw std::invalid_argument("fusion_hidden must be positive");
}

int parse_width_divisor(std::string_view text) {
    auto fail = [&] { return std::invalid_argument("invalid width scale '" + std::string(text) + "'"); };
    int divisor = 0;
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        if (text.substr(0, slash) != "1") throw fail();
        const auto rest = text.substr(slash + 1);
        auto [p, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), divisor);
        if (ec != std::errc() || p != rest.data() + rest.size()) throw fail();
    } else {
        double value = 0.0;
        try {
            std::size_t used = 0;
            value = std::stod(std::string(text), &used);
            if (used != text.size()) throw fail();
        } catch (const std::logic_error&) {
            throw fail();
        }
        if (!(value > 0.0)) throw fail();
        divisor = static_cast<int>(std::lround(1.0 / value));
        if (std::abs(1.0 / divisor - value) > 1e-9) throw fail();
    }
    ModelConfig probe;
    probe.width_divisor = divisor;
    probe.validate();
    return divisor;
}

std::size_t ParamSpec::numel() const {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

namespace {

void add_conv(std::vector<ParamSpec>& out, const std::string& prefix, int in, int outc, int k) {
    out.push_back({prefix + ".weight", {static_cast<std::uint32_t>(outc), static_cast<std::uint32_t>(in),
                                        static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k)}});
    out.push_back({prefix + ".bias", {static_cast<std::uint32_t>(outc)}});
}

void add_up(std::vector<ParamSpec>& out, const std::string& prefix, int in, int outc) {
    out.push_back({prefix + ".weight", {static_cast<std::uint32_t>(in), static_cast<std::uint32_t>(outc), 2u, 2u}});
    out.push_back({prefix + ".bias", {static_cast<std::uint32_t>(outc)}});
}

void add_decoder(std::vector<ParamSpec>& out, const ModelConfig& cfg, const std::string& name) {
    for (int d = ModelConfig::kDepth - 1; d >= 0; --d) {
        const std::string p = name + "." + std::to_string(d);
        const int c = cfg.channels(d);
        add_up(out, p + ".up", cfg.channels(d + 1), c);
        add_conv(out, p + ".conv1", 2 * c, c, 3);
        add_conv(out, p + ".conv2", c, c, 3);
    }
    add_conv(out, name + ".out", cfg.channels(0), 1, 1);
}

}  // namespace

std::vector<ParamSpec> param_layout(const ModelConfig& cfg) {
    cfg.validate();
    std::vector<ParamSpec> out;
    int in = 1;
    for (int d = 0; d < ModelConfig::kDepth; ++d) {
        const std::string p = "encoder." + std::to_string(d);
        add_conv(out, p + ".conv1", in, cfg.channels(d), 3);
        add_conv(out, p + ".conv2", cfg.channels(d), cfg.channels(d), 3);
        in = cfg.channels(d);
    }
    add_conv(out, "bottleneck.conv1", in, cfg.channels(4), 3);
    add_conv(out, "bottleneck.conv2", cfg.channels(4), cfg.channels(4), 3);
    add_decoder(out, cfg, "decoder_denoise");
    if (cfg.has_edge_decoder()) add_decoder(out, cfg, "decoder_edge");
    if (cfg.has_fusion()) {
        add_conv(out, "fusion.conv1", 2, cfg.fusion_hidden, 3);
        add_conv(out, "fusion.conv2", cfg.fusion_hidden, 2, 3);
    }
    return out;
}

std::size_t param_count(const ModelConfig& cfg) {
    std::size_t n = 0;
    for (const auto& p : param_layout(cfg)) n += p.numel();
    return n;
}

const NamedTensor* ParamStore::find(std::string_view name) const {
    auto it = std::find_if(tensors.begin(), tensors.end(), [&](const NamedTensor& t) { return t.name == name; });
    return it == tensors.end() ? nullptr : &*it;
}

NamedTensor* ParamStore::find(std::string_view name) {
    return const_cast<NamedTensor*>(std::as_const(*this).find(name));
}

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.data.size();
    return n;
}

void ParamStore::audit() const {
    const auto layout = param_layout(config);
    if (tensors.size() != layout.size()) {
        throw std::invalid_argument("parameter store has " + std::to_string(tensors.size()) + " tensors, variant '" +
                                    std::string(variant_name(config.variant)) + "' expects " +
                                    std::to_string(layout.size()));
    }
    for (std::size_t i = 0; i < layout.size(); ++i) {
        const auto& t = tensors[i];
        if (t.name != layout[i].name) {
            throw std::invalid_argument("parameter " + std::to_string(i) + " is '" + t.name + "', expected '" +
                                        layout[i].name + "'");
        }
        if (t.shape != layout[i].shape) throw std::invalid_argument("shape mismatch for parameter '" + t.name + "'");
        if (t.data.size() != layout[i].numel()) throw std::invalid_argument("data size mismatch for '" + t.name + "'");
        for (float v : t.data) {
            if (!std::isfinite(v)) throw std::invalid_argument("non-finite value in parameter '" + t.name + "'");
        }
    }
}

namespace {

bool is_bias(const ParamSpec& p) { return p.shape.size() == 1; }

// Inputs feeding each output element.
double fan_in(const ParamSpec& p) {
    const bool transposed = p.name.ends_with(".up.weight");
    if (transposed) return static_cast<double>(p.shape[0]);  // 2x2 stride 2: one tap per input channel
    return static_cast<double>(p.shape[1]) * p.shape[2] * p.shape[3];
}

}  // namespace

ParamStore init_params(const ModelConfig& cfg, std::uint64_t seed) {
    ParamStore store;
    store.config = cfg;
    store.seed = seed;
    const auto layout = param_layout(cfg);
    for (std::size_t i = 0; i < layout.size(); ++i) {
        const auto& spec = layout[i];
        NamedTensor t{spec.name, spec.shape, std::vector<float>(spec.numel(), 0.0f)};
        if (!is_bias(spec)) {
            Rng rng(derive_seed("init", {seed, hash_string(spec.name)}));
            const double std = std::sqrt(2.0 / fan_in(spec));
            for (float& v : t.data) v = static_cast<float>(std * rng.normal());
        }
        store.tensors.push_back(std::move(t));
    }
    return store;
}

// ---------------------------------------------------------------------------
// Network

template <class T>
Network<T>::Network(const ParamStore& store) : config_(store.config), layout_(param_layout(store.config)) {
    store.audit();
    params_.reserve(store.tensors.size());
    for (const auto& t : store.tensors) params_.emplace_back(t.data.begin(), t.data.end());

    int in = 1;
    for (int d = 0; d < ModelConfig::kDepth; ++d) {
        const std::string p = "encoder." + std::to_string(d);
        encoder_[d].conv1 = conv_ref(p + ".conv1", in, config_.channels(d), 3);
        encoder_[d].conv2 = conv_ref(p + ".conv2", config_.channels(d), config_.channels(d), 3);
        in = config_.channels(d);
    }
    encoder_[4].conv1 = conv_ref("bottleneck.conv1", in, config_.channels(4), 3);
    encoder_[4].conv2 = conv_ref("bottleneck.conv2", config_.channels(4), config_.channels(4), 3);

    auto make_decoder = [&](const std::string& name) {
        DecoderRefs refs;
        for (int d = 0; d < ModelConfig::kDepth; ++d) {
            const std::string p = name + "." + std::to_string(d);
            const int c = config_.channels(d);
            refs.stages[d].up = conv_ref(p + ".up", config_.channels(d + 1), c, 2);
            refs.stages[d].conv1 = conv_ref(p + ".conv1", 2 * c, c, 3);
            refs.stages[d].conv2 = conv_ref(p + ".conv2", c, c, 3);
        }
        refs.out = conv_ref(name + ".out", config_.channels(0), 1, 1);
        return refs;
    };
    denoise_ = make_decoder("decoder_denoise");
    if (config_.has_edge_decoder()) edge_ = make_decoder("decoder_edge");
    if (config_.has_fusion()) {
        fusion1_ = conv_ref("fusion.conv1", 2, config_.fusion_hidden, 3);
        fusion2_ = conv_ref("fusion.conv2", config_.fusion_hidden, 2, 3);
    }
}

template <class T>
int Network<T>::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < layout_.size(); ++i) {
        if (layout_[i].name == name) return static_cast<int>(i);
    }
    throw std::invalid_argument("no parameter named '" + std::string(name) + "'");
}

template <class T>
typename Network<T>::ConvRef Network<T>::conv_ref(const std::string& prefix, int in, int out, int kernel) const {
    return ConvRef{index_of(prefix + ".weight"), index_of(prefix + ".bias"), in, out, kernel};
}

template <class T>
FeatureMap<T> Network<T>::conv_relu(const ConvRef& c, const FeatureMap<T>& x) const {
    auto y = layers::conv2d<T>(x, tensor(c.weight), tensor(c.bias), c.out, c.kernel, c.kernel / 2);
    layers::relu_inplace(y);
    return y;
}

template <class T>
void Network<T>::double_conv(const ConvRef& c1, const ConvRef& c2, const FeatureMap<T>& x, ConvTape& t) const {
    t.in = x;
    t.mid = conv_relu(c1, t.in);
    t.out = conv_relu(c2, t.mid);
}

template <class T>
void Network<T>::double_conv_backward(const ConvRef& c1, const ConvRef& c2, const ConvTape& t, FeatureMap<T> dout,
                                      Gradients<T>& g, FeatureMap<T>* dx) const {
    layers::relu_backward_inplace(t.out, dout);
    FeatureMap<T> dmid;
    layers::conv2d_backward<T>(t.mid, dout, tensor(c2.weight), 3, 1, g[c2.weight], g[c2.bias], &dmid);
    layers::relu_backward_inplace(t.mid, dmid);
    layers::conv2d_backward<T>(t.in, dmid, tensor(c1.weight), 3, 1, g[c1.weight], g[c1.bias], dx);
}

template <class T>
EncoderOutput<T> Network<T>::encode(const FeatureMap<T>& x, EncoderTape& t) const {
    if (x.c != 1) throw std::invalid_argument("network input must have 1 channel, got " + x.shape_string());
    if (x.h % 16 != 0 || x.w % 16 != 0) {
        throw std::invalid_argument("input height and width must be divisible by 16, got " + x.shape_string());
    }
    EncoderOutput<T> out;
    FeatureMap<T> cur = x;
    for (int d = 0; d < ModelConfig::kDepth; ++d) {
        double_conv(encoder_[d].conv1, encoder_[d].conv2, cur, t.stages[d]);
        out.skips[d] = t.stages[d].out;
        cur = layers::maxpool2x2(t.stages[d].out, t.pool_argmax[d]);
    }
    double_conv(encoder_[4].conv1, encoder_[4].conv2, cur, t.stages[4]);
    out.bottleneck = t.stages[4].out;
    return out;
}

template <class T>
FeatureMap<T> Network<T>::decode(const DecoderRefs& refs, const FeatureMap<T>& bottleneck,
                                 const std::array<FeatureMap<T>, 4>& skips, DecoderTape& t) const {
    FeatureMap<T> cur = bottleneck;
    for (int d = ModelConfig::kDepth - 1; d >= 0; --d) {
        const auto& st = refs.stages[d];
        t.up_in[d] = cur;
        auto up = layers::conv_transpose2x2<T>(cur, tensor(st.up.weight), tensor(st.up.bias), st.up.out);
        const auto& skip = skips[d];
        if (skip.n != up.n || skip.c != st.up.out || skip.h != up.h || skip.w != up.w) {
            throw std::invalid_argument("skip " + std::to_string(d) + " has shape " + skip.shape_string() +
                                        ", decoder expects " + up.shape_string());
        }
        double_conv(st.conv1, st.conv2, layers::concat_channels(skip, up), t.stages[d]);
        cur = t.stages[d].out;
    }
    t.out = layers::conv2d<T>(cur, tensor(refs.out.weight), tensor(refs.out.bias), 1, 1, 0);
    return t.out;
}

template <class T>
FusionOutput<T> Network<T>::fuse(const FeatureMap<T>& xd, const FeatureMap<T>& xe, FusionTape& t) const {
    if (!xd.same_shape(xe) || xd.c != 1) {
        throw std::invalid_argument("fusion inputs must be matching single-channel maps: " + xd.shape_string() +
                                    " vs " + xe.shape_string());
    }
    if (!config_.has_fusion()) throw std::logic_error("variant has no fusion module");
    t.cat = layers::concat_channels(xd, xe);
    t.hidden = conv_relu(fusion1_, t.cat);
    auto logits = layers::conv2d<T>(t.hidden, tensor(fusion2_.weight), tensor(fusion2_.bias), 2, 3, 1);
    t.alpha = layers::softmax2(logits);

    FusionOutput<T> out;
    out.alpha = t.alpha;
    out.xhat = FeatureMap<T>(xd.n, 1, xd.h, xd.w);
    const std::size_t plane = xd.plane();
    for (int b = 0; b < xd.n; ++b) {
        const T* a = t.alpha.sample(b);
        const T* d = xd.sample(b);
        const T* e = xe.sample(b);
        T* o = out.xhat.sample(b);
        // Same value as a1*d + a2*e, but exact for d == e and for a1 == a2.
        for (std::size_t i = 0; i < plane; ++i) {
            o[i] = T(0.5) * (d[i] + e[i]) + T(0.5) * (a[i] - a[plane + i]) * (d[i] - e[i]);
        }
    }
    return out;
}

template <class T>
EncoderOutput<T> Network<T>::encode(const FeatureMap<T>& x) const {
    EncoderTape t;
    return encode(x, t);
}

template <class T>
FeatureMap<T> Network<T>::decode(Head head, const FeatureMap<T>& bottleneck,
                                 const std::array<FeatureMap<T>, 4>& skips) const {
    if (head == Head::Edge && !edge_) throw std::logic_error("variant has no edge decoder");
    DecoderTape t;
    return decode(head == Head::Denoise ? denoise_ : *edge_, bottleneck, skips, t);
}

template <class T>
FusionOutput<T> Network<T>::fuse(const FeatureMap<T>& xd, const FeatureMap<T>& xe) const {
    FusionTape t;
    return fuse(xd, xe, t);
}

template <class T>
FeatureMap<T> Network<T>::forward(const FeatureMap<T>& x) const {
    Tape tape;
    return forward(x, tape);
}

template <class T>
FeatureMap<T> Network<T>::forward(const FeatureMap<T>& x, Tape& tape) const {
    tape.input = x;
    const auto enc = encode(x, tape.encoder);
    auto xd = decode(denoise_, enc.bottleneck, enc.skips, tape.denoise);
    if (!edge_) return xd;

    const std::array<FeatureMap<T>, 4>* edge_skips = &enc.skips;
    if (config_.enhances_skips()) {
        for (int d = 0; d < ModelConfig::kDepth; ++d) tape.enhanced_skips[d] = layers::laplacian_enhance(enc.skips[d]);
        edge_skips = &tape.enhanced_skips;
    }
    auto xe = decode(*edge_, enc.bottleneck, *edge_skips, tape.edge);
    if (config_.has_fusion()) return fuse(xd, xe, tape.fusion).xhat;

    for (std::size_t i = 0; i < xd.size(); ++i) xd.data[i] = T(0.5) * (xd.data[i] + xe.data[i]);
    return xd;
}

template <class T>
Gradients<T> Network<T>::zero_gradients() const {
    Gradients<T> g;
    g.reserve(params_.size());
    for (const auto& p : params_) g.emplace_back(p.size(), T(0));
    return g;
}

template <class T>
void Network<T>::decode_backward(const DecoderRefs& refs, const DecoderTape& t, const FeatureMap<T>& dout,
                                 Gradients<T>& g, FeatureMap<T>& dbottleneck,
                                 std::array<FeatureMap<T>, 4>& dskips) const {
    FeatureMap<T> dcur;
    layers::conv2d_backward<T>(t.stages[0].out, dout, tensor(refs.out.weight), 1, 0, g[refs.out.weight],
                               g[refs.out.bias], &dcur);
    for (int d = 0; d < ModelConfig::kDepth; ++d) {
        const auto& st = refs.stages[d];
        FeatureMap<T> dcat;
        double_conv_backward(st.conv1, st.conv2, t.stages[d], std::move(dcur), g, &dcat);
        FeatureMap<T> dup;
        layers::split_channels(dcat, st.up.out, dskips[d], dup);
        layers::conv_transpose2x2_backward<T>(t.up_in[d], dup, tensor(st.up.weight), g[st.up.weight], g[st.up.bias],
                                              &dcur);
    }
    dbottleneck = std::move(dcur);
}

template <class T>
Gradients<T> Network<T>::backward(const Tape& tape, const FeatureMap<T>& dout) const {
    Gradients<T> g = zero_gradients();
    FeatureMap<T> dxd;
    FeatureMap<T> dxe;

    if (config_.has_fusion()) {
        const auto& ft = tape.fusion;
        const FeatureMap<T>& xd = tape.denoise.out;
        const FeatureMap<T>& xe = tape.edge.out;
        dxd = FeatureMap<T>(xd.n, 1, xd.h, xd.w);
        dxe = FeatureMap<T>(xd.n, 1, xd.h, xd.w);
        FeatureMap<T> dalpha(xd.n, 2, xd.h, xd.w);
        const std::size_t plane = xd.plane();
        for (int b = 0; b < xd.n; ++b) {
            const T* a = ft.alpha.sample(b);
            const T* go = dout.sample(b);
            for (std::size_t i = 0; i < plane; ++i) {
                dxd.sample(b)[i] = go[i] * a[i];
                dxe.sample(b)[i] = go[i] * a[plane + i];
                dalpha.sample(b)[i] = go[i] * xd.sample(b)[i];
                dalpha.sample(b)[plane + i] = go[i] * xe.sample(b)[i];
            }
        }
        auto dlogits = layers::softmax2_backward(ft.alpha, dalpha);
        FeatureMap<T> dhidden;
        layers::conv2d_backward<T>(ft.hidden, dlogits, tensor(fusion2_.weight), 3, 1, g[fusion2_.weight],
                                   g[fusion2_.bias], &dhidden);
        layers::relu_backward_inplace(ft.hidden, dhidden);
        FeatureMap<T> dcat;
        layers::conv2d_backward<T>(ft.cat, dhidden, tensor(fusion1_.weight), 3, 1, g[fusion1_.weight],
                                   g[fusion1_.bias], &dcat);
        FeatureMap<T> dxd2;
        FeatureMap<T> dxe2;
        layers::split_channels(dcat, 1, dxd2, dxe2);
        for (std::size_t i = 0; i < dxd.size(); ++i) {
            dxd.data[i] += dxd2.data[i];
            dxe.data[i] += dxe2.data[i];
        }
    } else if (edge_) {
        dxd = dout;
        for (T& v : dxd.data) v *= T(0.5);
        dxe = dxd;
    } else {
        dxd = dout;
    }

    FeatureMap<T> dbottleneck;
    std::array<FeatureMap<T>, 4> dskips;
    decode_backward(denoise_, tape.denoise, dxd, g, dbottleneck, dskips);

    if (edge_) {
        FeatureMap<T> dbottleneck_e;
        std::array<FeatureMap<T>, 4> dskips_e;
        decode_backward(*edge_, tape.edge, dxe, g, dbottleneck_e, dskips_e);
        for (std::size_t i = 0; i < dbottleneck.size(); ++i) dbottleneck.data[i] += dbottleneck_e.data[i];
        for (int d = 0; d < ModelConfig::kDepth; ++d) {
            if (config_.enhances_skips()) dskips_e[d] = layers::laplacian_enhance_backward(dskips_e[d]);
            for (std::size_t i = 0; i < dskips[d].size(); ++i) dskips[d].data[i] += dskips_e[d].data[i];
        }
    }

    FeatureMap<T> dcur = std::move(dbottleneck);
    for (int d = ModelConfig::kDepth; d >= 0; --d) {
        FeatureMap<T> dout_stage = std::move(dcur);
        if (d < ModelConfig::kDepth) {
            // Stage output feeds both the pool (already folded into dout_stage) and the skip.
            for (std::size_t i = 0; i < dout_stage.size(); ++i) dout_stage.data[i] += dskips[d].data[i];
        }
        FeatureMap<T> din;
        double_conv_backward(encoder_[d].conv1, encoder_[d].conv2, tape.encoder.stages[d], std::move(dout_stage), g,
                             d > 0 ? &din : nullptr);
        if (d > 0) dcur = layers::maxpool2x2_backward(tape.encoder.stages[d - 1].out, din, tape.encoder.pool_argmax[d - 1]);
    }
    return g;
}

template <class T>
ParamStore Network<T>::to_store(int epoch, std::uint64_t seed) const {
    ParamStore s;
    s.config = config_;
    s.epoch = epoch;
    s.seed = seed;
    for (std::size_t i = 0; i < layout_.size(); ++i) {
        s.tensors.push_back({layout_[i].name, layout_[i].shape, std::vector<float>(params_[i].begin(), params_[i].end())});
    }
    return s;
}

template class Network<float>;
template class Network<double>;

FeatureMap<float> images_to_batch(std::span<const Image> images) {
    if (images.empty()) throw std::invalid_argument("empty image batch");
    const int h = images[0].height();
    const int w = images[0].width();
    FeatureMap<float> fm(static_cast<int>(images.size()), 1, h, w);
    for (std::size_t b = 0; b < images.size(); ++b) {
        if (images[b].height() != h || images[b].width() != w) throw std::invalid_argument("batch images differ in size");
        std::copy(images[b].pixels().begin(), images[b].pixels().end(), fm.sample(static_cast<int>(b)));
    }
    return fm;
}

Image map_to_image(const FeatureMap<float>& fm, int sample) {
    if (fm.c != 1) throw std::invalid_argument("expected a single-channel map");
    const float* p = fm.sample(sample);
    return Image::clamped(fm.h, fm.w, std::vector<float>(p, p + fm.plane()));
}

Image denoise_image(const Network<float>& net, const Image& img) {
    const auto out = net.forward(images_to_batch(std::span<const Image>(&img, 1)));
    return map_to_image(out, 0);
}

}  // namespace sharpxr
