#include "sharpxr/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

namespace sharpxr {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        need(4, "u32");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::string take(std::size_t n, const char* what) {
        need(n, what);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n, const char* what) const {
        if (bytes_.size() - pos_ < n) {
            throw CheckpointError(std::string("checkpoint truncated while reading ") + what + " at offset " +
                                  std::to_string(pos_));
        }
    }

    const std::string& bytes_;
    std::size_t pos_ = 0;
};

std::string encode_metadata(const ParamStore& s) {
    std::ostringstream m;
    m << "variant=" << variant_name(s.config.variant) << "\n"
      << "width_scale=" << s.config.width_scale_string() << "\n"
      << "fusion_hidden=" << s.config.fusion_hidden << "\n"
      << "epoch=" << s.epoch << "\n"
      << "seed=" << s.seed << "\n";
    return m.str();
}

std::map<std::string, std::string> parse_metadata(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw CheckpointError("malformed metadata line '" + line + "'");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

const std::string& require(const std::map<std::string, std::string>& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw CheckpointError("checkpoint metadata missing '" + key + "'");
    return it->second;
}

}  // namespace

std::string encode_checkpoint(const ParamStore& store) {
    std::string out(kCheckpointMagic, 4);
    put_u32(out, kCheckpointVersion);
    const std::string meta = encode_metadata(store);
    put_u32(out, static_cast<std::uint32_t>(meta.size()));
    out += meta;
    put_u32(out, static_cast<std::uint32_t>(store.tensors.size()));
    for (const auto& t : store.tensors) {
        put_u32(out, static_cast<std::uint32_t>(t.name.size()));
        out += t.name;
        put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
        for (auto d : t.shape) put_u32(out, d);
        const auto* raw = reinterpret_cast<const char*>(t.data.data());
        out.append(raw, t.data.size() * sizeof(float));
    }
    return out;
}

ParamStore decode_checkpoint(const std::string& bytes) {
    Reader r(bytes);
    if (r.take(4, "magic") != std::string(kCheckpointMagic, 4)) throw CheckpointError("bad checkpoint magic");
    const auto version = r.u32();
    if (version != kCheckpointVersion) {
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                              std::to_string(kCheckpointVersion) + ")");
    }
    const auto meta_len = r.u32();
    const auto kv = parse_metadata(r.take(meta_len, "metadata"));

    ParamStore store;
    try {
        store.config.variant = parse_variant(require(kv, "variant"));
        store.config.width_divisor = parse_width_divisor(require(kv, "width_scale"));
        if (auto it = kv.find("fusion_hidden"); it != kv.end()) store.config.fusion_hidden = std::stoi(it->second);
        store.epoch = std::stoi(require(kv, "epoch"));
        store.seed = std::stoull(require(kv, "seed"));
    } catch (const CheckpointError&) {
        throw;
    } catch (const std::exception& e) {
        throw CheckpointError(std::string("invalid checkpoint metadata: ") + e.what());
    }

    const auto count = r.u32();
    if (count > 100000) throw CheckpointError("implausible tensor count " + std::to_string(count));
    for (std::uint32_t i = 0; i < count; ++i) {
        NamedTensor t;
        t.name = r.take(r.u32(), "tensor name");
        const auto rank = r.u32();
        if (rank > 8) throw CheckpointError("implausible rank for '" + t.name + "'");
        std::size_t numel = 1;
        for (std::uint32_t k = 0; k < rank; ++k) {
            t.shape.push_back(r.u32());
            numel *= t.shape.back();
        }
        const std::string raw = r.take(numel * sizeof(float), "tensor data");
        t.data.resize(numel);
        std::memcpy(t.data.data(), raw.data(), raw.size());
        store.tensors.push_back(std::move(t));
    }
    if (!r.done()) throw CheckpointError("trailing bytes after checkpoint payload");

    try {
        store.audit();
    } catch (const std::invalid_argument& e) {
        throw CheckpointError(std::string("checkpoint audit failed: ") + e.what());
    }
    return store;
}

void save_checkpoint(const ParamStore& store, const std::filesystem::path& path) {
    store.audit();
    const std::string bytes = encode_checkpoint(store);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write checkpoint: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("write failed: " + path.string());
}

ParamStore load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint: " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

}  // namespace sharpxr
