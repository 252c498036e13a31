#ifndef PINSITE_MODEL_HPP
#define PINSITE_MODEL_HPP

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "pinsite/blocks.hpp"

namespace pinsite {

enum class PinLabel : int { group_a = 0, group_b = 1 };

inline const char* label_name(PinLabel l) {
    return l == PinLabel::group_a ? "GroupA" : "GroupB";
}

// ---------------------------------------------------------------------------
// Declarative architecture description.

struct ModelConfig {
    struct Stem {
        int out_channels, kernel, stride;
    };
    struct Stage {
        int ir_out_channels;
        int ir_stride;
        int errc_channels;
        int cbam_reduction;
    };

    int input_size = 224; // square, 3 channels
    std::array<Stem, 2> stem{{{32, 3, 2}, {48, 3, 2}}};
    std::array<Stage, 3> stages{{{64, 2, 64, 16}, {96, 2, 96, 16}, {128, 2, 128, 16}}};
    int hidden_units = 256;
    double dropout1 = 0.2;
    double dropout2 = 0.2;
    int num_classes = 2;
    bool use_errc = true; // false: ablation, ERRC slot holds a stride-1 inverted residual
    std::uint64_t seed = 42;

    void validate() const {
        if (input_size < 8) throw ConfigError("input_size too small");
        if (num_classes != 2) throw ConfigError("num_classes must be 2");
        if (hidden_units < 1) throw ConfigError("hidden_units must be positive");
        if (dropout1 < 0 || dropout1 >= 1 || dropout2 < 0 || dropout2 >= 1)
            throw ConfigError("dropout rates must be in [0,1)");
        for (const auto& st : stages) {
            if (st.errc_channels % 4 != 0)
                throw ConfigError("errc_channels must be divisible by 4");
            if (st.errc_channels != st.ir_out_channels)
                throw ConfigError("errc_channels must equal ir_out_channels per stage");
            if (st.cbam_reduction <= 0 || st.ir_out_channels % st.cbam_reduction != 0)
                throw ConfigError("stage channels must be divisible by cbam_reduction");
            if (st.ir_stride != 1 && st.ir_stride != 2)
                throw ConfigError("ir_stride must be 1 or 2");
        }
    }

    std::string to_kv() const {
        std::ostringstream os;
        os << "input_size=" << input_size << "\n";
        for (int i = 0; i < 2; ++i)
            os << "stem" << i + 1 << "=" << stem[i].out_channels << "," << stem[i].kernel << ","
               << stem[i].stride << "\n";
        for (int i = 0; i < 3; ++i)
            os << "stage" << i + 1 << "=" << stages[i].ir_out_channels << ","
               << stages[i].ir_stride << "," << stages[i].errc_channels << ","
               << stages[i].cbam_reduction << "\n";
        os << "hidden_units=" << hidden_units << "\n";
        os << "dropout1=" << dropout1 << "\n";
        os << "dropout2=" << dropout2 << "\n";
        os << "num_classes=" << num_classes << "\n";
        os << "use_errc=" << (use_errc ? 1 : 0) << "\n";
        os << "seed=" << seed << "\n";
        return os.str();
    }

    static ModelConfig from_kv(const std::string& text) {
        ModelConfig cfg;
        std::istringstream is(text);
        std::string line;
        auto split3 = [](const std::string& s, int out[4], int n) {
            std::istringstream ls(s);
            std::string tok;
            for (int i = 0; i < n; ++i) {
                if (!std::getline(ls, tok, ',')) throw FormatError("bad config tuple: " + s);
                out[i] = std::stoi(tok);
            }
        };
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            auto eq = line.find('=');
            if (eq == std::string::npos) throw FormatError("bad config line: " + line);
            std::string key = line.substr(0, eq), val = line.substr(eq + 1);
            int t[4];
            if (key == "input_size") cfg.input_size = std::stoi(val);
            else if (key == "stem1" || key == "stem2") {
                split3(val, t, 3);
                cfg.stem[key == "stem1" ? 0 : 1] = {t[0], t[1], t[2]};
            } else if (key == "stage1" || key == "stage2" || key == "stage3") {
                split3(val, t, 4);
                cfg.stages[key[5] - '1'] = {t[0], t[1], t[2], t[3]};
            } else if (key == "hidden_units") cfg.hidden_units = std::stoi(val);
            else if (key == "dropout1") cfg.dropout1 = std::stod(val);
            else if (key == "dropout2") cfg.dropout2 = std::stod(val);
            else if (key == "num_classes") cfg.num_classes = std::stoi(val);
            else if (key == "use_errc") cfg.use_errc = std::stoi(val) != 0;
            else if (key == "seed") cfg.seed = std::stoull(val);
            else throw FormatError("unknown config key: " + key);
        }
        return cfg;
    }
};

struct Prediction {
    double p_group_a = 0;
    double p_group_b = 0;
    PinLabel label = PinLabel::group_a;
    double threshold = 0.5;
};

// ---------------------------------------------------------------------------
// The assembled 5-block classifier:
//   stem1 -> stem2 -> 3 x [IR -> ERRC -> CBAM -> ReLU6] -> flatten ->
//   dropout -> dense -> ReLU -> dropout -> dense -> softmax

template <typename T>
class PinSiteNet {
public:
    explicit PinSiteNet(const ModelConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        Rng rng(cfg_.seed);
        int ch = 3;
        int extent = cfg_.input_size;
        for (int i = 0; i < 2; ++i) {
            const auto& s = cfg_.stem[i];
            layers_.push_back(std::make_unique<ConvBnRelu<T>>("stem" + std::to_string(i + 1), ch,
                                                              s.out_channels, s.kernel, s.stride,
                                                              rng));
            Conv2dSpec probe{ch, s.out_channels, s.kernel, s.stride, s.kernel / 2, 1};
            extent = probe.out_extent(extent);
            ch = s.out_channels;
        }
        for (int i = 0; i < 3; ++i) {
            const auto& st = cfg_.stages[i];
            const std::string prefix = "stage" + std::to_string(i + 1);
            layers_.push_back(std::make_unique<InvertedResidualBlock<T>>(
                prefix + ".ir", ch, st.ir_out_channels, st.ir_stride, rng));
            if (st.ir_stride == 2) extent = (extent + 2 - 3) / 2 + 1;
            ch = st.ir_out_channels;
            if (cfg_.use_errc) {
                layers_.push_back(
                    std::make_unique<ErrcBlock<T>>(prefix + ".errc", ch, st.errc_channels, rng));
            } else {
                layers_.push_back(std::make_unique<InvertedResidualBlock<T>>(prefix + ".ir2", ch,
                                                                             st.errc_channels, 1,
                                                                             rng));
            }
            feature_layer_ = layers_.back()->name();
            layers_.push_back(
                std::make_unique<CbamBlock<T>>(prefix + ".cbam", ch, st.cbam_reduction, rng));
            layers_.push_back(
                std::make_unique<Activation<T>>(prefix + ".relu6", ActKind::relu6));
        }
        flat_features_ = ch * extent * extent;
        layers_.push_back(std::make_unique<Flatten<T>>("head.flatten"));
        layers_.push_back(
            std::make_unique<Dropout<T>>("head.dropout1", cfg_.dropout1, &dropout_rng_));
        layers_.push_back(
            std::make_unique<Dense<T>>("head.fc1", flat_features_, cfg_.hidden_units, rng));
        layers_.push_back(std::make_unique<Activation<T>>("head.relu", ActKind::relu));
        embed_index_ = static_cast<int>(layers_.size()) - 1;
        layers_.push_back(
            std::make_unique<Dropout<T>>("head.dropout2", cfg_.dropout2, &dropout_rng_));
        layers_.push_back(std::make_unique<Dense<T>>("head.fc2", cfg_.hidden_units,
                                                     cfg_.num_classes, rng));
        logits_index_ = static_cast<int>(layers_.size()) - 1;
        layers_.push_back(std::make_unique<Activation<T>>("head.softmax", ActKind::softmax));
    }

    const ModelConfig& config() const { return cfg_; }
    Mode mode() const { return mode_; }
    void set_mode(Mode m) { mode_ = m; }
    void reseed_dropout(std::uint64_t seed) { dropout_rng_ = Rng(seed); }
    const std::string& default_cam_layer() const { return feature_layer_; }
    int embedding_width() const { return cfg_.hidden_units; }

    int layer_index(const std::string& name) const {
        for (std::size_t i = 0; i < layers_.size(); ++i)
            if (layers_[i]->name() == name) return static_cast<int>(i);
        throw ConfigError("unknown layer: " + name);
    }

    /// Forward pass in the net's current mode. When `trace` is given, the
    /// output of every layer is recorded (index-aligned with the layer list).
    Tensor<T> forward(const Tensor<T>& x, std::vector<Tensor<T>>* trace = nullptr) {
        Tensor<T> h = x;
        if (trace) trace->clear();
        for (auto& layer : layers_) {
            h = layer->forward(h, mode_);
            if (trace) trace->push_back(h);
        }
        return h;
    }

    /// Backward from the gradient on the softmax output; returns the gradient
    /// w.r.t. the network input. Parameter grads accumulate.
    Tensor<T> backward(const Tensor<T>& g_probs) {
        return backward_from(static_cast<int>(layers_.size()), g_probs, nullptr);
    }

    /// Backward from the gradient on the pre-softmax logits (Grad-CAM and
    /// guided backprop paths). `grad_trace`, when given, records the gradient
    /// w.r.t. each layer's output.
    Tensor<T> backward_from_logits(const Tensor<T>& g_logits,
                                   std::vector<Tensor<T>>* grad_trace = nullptr) {
        return backward_from(logits_index_ + 1, g_logits, grad_trace);
    }

    void collect_params(std::vector<Parameter<T>*>& out) {
        for (auto& l : layers_) l->collect_params(out);
    }

    void collect_state(std::vector<std::pair<std::string, Tensor<T>*>>& out) {
        for (auto& l : layers_) l->collect_state(out);
    }

    void zero_grads() {
        std::vector<Parameter<T>*> ps;
        collect_params(ps);
        for (auto* p : ps) p->zero_grad();
    }

    ParamCount count_params() {
        std::vector<Parameter<T>*> ps;
        collect_params(ps);
        ParamCount pc;
        for (auto* p : ps) {
            pc.per_name.emplace_back(p->name, static_cast<std::int64_t>(p->value.size()));
            pc.total += static_cast<std::int64_t>(p->value.size());
        }
        return pc;
    }

    Layer<T>& layer(int i) { return *layers_[i]; }
    int num_layers() const { return static_cast<int>(layers_.size()); }
    int embed_layer_index() const { return embed_index_; }
    int logits_layer_index() const { return logits_index_; }

private:
    Tensor<T> backward_from(int end_exclusive, const Tensor<T>& g,
                            std::vector<Tensor<T>>* grad_trace) {
        if (grad_trace) grad_trace->assign(layers_.size(), Tensor<T>());
        Tensor<T> gh = g;
        for (int i = end_exclusive - 1; i >= 0; --i) {
            gh = layers_[i]->backward(gh);
            // gradient w.r.t. output of layer i-1 == input gradient of layer i
            if (grad_trace && i > 0) (*grad_trace)[i - 1] = gh;
        }
        return gh;
    }

    ModelConfig cfg_;
    Rng dropout_rng_{0};
    std::vector<std::unique_ptr<Layer<T>>> layers_;
    Mode mode_ = Mode::train;
    std::string feature_layer_;
    int flat_features_ = 0;
    int embed_index_ = -1;
    int logits_index_ = -1;
};

// ---------------------------------------------------------------------------
// Inference helpers.

template <typename T>
std::vector<Prediction> predict(PinSiteNet<T>& net, const Tensor<T>& batch,
                                double threshold = 0.5) {
    if (net.mode() != Mode::infer) throw ConfigError("predict requires an infer-mode net");
    Tensor<T> probs = net.forward(batch);
    std::vector<Prediction> out;
    for (int i = 0; i < probs.dims[0]; ++i) {
        Prediction p;
        p.p_group_a = static_cast<double>(probs.v[static_cast<std::size_t>(i) * 2]);
        p.p_group_b = static_cast<double>(probs.v[static_cast<std::size_t>(i) * 2 + 1]);
        p.threshold = threshold;
        p.label = p.p_group_b >= threshold ? PinLabel::group_b : PinLabel::group_a;
        out.push_back(p);
    }
    return out;
}

/// Activations after the hidden dense layer's ReLU, before the second dropout.
template <typename T>
Tensor<T> extract_embedding(PinSiteNet<T>& net, const Tensor<T>& batch) {
    if (net.mode() != Mode::infer) throw ConfigError("embedding extraction requires infer mode");
    std::vector<Tensor<T>> trace;
    net.forward(batch, &trace);
    return trace[net.embed_layer_index()];
}

// ---------------------------------------------------------------------------
// Checkpoint format: magic "PSW1" | version u32 | config-length u32 | config
// key=value text | tensor records {name-len u16, name, rank u8, dims u32 x
// rank, values f32} | CRC32 of everything after the magic. Little-endian.

namespace detail {

inline void put_u16(std::string& s, std::uint16_t v) {
    s.push_back(static_cast<char>(v & 0xff));
    s.push_back(static_cast<char>((v >> 8) & 0xff));
}
inline void put_u32(std::string& s, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_f32(std::string& s, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(s, bits);
}

struct ByteReader {
    const std::string& buf;
    std::size_t pos = 0;
    explicit ByteReader(const std::string& b) : buf(b) {}
    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw FormatError("checkpoint truncated");
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint8_t>(buf[pos]) |
                          (static_cast<std::uint16_t>(static_cast<std::uint8_t>(buf[pos + 1]))
                           << 8);
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    float f32() {
        std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

} // namespace detail

inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void save_checkpoint(PinSiteNet<T>& net, const std::string& path) {
    std::string body;
    detail::put_u32(body, kCheckpointVersion);
    const std::string cfg = net.config().to_kv();
    detail::put_u32(body, static_cast<std::uint32_t>(cfg.size()));
    body += cfg;
    std::vector<std::pair<std::string, Tensor<T>*>> state;
    net.collect_state(state);
    for (auto& [name, tensor] : state) {
        detail::put_u16(body, static_cast<std::uint16_t>(name.size()));
        body += name;
        body.push_back(static_cast<char>(tensor->rank()));
        for (int d : tensor->dims) detail::put_u32(body, static_cast<std::uint32_t>(d));
        for (const T& x : tensor->v) detail::put_f32(body, static_cast<float>(x));
    }
    std::uint32_t crc = static_cast<std::uint32_t>(
        crc32(0, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size())));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    out.write("PSW1", 4);
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    detail::put_u32(body = std::string(), crc);
    out.write(body.data(), 4);
    if (!out) throw IoError("checkpoint write failed: " + path);
}

template <typename T>
std::unique_ptr<PinSiteNet<T>> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (raw.size() < 12) throw FormatError("checkpoint truncated");
    if (raw.compare(0, 4, "PSW1") != 0) throw FormatError("bad checkpoint magic");
    const std::string body = raw.substr(4, raw.size() - 8);
    detail::ByteReader tail(raw);
    tail.pos = raw.size() - 4;
    std::uint32_t stored_crc = tail.u32();
    std::uint32_t crc = static_cast<std::uint32_t>(
        crc32(0, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size())));
    if (crc != stored_crc) throw FormatError("checkpoint CRC mismatch");
    detail::ByteReader r(body);
    std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    std::uint32_t cfg_len = r.u32();
    ModelConfig cfg = ModelConfig::from_kv(r.bytes(cfg_len));
    auto net = std::make_unique<PinSiteNet<T>>(cfg);
    std::vector<std::pair<std::string, Tensor<T>*>> state;
    net->collect_state(state);
    std::map<std::string, Tensor<T>*> by_name(state.begin(), state.end());
    std::size_t restored = 0;
    while (r.pos < body.size()) {
        std::uint16_t name_len = r.u16();
        std::string name = r.bytes(name_len);
        r.need(1);
        int rank = static_cast<std::uint8_t>(body[r.pos++]);
        if (rank < 1 || rank > 4) throw FormatError("bad tensor rank in checkpoint");
        std::vector<int> dims(rank);
        for (int i = 0; i < rank; ++i) dims[i] = static_cast<int>(r.u32());
        auto it = by_name.find(name);
        if (it == by_name.end()) throw FormatError("checkpoint tensor unknown to model: " + name);
        if (it->second->dims != dims)
            throw FormatError("checkpoint tensor shape mismatch: " + name);
        for (T& x : it->second->v) x = static_cast<T>(r.f32());
        ++restored;
    }
    if (restored != state.size()) throw FormatError("checkpoint missing tensors");
    net->set_mode(Mode::infer);
    return net;
}

} // namespace pinsite

#endif
