#include "covct/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include <json.hpp>

namespace covct {

using nlohmann::json;

std::string to_string(LayerKind k) {
    switch (k) {
    case LayerKind::Conv: return "conv";
    case LayerKind::DepthwiseConv: return "depthwise_conv";
    case LayerKind::MBConv: return "mbconv";
    case LayerKind::GlobalAvgPool: return "global_avg_pool";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::DenseSoftmax: return "dense_softmax";
    }
    return "conv";
}

std::string to_string(Activation a) {
    switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Swish: return "swish";
    }
    return "identity";
}

LayerKind layer_kind_from_string(const std::string& s) {
    if (s == "conv") return LayerKind::Conv;
    if (s == "depthwise_conv") return LayerKind::DepthwiseConv;
    if (s == "mbconv") return LayerKind::MBConv;
    if (s == "global_avg_pool") return LayerKind::GlobalAvgPool;
    if (s == "dropout") return LayerKind::Dropout;
    if (s == "dense_softmax") return LayerKind::DenseSoftmax;
    throw CorruptModel("unknown layer kind " + s);
}

Activation activation_from_string(const std::string& s) {
    if (s == "identity") return Activation::Identity;
    if (s == "relu") return Activation::Relu;
    if (s == "swish") return Activation::Swish;
    throw CorruptModel("unknown activation " + s);
}

namespace {

constexpr char kMagic[4] = {'C', 'V', 'C', 'T'};
constexpr std::uint32_t kFormatVersion = 1;

Tensor random_tensor(std::vector<int> shape, std::mt19937& rng, double fan_in) {
    Tensor t(std::move(shape));
    std::normal_distribution<float> dist(0.0f, static_cast<float>(std::sqrt(2.0 / fan_in)));
    for (double& v : t.data) v = static_cast<double>(dist(rng));
    return t;
}

} // namespace

ModelBundle build_micronet(int num_maps, std::uint32_t seed, int input_hw) {
    if (num_maps < 1) throw ShapeMismatch("num_maps must be at least 1");
    ModelBundle m;
    m.input_h = m.input_w = input_hw;
    m.dropout_rate = 0.3;
    std::mt19937 rng(seed);

    const int stem = 8;
    auto add = [&](const std::string& name, Tensor t) {
        m.tensors.emplace(name, std::move(t));
    };

    LayerSpec l0;
    l0.kind = LayerKind::Conv;
    l0.in_channels = 1;
    l0.out_channels = stem;
    l0.kernel = 3;
    l0.stride = 2;
    l0.padding = 1;
    l0.act = Activation::Relu;
    l0.weight_names = {"l0.w", "l0.b"};
    add("l0.w", random_tensor({stem, 1, 3, 3}, rng, 9));
    add("l0.b", random_tensor({stem}, rng, stem));
    m.layers.push_back(l0);

    for (int b = 1; b <= 2; ++b) {
        LayerSpec l;
        l.kind = LayerKind::MBConv;
        l.in_channels = l.out_channels = stem;
        l.expand = 2;
        l.act = Activation::Swish;
        std::string p = "l" + std::to_string(b);
        l.weight_names = {p + ".expand.w", p + ".expand.b", p + ".dw.w",
                          p + ".dw.b", p + ".project.w", p + ".project.b"};
        int mid = stem * l.expand;
        add(l.weight_names[0], random_tensor({mid, stem, 1, 1}, rng, stem));
        add(l.weight_names[1], random_tensor({mid}, rng, mid));
        add(l.weight_names[2], random_tensor({mid, 1, 3, 3}, rng, 9));
        add(l.weight_names[3], random_tensor({mid}, rng, mid));
        add(l.weight_names[4], random_tensor({stem, mid, 1, 1}, rng, mid));
        add(l.weight_names[5], random_tensor({stem}, rng, stem));
        m.layers.push_back(l);
    }

    LayerSpec l3;
    l3.kind = LayerKind::Conv;
    l3.in_channels = stem;
    l3.out_channels = num_maps;
    l3.kernel = 1;
    l3.act = Activation::Relu;
    l3.weight_names = {"l3.w", "l3.b"};
    add("l3.w", random_tensor({num_maps, stem, 1, 1}, rng, stem));
    add("l3.b", random_tensor({num_maps}, rng, num_maps));
    m.layers.push_back(l3);
    m.last_conv_index = 3;

    LayerSpec gap;
    gap.kind = LayerKind::GlobalAvgPool;
    m.layers.push_back(gap);

    LayerSpec drop;
    drop.kind = LayerKind::Dropout;
    drop.rate = 0.3;
    m.layers.push_back(drop);

    LayerSpec head;
    head.kind = LayerKind::DenseSoftmax;
    head.in_channels = num_maps;
    head.out_channels = 2;
    head.weight_names = {"head.w", "head.b"};
    add("head.w", random_tensor({2, num_maps}, rng, num_maps));
    add("head.b", random_tensor({2}, rng, 2));
    m.layers.push_back(head);
    return m;
}

namespace {

json manifest_json(const ModelBundle& m) {
    json layers = json::array();
    for (const LayerSpec& l : m.layers) {
        json jl;
        jl["kind"] = to_string(l.kind);
        jl["in"] = l.in_channels;
        jl["out"] = l.out_channels;
        jl["kernel"] = l.kernel;
        jl["stride"] = l.stride;
        jl["pad"] = l.padding;
        jl["groups"] = l.groups;
        jl["expand"] = l.expand;
        jl["rate"] = l.rate;
        jl["act"] = to_string(l.act);
        json tensors = json::array();
        for (const std::string& name : l.weight_names) {
            auto it = m.tensors.find(name);
            if (it == m.tensors.end()) throw CorruptModel("manifest references missing tensor " + name);
            tensors.push_back({{"name", name}, {"shape", it->second.shape}});
        }
        jl["tensors"] = tensors;
        layers.push_back(jl);
    }
    json j;
    j["format"] = "covct-model";
    j["input_dims"] = {m.input_h, m.input_w, 1};
    j["num_classes"] = m.num_classes;
    j["last_conv_index"] = m.last_conv_index;
    j["dropout"] = m.dropout_rate;
    j["layers"] = layers;
    return j;
}

void push32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

std::uint32_t pull32(const std::vector<std::uint8_t>& in, std::size_t& pos) {
    if (pos + 4 > in.size()) throw CorruptModel("truncated model stream");
    std::uint32_t v = static_cast<std::uint32_t>(in[pos]) |
                      (static_cast<std::uint32_t>(in[pos + 1]) << 8) |
                      (static_cast<std::uint32_t>(in[pos + 2]) << 16) |
                      (static_cast<std::uint32_t>(in[pos + 3]) << 24);
    pos += 4;
    return v;
}

} // namespace

std::vector<std::uint8_t> serialize_model(const ModelBundle& bundle) {
    std::string manifest = manifest_json(bundle).dump();
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    push32(out, kFormatVersion);
    push32(out, static_cast<std::uint32_t>(manifest.size()));
    out.insert(out.end(), manifest.begin(), manifest.end());
    for (const LayerSpec& l : bundle.layers)
        for (const std::string& name : l.weight_names) {
            const Tensor& t = bundle.tensors.at(name);
            for (double d : t.data) {
                float f = static_cast<float>(d);
                std::uint32_t bits;
                std::memcpy(&bits, &f, 4);
                push32(out, bits);
            }
        }
    return out;
}

ModelBundle deserialize_model(const std::vector<std::uint8_t>& bytes) {
    std::size_t pos = 0;
    if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw CorruptModel("bad magic");
    pos = 4;
    std::uint32_t version = pull32(bytes, pos);
    if (version != kFormatVersion) throw CorruptModel("unsupported format version");
    std::uint32_t mlen = pull32(bytes, pos);
    if (pos + mlen > bytes.size()) throw CorruptModel("truncated manifest");
    std::string manifest(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                         bytes.begin() + static_cast<std::ptrdiff_t>(pos + mlen));
    pos += mlen;

    json j;
    try {
        j = json::parse(manifest);
    } catch (const json::exception&) {
        throw CorruptModel("manifest is not valid JSON");
    }
    ModelBundle m;
    try {
        auto dims = j.at("input_dims");
        m.input_h = dims.at(0);
        m.input_w = dims.at(1);
        m.num_classes = j.at("num_classes");
        m.last_conv_index = j.at("last_conv_index");
        m.dropout_rate = j.at("dropout");
        for (const json& jl : j.at("layers")) {
            LayerSpec l;
            l.kind = layer_kind_from_string(jl.at("kind"));
            l.in_channels = jl.at("in");
            l.out_channels = jl.at("out");
            l.kernel = jl.at("kernel");
            l.stride = jl.at("stride");
            l.padding = jl.at("pad");
            l.groups = jl.at("groups");
            l.expand = jl.at("expand");
            l.rate = jl.at("rate");
            l.act = activation_from_string(jl.at("act"));
            for (const json& jt : jl.at("tensors")) {
                std::string name = jt.at("name");
                std::vector<int> shape = jt.at("shape");
                l.weight_names.push_back(name);
                std::size_t n = 1;
                for (int d : shape) {
                    if (d < 1) throw CorruptModel("bad tensor shape");
                    n *= static_cast<std::size_t>(d);
                }
                Tensor t(shape);
                for (std::size_t i = 0; i < n; ++i) {
                    std::uint32_t bits = pull32(bytes, pos);
                    float f;
                    std::memcpy(&f, &bits, 4);
                    t.data[i] = static_cast<double>(f);
                }
                m.tensors.emplace(std::move(name), std::move(t));
            }
            m.layers.push_back(std::move(l));
        }
    } catch (const json::exception& e) {
        throw CorruptModel(std::string("bad manifest: ") + e.what());
    }
    if (m.num_classes != 2) throw CorruptModel("model must have two classes");
    if (pos != bytes.size()) throw CorruptModel("trailing bytes after tensor blobs");
    return m;
}

void save_model(const std::string& path, const ModelBundle& bundle) {
    std::vector<std::uint8_t> bytes = serialize_model(bundle);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ModelBundle load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return deserialize_model(bytes);
}

} // namespace covct
