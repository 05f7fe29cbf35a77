#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "covct/tensor.hpp"

namespace covct {

enum class LayerKind { Conv, DepthwiseConv, MBConv, GlobalAvgPool, Dropout, DenseSoftmax };
enum class Activation { Identity, Relu, Swish };

std::string to_string(LayerKind k);
std::string to_string(Activation a);
LayerKind layer_kind_from_string(const std::string& s);
Activation activation_from_string(const std::string& s);

struct LayerSpec {
    LayerKind kind = LayerKind::Conv;
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 1;
    int stride = 1;
    int padding = 0;
    int groups = 1;
    int expand = 1;        // MBConv expansion factor
    double rate = 0.0;     // dropout rate
    Activation act = Activation::Identity;
    std::vector<std::string> weight_names; // ordered, resolved in ModelBundle::tensors

    bool operator==(const LayerSpec&) const = default;
};

/// Serialized network: ordered manifest plus named weight blobs. The layer at
/// last_conv_index feeds the activation-map consumer.
struct ModelBundle {
    std::vector<LayerSpec> layers;
    std::map<std::string, Tensor> tensors;
    int input_h = 64;
    int input_w = 64;
    int num_classes = 2;
    int last_conv_index = 0;
    double dropout_rate = 0.3;

    bool operator==(const ModelBundle&) const = default;
};

/// Deterministic small stand-in network: stem conv (3x3, stride 2), two MBConv
/// blocks, a 1x1 conv producing `num_maps` activation maps, GAP, dropout and a
/// two-way softmax head. Weights are a pure function of the seed.
ModelBundle build_micronet(int num_maps, std::uint32_t seed, int input_hw = 64);

/// "CVCT" magic, u32 version, u32 manifest length, UTF-8 JSON manifest, then
/// float32 little-endian tensor blobs in manifest order.
std::vector<std::uint8_t> serialize_model(const ModelBundle& bundle);
ModelBundle deserialize_model(const std::vector<std::uint8_t>& bytes);

void save_model(const std::string& path, const ModelBundle& bundle);
ModelBundle load_model(const std::string& path);

} // namespace covct
