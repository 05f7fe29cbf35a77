#pragma once

#include <array>

#include "covct/model.hpp"
#include "covct/raster.hpp"

namespace covct {

struct ActivationOutput {
    std::array<double, 2> probs{};
    Tensor last_conv;
};

struct ForwardOptions {
    int threads = 6; // performance knob only; results are thread-count invariant
};

/// Cross-correlation with zero padding. groups == in_channels gives a
/// depthwise convolution.
Tensor convolve(const Tensor& input, const Tensor& weights, const std::vector<double>& bias,
                int stride, int padding, int groups, int threads = 1);

Tensor apply_activation(const Tensor& t, Activation act);

std::vector<double> global_avg_pool(const Tensor& t);

std::array<double, 2> dense_softmax(const std::vector<double>& v, const Tensor& W,
                                    const std::vector<double>& b);

struct MBConvWeights {
    Tensor expand_w;
    std::vector<double> expand_b;
    Tensor dw_w;
    std::vector<double> dw_b;
    Tensor project_w;
    std::vector<double> project_b;
};

/// 1x1 expand -> act -> 3x3 depthwise -> act -> 1x1 project, residual add
/// when shapes match.
Tensor mbconv_block(const Tensor& input, const MBConvWeights& w, Activation act,
                    int threads = 1);

/// Forward pass on a [0,1]-scaled 1xHxW tensor.
ActivationOutput forward(const ModelBundle& model, const Tensor& input,
                         const ForwardOptions& opts = {});

/// Forward pass on an 8-bit grayscale image; pixels are divided by 255.
ActivationOutput forward(const ModelBundle& model, const Raster& img,
                         const ForwardOptions& opts = {});

Tensor raster_to_input(const ModelBundle& model, const Raster& img);

struct CompoundScaleSpec {
    double a = 1.0; // depth base
    double b = 1.0; // width base
    double c = 1.0; // resolution base
    double x = 0.0; // scaling exponent
};

struct CompoundScaleResult {
    double depth_mult;
    double width_mult;
    double res_mult;
    double flops_factor;
    bool near_double; // a*b^2*c^2 within [1.9, 2.1]
};

CompoundScaleResult compound_scale(const CompoundScaleSpec& spec);

} // namespace covct
