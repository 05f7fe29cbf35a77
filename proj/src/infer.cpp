#include "covct/infer.hpp"

#include <cmath>
#include <thread>

namespace covct {

namespace {

void convolve_channel_range(const Tensor& input, const Tensor& weights,
                            const std::vector<double>& bias, int stride, int padding,
                            int groups, Tensor& out, int oc_begin, int oc_end) {
    const int in_c = input.shape[0], in_h = input.shape[1], in_w = input.shape[2];
    const int k = weights.shape[2];
    const int out_h = out.shape[1], out_w = out.shape[2];
    const int out_c = out.shape[0];
    const int group_in = in_c / groups;
    const int group_out = out_c / groups;
    for (int oc = oc_begin; oc < oc_end; ++oc) {
        const int g = oc / group_out;
        for (int oy = 0; oy < out_h; ++oy) {
            for (int ox = 0; ox < out_w; ++ox) {
                double acc = bias.empty() ? 0.0 : bias[oc];
                for (int ic = 0; ic < group_in; ++ic) {
                    const int src_c = g * group_in + ic;
                    for (int ky = 0; ky < k; ++ky) {
                        const int iy = oy * stride - padding + ky;
                        if (iy < 0 || iy >= in_h) continue;
                        for (int kx = 0; kx < k; ++kx) {
                            const int ix = ox * stride - padding + kx;
                            if (ix < 0 || ix >= in_w) continue;
                            acc += input.at(src_c, iy, ix) *
                                   weights.data[((static_cast<std::size_t>(oc) * group_in + ic) * k + ky) * k + kx];
                        }
                    }
                }
                out.at(oc, oy, ox) = acc;
            }
        }
    }
}

} // namespace

Tensor convolve(const Tensor& input, const Tensor& weights, const std::vector<double>& bias,
                int stride, int padding, int groups, int threads) {
    if (input.shape.size() != 3 || weights.shape.size() != 4)
        throw ShapeMismatch("convolve expects CHW input and OIKK weights");
    const int in_c = input.shape[0];
    const int out_c = weights.shape[0];
    if (in_c % groups != 0 || out_c % groups != 0)
        throw ShapeMismatch("channel counts must be divisible by groups");
    if (weights.shape[1] != in_c / groups)
        throw ShapeMismatch("weight input channels do not match input/groups");
    if (!bias.empty() && static_cast<int>(bias.size()) != out_c)
        throw ShapeMismatch("bias length must equal output channels");
    const int k = weights.shape[2];
    const int out_h = (input.shape[1] + 2 * padding - k) / stride + 1;
    const int out_w = (input.shape[2] + 2 * padding - k) / stride + 1;
    if (out_h < 1 || out_w < 1) throw ShapeMismatch("kernel larger than padded input");

    Tensor out({out_c, out_h, out_w});
    const int n = std::max(1, std::min(threads, out_c));
    if (n == 1) {
        convolve_channel_range(input, weights, bias, stride, padding, groups, out, 0, out_c);
        return out;
    }
    // every output element is computed independently, so any channel split
    // yields bit-identical results
    std::vector<std::thread> pool;
    const int per = (out_c + n - 1) / n;
    for (int i = 0; i < n; ++i) {
        int lo = i * per, hi = std::min(out_c, lo + per);
        if (lo >= hi) break;
        pool.emplace_back(convolve_channel_range, std::cref(input), std::cref(weights),
                          std::cref(bias), stride, padding, groups, std::ref(out), lo, hi);
    }
    for (auto& t : pool) t.join();
    return out;
}

Tensor apply_activation(const Tensor& t, Activation act) {
    if (act == Activation::Identity) return t;
    Tensor out = t;
    for (double& v : out.data) {
        if (act == Activation::Relu) v = v > 0 ? v : 0.0;
        else v = v / (1.0 + std::exp(-v)); // swish
    }
    return out;
}

std::vector<double> global_avg_pool(const Tensor& t) {
    if (t.shape.size() != 3) throw ShapeMismatch("global_avg_pool expects CHW");
    const int c = t.shape[0];
    const std::size_t hw = static_cast<std::size_t>(t.shape[1]) * t.shape[2];
    if (hw == 0) throw ShapeMismatch("empty spatial dims");
    std::vector<double> out(c);
    for (int ch = 0; ch < c; ++ch) {
        double sum = 0;
        for (std::size_t i = 0; i < hw; ++i) sum += t.data[ch * hw + i];
        out[ch] = sum / static_cast<double>(hw);
    }
    return out;
}

std::array<double, 2> dense_softmax(const std::vector<double>& v, const Tensor& W,
                                    const std::vector<double>& b) {
    if (W.shape.size() != 2 || W.shape[0] != 2 ||
        W.shape[1] != static_cast<int>(v.size()) || b.size() != 2)
        throw ShapeMismatch("dense_softmax expects a 2xN weight matrix");
    std::array<double, 2> logits{b[0], b[1]};
    for (std::size_t i = 0; i < v.size(); ++i) {
        logits[0] += W.data[i] * v[i];
        logits[1] += W.data[v.size() + i] * v[i];
    }
    double mx = std::max(logits[0], logits[1]);
    double e0 = std::exp(logits[0] - mx), e1 = std::exp(logits[1] - mx);
    return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

Tensor mbconv_block(const Tensor& input, const MBConvWeights& w, Activation act, int threads) {
    Tensor x = convolve(input, w.expand_w, w.expand_b, 1, 0, 1, threads);
    x = apply_activation(x, act);
    x = convolve(x, w.dw_w, w.dw_b, 1, 1, x.shape[0], threads);
    x = apply_activation(x, act);
    x = convolve(x, w.project_w, w.project_b, 1, 0, 1, threads);
    if (x.shape == input.shape)
        for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] += input.data[i];
    return x;
}

namespace {

const Tensor& named(const ModelBundle& model, const std::string& name) {
    auto it = model.tensors.find(name);
    if (it == model.tensors.end()) throw CorruptModel("missing tensor " + name);
    return it->second;
}

std::vector<double> named_vec(const ModelBundle& model, const std::string& name) {
    return named(model, name).data;
}

} // namespace

ActivationOutput forward(const ModelBundle& model, const Tensor& input,
                         const ForwardOptions& opts) {
    if (input.shape.size() != 3 || input.shape[0] != 1 || input.shape[1] != model.input_h ||
        input.shape[2] != model.input_w)
        throw ShapeMismatch("input dims do not match the model");
    ActivationOutput out;
    Tensor x = input;
    std::vector<double> pooled;
    bool have_probs = false;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const LayerSpec& l = model.layers[i];
        switch (l.kind) {
        case LayerKind::Conv:
        case LayerKind::DepthwiseConv: {
            int groups = l.kind == LayerKind::DepthwiseConv ? l.in_channels : l.groups;
            x = convolve(x, named(model, l.weight_names.at(0)),
                         named_vec(model, l.weight_names.at(1)), l.stride, l.padding, groups,
                         opts.threads);
            x = apply_activation(x, l.act);
            break;
        }
        case LayerKind::MBConv: {
            MBConvWeights w{named(model, l.weight_names.at(0)), named_vec(model, l.weight_names.at(1)),
                            named(model, l.weight_names.at(2)), named_vec(model, l.weight_names.at(3)),
                            named(model, l.weight_names.at(4)), named_vec(model, l.weight_names.at(5))};
            x = mbconv_block(x, w, l.act, opts.threads);
            break;
        }
        case LayerKind::GlobalAvgPool:
            pooled = global_avg_pool(x);
            break;
        case LayerKind::Dropout:
            break; // identity at inference
        case LayerKind::DenseSoftmax:
            out.probs = dense_softmax(pooled, named(model, l.weight_names.at(0)),
                                      named_vec(model, l.weight_names.at(1)));
            have_probs = true;
            break;
        }
        if (static_cast<int>(i) == model.last_conv_index) out.last_conv = x;
    }
    if (!have_probs) throw CorruptModel("manifest has no softmax head");
    return out;
}

Tensor raster_to_input(const ModelBundle& model, const Raster& img) {
    if (img.format != PixelFormat::Gray8)
        throw ShapeMismatch("forward expects a Gray8 image");
    if (img.width != model.input_w || img.height != model.input_h)
        throw ShapeMismatch("image dims do not match the model input");
    Tensor t({1, model.input_h, model.input_w});
    for (std::size_t i = 0; i < img.samples.size(); ++i) t.data[i] = img.samples[i] / 255.0;
    return t;
}

ActivationOutput forward(const ModelBundle& model, const Raster& img, const ForwardOptions& opts) {
    return forward(model, raster_to_input(model, img), opts);
}

CompoundScaleResult compound_scale(const CompoundScaleSpec& spec) {
    CompoundScaleResult r{};
    r.depth_mult = std::pow(spec.a, spec.x);
    r.width_mult = std::pow(spec.b, spec.x);
    r.res_mult = std::pow(spec.c, spec.x);
    double base = spec.a * spec.b * spec.b * spec.c * spec.c;
    r.flops_factor = std::pow(base, spec.x);
    r.near_double = base >= 1.9 && base <= 2.1;
    return r;
}

} // namespace covct
