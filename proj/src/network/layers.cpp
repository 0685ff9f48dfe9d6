#include "radekit/layers.hpp"

#include "radekit/error.hpp"
#include "radekit/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace radekit::nn {

void silu_inplace(FeatureMap& m)
{
    for (float& v : m.data) {
        v = v / (1.0f + std::exp(-v));
    }
}

void sigmoid_inplace(FeatureMap& m)
{
    for (float& v : m.data) {
        v = 1.0f / (1.0f + std::exp(-v));
    }
}

float gate(double logit)
{
    constexpr float lo = std::numeric_limits<float>::min();
    constexpr float hi = 1.0f - 0x1.0p-24f;
    const float s = static_cast<float>(1.0 / (1.0 + std::exp(-logit)));
    return std::clamp(s, lo, hi);
}

FeatureMap max_pool2x2(const FeatureMap& m)
{
    require(m.height % 2 == 0 && m.width % 2 == 0, "max_pool2x2: spatial dims must be even");
    FeatureMap out(m.channels, m.height / 2, m.width / 2);
    for (std::uint32_t c = 0; c < m.channels; ++c) {
        for (std::uint32_t y = 0; y < out.height; ++y) {
            for (std::uint32_t x = 0; x < out.width; ++x) {
                const float a = m.at(c, 2 * y, 2 * x);
                const float b = m.at(c, 2 * y, 2 * x + 1);
                const float d = m.at(c, 2 * y + 1, 2 * x);
                const float e = m.at(c, 2 * y + 1, 2 * x + 1);
                out.at(c, y, x) = std::max(std::max(a, b), std::max(d, e));
            }
        }
    }
    return out;
}

FeatureMap concat_channels(const FeatureMap& a, const FeatureMap& b)
{
    if (a.height != b.height || a.width != b.width) {
        fail(ErrorKind::mismatch, "concat: spatial shapes differ");
    }
    FeatureMap out(a.channels + b.channels, a.height, a.width);
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(a.data.size()));
    return out;
}

namespace {

void fill_uniform(std::vector<float>& v, Rng& rng, double bound)
{
    for (float& x : v) {
        x = static_cast<float>(rng.uniform(-bound, bound));
    }
}

}  // namespace

// ---------------------------------------------------------------------------

Conv2d::Conv2d(std::uint32_t in, std::uint32_t out, std::uint32_t kernel, std::uint32_t dilation)
    : in_(in), out_(out), kernel_(kernel), dilation_(dilation),
      weight_(std::size_t{out} * in * kernel * kernel, 0.0f), bias_(out, 0.0f)
{
    require(in >= 1 && out >= 1, "conv: channel counts must be >= 1");
    require(kernel % 2 == 1 && dilation >= 1, "conv: kernel must be odd and dilation >= 1");
}

void Conv2d::init(Rng& rng, float bias_value)
{
    fill_uniform(weight_, rng, std::sqrt(6.0 / (double(in_) * kernel_ * kernel_)));
    std::fill(bias_.begin(), bias_.end(), bias_value);
}

FeatureMap Conv2d::forward(const FeatureMap& input) const
{
    if (input.channels != in_) {
        fail(ErrorKind::mismatch, "conv: expected " + std::to_string(in_) + " input channels, got " +
                                      std::to_string(input.channels));
    }
    const std::uint32_t pad = dilation_ * (kernel_ - 1) / 2;
    FeatureMap out(out_, input.height, input.width);

    simd::ConvPlan plan;
    plan.in_channels = in_;
    plan.weight = weight_.data();
    plan.bias = bias_.data();
    plan.out_channels = out_;
    plan.kernel = kernel_;
    plan.dilation = dilation_;

    if (pad == 0) {
        plan.input = input.data.data();
        plan.padded_h = input.height;
        plan.padded_w = input.width;
        plan.output = out.data.data();
        simd::active_kernels().conv2d(plan);
        return out;
    }

    const std::size_t ph = input.height + 2 * pad;
    const std::size_t pw = input.width + 2 * pad;
    std::vector<float> padded(std::size_t{in_} * ph * pw, 0.0f);
    for (std::uint32_t c = 0; c < in_; ++c) {
        for (std::uint32_t y = 0; y < input.height; ++y) {
            const float* src = input.channel(c) + std::size_t{y} * input.width;
            std::copy(src, src + input.width, padded.data() + (c * ph + y + pad) * pw + pad);
        }
    }
    std::vector<float> scratch(std::size_t{out_} * input.height * pw);
    plan.input = padded.data();
    plan.padded_h = ph;
    plan.padded_w = pw;
    plan.output = scratch.data();
    simd::active_kernels().conv2d(plan);

    for (std::uint32_t c = 0; c < out_; ++c) {
        for (std::uint32_t y = 0; y < input.height; ++y) {
            const float* src = scratch.data() + (std::size_t{c} * input.height + y) * pw;
            std::copy(src, src + input.width, out.channel(c) + std::size_t{y} * input.width);
        }
    }
    return out;
}

void Conv2d::visit(const std::string& prefix, const ParamVisitor& visitor)
{
    visitor({prefix + ".weight", {out_, in_, kernel_, kernel_}, &weight_});
    visitor({prefix + ".bias", {out_}, &bias_});
}

// ---------------------------------------------------------------------------

TransposedConv2x2::TransposedConv2x2(std::uint32_t in, std::uint32_t out)
    : in_(in), out_(out), weight_(std::size_t{in} * out * 4, 0.0f), bias_(out, 0.0f)
{
    require(in >= 1 && out >= 1, "transposed conv: channel counts must be >= 1");
}

void TransposedConv2x2::init(Rng& rng)
{
    fill_uniform(weight_, rng, std::sqrt(6.0 / (double(in_) * 4.0)));
    std::fill(bias_.begin(), bias_.end(), 0.0f);
}

FeatureMap TransposedConv2x2::forward(const FeatureMap& input) const
{
    if (input.channels != in_) {
        fail(ErrorKind::mismatch, "transposed conv: expected " + std::to_string(in_) + " input channels");
    }
    FeatureMap out(out_, input.height * 2, input.width * 2);
    std::vector<float> tap_weight(std::size_t{out_} * in_);
    std::vector<float> tap_out(std::size_t{out_} * input.plane());

    // Each of the four kernel taps is a 1x1 convolution scattered onto a stride-2 lattice.
    for (std::uint32_t ky = 0; ky < 2; ++ky) {
        for (std::uint32_t kx = 0; kx < 2; ++kx) {
            for (std::uint32_t oc = 0; oc < out_; ++oc) {
                for (std::uint32_t ic = 0; ic < in_; ++ic) {
                    tap_weight[std::size_t{oc} * in_ + ic] = weight_[((std::size_t{ic} * out_ + oc) * 2 + ky) * 2 + kx];
                }
            }
            simd::ConvPlan plan;
            plan.input = input.data.data();
            plan.in_channels = in_;
            plan.padded_h = input.height;
            plan.padded_w = input.width;
            plan.weight = tap_weight.data();
            plan.bias = bias_.data();
            plan.out_channels = out_;
            plan.kernel = 1;
            plan.dilation = 1;
            plan.output = tap_out.data();
            simd::active_kernels().conv2d(plan);

            for (std::uint32_t oc = 0; oc < out_; ++oc) {
                const float* src = tap_out.data() + std::size_t{oc} * input.plane();
                for (std::uint32_t y = 0; y < input.height; ++y) {
                    for (std::uint32_t x = 0; x < input.width; ++x) {
                        out.at(oc, 2 * y + ky, 2 * x + kx) = src[std::size_t{y} * input.width + x];
                    }
                }
            }
        }
    }
    return out;
}

void TransposedConv2x2::visit(const std::string& prefix, const ParamVisitor& visitor)
{
    visitor({prefix + ".weight", {in_, out_, 2, 2}, &weight_});
    visitor({prefix + ".bias", {out_}, &bias_});
}

// ---------------------------------------------------------------------------

std::uint32_t effective_groups(std::uint32_t channels, std::uint32_t requested)
{
    require(channels >= 1 && requested >= 1, "group norm: channels and groups must be >= 1");
    for (std::uint32_t g = std::min(channels, requested); g > 1; --g) {
        if (channels % g == 0) {
            return g;
        }
    }
    return 1;
}

GroupNorm::GroupNorm(std::uint32_t channels, std::uint32_t requested_groups)
    : channels_(channels), groups_(effective_groups(channels, requested_groups)),
      gamma_(channels, 1.0f), beta_(channels, 0.0f)
{
}

void GroupNorm::normalize_inplace(FeatureMap& m) const
{
    if (m.channels != channels_) {
        fail(ErrorKind::mismatch, "group norm: channel count mismatch");
    }
    const std::uint32_t per_group = channels_ / groups_;
    const std::size_t span = std::size_t{per_group} * m.plane();
    for (std::uint32_t g = 0; g < groups_; ++g) {
        float* begin = m.channel(std::size_t{g} * per_group);
        double sum = 0.0;
        for (std::size_t i = 0; i < span; ++i) {
            sum += begin[i];
        }
        const double mean = sum / static_cast<double>(span);
        double sq = 0.0;
        for (std::size_t i = 0; i < span; ++i) {
            const double d = begin[i] - mean;
            sq += d * d;
        }
        const double inv_std = 1.0 / std::sqrt(sq / static_cast<double>(span) + kEpsilon);
        for (std::size_t i = 0; i < span; ++i) {
            begin[i] = static_cast<float>((begin[i] - mean) * inv_std);
        }
    }
}

void GroupNorm::forward_inplace(FeatureMap& m) const
{
    normalize_inplace(m);
    for (std::uint32_t c = 0; c < channels_; ++c) {
        float* ch = m.channel(c);
        for (std::size_t i = 0; i < m.plane(); ++i) {
            ch[i] = ch[i] * gamma_[c] + beta_[c];
        }
    }
}

void GroupNorm::visit(const std::string& prefix, const ParamVisitor& visitor)
{
    visitor({prefix + ".gamma", {channels_}, &gamma_});
    visitor({prefix + ".beta", {channels_}, &beta_});
}

// ---------------------------------------------------------------------------

Cbam::Cbam(std::uint32_t channels, std::uint32_t reduction)
    : channels_(channels), hidden_(reduction == 0 ? 0 : channels / reduction),
      w1_(std::size_t{hidden_} * channels, 0.0f), b1_(hidden_, 0.0f),
      w2_(std::size_t{channels} * hidden_, 0.0f), b2_(channels, 0.0f),
      spatial_(2, 1, 7)
{
    require(reduction >= 1, "cbam: reduction must be >= 1");
    require(hidden_ >= 1, "cbam: channel count " + std::to_string(channels) + " is below the reduction " +
                              std::to_string(reduction));
}

void Cbam::init(Rng& rng)
{
    fill_uniform(w1_, rng, std::sqrt(6.0 / channels_));
    fill_uniform(w2_, rng, std::sqrt(6.0 / hidden_));
    std::fill(b1_.begin(), b1_.end(), 0.0f);
    std::fill(b2_.begin(), b2_.end(), 0.0f);
    spatial_.init(rng);
}

std::vector<float> Cbam::mlp(const std::vector<float>& x) const
{
    std::vector<float> h(hidden_);
    for (std::uint32_t j = 0; j < hidden_; ++j) {
        double acc = b1_[j];
        for (std::uint32_t c = 0; c < channels_; ++c) {
            acc += double(w1_[std::size_t{j} * channels_ + c]) * x[c];
        }
        h[j] = static_cast<float>(std::max(acc, 0.0));
    }
    std::vector<float> y(channels_);
    for (std::uint32_t c = 0; c < channels_; ++c) {
        double acc = b2_[c];
        for (std::uint32_t j = 0; j < hidden_; ++j) {
            acc += double(w2_[std::size_t{c} * hidden_ + j]) * h[j];
        }
        y[c] = static_cast<float>(acc);
    }
    return y;
}

FeatureMap Cbam::forward(const FeatureMap& input, Trace* trace) const
{
    if (input.channels != channels_) {
        fail(ErrorKind::mismatch, "cbam: channel count mismatch");
    }
    const std::size_t plane = input.plane();

    std::vector<float> avg(channels_), mx(channels_);
    for (std::uint32_t c = 0; c < channels_; ++c) {
        const float* ch = input.channel(c);
        double sum = 0.0;
        float m = ch[0];
        for (std::size_t i = 0; i < plane; ++i) {
            sum += ch[i];
            m = std::max(m, ch[i]);
        }
        avg[c] = static_cast<float>(sum / static_cast<double>(plane));
        mx[c] = m;
    }
    const std::vector<float> from_avg = mlp(avg);
    const std::vector<float> from_max = mlp(mx);

    FeatureMap refined = input;
    std::vector<float> channel_gate(channels_);
    for (std::uint32_t c = 0; c < channels_; ++c) {
        channel_gate[c] = gate(double(from_avg[c]) + double(from_max[c]));
        float* ch = refined.channel(c);
        for (std::size_t i = 0; i < plane; ++i) {
            ch[i] *= channel_gate[c];
        }
    }

    FeatureMap pooled(2, input.height, input.width);
    for (std::size_t i = 0; i < plane; ++i) {
        double sum = 0.0;
        float m = refined.channel(0)[i];
        for (std::uint32_t c = 0; c < channels_; ++c) {
            const float v = refined.channel(c)[i];
            sum += v;
            m = std::max(m, v);
        }
        pooled.channel(0)[i] = static_cast<float>(sum / channels_);
        pooled.channel(1)[i] = m;
    }
    FeatureMap spatial = spatial_.forward(pooled);
    for (float& v : spatial.data) {
        v = gate(v);
    }

    FeatureMap out = refined;
    for (std::uint32_t c = 0; c < channels_; ++c) {
        float* ch = out.channel(c);
        for (std::size_t i = 0; i < plane; ++i) {
            ch[i] *= spatial.data[i];
        }
    }
    if (trace != nullptr) {
        trace->channel_gate = std::move(channel_gate);
        trace->after_channel = std::move(refined);
        trace->spatial_gate = std::move(spatial);
    }
    return out;
}

void Cbam::visit(const std::string& prefix, const ParamVisitor& visitor)
{
    visitor({prefix + ".mlp1.weight", {hidden_, channels_}, &w1_});
    visitor({prefix + ".mlp1.bias", {hidden_}, &b1_});
    visitor({prefix + ".mlp2.weight", {channels_, hidden_}, &w2_});
    visitor({prefix + ".mlp2.bias", {channels_}, &b2_});
    spatial_.visit(prefix + ".spatial", visitor);
}

}  // namespace radekit::nn
