#pragma once

#include "radekit/feature_map.hpp"
#include "radekit/random.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace radekit::nn {

// A named, shaped view of one parameter blob owned by a layer.
struct ParamRef {
    std::string path;
    std::vector<std::uint32_t> dims;
    std::vector<float>* values;
};
using ParamVisitor = std::function<void(ParamRef)>;

void silu_inplace(FeatureMap& m);
void sigmoid_inplace(FeatureMap& m);

// Sigmoid kept strictly inside (0, 1) even where float rounding would saturate.
float gate(double logit);

FeatureMap max_pool2x2(const FeatureMap& m);
FeatureMap concat_channels(const FeatureMap& a, const FeatureMap& b);

// Square kernel, stride 1, zero padding dilation*(kernel-1)/2 so the spatial shape is kept.
class Conv2d {
public:
    Conv2d() = default;
    Conv2d(std::uint32_t in, std::uint32_t out, std::uint32_t kernel, std::uint32_t dilation = 1);

    void init(Rng& rng, float bias_value = 0.0f);
    FeatureMap forward(const FeatureMap& input) const;
    void visit(const std::string& prefix, const ParamVisitor& visitor);

    std::uint32_t in_channels() const { return in_; }
    std::uint32_t out_channels() const { return out_; }
    std::uint32_t kernel() const { return kernel_; }
    std::uint32_t dilation() const { return dilation_; }
    std::vector<float>& weight() { return weight_; }
    std::vector<float>& bias() { return bias_; }

private:
    std::uint32_t in_ = 0, out_ = 0, kernel_ = 1, dilation_ = 1;
    std::vector<float> weight_;  // [out][in][k][k]
    std::vector<float> bias_;
};

// 2x2 kernel, stride 2: doubles both spatial dims.
class TransposedConv2x2 {
public:
    TransposedConv2x2() = default;
    TransposedConv2x2(std::uint32_t in, std::uint32_t out);

    void init(Rng& rng);
    FeatureMap forward(const FeatureMap& input) const;
    void visit(const std::string& prefix, const ParamVisitor& visitor);

private:
    std::uint32_t in_ = 0, out_ = 0;
    std::vector<float> weight_;  // [in][out][2][2]
    std::vector<float> bias_;
};

// Largest divisor of channels that does not exceed requested.
std::uint32_t effective_groups(std::uint32_t channels, std::uint32_t requested);

class GroupNorm {
public:
    // Statistics are accumulated in double, so a tiny epsilon suffices to guard
    // constant groups while keeping the output invariant to rescaling a group.
    static constexpr double kEpsilon = 1e-10;

    GroupNorm() = default;
    GroupNorm(std::uint32_t channels, std::uint32_t requested_groups);

    std::uint32_t groups() const { return groups_; }
    // Normalization only: zero mean, unit variance per group.
    void normalize_inplace(FeatureMap& m) const;
    // Normalization followed by the per-channel affine transform.
    void forward_inplace(FeatureMap& m) const;
    void visit(const std::string& prefix, const ParamVisitor& visitor);

private:
    std::uint32_t channels_ = 0, groups_ = 1;
    std::vector<float> gamma_;
    std::vector<float> beta_;
};

// Channel attention followed by spatial attention; both gates multiply the map.
class Cbam {
public:
    struct Trace {
        std::vector<float> channel_gate;  // [channels]
        FeatureMap after_channel;
        FeatureMap spatial_gate;          // [1][h][w]
    };

    Cbam() = default;
    Cbam(std::uint32_t channels, std::uint32_t reduction);

    void init(Rng& rng);
    FeatureMap forward(const FeatureMap& input, Trace* trace = nullptr) const;
    void visit(const std::string& prefix, const ParamVisitor& visitor);

    std::uint32_t hidden() const { return hidden_; }

private:
    std::vector<float> mlp(const std::vector<float>& x) const;

    std::uint32_t channels_ = 0, hidden_ = 0;
    std::vector<float> w1_, b1_;  // [hidden][channels]
    std::vector<float> w2_, b2_;  // [channels][hidden]
    Conv2d spatial_;              // 2 -> 1, 7x7
};

}  // namespace radekit::nn
