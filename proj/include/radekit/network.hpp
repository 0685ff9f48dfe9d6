#pragma once

#include "radekit/feature_map.hpp"
#include "radekit/head_outputs.hpp"
#include "radekit/layers.hpp"
#include "radekit/radar_tensor.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace radekit::nn {

struct NetworkConfig {
    std::uint32_t n_de = 101;
    std::uint32_t n_d = 64;  // leading doppler block inside n_de; only the input stem uses it
    std::uint32_t n_r = 256;
    std::uint32_t n_a_pad = 112;
    std::uint32_t n_cls = 2;  // includes background at channel 0
    bool use_cbam = true;
    bool use_dilated_neck = true;
    bool use_expanded_heads = true;
    bool use_input_stem = false;
    bool use_feature_expansion = false;
    std::uint32_t groupnorm_groups = 32;
    std::uint32_t cbam_reduction = 16;
    std::uint64_t seed = 0;

    static constexpr float kClassBiasInit = -2.19f;

    static NetworkConfig for_geometry(const SensorGeometry& geometry, std::uint32_t n_cls);

    // 128, or 256 with feature expansion.
    std::uint32_t feature_dim() const { return use_feature_expansion ? 256u : 128u; }
    // Channel count of encoder stage s in 1..4.
    std::uint32_t stage_channels(int stage) const { return n_de << (stage - 1); }

    void validate() const;

    // Architecture-defining fields only; the seed is excluded so trained weights
    // are not tied to the initializer.
    std::string canonical_text() const;
    std::uint64_t fingerprint() const;
};

std::uint64_t fnv1a64(std::string_view text);

struct Blob {
    std::string path;
    std::vector<std::uint32_t> dims;
    std::vector<float> values;

    bool operator==(const Blob&) const = default;
};

struct Checkpoint {
    static constexpr std::string_view kMagic = "RADENETW";
    static constexpr std::uint16_t kVersion = 1;

    std::uint64_t fingerprint = 0;
    std::vector<Blob> blobs;

    bool operator==(const Checkpoint&) const = default;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

class Network {
public:
    // Seeded random initialization.
    explicit Network(const NetworkConfig& config);
    // Loads weights; rejects a fingerprint mismatch and missing, extra or misshaped blobs.
    Network(const NetworkConfig& config, const Checkpoint& checkpoint);

    Network(const Network&) = delete;
    Network& operator=(const Network&) = delete;

    const NetworkConfig& config() const { return config_; }

    // Normalizes by the global maximum and applies the input stem when enabled.
    FeatureMap prepare_input(const RaProjection& projection) const;
    FeatureMap prepare_input(const FeatureMap& projection) const;

    std::array<FeatureMap, 4> encoder_forward(const FeatureMap& input) const;
    // Skip path of stage s in 1..3: CBAM when enabled, identity otherwise.
    FeatureMap skip_forward(int stage, const FeatureMap& encoded) const;
    FeatureMap decoder_forward(const std::array<FeatureMap, 4>& encoded) const;
    FeatureMap neck_forward(const FeatureMap& features) const;
    HeadOutputs heads_forward(const FeatureMap& features) const;

    FeatureMap backbone_forward(const RaProjection& projection) const;
    HeadOutputs forward(const RaProjection& projection) const;

    Checkpoint checkpoint() const;
    std::size_t parameter_count() const;
    std::size_t head_parameter_count() const;

    // Layer access for tests and tools.
    Cbam& cbam(int stage) { return skips_[stage - 1]; }
    const Cbam& cbam(int stage) const { return skips_[stage - 1]; }
    void for_each_param(const ParamVisitor& visitor);

private:
    struct ConvNorm {
        Conv2d conv;
        GroupNorm norm;
        FeatureMap forward(const FeatureMap& in) const;
    };
    struct ResidualBlock {
        Conv2d dilated;
        Conv2d conv;
    };

    void build();
    void initialize();
    void visit_heads(const ParamVisitor& visitor);

    NetworkConfig config_;
    Conv2d stem_rad_, stem_rae_;
    std::array<ConvNorm, 3> encoder_;        // stages 2..4
    std::array<Cbam, 3> skips_;              // stages 1..3
    std::array<TransposedConv2x2, 3> up_;    // producing stages 1..3
    std::array<ConvNorm, 3> decoder_;        // stages 1..3
    std::array<ResidualBlock, 3> neck_;      // dilation 1, 2, 3
    std::vector<Conv2d> cls_head_;
    std::vector<Conv2d> reg_head_;
};

}  // namespace radekit::nn
