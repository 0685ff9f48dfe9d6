#include "radekit/network.hpp"

#include "radekit/error.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace radekit::nn {

NetworkConfig NetworkConfig::for_geometry(const SensorGeometry& geometry, std::uint32_t n_cls)
{
    NetworkConfig cfg;
    cfg.n_de = geometry.n_de();
    cfg.n_d = geometry.n_d;
    cfg.n_r = geometry.n_r;
    cfg.n_a_pad = geometry.n_a_pad();
    cfg.n_cls = n_cls;
    return cfg;
}

void NetworkConfig::validate() const
{
    require(n_de >= 1, "network: n_de must be >= 1");
    require(n_r >= 8 && n_r % 8 == 0, "network: n_r must be a positive multiple of 8");
    require(n_a_pad >= 8 && n_a_pad % 8 == 0, "network: n_a_pad must be a positive multiple of 8");
    require(n_cls >= 2, "network: n_cls must count background plus at least one class");
    require(groupnorm_groups >= 1, "network: groupnorm_groups must be >= 1");
    require(cbam_reduction >= 1, "network: cbam_reduction must be >= 1");
    if (use_cbam) {
        require(n_de >= cbam_reduction, "network: CBAM needs at least cbam_reduction channels at stage 1");
    }
    if (use_input_stem) {
        require(n_d >= 1 && n_d < n_de, "network: input stem needs non-empty doppler and elevation blocks");
    }
}

std::string NetworkConfig::canonical_text() const
{
    std::ostringstream s;
    s << "n_de=" << n_de << ";n_d=" << n_d << ";n_r=" << n_r << ";n_a_pad=" << n_a_pad << ";n_cls=" << n_cls
      << ";feature_dim=" << feature_dim() << ";use_cbam=" << use_cbam << ";use_dilated_neck=" << use_dilated_neck
      << ";use_expanded_heads=" << use_expanded_heads << ";use_input_stem=" << use_input_stem
      << ";groupnorm_groups=" << groupnorm_groups << ";cbam_reduction=" << cbam_reduction;
    return s.str();
}

std::uint64_t fnv1a64(std::string_view text)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t NetworkConfig::fingerprint() const { return fnv1a64(canonical_text()); }

// ---------------------------------------------------------------------------

FeatureMap Network::ConvNorm::forward(const FeatureMap& in) const
{
    FeatureMap out = conv.forward(in);
    norm.forward_inplace(out);
    silu_inplace(out);
    return out;
}

Network::Network(const NetworkConfig& config)
    : config_(config)
{
    config_.validate();
    build();
    initialize();
}

Network::Network(const NetworkConfig& config, const Checkpoint& checkpoint)
    : config_(config)
{
    config_.validate();
    if (checkpoint.fingerprint != config_.fingerprint()) {
        fail(ErrorKind::mismatch, "checkpoint fingerprint does not match the network configuration");
    }
    build();

    std::map<std::string, ParamRef> expected;
    for_each_param([&](ParamRef ref) { expected.emplace(ref.path, ref); });
    std::map<std::string, bool> seen;
    for (const Blob& blob : checkpoint.blobs) {
        auto it = expected.find(blob.path);
        if (it == expected.end()) {
            fail(ErrorKind::mismatch, "checkpoint has unexpected blob " + blob.path);
        }
        if (seen[blob.path]) {
            fail(ErrorKind::mismatch, "checkpoint has duplicate blob " + blob.path);
        }
        seen[blob.path] = true;
        if (blob.dims != it->second.dims || blob.values.size() != it->second.values->size()) {
            fail(ErrorKind::mismatch, "checkpoint blob " + blob.path + " has the wrong shape");
        }
        *it->second.values = blob.values;
    }
    for (const auto& [path, ref] : expected) {
        if (!seen[path]) {
            fail(ErrorKind::mismatch, "checkpoint is missing blob " + path);
        }
    }
}

void Network::build()
{
    const NetworkConfig& c = config_;
    if (c.use_input_stem) {
        stem_rad_ = Conv2d(c.n_d, c.n_d, 3);
        stem_rae_ = Conv2d(c.n_de - c.n_d, c.n_de - c.n_d, 3);
    }
    for (int s = 2; s <= 4; ++s) {
        const std::uint32_t ch = c.stage_channels(s);
        encoder_[s - 2] = {Conv2d(c.stage_channels(s - 1), ch, 3), GroupNorm(ch, c.groupnorm_groups)};
    }
    if (c.use_cbam) {
        for (int s = 1; s <= 3; ++s) {
            skips_[s - 1] = Cbam(c.stage_channels(s), c.cbam_reduction);
        }
    }
    for (int s = 3; s >= 1; --s) {
        const std::uint32_t below = c.stage_channels(s + 1);
        const std::uint32_t skip = c.stage_channels(s);
        const std::uint32_t out = s == 1 ? c.feature_dim() : skip;
        up_[s - 1] = TransposedConv2x2(below, skip);
        decoder_[s - 1] = {Conv2d(2 * skip, out, 3), GroupNorm(out, c.groupnorm_groups)};
    }
    const std::uint32_t f = c.feature_dim();
    if (c.use_dilated_neck) {
        for (std::uint32_t k = 1; k <= 3; ++k) {
            neck_[k - 1] = {Conv2d(f, f, 3, k), Conv2d(f, f, 3, 1)};
        }
    }
    cls_head_.clear();
    reg_head_.clear();
    if (c.use_expanded_heads) {
        cls_head_ = {Conv2d(f, f, 3), Conv2d(f, f, 3), Conv2d(f, c.n_cls, 3)};
        reg_head_ = {Conv2d(f, f, 3), Conv2d(f, f, 3), Conv2d(f, kParamChannels, 3)};
    } else {
        cls_head_ = {Conv2d(f, c.n_cls, 1)};
        reg_head_ = {Conv2d(f, kParamChannels, 1)};
    }
}

void Network::initialize()
{
    Rng rng(config_.seed);
    if (config_.use_input_stem) {
        stem_rad_.init(rng);
        stem_rae_.init(rng);
    }
    for (ConvNorm& stage : encoder_) {
        stage.conv.init(rng);
    }
    if (config_.use_cbam) {
        for (Cbam& skip : skips_) {
            skip.init(rng);
        }
    }
    for (int s = 3; s >= 1; --s) {
        up_[s - 1].init(rng);
        decoder_[s - 1].conv.init(rng);
    }
    if (config_.use_dilated_neck) {
        for (ResidualBlock& block : neck_) {
            block.dilated.init(rng);
            block.conv.init(rng);
        }
    }
    for (std::size_t i = 0; i < cls_head_.size(); ++i) {
        const bool last = i + 1 == cls_head_.size();
        cls_head_[i].init(rng, last ? NetworkConfig::kClassBiasInit : 0.0f);
    }
    for (Conv2d& conv : reg_head_) {
        conv.init(rng);
    }
}

void Network::visit_heads(const ParamVisitor& visitor)
{
    for (std::size_t i = 0; i < cls_head_.size(); ++i) {
        cls_head_[i].visit("head.cls." + std::to_string(i), visitor);
    }
    for (std::size_t i = 0; i < reg_head_.size(); ++i) {
        reg_head_[i].visit("head.reg." + std::to_string(i), visitor);
    }
}

void Network::for_each_param(const ParamVisitor& visitor)
{
    if (config_.use_input_stem) {
        stem_rad_.visit("stem.rad", visitor);
        stem_rae_.visit("stem.rae", visitor);
    }
    for (int s = 2; s <= 4; ++s) {
        encoder_[s - 2].conv.visit("encoder." + std::to_string(s) + ".conv", visitor);
        encoder_[s - 2].norm.visit("encoder." + std::to_string(s) + ".norm", visitor);
    }
    if (config_.use_cbam) {
        for (int s = 1; s <= 3; ++s) {
            skips_[s - 1].visit("skip." + std::to_string(s), visitor);
        }
    }
    for (int s = 3; s >= 1; --s) {
        up_[s - 1].visit("decoder." + std::to_string(s) + ".up", visitor);
        decoder_[s - 1].conv.visit("decoder." + std::to_string(s) + ".conv", visitor);
        decoder_[s - 1].norm.visit("decoder." + std::to_string(s) + ".norm", visitor);
    }
    if (config_.use_dilated_neck) {
        for (int k = 1; k <= 3; ++k) {
            neck_[k - 1].dilated.visit("neck." + std::to_string(k) + ".dilated", visitor);
            neck_[k - 1].conv.visit("neck." + std::to_string(k) + ".conv", visitor);
        }
    }
    visit_heads(visitor);
}

Checkpoint Network::checkpoint() const
{
    Checkpoint ckpt;
    ckpt.fingerprint = config_.fingerprint();
    const_cast<Network*>(this)->for_each_param(
        [&](ParamRef ref) { ckpt.blobs.push_back({ref.path, ref.dims, *ref.values}); });
    return ckpt;
}

std::size_t Network::parameter_count() const
{
    std::size_t n = 0;
    const_cast<Network*>(this)->for_each_param([&](ParamRef ref) { n += ref.values->size(); });
    return n;
}

std::size_t Network::head_parameter_count() const
{
    std::size_t n = 0;
    const_cast<Network*>(this)->visit_heads([&](ParamRef ref) { n += ref.values->size(); });
    return n;
}

// ---------------------------------------------------------------------------

FeatureMap Network::prepare_input(const RaProjection& projection) const
{
    FeatureMap m(projection.channels(), projection.rows(), projection.cols());
    std::copy(projection.data().begin(), projection.data().end(), m.data.begin());
    return prepare_input(m);
}

FeatureMap Network::prepare_input(const FeatureMap& projection) const
{
    if (projection.channels != config_.n_de || projection.height != config_.n_r ||
        projection.width != config_.n_a_pad) {
        fail(ErrorKind::mismatch, "network input must be " + std::to_string(config_.n_de) + "x" +
                                      std::to_string(config_.n_r) + "x" + std::to_string(config_.n_a_pad));
    }
    FeatureMap m = projection;
    float peak = 0.0f;
    for (float v : m.data) {
        peak = std::max(peak, v);
    }
    if (peak > 0.0f) {
        for (float& v : m.data) {
            v /= peak;
        }
    }
    if (!config_.use_input_stem) {
        return m;
    }
    const std::size_t split = std::size_t{config_.n_d} * m.plane();
    FeatureMap rad(config_.n_d, m.height, m.width);
    FeatureMap rae(config_.n_de - config_.n_d, m.height, m.width);
    std::copy(m.data.begin(), m.data.begin() + static_cast<std::ptrdiff_t>(split), rad.data.begin());
    std::copy(m.data.begin() + static_cast<std::ptrdiff_t>(split), m.data.end(), rae.data.begin());
    rad = stem_rad_.forward(rad);
    rae = stem_rae_.forward(rae);
    silu_inplace(rad);
    silu_inplace(rae);
    return concat_channels(rad, rae);
}

std::array<FeatureMap, 4> Network::encoder_forward(const FeatureMap& input) const
{
    if (input.channels != config_.n_de || input.height % 8 != 0 || input.width % 8 != 0) {
        fail(ErrorKind::mismatch, "encoder input must have n_de channels and spatial dims divisible by 8");
    }
    std::array<FeatureMap, 4> maps;
    maps[0] = input;
    for (int s = 2; s <= 4; ++s) {
        maps[s - 1] = encoder_[s - 2].forward(max_pool2x2(maps[s - 2]));
    }
    return maps;
}

FeatureMap Network::skip_forward(int stage, const FeatureMap& encoded) const
{
    return config_.use_cbam ? skips_[stage - 1].forward(encoded) : encoded;
}

FeatureMap Network::decoder_forward(const std::array<FeatureMap, 4>& encoded) const
{
    FeatureMap dec = encoded[3];
    for (int s = 3; s >= 1; --s) {
        FeatureMap up = up_[s - 1].forward(dec);
        FeatureMap skip = skip_forward(s, encoded[s - 1]);
        if (!up.same_shape(skip)) {
            fail(ErrorKind::mismatch, "decoder stage " + std::to_string(s) + ": upsampled and skip maps differ");
        }
        dec = decoder_[s - 1].forward(concat_channels(skip, up));
    }
    return dec;
}

FeatureMap Network::neck_forward(const FeatureMap& features) const
{
    if (features.channels != config_.feature_dim()) {
        fail(ErrorKind::mismatch, "neck input must have feature_dim channels");
    }
    if (!config_.use_dilated_neck) {
        return features;
    }
    FeatureMap m = features;
    for (const ResidualBlock& block : neck_) {
        FeatureMap t = block.conv.forward(block.dilated.forward(m));
        for (std::size_t i = 0; i < m.data.size(); ++i) {
            m.data[i] += t.data[i];
        }
        silu_inplace(m);
    }
    return m;
}

HeadOutputs Network::heads_forward(const FeatureMap& features) const
{
    if (features.channels != config_.feature_dim()) {
        fail(ErrorKind::mismatch, "heads input must have feature_dim channels");
    }
    FeatureMap cls = features;
    for (const Conv2d& conv : cls_head_) {
        cls = conv.forward(cls);
        sigmoid_inplace(cls);
    }
    FeatureMap reg = features;
    for (std::size_t i = 0; i < reg_head_.size(); ++i) {
        reg = reg_head_[i].forward(reg);
        if (i + 1 < reg_head_.size()) {
            silu_inplace(reg);
        }
    }
    HeadOutputs out(config_.n_cls, features.height, features.width);
    std::copy(cls.data.begin(), cls.data.end(), out.conf.begin());
    std::copy(reg.data.begin(), reg.data.end(), out.params.begin());
    return out;
}

FeatureMap Network::backbone_forward(const RaProjection& projection) const
{
    return decoder_forward(encoder_forward(prepare_input(projection)));
}

HeadOutputs Network::forward(const RaProjection& projection) const
{
    return heads_forward(neck_forward(backbone_forward(projection)));
}

}  // namespace radekit::nn
