#pragma once

#include "radekit/evaluation.hpp"
#include "radekit/losses.hpp"
#include "radekit/network.hpp"
#include "radekit/radar_tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace radekit {

struct SynthConfig {
    double noise_floor = 0.01;
    std::uint64_t seed = 1;
    std::array<double, 4> width_bins{1.0, 1.0, 1.0, 1.0};  // range, azimuth, doppler, elevation
};

struct GradcheckConfig {
    std::uint64_t seed = 7;
    std::uint32_t instances = 100;
    double step = 1e-4;
    double tolerance = 1e-3;
};

// Effective settings of one run. The network's input dimensions are derived
// from the sensor geometry and the loss matching threshold follows tau_cls.
struct RunConfig {
    SensorGeometry sensor;
    nn::NetworkConfig network;
    double tau_cls = 0.3;
    double nms_iou = 0.3;
    eval::EvalConfig eval;
    loss::LossConfig loss;
    SynthConfig synth;
    GradcheckConfig gradcheck;
    std::uint32_t jobs = 1;

    // Re-derives dependent fields, then checks every module invariant.
    void finalize();
    nn::NetworkConfig network_for(const SensorGeometry& geometry) const;
};

// "[section]" headers and "key = value" lines; '#' starts a comment. Values
// are applied on top of base. Unknown or repeated keys are rejected.
RunConfig parse_config(std::string_view text, const std::string& source, RunConfig base = {});

// "section.key=value".
void apply_override(RunConfig& config, std::string_view assignment);

// Every key with its effective value; parsing the dump reproduces the config.
std::string dump_config(const RunConfig& config);

std::vector<std::string> config_keys();

// Defaults, then the config file (explicit path, else RADEKIT_CONFIG when set),
// then overrides in order; the result is finalized.
RunConfig load_run_config(const std::optional<std::filesystem::path>& path, const std::vector<std::string>& overrides);

}  // namespace radekit
