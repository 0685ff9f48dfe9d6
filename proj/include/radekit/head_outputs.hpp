#pragma once

#include "radekit/radar_tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace radekit {

// Order of the regression channels.
enum ParamChannel : std::size_t {
    kDx = 0, kDy, kDz, kLogL, kLogW, kLogH, kSin, kCos,
    kParamChannels
};

// Per-class confidence map (channel 0 is background) and the 8-channel box
// parameter map, both over the padded range-azimuth grid, [channel][row][col].
struct HeadOutputs {
    std::uint32_t n_cls = 0;
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<double> conf;
    std::vector<double> params;

    HeadOutputs() = default;
    HeadOutputs(std::uint32_t classes, std::uint32_t r, std::uint32_t c)
        : n_cls(classes), rows(r), cols(c),
          conf(std::size_t{classes} * r * c, 0.0), params(kParamChannels * r * c, 0.0)
    {
    }

    std::size_t plane() const { return std::size_t{rows} * cols; }
    double& conf_at(std::size_t c, std::size_t r, std::size_t a) { return conf[(c * rows + r) * cols + a]; }
    double conf_at(std::size_t c, std::size_t r, std::size_t a) const { return conf[(c * rows + r) * cols + a]; }
    double& param_at(std::size_t k, std::size_t r, std::size_t a) { return params[(k * rows + r) * cols + a]; }
    double param_at(std::size_t k, std::size_t r, std::size_t a) const { return params[(k * rows + r) * cols + a]; }

    void validate() const;
    bool operator==(const HeadOutputs&) const = default;
};

// Stored in the portable tensor container as a rank-3 f64 array of
// (n_cls + 8) x rows x cols: confidence channels first, then parameters.
void save_head_outputs(const std::filesystem::path& path, const HeadOutputs& outputs, const SensorGeometry& geometry);
HeadOutputs load_head_outputs(const std::filesystem::path& path, SensorGeometry* geometry = nullptr);

}  // namespace radekit
