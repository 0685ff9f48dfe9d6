#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace radekit::nn {

// Dense channels x height x width activation map.
struct FeatureMap {
    std::uint32_t channels = 0;
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::vector<float> data;

    FeatureMap() = default;
    FeatureMap(std::uint32_t c, std::uint32_t h, std::uint32_t w, float fill = 0.0f)
        : channels(c), height(h), width(w), data(std::size_t{c} * h * w, fill)
    {
    }

    std::size_t plane() const { return std::size_t{height} * width; }
    float& at(std::size_t c, std::size_t y, std::size_t x) { return data[(c * height + y) * width + x]; }
    float at(std::size_t c, std::size_t y, std::size_t x) const { return data[(c * height + y) * width + x]; }
    float* channel(std::size_t c) { return data.data() + c * plane(); }
    const float* channel(std::size_t c) const { return data.data() + c * plane(); }

    bool same_shape(const FeatureMap& o) const
    {
        return channels == o.channels && height == o.height && width == o.width;
    }
};

}  // namespace radekit::nn
