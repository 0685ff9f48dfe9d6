#pragma once

#include "radekit/radar_tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace radekit {

// Portable container shared by radar cubes, projections and head outputs:
//   "RADETNSR" | u16 version | u16 rank | u32 dims[rank] | u8 element width |
//   9 x f64 geometry (n_r, n_a, n_d, n_e, range_max, azimuth_fov, elevation_fov, doppler_max, z0) |
//   rank 3 only: u32 original n_a, u32 pad columns | row-major payload.
// All fields little-endian.
struct TensorFile {
    static constexpr std::string_view kMagic = "RADETNSR";
    static constexpr std::uint16_t kVersion = 1;

    std::vector<std::uint32_t> dims;
    std::uint8_t element_width = 4;  // 4: f32 payload, 8: f64 payload
    SensorGeometry geometry;
    std::optional<PadRecord> pad;
    std::vector<float> f32;
    std::vector<double> f64;

    std::size_t element_count() const;
};

std::string encode_tensor_file(const TensorFile& file);
TensorFile decode_tensor_file(std::string_view bytes);

void save_tensor(const std::filesystem::path& path, const RadeTensor& tensor);
RadeTensor load_tensor(const std::filesystem::path& path);

void save_projection(const std::filesystem::path& path, const RaProjection& projection);
RaProjection load_projection(const std::filesystem::path& path);

}  // namespace radekit
