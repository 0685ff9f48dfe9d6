#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace radekit {

// Bin layout and field of view of the 4D radar cube. Angles are in degrees,
// doppler in m/s; every axis is symmetric about zero except range.
struct SensorGeometry {
    std::uint32_t n_r = 256;
    std::uint32_t n_a = 107;
    std::uint32_t n_d = 64;
    std::uint32_t n_e = 37;
    double range_max = 118.0;
    double azimuth_fov = 107.0;
    double elevation_fov = 37.0;
    double doppler_max = 10.0;
    double z0 = 0.0;

    void validate() const;

    std::size_t element_count() const
    {
        return std::size_t{n_r} * n_a * n_d * n_e;
    }
    std::uint32_t n_de() const { return n_d + n_e; }
    // Azimuth width after zero padding to a multiple of 8.
    std::uint32_t n_a_pad() const { return (n_a + 7u) / 8u * 8u; }

    // Bin centers. Fractional indices are accepted.
    double range_at(double r) const { return (r + 0.5) * range_max / n_r; }
    double azimuth_deg_at(double a) const { return -azimuth_fov / 2.0 + (a + 0.5) * azimuth_fov / n_a; }
    double azimuth_rad_at(double a) const;
    double doppler_at(double d) const { return -doppler_max + (d + 0.5) * 2.0 * doppler_max / n_d; }
    double elevation_deg_at(double e) const { return -elevation_fov / 2.0 + (e + 0.5) * elevation_fov / n_e; }

    // Inverse of the bin-center maps.
    double range_bin(double range) const { return range * n_r / range_max - 0.5; }
    double azimuth_bin(double azimuth_deg) const { return (azimuth_deg + azimuth_fov / 2.0) * n_a / azimuth_fov - 0.5; }
    double doppler_bin(double doppler) const { return (doppler + doppler_max) * n_d / (2.0 * doppler_max) - 0.5; }
    double elevation_bin(double elevation_deg) const
    {
        return (elevation_deg + elevation_fov / 2.0) * n_e / elevation_fov - 0.5;
    }

    bool operator==(const SensorGeometry&) const = default;
};

// Dense non-negative power cube indexed [range][azimuth][doppler][elevation].
class RadeTensor {
public:
    explicit RadeTensor(const SensorGeometry& geometry);
    RadeTensor(const SensorGeometry& geometry, std::vector<float> data);

    const SensorGeometry& geometry() const { return geometry_; }
    std::span<const float> data() const { return data_; }

    std::size_t index(std::size_t r, std::size_t a, std::size_t d, std::size_t e) const
    {
        return ((r * geometry_.n_a + a) * geometry_.n_d + d) * geometry_.n_e + e;
    }
    float at(std::size_t r, std::size_t a, std::size_t d, std::size_t e) const { return data_[index(r, a, d, e)]; }

private:
    SensorGeometry geometry_;
    std::vector<float> data_;
};

struct TargetSpec {
    double range = 0.0;          // m
    double azimuth = 0.0;        // deg
    double doppler = 0.0;        // m/s
    double elevation = 0.0;      // deg
    double amplitude = 1.0;
    std::array<double, 4> width_bins{1.0, 1.0, 1.0, 1.0};  // Gaussian sigma per axis, in bins

    void validate(const SensorGeometry& geometry) const;
};

struct PadRecord {
    std::uint32_t original_n_a = 0;
    std::uint32_t pad_columns = 0;

    bool operator==(const PadRecord&) const = default;
};

// Channels [0, n_d) hold the elevation-reduced cube, [n_d, n_d + n_e) the doppler-reduced one.
// Layout [channel][range][azimuth_padded].
class RaProjection {
public:
    explicit RaProjection(const SensorGeometry& geometry);
    RaProjection(const SensorGeometry& geometry, std::vector<float> data);

    const SensorGeometry& geometry() const { return geometry_; }
    std::uint32_t channels() const { return geometry_.n_de(); }
    std::uint32_t rows() const { return geometry_.n_r; }
    std::uint32_t cols() const { return geometry_.n_a_pad(); }
    PadRecord pad_record() const { return {geometry_.n_a, geometry_.n_a_pad() - geometry_.n_a}; }

    std::span<const float> data() const { return data_; }
    float at(std::size_t c, std::size_t r, std::size_t a) const { return data_[(c * rows() + r) * cols() + a]; }

private:
    SensorGeometry geometry_;
    std::vector<float> data_;
};

RadeTensor synthesize(const SensorGeometry& geometry, std::span<const TargetSpec> targets, double noise_floor,
                      std::uint64_t seed);

RaProjection project(const RadeTensor& tensor);

struct MemoryStats {
    std::uint64_t full_bytes = 0;
    std::uint64_t projection_bytes = 0;
    double reduction_percent = 0.0;
};

MemoryStats memory_stats(const SensorGeometry& geometry, unsigned element_bytes);

}  // namespace radekit
