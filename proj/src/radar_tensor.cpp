#include "radekit/radar_tensor.hpp"

#include "radekit/error.hpp"
#include "radekit/random.hpp"
#include "radekit/simd/kernels.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace radekit {

void SensorGeometry::validate() const
{
    require(n_r >= 1 && n_a >= 1 && n_d >= 1 && n_e >= 1, "sensor geometry: bin counts must be >= 1");
    require(std::isfinite(range_max) && range_max > 0.0, "sensor geometry: range_max must be finite and > 0");
    require(std::isfinite(azimuth_fov) && azimuth_fov > 0.0 && azimuth_fov < 360.0,
            "sensor geometry: azimuth_fov must lie in (0, 360)");
    require(std::isfinite(elevation_fov) && elevation_fov > 0.0 && elevation_fov < 180.0,
            "sensor geometry: elevation_fov must lie in (0, 180)");
    require(std::isfinite(doppler_max) && doppler_max > 0.0, "sensor geometry: doppler_max must be finite and > 0");
    require(std::isfinite(z0), "sensor geometry: z0 must be finite");
}

double SensorGeometry::azimuth_rad_at(double a) const
{
    return azimuth_deg_at(a) * std::numbers::pi / 180.0;
}

namespace {

void check_cube(const SensorGeometry& geometry, std::vector<float>& data, std::size_t expected, const char* what)
{
    geometry.validate();
    if (data.size() != expected) {
        fail(ErrorKind::mismatch, std::string(what) + ": element count " + std::to_string(data.size()) +
                                      " does not match geometry (" + std::to_string(expected) + ")");
    }
    for (float& v : data) {
        if (!std::isfinite(v) || v < 0.0f) {
            fail(ErrorKind::validation, std::string(what) + ": elements must be finite and non-negative");
        }
        // Canonical +0 keeps max reductions bit-identical across kernel sets.
        if (v == 0.0f) {
            v = 0.0f;
        }
    }
}

}  // namespace

RadeTensor::RadeTensor(const SensorGeometry& geometry)
    : geometry_(geometry)
{
    geometry_.validate();
    data_.assign(geometry_.element_count(), 0.0f);
}

RadeTensor::RadeTensor(const SensorGeometry& geometry, std::vector<float> data)
    : geometry_(geometry), data_(std::move(data))
{
    check_cube(geometry_, data_, geometry_.element_count(), "radar tensor");
}

void TargetSpec::validate(const SensorGeometry& geometry) const
{
    require(std::isfinite(range) && std::isfinite(azimuth) && std::isfinite(doppler) && std::isfinite(elevation) &&
                std::isfinite(amplitude),
            "target: parameters must be finite");
    require(amplitude > 0.0, "target: amplitude must be > 0");
    for (double w : width_bins) {
        require(std::isfinite(w) && w > 0.0, "target: window widths must be finite and > 0");
    }
    require(range >= 0.0 && range <= geometry.range_max, "target: range outside field of view");
    require(std::abs(azimuth) <= geometry.azimuth_fov / 2.0, "target: azimuth outside field of view");
    require(std::abs(doppler) <= geometry.doppler_max, "target: doppler outside field of view");
    require(std::abs(elevation) <= geometry.elevation_fov / 2.0, "target: elevation outside field of view");
}

RaProjection::RaProjection(const SensorGeometry& geometry)
    : geometry_(geometry)
{
    geometry_.validate();
    data_.assign(std::size_t{channels()} * rows() * cols(), 0.0f);
}

RaProjection::RaProjection(const SensorGeometry& geometry, std::vector<float> data)
    : geometry_(geometry), data_(std::move(data))
{
    check_cube(geometry_, data_, std::size_t{channels()} * rows() * cols(), "projection");
    for (std::size_t c = 0; c < channels(); ++c) {
        for (std::size_t r = 0; r < rows(); ++r) {
            for (std::size_t a = geometry_.n_a; a < cols(); ++a) {
                require(at(c, r, a) == 0.0f, "projection: padded columns must be zero");
            }
        }
    }
}

namespace {

std::vector<double> gaussian_window(std::uint32_t bins, double center, double sigma)
{
    std::vector<double> w(bins);
    for (std::uint32_t i = 0; i < bins; ++i) {
        const double z = (static_cast<double>(i) - center) / sigma;
        w[i] = std::exp(-0.5 * z * z);
    }
    return w;
}

}  // namespace

RadeTensor synthesize(const SensorGeometry& geometry, std::span<const TargetSpec> targets, double noise_floor,
                      std::uint64_t seed)
{
    geometry.validate();
    require(std::isfinite(noise_floor) && noise_floor >= 0.0, "synthesize: noise_floor must be finite and >= 0");
    for (const TargetSpec& t : targets) {
        t.validate(geometry);
    }

    std::vector<float> data(geometry.element_count(), 0.0f);
    if (noise_floor > 0.0) {
        Rng rng(seed);
        for (float& v : data) {
            v = static_cast<float>(rng.uniform() * noise_floor);
        }
    }

    for (const TargetSpec& t : targets) {
        const auto wr = gaussian_window(geometry.n_r, geometry.range_bin(t.range), t.width_bins[0]);
        const auto wa = gaussian_window(geometry.n_a, geometry.azimuth_bin(t.azimuth), t.width_bins[1]);
        const auto wd = gaussian_window(geometry.n_d, geometry.doppler_bin(t.doppler), t.width_bins[2]);
        const auto we = gaussian_window(geometry.n_e, geometry.elevation_bin(t.elevation), t.width_bins[3]);
        std::size_t i = 0;
        for (std::uint32_t r = 0; r < geometry.n_r; ++r) {
            for (std::uint32_t a = 0; a < geometry.n_a; ++a) {
                const double ra = t.amplitude * wr[r] * wa[a];
                for (std::uint32_t d = 0; d < geometry.n_d; ++d) {
                    const double rad = ra * wd[d];
                    for (std::uint32_t e = 0; e < geometry.n_e; ++e, ++i) {
                        data[i] += static_cast<float>(rad * we[e]);
                    }
                }
            }
        }
    }
    return RadeTensor(geometry, std::move(data));
}

RaProjection project(const RadeTensor& tensor)
{
    const SensorGeometry& g = tensor.geometry();
    const simd::KernelSet& kernels = simd::active_kernels();

    std::vector<float> out(std::size_t{g.n_de()} * g.n_r * g.n_a_pad(), 0.0f);
    const std::size_t channel_stride = std::size_t{g.n_r} * g.n_a_pad();
    const std::size_t cell = std::size_t{g.n_d} * g.n_e;
    const float* src = tensor.data().data();

    for (std::uint32_t r = 0; r < g.n_r; ++r) {
        for (std::uint32_t a = 0; a < g.n_a; ++a) {
            const float* block = src + (std::size_t{r} * g.n_a + a) * cell;
            float* rad = out.data() + std::size_t{r} * g.n_a_pad() + a;
            float* rae = rad + std::size_t{g.n_d} * channel_stride;
            kernels.max_last_axis(block, g.n_d, g.n_e, rad, channel_stride);
            kernels.max_first_axis(block, g.n_d, g.n_e, rae, channel_stride);
        }
    }
    return RaProjection(g, std::move(out));
}

MemoryStats memory_stats(const SensorGeometry& geometry, unsigned element_bytes)
{
    geometry.validate();
    require(element_bytes == 4 || element_bytes == 8, "memory_stats: element_bytes must be 4 or 8");
    MemoryStats s;
    s.full_bytes = std::uint64_t{geometry.n_r} * geometry.n_a * geometry.n_d * geometry.n_e * element_bytes;
    s.projection_bytes = std::uint64_t{geometry.n_de()} * geometry.n_r * geometry.n_a_pad() * element_bytes;
    s.reduction_percent =
        100.0 * (1.0 - static_cast<double>(s.projection_bytes) / static_cast<double>(s.full_bytes));
    return s;
}

}  // namespace radekit
