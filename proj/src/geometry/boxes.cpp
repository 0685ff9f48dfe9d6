#include "radekit/geometry.hpp"

#include "radekit/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace radekit {

void Box3D::validate() const
{
    require(std::isfinite(x) && std::isfinite(y) && std::isfinite(z) && std::isfinite(l) && std::isfinite(w) &&
                std::isfinite(h) && std::isfinite(yaw),
            "box: fields must be finite");
    require(l > 0.0 && w > 0.0 && h > 0.0, "box: degenerate dimensions");
}

double normalize_angle(double angle)
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double a = std::remainder(angle, two_pi);  // [-pi, pi]
    if (a <= -std::numbers::pi) {
        a += two_pi;
    }
    return a;
}

std::array<double, 3> bin_reference(const SensorGeometry& geometry, std::uint32_t r, std::uint32_t a)
{
    const double range = geometry.range_at(r);
    const double azimuth = geometry.azimuth_rad_at(a);
    return {range * std::cos(azimuth), range * std::sin(azimuth), geometry.z0};
}

std::optional<GridBin> locate_bin(const SensorGeometry& geometry, double x, double y)
{
    if (!std::isfinite(x) || !std::isfinite(y)) {
        return std::nullopt;
    }
    const double range = std::hypot(x, y);
    const double azimuth_deg = std::atan2(y, x) * 180.0 / std::numbers::pi;
    const double r = std::floor(range * geometry.n_r / geometry.range_max);
    const double a = std::floor((azimuth_deg + geometry.azimuth_fov / 2.0) * geometry.n_a / geometry.azimuth_fov);
    if (r < 0.0 || r >= geometry.n_r || a < 0.0 || a >= geometry.n_a) {
        return std::nullopt;
    }
    return GridBin{static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(a)};
}

Box3D decode_bin(const HeadOutputs& outputs, const SensorGeometry& geometry, std::uint32_t r, std::uint32_t a)
{
    const auto ref = bin_reference(geometry, r, a);
    Box3D box;
    box.x = ref[0] + outputs.param_at(kDx, r, a);
    box.y = ref[1] + outputs.param_at(kDy, r, a);
    box.z = ref[2] + outputs.param_at(kDz, r, a);
    box.l = std::exp(outputs.param_at(kLogL, r, a));
    box.w = std::exp(outputs.param_at(kLogW, r, a));
    box.h = std::exp(outputs.param_at(kLogH, r, a));
    box.yaw = normalize_angle(std::atan2(outputs.param_at(kSin, r, a), outputs.param_at(kCos, r, a)));
    return box;
}

std::vector<Detection> decode(const HeadOutputs& outputs, const SensorGeometry& geometry, double tau_cls)
{
    require(tau_cls > 0.0 && tau_cls < 1.0, "decode: tau_cls must lie in (0, 1)");
    if (outputs.rows != geometry.n_r || outputs.cols != geometry.n_a_pad()) {
        fail(ErrorKind::mismatch, "decode: head outputs are not shaped for the sensor geometry");
    }
    std::vector<Detection> out;
    for (std::uint32_t c = 1; c < outputs.n_cls; ++c) {
        for (std::uint32_t r = 0; r < outputs.rows; ++r) {
            for (std::uint32_t a = 0; a < geometry.n_a; ++a) {
                const double score = outputs.conf_at(c, r, a);
                if (score >= tau_cls) {
                    out.push_back({decode_bin(outputs, geometry, r, a), static_cast<int>(c), score});
                }
            }
        }
    }
    return out;
}

}  // namespace radekit
