#pragma once

#include "radekit/head_outputs.hpp"
#include "radekit/radar_tensor.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace radekit {

// Oriented box in the sensor frame (x forward, y left, z up); yaw about +z.
struct Box3D {
    double x = 0.0, y = 0.0, z = 0.0;
    double l = 1.0, w = 1.0, h = 1.0;
    double yaw = 0.0;

    void validate() const;
    bool operator==(const Box3D&) const = default;
};

// Wraps an angle into (-pi, pi].
double normalize_angle(double angle);

struct LabeledBox {
    int class_id = 1;
    Box3D box;

    bool operator==(const LabeledBox&) const = default;
};

struct Detection {
    Box3D box;
    int class_id = 1;  // 0 is background and never emitted
    double score = 0.0;

    bool operator==(const Detection&) const = default;
};

struct GridBin {
    std::uint32_t r = 0;
    std::uint32_t a = 0;
};

// Cartesian reference point of a range-azimuth bin center: (R cos A, R sin A, z0).
std::array<double, 3> bin_reference(const SensorGeometry& geometry, std::uint32_t r, std::uint32_t a);

// Bin whose cell contains the ground-plane point (x, y); empty outside the grid.
std::optional<GridBin> locate_bin(const SensorGeometry& geometry, double x, double y);

// Thresholds every non-background confidence channel and regresses one box per
// surviving bin. Padded azimuth columns are ignored.
std::vector<Detection> decode(const HeadOutputs& outputs, const SensorGeometry& geometry, double tau_cls);

// Box implied by the eight regression values at one bin.
Box3D decode_bin(const HeadOutputs& outputs, const SensorGeometry& geometry, std::uint32_t r, std::uint32_t a);

// Corners of the bird's-eye-view rectangle, counter-clockwise.
std::array<std::array<double, 2>, 4> bev_corners(const Box3D& box);

double bev_intersection_area(const Box3D& a, const Box3D& b);
double iou_bev(const Box3D& a, const Box3D& b);
double iou_3d(const Box3D& a, const Box3D& b);

// Deterministic descending-score order: ties by ascending x, then y, z, class.
bool score_order(const Detection& a, const Detection& b);

// Greedy class-aware suppression; output is in descending score order.
std::vector<Detection> nms(std::span<const Detection> detections, double iou_threshold);

}  // namespace radekit
