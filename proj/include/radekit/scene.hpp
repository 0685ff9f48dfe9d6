#pragma once

#include "radekit/geometry.hpp"
#include "radekit/radar_tensor.hpp"

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace radekit {

// Scene script, one directive per line, '#' starts a comment:
//   frame <id> [condition]
//   object <class_id> <x> <y> <z> <l> <w> <h> <yaw> <doppler> <amplitude>
// Objects belong to the most recent frame. A script with no frame line
// describes a single frame "frame0000".
struct SceneObject {
    LabeledBox label;
    double doppler = 0.0;
    double amplitude = 1.0;
    std::size_t line = 0;
};

struct SceneFrame {
    std::string frame_id;
    std::string condition;
    std::vector<SceneObject> objects;
};

std::vector<SceneFrame> parse_scene(std::string_view text, const std::string& source = "<scene>");

std::string format_scene(const std::vector<SceneFrame>& frames);

// Radar return of an object: range and azimuth of its center, elevation of the
// center relative to the sensor height.
TargetSpec target_for(const SceneObject& object, const SensorGeometry& geometry,
                      const std::array<double, 4>& width_bins);

}  // namespace radekit
