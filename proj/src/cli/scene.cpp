#include "radekit/scene.hpp"

#include "radekit/box_files.hpp"
#include "radekit/error.hpp"

#include <cmath>
#include <numbers>
#include <set>

namespace radekit {

std::vector<SceneFrame> parse_scene(std::string_view text, const std::string& source)
{
    std::vector<SceneFrame> frames;
    std::set<std::string> ids;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        const auto fields = split_fields(line);
        if (fields.empty()) {
            continue;
        }
        const std::string where = source + ":" + std::to_string(line_no);
        if (fields[0] == "frame") {
            if (fields.size() < 2 || fields.size() > 3) {
                fail(ErrorKind::format, where + ": expected 'frame <id> [condition]'");
            }
            const std::string id(fields[1]);
            if (id.find_first_of("/\\,") != std::string::npos || id == "." || id == "..") {
                fail(ErrorKind::format, where + ": frame id must not contain path separators or commas");
            }
            if (!ids.insert(id).second) {
                fail(ErrorKind::format, where + ": duplicate frame id " + id);
            }
            frames.push_back(SceneFrame{id, fields.size() == 3 ? std::string(fields[2]) : std::string(), {}});
        } else if (fields[0] == "object") {
            if (fields.size() != 11) {
                fail(ErrorKind::format, where + ": expected 'object class x y z l w h yaw doppler amplitude'");
            }
            if (frames.empty()) {
                frames.push_back(SceneFrame{"frame0000", "", {}});
                ids.insert(frames.back().frame_id);
            }
            SceneObject obj;
            obj.line = line_no;
            const long long cls = parse_integer(fields[1], where);
            if (cls < 1 || cls > 1'000'000) {
                fail(ErrorKind::format, where + ": class id must be >= 1");
            }
            obj.label.class_id = static_cast<int>(cls);
            Box3D& b = obj.label.box;
            b.x = parse_number(fields[2], where);
            b.y = parse_number(fields[3], where);
            b.z = parse_number(fields[4], where);
            b.l = parse_number(fields[5], where);
            b.w = parse_number(fields[6], where);
            b.h = parse_number(fields[7], where);
            b.yaw = parse_number(fields[8], where);
            obj.doppler = parse_number(fields[9], where);
            obj.amplitude = parse_number(fields[10], where);
            try {
                b.validate();
            } catch (const Error& e) {
                fail(ErrorKind::format, where + ": " + e.what());
            }
            if (!(obj.amplitude > 0.0)) {
                fail(ErrorKind::format, where + ": amplitude must be > 0");
            }
            frames.back().objects.push_back(obj);
        } else {
            fail(ErrorKind::format, where + ": unknown directive '" + std::string(fields[0]) + "'");
        }
    }
    if (frames.empty()) {
        frames.push_back(SceneFrame{"frame0000", "", {}});
    }
    return frames;
}

std::string format_scene(const std::vector<SceneFrame>& frames)
{
    std::string out;
    for (const SceneFrame& f : frames) {
        out += "frame " + f.frame_id + (f.condition.empty() ? "" : " " + f.condition) + "\n";
        for (const SceneObject& o : f.objects) {
            const Box3D& b = o.label.box;
            out += "object " + std::to_string(o.label.class_id);
            for (double v : {b.x, b.y, b.z, b.l, b.w, b.h, b.yaw, o.doppler, o.amplitude}) {
                out += " " + format_number(v);
            }
            out += "\n";
        }
    }
    return out;
}

TargetSpec target_for(const SceneObject& object, const SensorGeometry& geometry,
                      const std::array<double, 4>& width_bins)
{
    const Box3D& b = object.label.box;
    const double range = std::hypot(b.x, b.y);
    TargetSpec t;
    t.range = range;
    t.azimuth = std::atan2(b.y, b.x) * 180.0 / std::numbers::pi;
    t.elevation = std::atan2(b.z - geometry.z0, range) * 180.0 / std::numbers::pi;
    t.doppler = object.doppler;
    t.amplitude = object.amplitude;
    t.width_bins = width_bins;
    return t;
}

}  // namespace radekit
