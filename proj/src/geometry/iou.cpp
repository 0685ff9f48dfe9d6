#include "radekit/geometry.hpp"

#include "radekit/error.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace radekit {

namespace {

using Point = std::array<double, 2>;

double cross(const Point& o, const Point& a, const Point& b)
{
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

double polygon_area(const std::vector<Point>& poly)
{
    double twice = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point& p = poly[i];
        const Point& q = poly[(i + 1) % poly.size()];
        twice += p[0] * q[1] - q[0] * p[1];
    }
    return 0.5 * std::abs(twice);
}

// Sutherland-Hodgman: clips subject against the convex counter-clockwise polygon clip.
std::vector<Point> clip_convex(std::vector<Point> subject, const std::array<Point, 4>& clip)
{
    for (std::size_t e = 0; e < clip.size() && !subject.empty(); ++e) {
        const Point& a = clip[e];
        const Point& b = clip[(e + 1) % clip.size()];
        std::vector<Point> input = std::move(subject);
        subject.clear();
        for (std::size_t i = 0; i < input.size(); ++i) {
            const Point& cur = input[i];
            const Point& prev = input[(i + input.size() - 1) % input.size()];
            const double d_cur = cross(a, b, cur);
            const double d_prev = cross(a, b, prev);
            const bool cur_in = d_cur >= 0.0;
            const bool prev_in = d_prev >= 0.0;
            if (cur_in != prev_in) {
                const double t = d_prev / (d_prev - d_cur);
                subject.push_back({prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])});
            }
            if (cur_in) {
                subject.push_back(cur);
            }
        }
    }
    return subject;
}

}  // namespace

std::array<std::array<double, 2>, 4> bev_corners(const Box3D& box)
{
    const double c = std::cos(box.yaw);
    const double s = std::sin(box.yaw);
    const double hl = box.l / 2.0;
    const double hw = box.w / 2.0;
    std::array<Point, 4> out;
    const double local[4][2] = {{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}};
    for (int i = 0; i < 4; ++i) {
        out[i] = {box.x + c * local[i][0] - s * local[i][1], box.y + s * local[i][0] + c * local[i][1]};
    }
    return out;
}

double bev_intersection_area(const Box3D& a, const Box3D& b)
{
    a.validate();
    b.validate();
    // Quick reject on circumscribed circles.
    const double ra = 0.5 * std::hypot(a.l, a.w);
    const double rb = 0.5 * std::hypot(b.l, b.w);
    if (std::hypot(a.x - b.x, a.y - b.y) > ra + rb) {
        return 0.0;
    }
    const auto ca = bev_corners(a);
    const auto cb = bev_corners(b);
    std::vector<Point> poly(ca.begin(), ca.end());
    poly = clip_convex(std::move(poly), cb);
    if (poly.size() < 3) {
        return 0.0;
    }
    return std::min({polygon_area(poly), a.l * a.w, b.l * b.w});
}

double iou_bev(const Box3D& a, const Box3D& b)
{
    const double inter = bev_intersection_area(a, b);
    const double uni = a.l * a.w + b.l * b.w - inter;
    return std::clamp(inter / uni, 0.0, 1.0);
}

double iou_3d(const Box3D& a, const Box3D& b)
{
    const double inter_bev = bev_intersection_area(a, b);
    const double lo = std::max(a.z - a.h / 2.0, b.z - b.h / 2.0);
    const double hi = std::min(a.z + a.h / 2.0, b.z + b.h / 2.0);
    const double inter = inter_bev * std::max(0.0, hi - lo);
    const double uni = a.l * a.w * a.h + b.l * b.w * b.h - inter;
    return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace radekit
