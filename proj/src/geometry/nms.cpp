#include "radekit/geometry.hpp"

#include "radekit/error.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace radekit {

bool score_order(const Detection& a, const Detection& b)
{
    return std::tie(b.score, a.box.x, a.box.y, a.box.z, a.class_id) <
           std::tie(a.score, b.box.x, b.box.y, b.box.z, b.class_id);
}

std::vector<Detection> nms(std::span<const Detection> detections, double iou_threshold)
{
    require(std::isfinite(iou_threshold), "nms: threshold must be finite");
    std::vector<Detection> sorted(detections.begin(), detections.end());
    for (const Detection& d : sorted) {
        require(d.score >= 0.0 && d.score <= 1.0, "nms: scores must lie in [0, 1]");
    }
    std::stable_sort(sorted.begin(), sorted.end(), score_order);

    std::vector<Detection> kept;
    for (const Detection& cand : sorted) {
        bool keep = true;
        for (const Detection& k : kept) {
            if (k.class_id == cand.class_id && iou_bev(k.box, cand.box) >= iou_threshold) {
                keep = false;
                break;
            }
        }
        if (keep) {
            kept.push_back(cand);
        }
    }
    return kept;
}

}  // namespace radekit
