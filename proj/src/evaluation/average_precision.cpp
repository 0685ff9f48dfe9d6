#include "radekit/evaluation.hpp"

#include "radekit/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>

namespace radekit::eval {

void Roi::validate() const
{
    const auto axis = [](double lo, double hi, const char* name) {
        require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, std::string("ROI requires min < max on ") + name);
    };
    axis(x_min, x_max, "x");
    axis(y_min, y_max, "y");
    axis(z_min, z_max, "z");
}

bool Roi::contains(const Box3D& box) const
{
    return box.x >= x_min && box.x <= x_max && box.y >= y_min && box.y <= y_max && box.z >= z_min && box.z <= z_max;
}

std::vector<Detection> filter_roi(std::span<const Detection> items, const Roi& roi)
{
    std::vector<Detection> out;
    std::copy_if(items.begin(), items.end(), std::back_inserter(out),
                 [&](const Detection& d) { return roi.contains(d.box); });
    return out;
}

std::vector<LabeledBox> filter_roi(std::span<const LabeledBox> items, const Roi& roi)
{
    std::vector<LabeledBox> out;
    std::copy_if(items.begin(), items.end(), std::back_inserter(out),
                 [&](const LabeledBox& b) { return roi.contains(b.box); });
    return out;
}

const char* metric_name(Metric metric)
{
    return metric == Metric::box3d ? "3D" : "BEV";
}

const char* interpolation_name(Interpolation mode)
{
    return mode == Interpolation::forty_point ? "40-point" : "exact";
}

Interpolation parse_interpolation(const std::string& text)
{
    if (text == "40-point" || text == "40") {
        return Interpolation::forty_point;
    }
    if (text == "exact") {
        return Interpolation::exact;
    }
    fail(ErrorKind::validation, "unknown AP interpolation '" + text + "' (expected 40-point or exact)");
}

bool hit_order(const Hit& a, const Hit& b)
{
    return std::tie(b.score, a.x, a.y, a.z, a.frame, b.true_positive) <
           std::tie(a.score, b.x, b.y, b.z, b.frame, a.true_positive);
}

namespace {

void check_threshold(double iou_thr)
{
    require(std::isfinite(iou_thr) && iou_thr > 0.0 && iou_thr <= 1.0, "IoU threshold must lie in (0, 1]");
}

// Canonical order for ground truth so that IoU ties resolve independently of
// the input list order.
bool label_order(const LabeledBox& a, const LabeledBox& b)
{
    const Box3D& p = a.box;
    const Box3D& q = b.box;
    return std::tie(p.x, p.y, p.z, p.l, p.w, p.h, p.yaw) < std::tie(q.x, q.y, q.z, q.l, q.w, q.h, q.yaw);
}

}  // namespace

std::vector<int> classes_present(std::span<const Detection> preds, std::span<const LabeledBox> gts)
{
    std::set<int> ids;
    for (const Detection& d : preds) {
        ids.insert(d.class_id);
    }
    for (const LabeledBox& g : gts) {
        ids.insert(g.class_id);
    }
    return {ids.begin(), ids.end()};
}

std::vector<Hit> match_class(std::span<const Detection> preds, std::span<const LabeledBox> gts, int class_id,
                             Metric metric, double iou_thr, std::size_t frame)
{
    check_threshold(iou_thr);
    std::vector<Detection> p;
    for (const Detection& d : preds) {
        if (d.class_id == class_id) {
            p.push_back(d);
        }
    }
    std::sort(p.begin(), p.end(), [](const Detection& a, const Detection& b) {
        if (score_order(a, b) || score_order(b, a)) {
            return score_order(a, b);
        }
        return std::tie(a.box.l, a.box.w, a.box.h, a.box.yaw) < std::tie(b.box.l, b.box.w, b.box.h, b.box.yaw);
    });
    std::vector<LabeledBox> g;
    for (const LabeledBox& b : gts) {
        if (b.class_id == class_id) {
            g.push_back(b);
        }
    }
    std::sort(g.begin(), g.end(), label_order);

    std::vector<bool> taken(g.size(), false);
    std::vector<Hit> hits;
    hits.reserve(p.size());
    for (const Detection& d : p) {
        double best = -1.0;
        std::size_t best_j = g.size();
        for (std::size_t j = 0; j < g.size(); ++j) {
            if (taken[j]) {
                continue;
            }
            const double iou = metric == Metric::box3d ? iou_3d(d.box, g[j].box) : iou_bev(d.box, g[j].box);
            if (iou >= iou_thr && iou > best) {
                best = iou;
                best_j = j;
            }
        }
        const bool tp = best_j < g.size();
        if (tp) {
            taken[best_j] = true;
        }
        hits.push_back(Hit{d.score, d.box.x, d.box.y, d.box.z, frame, tp});
    }
    return hits;
}

std::vector<PrPoint> pr_curve(std::span<const Hit> hits, std::size_t n_gt)
{
    std::vector<PrPoint> out;
    if (n_gt == 0) {
        return out;
    }
    out.reserve(hits.size());
    std::size_t tp = 0;
    for (std::size_t i = 0; i < hits.size(); ++i) {
        tp += hits[i].true_positive ? 1 : 0;
        out.push_back(PrPoint{static_cast<double>(tp) / static_cast<double>(n_gt),
                              static_cast<double>(tp) / static_cast<double>(i + 1)});
    }
    return out;
}

std::optional<double> ap_from_hits(std::span<const Hit> hits, std::size_t n_gt, Interpolation mode)
{
    if (n_gt == 0) {
        return std::nullopt;
    }
    const std::vector<PrPoint> curve = pr_curve(hits, n_gt);
    // Monotone envelope: best precision at this rank or any later one.
    std::vector<double> envelope(curve.size());
    double running = 0.0;
    for (std::size_t i = curve.size(); i-- > 0;) {
        running = std::max(running, curve[i].precision);
        envelope[i] = running;
    }
    double ap = 0.0;
    if (mode == Interpolation::exact) {
        for (std::size_t i = 0; i < hits.size(); ++i) {
            if (hits[i].true_positive) {
                ap += envelope[i];
            }
        }
        return ap / static_cast<double>(n_gt);
    }
    std::size_t i = 0;
    for (int k = 1; k <= 40; ++k) {
        const double r = static_cast<double>(k) / 40.0;
        while (i < curve.size() && curve[i].recall < r) {
            ++i;
        }
        if (i == curve.size()) {
            break;
        }
        ap += envelope[i];
    }
    return ap / 40.0;
}

std::optional<double> average_precision(std::span<const Detection> preds, std::span<const LabeledBox> gts,
                                        int class_id, Metric metric, double iou_thr, Interpolation mode)
{
    Accumulator acc(metric, iou_thr);
    acc.add_frame(preds, gts, 0);
    return acc.ap(class_id, mode);
}

Accumulator::Accumulator(Metric metric, double iou_thr) : metric_(metric), iou_thr_(iou_thr)
{
    check_threshold(iou_thr);
}

void Accumulator::add_frame(std::span<const Detection> preds, std::span<const LabeledBox> gts, std::size_t frame)
{
    for (int c : classes_present(preds, gts)) {
        const auto hits = match_class(preds, gts, c, metric_, iou_thr_, frame);
        const auto n_gt = static_cast<std::size_t>(
            std::count_if(gts.begin(), gts.end(), [&](const LabeledBox& b) { return b.class_id == c; }));
        add_hits(c, hits, n_gt);
    }
}

void Accumulator::add_hits(int class_id, std::span<const Hit> hits, std::size_t n_gt)
{
    PerClass& pc = per_class_[class_id];
    pc.hits.insert(pc.hits.end(), hits.begin(), hits.end());
    pc.n_gt += n_gt;
}

std::vector<int> Accumulator::classes() const
{
    std::vector<int> out;
    for (const auto& [c, pc] : per_class_) {
        out.push_back(c);
    }
    return out;
}

const Accumulator::PerClass* Accumulator::find(int class_id) const
{
    const auto it = per_class_.find(class_id);
    return it == per_class_.end() ? nullptr : &it->second;
}

std::vector<Hit> Accumulator::sorted_hits(const PerClass& pc) const
{
    std::vector<Hit> hits = pc.hits;
    std::sort(hits.begin(), hits.end(), hit_order);
    return hits;
}

std::optional<double> Accumulator::ap(int class_id, Interpolation mode) const
{
    const PerClass* pc = find(class_id);
    if (pc == nullptr) {
        return std::nullopt;
    }
    return ap_from_hits(sorted_hits(*pc), pc->n_gt, mode);
}

std::vector<PrPoint> Accumulator::curve(int class_id) const
{
    const PerClass* pc = find(class_id);
    if (pc == nullptr) {
        return {};
    }
    return pr_curve(sorted_hits(*pc), pc->n_gt);
}

Counts Accumulator::counts(int class_id) const
{
    Counts c;
    const PerClass* pc = find(class_id);
    if (pc == nullptr) {
        return c;
    }
    for (const Hit& h : pc->hits) {
        (h.true_positive ? c.tp : c.fp) += 1;
    }
    c.fn = pc->n_gt - c.tp;
    return c;
}

}  // namespace radekit::eval
