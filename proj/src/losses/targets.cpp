#include "radekit/losses.hpp"

#include "radekit/error.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace radekit::loss {

void LossConfig::validate() const
{
    require(sigma > 0.0 && alpha > 0.0 && gamma >= 0.0, "loss config: sigma, alpha must be > 0 and gamma >= 0");
    require(epsilon > 0.0 && epsilon < 0.5, "loss config: epsilon must lie in (0, 0.5)");
    require(tau > 0.0 && beta > 0.0, "loss config: tau and beta must be > 0");
    require(weight_focal >= 0.0 && weight_gwd >= 0.0 && weight_l1 >= 0.0, "loss config: weights must be >= 0");
    require(tau_cls > 0.0 && tau_cls < 1.0, "loss config: tau_cls must lie in (0, 1)");
    require(match_iou >= 0.0 && match_iou <= 1.0, "loss config: match_iou must lie in [0, 1]");
}

ParamVector encode_box(const Box3D& box, const SensorGeometry& geometry, GridBin bin)
{
    const auto ref = bin_reference(geometry, bin.r, bin.a);
    return {box.x - ref[0],     box.y - ref[1],     box.z - ref[2],     std::log(box.l),
            std::log(box.w),    std::log(box.h),    std::sin(box.yaw),  std::cos(box.yaw)};
}

namespace {

bool label_order(const LabeledBox& a, const LabeledBox& b)
{
    return std::tie(a.box.x, a.box.y, a.box.z, a.box.l, a.box.w, a.box.h, a.box.yaw, a.class_id) <
           std::tie(b.box.x, b.box.y, b.box.z, b.box.l, b.box.w, b.box.h, b.box.yaw, b.class_id);
}

}  // namespace

std::vector<LabeledBox> canonical_labels(std::span<const LabeledBox> labels)
{
    std::vector<LabeledBox> sorted(labels.begin(), labels.end());
    std::sort(sorted.begin(), sorted.end(), label_order);
    return sorted;
}

Targets build_targets(std::span<const LabeledBox> labels, const SensorGeometry& geometry, std::uint32_t n_cls,
                      const LossConfig& cfg)
{
    geometry.validate();
    cfg.validate();
    require(n_cls >= 2, "build_targets: n_cls must count background plus at least one class");

    Targets t;
    FocalTarget& f = t.focal;
    f.n_cls = n_cls;
    f.rows = geometry.n_r;
    f.cols = geometry.n_a_pad();
    const std::size_t plane = std::size_t{f.rows} * f.cols;
    f.map.assign(n_cls * plane, 0.0);
    t.params.assign(kParamChannels * plane, 0.0);
    t.mask.assign(plane, 0);

    const double inv_two_var = 1.0 / (2.0 * cfg.sigma * cfg.sigma);
    for (const LabeledBox& label : canonical_labels(labels)) {
        label.box.validate();
        require(label.class_id >= 1 && static_cast<std::uint32_t>(label.class_id) < n_cls,
                "build_targets: class_id out of range");
        const auto bin = locate_bin(geometry, label.box.x, label.box.y);
        if (!bin) {
            fail(ErrorKind::validation, "build_targets: box center outside the range-azimuth grid");
        }
        double* channel = f.map.data() + static_cast<std::size_t>(label.class_id) * plane;
        for (std::uint32_t r = 0; r < geometry.n_r; ++r) {
            const double dr = double(r) - double(bin->r);
            for (std::uint32_t a = 0; a < geometry.n_a; ++a) {
                const double da = double(a) - double(bin->a);
                const double g = std::exp(-(dr * dr + da * da) * inv_two_var);
                double& cell = channel[std::size_t{r} * f.cols + a];
                cell = std::max(cell, g);
            }
        }
        const std::size_t cell = std::size_t{bin->r} * f.cols + bin->a;
        if (t.mask[cell]) {
            continue;  // first label in canonical order owns a shared center bin
        }
        t.mask[cell] = 1;
        Peak peak{label.class_id, *bin, label, encode_box(label.box, geometry, *bin)};
        for (std::size_t k = 0; k < kParamChannels; ++k) {
            t.params[k * plane + cell] = peak.params[k];
        }
        f.peaks.push_back(peak);
    }
    return t;
}

HeadOutputs targets_as_outputs(const Targets& targets)
{
    const FocalTarget& f = targets.focal;
    HeadOutputs out(f.n_cls, f.rows, f.cols);
    out.conf = f.map;
    out.params = targets.params;
    return out;
}

}  // namespace radekit::loss
