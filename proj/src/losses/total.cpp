#include "radekit/losses.hpp"

#include "radekit/box_files.hpp"
#include "radekit/error.hpp"

#include <algorithm>

namespace radekit::loss {

namespace {

struct Candidate {
    Detection detection;
    GridBin bin;
};

std::vector<Candidate> decode_candidates(const HeadOutputs& outputs, const SensorGeometry& geometry, double tau)
{
    std::vector<Candidate> out;
    for (std::uint32_t c = 1; c < outputs.n_cls; ++c) {
        for (std::uint32_t r = 0; r < outputs.rows; ++r) {
            for (std::uint32_t a = 0; a < geometry.n_a; ++a) {
                const double score = outputs.conf_at(c, r, a);
                if (score >= tau) {
                    out.push_back({{decode_bin(outputs, geometry, r, a), static_cast<int>(c), score}, {r, a}});
                }
            }
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Candidate& x, const Candidate& y) { return score_order(x.detection, y.detection); });
    return out;
}

ParamVector params_at(const HeadOutputs& outputs, GridBin bin)
{
    ParamVector p{};
    for (std::size_t k = 0; k < kParamChannels; ++k) {
        p[k] = outputs.param_at(k, bin.r, bin.a);
    }
    return p;
}

double normalized_weight(double weight, double normalizer, std::size_t batch)
{
    return normalizer > 0.0 ? weight / (normalizer * static_cast<double>(batch)) : 0.0;
}

}  // namespace

std::string LossReport::record() const
{
    return format_number(mean.focal) + " " + format_number(mean.gwd) + " " + format_number(mean.l1) + " " +
           format_number(total);
}

LossReport total_loss(std::span<const Frame> batch, const SensorGeometry& geometry, const LossConfig& cfg,
                      const ComponentValues* normalizer)
{
    cfg.validate();
    LossReport report;
    if (batch.empty()) {
        return report;
    }

    struct FrameGradients {
        std::vector<double> focal;
        std::vector<double> gwd;
        std::vector<double> l1;
    };
    std::vector<FrameGradients> grads(batch.size());

    for (std::size_t b = 0; b < batch.size(); ++b) {
        const Frame& frame = batch[b];
        const HeadOutputs& out = frame.outputs;
        if (out.rows != geometry.n_r || out.cols != geometry.n_a_pad()) {
            fail(ErrorKind::mismatch, "total_loss: head outputs are not shaped for the sensor geometry");
        }
        const std::vector<LabeledBox> labels = canonical_labels(frame.labels);
        const Targets targets = build_targets(labels, geometry, out.n_cls, cfg);

        FrameReport fr;
        ValueAndGradient foc = focal_loss(out.conf, targets.focal, cfg);
        fr.raw.focal = foc.value;
        grads[b].focal = std::move(foc.gradient);
        grads[b].gwd.assign(out.params.size(), 0.0);
        grads[b].l1.assign(out.params.size(), 0.0);

        // Greedy one-to-one, class-aware matching of raw decoded boxes to labels.
        std::vector<bool> taken(labels.size(), false);
        for (const Candidate& cand : decode_candidates(out, geometry, cfg.tau_cls)) {
            double best = -1.0;
            std::size_t best_index = 0;
            for (std::size_t i = 0; i < labels.size(); ++i) {
                if (taken[i] || labels[i].class_id != cand.detection.class_id) {
                    continue;
                }
                const double iou = iou_bev(cand.detection.box, labels[i].box);
                if (iou >= cfg.match_iou && iou > best) {
                    best = iou;
                    best_index = i;
                }
            }
            if (best >= 0.0) {
                taken[best_index] = true;
                fr.matches.push_back({cand.detection.class_id, cand.bin, best_index});
            }
        }

        const std::size_t plane = out.plane();
        if (!fr.matches.empty()) {
            const double inv_pairs = 1.0 / static_cast<double>(fr.matches.size());
            const double l1_scale = inv_pairs / static_cast<double>(kParamChannels);
            double gwd_sum = 0.0;
            double l1_sum = 0.0;
            for (const Match& m : fr.matches) {
                const ParamVector pred = params_at(out, m.bin);
                const Box3D& gt = labels[m.label_index].box;
                const GwdResult g = gwd_loss(pred, bin_reference(geometry, m.bin.r, m.bin.a), gt, cfg);
                ParamVector l1_grad{};
                l1_sum += smooth_l1_sum(pred, encode_box(gt, geometry, m.bin), cfg.beta, &l1_grad);
                gwd_sum += g.value;
                const std::size_t cell = std::size_t{m.bin.r} * out.cols + m.bin.a;
                for (std::size_t k = 0; k < kParamChannels; ++k) {
                    grads[b].gwd[k * plane + cell] += g.gradient[k] * inv_pairs;
                    grads[b].l1[k * plane + cell] += l1_grad[k] * l1_scale;
                }
            }
            fr.raw.gwd = gwd_sum * inv_pairs;
            fr.raw.l1 = l1_sum * l1_scale;
        }
        report.frames.push_back(std::move(fr));
    }

    const double n = static_cast<double>(batch.size());
    for (const FrameReport& fr : report.frames) {
        report.mean.focal += fr.raw.focal;
        report.mean.gwd += fr.raw.gwd;
        report.mean.l1 += fr.raw.l1;
    }
    report.mean.focal /= n;
    report.mean.gwd /= n;
    report.mean.l1 /= n;
    report.normalizer = normalizer ? *normalizer : report.mean;

    const auto ratio = [](double v, double d) { return d > 0.0 ? v / d : 0.0; };
    report.normalized.focal = ratio(report.mean.focal, report.normalizer.focal);
    report.normalized.gwd = ratio(report.mean.gwd, report.normalizer.gwd);
    report.normalized.l1 = ratio(report.mean.l1, report.normalizer.l1);
    report.total = cfg.weight_focal * report.normalized.focal + cfg.weight_gwd * report.normalized.gwd +
                   cfg.weight_l1 * report.normalized.l1;

    const double wf = normalized_weight(cfg.weight_focal, report.normalizer.focal, batch.size());
    const double wg = normalized_weight(cfg.weight_gwd, report.normalizer.gwd, batch.size());
    const double wl = normalized_weight(cfg.weight_l1, report.normalizer.l1, batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) {
        FrameReport& fr = report.frames[b];
        fr.grad_conf.resize(grads[b].focal.size());
        for (std::size_t i = 0; i < fr.grad_conf.size(); ++i) {
            fr.grad_conf[i] = wf * grads[b].focal[i];
        }
        fr.grad_params.resize(grads[b].gwd.size());
        for (std::size_t i = 0; i < fr.grad_params.size(); ++i) {
            fr.grad_params[i] = wg * grads[b].gwd[i] + wl * grads[b].l1[i];
        }
    }
    return report;
}

}  // namespace radekit::loss
