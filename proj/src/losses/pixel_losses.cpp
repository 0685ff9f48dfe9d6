#include "radekit/losses.hpp"

#include "radekit/error.hpp"

#include <algorithm>
#include <cmath>

namespace radekit::loss {

ValueAndGradient focal_loss(std::span<const double> conf, const FocalTarget& target, const LossConfig& cfg)
{
    if (conf.size() != target.map.size() || conf.empty()) {
        fail(ErrorKind::mismatch, "focal_loss: confidence and target shapes differ");
    }
    const double n = static_cast<double>(conf.size());
    const double lo = cfg.epsilon;
    const double hi = 1.0 - cfg.epsilon;
    ValueAndGradient out;
    out.gradient.assign(conf.size(), 0.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < conf.size(); ++i) {
        const double raw = conf[i];
        const double p = std::clamp(raw, lo, hi);
        const double y = target.map[i];
        double value = 0.0;
        double dp = 0.0;
        if (y == 1.0) {
            const double q = std::pow(1.0 - p, cfg.alpha);
            value = -q * std::log(p);
            dp = cfg.alpha * std::pow(1.0 - p, cfg.alpha - 1.0) * std::log(p) - q / p;
        } else {
            const double w = std::pow(1.0 - y, cfg.gamma);
            const double pa = std::pow(p, cfg.alpha);
            value = -w * pa * std::log(1.0 - p);
            dp = -w * (cfg.alpha * std::pow(p, cfg.alpha - 1.0) * std::log(1.0 - p) - pa / (1.0 - p));
        }
        sum += value;
        if (raw > lo && raw < hi) {
            out.gradient[i] = dp / n;
        }
    }
    out.value = sum / n;
    return out;
}

double smooth_l1_sum(const ParamVector& pred, const ParamVector& target, double beta, ParamVector* grad)
{
    double sum = 0.0;
    for (std::size_t k = 0; k < kParamChannels; ++k) {
        const double d = pred[k] - target[k];
        const double ad = std::abs(d);
        if (ad < beta) {
            sum += 0.5 * d * d / beta;
            if (grad) {
                (*grad)[k] = d / beta;
            }
        } else {
            sum += ad - 0.5 * beta;
            if (grad) {
                (*grad)[k] = d > 0.0 ? 1.0 : -1.0;
            }
        }
    }
    return sum;
}

ValueAndGradient smooth_l1_loss(std::span<const double> pred_params, std::span<const double> target_params,
                                std::span<const std::uint8_t> mask, const LossConfig& cfg)
{
    const std::size_t plane = mask.size();
    if (pred_params.size() != kParamChannels * plane || target_params.size() != pred_params.size()) {
        fail(ErrorKind::mismatch, "smooth_l1_loss: parameter maps and mask disagree in shape");
    }
    ValueAndGradient out;
    out.gradient.assign(pred_params.size(), 0.0);
    const auto matched = static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](auto m) { return m != 0; }));
    if (matched == 0) {
        return out;
    }
    const double scale = 1.0 / (double(kParamChannels) * double(matched));
    double sum = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
        if (!mask[i]) {
            continue;
        }
        ParamVector p{}, t{}, g{};
        for (std::size_t k = 0; k < kParamChannels; ++k) {
            p[k] = pred_params[k * plane + i];
            t[k] = target_params[k * plane + i];
        }
        sum += smooth_l1_sum(p, t, cfg.beta, &g);
        for (std::size_t k = 0; k < kParamChannels; ++k) {
            out.gradient[k * plane + i] = g[k] * scale;
        }
    }
    out.value = sum * scale;
    return out;
}

}  // namespace radekit::loss
