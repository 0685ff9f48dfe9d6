#include "radekit/gradcheck.hpp"

#include "radekit/random.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

namespace radekit {

double relative_error(double analytic, double numeric)
{
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-7});
    return std::abs(analytic - numeric) / scale;
}

namespace {

using Objective = std::function<double(const std::vector<double>&)>;

void check_coordinates(const Objective& f, std::vector<double> x, const std::vector<double>& grad,
                       const std::vector<std::size_t>& coords, double step, GradcheckSuite& suite)
{
    for (std::size_t i : coords) {
        const double saved = x[i];
        x[i] = saved + step;
        const double up = f(x);
        x[i] = saved - step;
        const double down = f(x);
        x[i] = saved;
        if (!std::isfinite(up) || !std::isfinite(down)) {
            ++suite.skipped;
            continue;
        }
        suite.max_rel_error = std::max(suite.max_rel_error, relative_error(grad[i], (up - down) / (2.0 * step)));
        ++suite.checks;
    }
}

std::vector<std::size_t> all_indices(std::size_t n)
{
    std::vector<std::size_t> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = i;
    }
    return out;
}

GradcheckSuite focal_suite(const RunConfig& config, Rng& rng)
{
    GradcheckSuite suite{"focal"};
    const std::uint32_t n_cls = 2, rows = 4, cols = 5;
    for (std::uint32_t t = 0; t < config.gradcheck.instances; ++t) {
        loss::FocalTarget target{n_cls, rows, cols, std::vector<double>(n_cls * rows * cols), {}};
        std::vector<double> conf(target.map.size());
        for (std::size_t i = 0; i < conf.size(); ++i) {
            target.map[i] = rng.uniform() < 0.1 ? 1.0 : rng.uniform(0.0, 0.99);
            conf[i] = rng.uniform(0.02, 0.98);
        }
        const auto value = loss::focal_loss(conf, target, config.loss);
        const Objective f = [&](const std::vector<double>& x) { return loss::focal_loss(x, target, config.loss).value; };
        check_coordinates(f, conf, value.gradient, all_indices(conf.size()), config.gradcheck.step, suite);
        ++suite.instances;
    }
    return suite;
}

GradcheckSuite smooth_l1_suite(const RunConfig& config, Rng& rng)
{
    GradcheckSuite suite{"smooth-l1"};
    const std::size_t plane = 12;
    for (std::uint32_t t = 0; t < config.gradcheck.instances; ++t) {
        std::vector<double> pred(kParamChannels * plane), target(pred.size());
        std::vector<std::uint8_t> mask(plane);
        for (std::size_t i = 0; i < pred.size(); ++i) {
            pred[i] = 2.0 * rng.normal();
            target[i] = 2.0 * rng.normal();
        }
        for (auto& m : mask) {
            m = rng.uniform() < 0.5 ? 1 : 0;
        }
        mask[rng.index(plane)] = 1;
        const auto value = loss::smooth_l1_loss(pred, target, mask, config.loss);
        const Objective f = [&](const std::vector<double>& x) {
            return loss::smooth_l1_loss(x, target, mask, config.loss).value;
        };
        check_coordinates(f, pred, value.gradient, all_indices(pred.size()), config.gradcheck.step, suite);
        ++suite.instances;
    }
    return suite;
}

Box3D random_box(Rng& rng)
{
    return Box3D{rng.uniform(5.0, 40.0), rng.uniform(-8.0, 8.0), rng.uniform(-1.0, 2.0), rng.uniform(0.5, 6.0),
                 rng.uniform(0.5, 3.0),  rng.uniform(0.5, 3.5),  rng.uniform(-std::numbers::pi, std::numbers::pi)};
}

GradcheckSuite gwd_suite(const RunConfig& config, Rng& rng)
{
    GradcheckSuite suite{config.loss.gwd_bev_only ? "gwd-bev" : "gwd"};
    for (std::uint32_t t = 0; t < config.gradcheck.instances; ++t) {
        const Box3D gt = random_box(rng);
        const std::array<double, 3> ref{gt.x + rng.uniform(-1.0, 1.0), gt.y + rng.uniform(-1.0, 1.0), 0.0};
        const double yaw = gt.yaw + rng.uniform(-1.0, 1.0);
        const double mag = rng.uniform(0.5, 2.0);
        std::vector<double> raw{gt.x - ref[0] + rng.normal(),
                                gt.y - ref[1] + rng.normal(),
                                gt.z - ref[2] + 0.5 * rng.normal(),
                                std::log(gt.l) + 0.3 * rng.normal(),
                                std::log(gt.w) + 0.3 * rng.normal(),
                                std::log(gt.h) + 0.3 * rng.normal(),
                                mag * std::sin(yaw),
                                mag * std::cos(yaw)};
        const auto as_params = [](const std::vector<double>& x) {
            loss::ParamVector p{};
            std::copy(x.begin(), x.end(), p.begin());
            return p;
        };
        const auto value = loss::gwd_loss(as_params(raw), ref, gt, config.loss);
        const std::vector<double> grad(value.gradient.begin(), value.gradient.end());
        const Objective f = [&](const std::vector<double>& x) {
            return loss::gwd_loss(as_params(x), ref, gt, config.loss).value;
        };
        check_coordinates(f, raw, grad, all_indices(raw.size()), config.gradcheck.step, suite);
        ++suite.instances;
    }
    return suite;
}

bool same_matches(const loss::LossReport& a, const loss::LossReport& b)
{
    const auto& x = a.frames.front().matches;
    const auto& y = b.frames.front().matches;
    if (x.size() != y.size()) {
        return false;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i].bin.r != y[i].bin.r || x[i].bin.a != y[i].bin.a || x[i].label_index != y[i].label_index) {
            return false;
        }
    }
    return true;
}

// Small grid; conf and params perturbed around the ground-truth encoding so
// that matches exist, normalizers held fixed.
GradcheckSuite total_suite(const RunConfig& config, Rng& rng)
{
    GradcheckSuite suite{"total"};
    SensorGeometry g;
    g.n_r = 16;
    g.n_a = 12;
    g.n_d = 4;
    g.n_e = 3;
    g.range_max = 40.0;
    g.azimuth_fov = 90.0;
    const std::uint32_t instances = std::max<std::uint32_t>(1, config.gradcheck.instances / 10);
    const double h = config.gradcheck.step;
    for (std::uint32_t t = 0; t < instances; ++t) {
        std::vector<LabeledBox> labels;
        for (int k = 0; k < 2; ++k) {
            const double range = rng.uniform(8.0, 36.0);
            const double az = rng.uniform(-0.6, 0.6);
            labels.push_back({1,
                              Box3D{range * std::cos(az), range * std::sin(az), rng.uniform(-0.5, 1.5),
                                    rng.uniform(2.0, 5.0), rng.uniform(1.5, 2.5), rng.uniform(1.2, 2.0),
                                    rng.uniform(-3.0, 3.0)}});
        }
        loss::Frame frame;
        frame.labels = labels;
        frame.outputs = loss::targets_as_outputs(loss::build_targets(labels, g, 2, config.loss));
        for (double& c : frame.outputs.conf) {
            c = std::clamp(c + rng.uniform(-0.05, 0.05), 0.02, 0.98);
            if (std::abs(c - config.tau_cls) < 1e-3) {
                c += 2e-3;
            }
        }
        for (double& p : frame.outputs.params) {
            p += 0.2 * rng.normal();
        }
        const loss::LossReport base = loss::total_loss(std::span(&frame, 1), g, config.loss);
        const loss::ComponentValues fixed = base.mean;
        const loss::LossReport ref = loss::total_loss(std::span(&frame, 1), g, config.loss, &fixed);

        const auto probe = [&](std::vector<double>& values, const std::vector<double>& grad, std::size_t i) {
            const double saved = values[i];
            values[i] = saved + h;
            const loss::LossReport up = loss::total_loss(std::span(&frame, 1), g, config.loss, &fixed);
            values[i] = saved - h;
            const loss::LossReport down = loss::total_loss(std::span(&frame, 1), g, config.loss, &fixed);
            values[i] = saved;
            if (!same_matches(up, ref) || !same_matches(down, ref)) {
                ++suite.skipped;
                return;
            }
            suite.max_rel_error = std::max(suite.max_rel_error, relative_error(grad[i], (up.total - down.total) / (2.0 * h)));
            ++suite.checks;
        };
        const loss::FrameReport& fr = ref.frames.front();
        for (int k = 0; k < 16; ++k) {
            probe(frame.outputs.conf, fr.grad_conf, rng.index(frame.outputs.conf.size()));
        }
        const std::size_t plane = frame.outputs.plane();
        for (const loss::Match& m : fr.matches) {
            for (std::size_t k = 0; k < kParamChannels; ++k) {
                probe(frame.outputs.params, fr.grad_params, k * plane + std::size_t{m.bin.r} * frame.outputs.cols + m.bin.a);
            }
        }
        ++suite.instances;
    }
    return suite;
}

}  // namespace

std::vector<GradcheckSuite> run_gradcheck(const RunConfig& config)
{
    Rng rng(config.gradcheck.seed);
    std::vector<GradcheckSuite> suites;
    suites.push_back(focal_suite(config, rng));
    suites.push_back(smooth_l1_suite(config, rng));
    suites.push_back(gwd_suite(config, rng));
    suites.push_back(total_suite(config, rng));
    for (GradcheckSuite& s : suites) {
        s.passed = s.checks > 0 && s.max_rel_error < config.gradcheck.tolerance;
    }
    return suites;
}

}  // namespace radekit
