#include "radekit/commands.hpp"

#include "radekit/box_files.hpp"
#include "radekit/error.hpp"
#include "radekit/gradcheck.hpp"
#include "radekit/io.hpp"
#include "radekit/manifest.hpp"
#include "radekit/network.hpp"
#include "radekit/parallel.hpp"
#include "radekit/random.hpp"
#include "radekit/scene.hpp"
#include "radekit/simd/kernels.hpp"
#include "radekit/tensor_io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <set>

namespace radekit::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start)
{
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void make_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        fail(ErrorKind::io, "cannot create directory " + dir.string() + ": " + ec.message());
    }
}

std::string fixed(double v, int digits)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string dims_text(const SensorGeometry& g)
{
    return std::to_string(g.n_r) + "x" + std::to_string(g.n_a) + "x" + std::to_string(g.n_d) + "x" +
           std::to_string(g.n_e);
}

std::string projection_dims_text(const SensorGeometry& g)
{
    return std::to_string(g.n_de()) + "x" + std::to_string(g.n_r) + "x" + std::to_string(g.n_a_pad());
}

void require_geometry(const SensorGeometry& found, const RunConfig& config, const std::string& what)
{
    if (!(found == config.sensor)) {
        fail(ErrorKind::mismatch, what + " has geometry " + dims_text(found) +
                                      " but the configured sensor is " + dims_text(config.sensor));
    }
}

// Two-sided 95% Student-t quantiles for 1..30 degrees of freedom.
double t95(std::size_t dof)
{
    static constexpr double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
                                       2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
                                       2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
    return dof == 0 ? 0.0 : dof <= 30 ? table[dof - 1] : 1.960;
}

struct Summary {
    double mean = 0.0;
    double sd = 0.0;
    double ci = 0.0;  // half-width of the 95% interval of the mean
};

Summary summarize(const std::vector<double>& xs)
{
    Summary s;
    if (xs.empty()) {
        return s;
    }
    for (double x : xs) {
        s.mean += x;
    }
    s.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) {
            ss += (x - s.mean) * (x - s.mean);
        }
        s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
        s.ci = t95(xs.size() - 1) * s.sd / std::sqrt(static_cast<double>(xs.size()));
    }
    return s;
}

}  // namespace

std::vector<NamedInput> resolve_inputs(const FrameInputs& inputs)
{
    std::vector<NamedInput> out;
    if (inputs.manifest) {
        for (const ManifestEntry& e : load_manifest(*inputs.manifest)) {
            if (e.tensor_path.empty()) {
                fail(ErrorKind::mismatch, "frame " + e.frame_id + " has no tensor path in the manifest");
            }
            out.push_back({e.frame_id, e.tensor_path});
        }
    }
    for (const fs::path& p : inputs.files) {
        out.push_back({p.stem().string(), p});
    }
    std::set<std::string> ids;
    for (const NamedInput& n : out) {
        if (!ids.insert(n.frame_id).second) {
            fail(ErrorKind::validation, "frame id " + n.frame_id + " appears more than once in the inputs");
        }
    }
    return out;
}

void cmd_synth(const RunConfig& config, const fs::path& script, const fs::path& out_dir, Streams io)
{
    const std::vector<SceneFrame> frames = parse_scene(io::read_file(script), script.string());
    std::vector<std::vector<TargetSpec>> targets(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        for (const SceneObject& obj : frames[i].objects) {
            TargetSpec t = target_for(obj, config.sensor, config.synth.width_bins);
            try {
                t.validate(config.sensor);
            } catch (const Error& e) {
                fail(ErrorKind::validation, script.string() + ":" + std::to_string(obj.line) + ": " + e.what());
            }
            targets[i].push_back(t);
        }
    }
    make_dir(out_dir / "tensors");
    make_dir(out_dir / "labels");
    std::vector<ManifestEntry> manifest(frames.size());
    parallel_for(frames.size(), config.jobs, [&](std::size_t i) {
        const SceneFrame& f = frames[i];
        const std::uint64_t seed = config.synth.seed + nn::fnv1a64(f.frame_id);
        const RadeTensor tensor = synthesize(config.sensor, targets[i], config.synth.noise_floor, seed);
        std::vector<LabeledBox> labels;
        for (const SceneObject& obj : f.objects) {
            labels.push_back(obj.label);
        }
        ManifestEntry e{f.frame_id, out_dir / "tensors" / (f.frame_id + kTensorExt),
                        out_dir / "labels" / (f.frame_id + ".txt"), f.condition};
        save_tensor(e.tensor_path, tensor);
        save_labels(e.label_path, labels);
        manifest[i] = std::move(e);
    });
    save_manifest(out_dir / kManifestName, manifest);
    std::size_t objects = 0;
    for (const SceneFrame& f : frames) {
        objects += f.objects.size();
    }
    io.out << "synthesized " << frames.size() << " frame(s), " << objects << " object(s) at " << dims_text(config.sensor)
           << " -> " << out_dir.string() << "\n";
}

void cmd_project(const RunConfig& config, const FrameInputs& inputs, const std::optional<fs::path>& out_dir,
                 bool stats, Streams io)
{
    const std::vector<NamedInput> frames = resolve_inputs(inputs);
    if (frames.empty() && !stats) {
        fail(ErrorKind::validation, "project: no input tensors given");
    }
    if (!frames.empty() && !out_dir) {
        fail(ErrorKind::validation, "project: --out is required with input tensors");
    }
    std::vector<SensorGeometry> geometries(frames.size());
    std::vector<double> latency(frames.size());
    std::vector<fs::path> outputs(frames.size());
    if (!frames.empty()) {
        make_dir(*out_dir);
    }
    parallel_for(frames.size(), config.jobs, [&](std::size_t i) {
        const RadeTensor tensor = load_tensor(frames[i].path);
        const auto start = Clock::now();
        const RaProjection projection = project(tensor);
        latency[i] = elapsed_ms(start);
        geometries[i] = tensor.geometry();
        outputs[i] = *out_dir / (frames[i].frame_id + kProjectionExt);
        save_projection(outputs[i], projection);
    });
    if (inputs.manifest && !frames.empty()) {
        std::vector<ManifestEntry> entries = load_manifest(*inputs.manifest);
        for (ManifestEntry& e : entries) {
            e.tensor_path = *out_dir / (e.frame_id + kProjectionExt);
        }
        save_manifest(*out_dir / kManifestName, entries);
    }
    if (!frames.empty()) {
        io.out << "projected " << frames.size() << " frame(s) -> " << out_dir->string() << "\n";
    }
    if (!stats) {
        return;
    }
    if (frames.empty()) {
        geometries.push_back(config.sensor);
    }
    std::set<std::string> shapes;
    for (const SensorGeometry& g : geometries) {
        shapes.insert(dims_text(g) + " -> " + projection_dims_text(g));
    }
    for (const std::string& s : shapes) {
        io.out << "geometry " << s << "\n";
    }
    for (unsigned width : {4u, 8u}) {
        std::uint64_t full = 0, proj = 0;
        for (const SensorGeometry& g : geometries) {
            const MemoryStats m = memory_stats(g, width);
            full += m.full_bytes;
            proj += m.projection_bytes;
        }
        const double reduction = 100.0 * (1.0 - static_cast<double>(proj) / static_cast<double>(full));
        io.out << "width " << width << " B: full " << full << " B, projection " << proj << " B, reduction "
               << fixed(reduction, 4) << " %\n";
    }
    if (!frames.empty()) {
        const Summary s = summarize(latency);
        io.out << "projection latency: mean " << fixed(s.mean, 3) << " ms, sd " << fixed(s.sd, 3) << " ms over "
               << frames.size() << " frame(s) (" << simd::active_kernels().name << " kernels)\n";
    }
}

void cmd_init_checkpoint(const RunConfig& config, const fs::path& out, Streams io)
{
    const nn::Network net(config.network);
    if (out.has_parent_path()) {
        make_dir(out.parent_path());
    }
    nn::save_checkpoint(out, net.checkpoint());
    char fp[32];
    std::snprintf(fp, sizeof fp, "%016llx", static_cast<unsigned long long>(config.network.fingerprint()));
    io.out << "checkpoint " << out.string() << ": " << net.parameter_count() << " parameters, fingerprint " << fp
           << "\n";
}

void cmd_infer(const RunConfig& config, const FrameInputs& inputs, const std::optional<fs::path>& checkpoint,
               const std::optional<fs::path>& inject_gt, const fs::path& out_dir, Streams io)
{
    const std::vector<NamedInput> frames = resolve_inputs(inputs);
    if (!checkpoint && !inject_gt) {
        fail(ErrorKind::validation, "infer: either --checkpoint or --inject-gt is required");
    }
    std::optional<nn::Network> net;
    if (!inject_gt) {
        net.emplace(config.network, nn::load_checkpoint(*checkpoint));
    }
    make_dir(out_dir);
    parallel_for(frames.size(), config.jobs, [&](std::size_t i) {
        const RaProjection projection = load_projection(frames[i].path);
        require_geometry(projection.geometry(), config, frames[i].path.string());
        HeadOutputs outputs;
        if (inject_gt) {
            const auto labels = load_labels(*inject_gt / (frames[i].frame_id + ".txt"));
            outputs = loss::targets_as_outputs(
                loss::build_targets(labels, projection.geometry(), config.network.n_cls, config.loss));
        } else {
            outputs = net->forward(projection);
        }
        save_head_outputs(out_dir / (frames[i].frame_id + kHeadsExt), outputs, projection.geometry());
    });
    io.out << (inject_gt ? "injected ground truth for " : "inferred ") << frames.size() << " frame(s) -> "
           << out_dir.string() << "\n";
}

void cmd_decode(const RunConfig& config, const std::vector<fs::path>& head_files, const fs::path& out_dir, Streams io)
{
    std::set<std::string> ids;
    for (const fs::path& p : head_files) {
        if (!ids.insert(p.stem().string()).second) {
            fail(ErrorKind::validation, "decode: frame id " + p.stem().string() + " appears more than once");
        }
    }
    make_dir(out_dir);
    std::vector<std::size_t> counts(head_files.size());
    parallel_for(head_files.size(), config.jobs, [&](std::size_t i) {
        SensorGeometry geometry;
        const HeadOutputs outputs = load_head_outputs(head_files[i], &geometry);
        const std::vector<Detection> dets = nms(decode(outputs, geometry, config.tau_cls), config.nms_iou);
        save_detections(out_dir / (head_files[i].stem().string() + ".txt"), dets);
        counts[i] = dets.size();
    });
    std::size_t total = 0;
    for (std::size_t c : counts) {
        total += c;
    }
    io.out << "decoded " << head_files.size() << " frame(s), " << total << " detection(s) -> " << out_dir.string()
           << "\n";
}

void cmd_eval(const RunConfig& config, const fs::path& manifest, const fs::path& detections,
              const EvalOutputs& outputs, Streams io)
{
    std::mutex warn_mutex;
    const auto warn = [&](const std::string& msg) {
        const std::lock_guard lock(warn_mutex);
        io.err << "warning: " << msg << "\n";
    };
    std::vector<eval::FrameData> frames = eval::load_frames(load_manifest(manifest), detections, warn);
    const eval::EvalResult result = eval::evaluate(std::move(frames), config.eval, config.jobs);
    io.out << eval::format_table(result, config.eval);
    const std::string csv = eval::format_csv(result, config.eval);
    if (outputs.csv) {
        io::write_file_atomic(*outputs.csv, csv);
    } else {
        io.out << "\n" << csv;
    }
    if (outputs.plot_data) {
        io::write_file_atomic(*outputs.plot_data, eval::format_plot_data(result, config.eval));
    }
}

int cmd_gradcheck(const RunConfig& config, Streams io)
{
    bool ok = true;
    io.out << "gradient check: seed " << config.gradcheck.seed << ", step " << format_number(config.gradcheck.step)
           << ", tolerance " << format_number(config.gradcheck.tolerance) << "\n";
    for (const GradcheckSuite& s : run_gradcheck(config)) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3e", s.max_rel_error);
        io.out << (s.passed ? "PASS " : "FAIL ") << s.name << ": " << s.instances << " instances, " << s.checks
               << " checks, " << s.skipped << " skipped, max relative error " << buf << "\n";
        ok = ok && s.passed;
    }
    return ok ? kExitOk : kExitCheckFailed;
}

void cmd_bench(const RunConfig& config, std::uint32_t n_frames, Streams io)
{
    if (n_frames == 0) {
        fail(ErrorKind::validation, "bench: --frames must be >= 1");
    }
    const nn::Network net(config.network);
    const SensorGeometry& g = config.sensor;
    Rng rng(config.synth.seed);
    std::vector<double> backbone, neck, heads, total;
    for (std::uint32_t f = 0; f < n_frames; ++f) {
        std::vector<float> data(std::size_t{g.n_de()} * g.n_r * g.n_a_pad(), 0.0f);
        for (std::size_t c = 0; c < g.n_de(); ++c) {
            for (std::size_t r = 0; r < g.n_r; ++r) {
                for (std::size_t a = 0; a < g.n_a; ++a) {
                    data[(c * g.n_r + r) * g.n_a_pad() + a] = static_cast<float>(rng.uniform());
                }
            }
        }
        const RaProjection projection(g, std::move(data));
        const auto t0 = Clock::now();
        const nn::FeatureMap features = net.backbone_forward(projection);
        const auto t1 = Clock::now();
        const nn::FeatureMap necked = net.neck_forward(features);
        const auto t2 = Clock::now();
        const HeadOutputs outputs = net.heads_forward(necked);
        const auto t3 = Clock::now();
        const auto ms = [](Clock::time_point a, Clock::time_point b) {
            return std::chrono::duration<double, std::milli>(b - a).count();
        };
        backbone.push_back(ms(t0, t1));
        neck.push_back(ms(t1, t2));
        heads.push_back(ms(t2, t3));
        total.push_back(ms(t0, t3));
    }
    io.out << "bench: " << n_frames << " frame(s), input " << projection_dims_text(g) << ", "
           << simd::active_kernels().name << " kernels, single thread\n";
    io.out << "host CPU timings, informational only\n";
    const auto line = [&](const char* name, const std::vector<double>& xs) {
        const Summary s = summarize(xs);
        char buf[128];
        std::snprintf(buf, sizeof buf, "%-10s %10.2f ms +- %.2f ms (95%% CI)\n", name, s.mean, s.ci);
        io.out << buf;
    };
    line("backbone", backbone);
    line("neck", neck);
    line("heads", heads);
    line("end-to-end", total);
}

}  // namespace radekit::cli
