#include "radekit/commands.hpp"

#include "radekit/error.hpp"

#include <CLI11.hpp>

#include <algorithm>

namespace radekit::cli {

namespace fs = std::filesystem;

namespace {

std::vector<fs::path> expand_head_inputs(const std::vector<std::string>& args)
{
    std::vector<fs::path> out;
    for (const std::string& a : args) {
        const fs::path p(a);
        std::error_code ec;
        if (fs::is_directory(p, ec)) {
            std::vector<fs::path> found;
            for (const auto& entry : fs::directory_iterator(p)) {
                if (entry.is_regular_file() && entry.path().extension() == kHeadsExt) {
                    found.push_back(entry.path());
                }
            }
            std::sort(found.begin(), found.end());
            out.insert(out.end(), found.begin(), found.end());
        } else {
            out.push_back(p);
        }
    }
    return out;
}

int exit_code(ErrorKind kind)
{
    return kind == ErrorKind::io ? kExitIo : kExitValidation;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"radar tensor detection toolkit: synthesis, projection, inference, decoding and evaluation"};
    app.name(args.empty() ? "radekit" : fs::path(args.front()).filename().string());
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::vector<std::string> overrides;
    std::uint32_t jobs = 0;
    app.add_option("--config", config_path, "config file (default: $RADEKIT_CONFIG when set)");
    app.add_option("--set", overrides, "override one key, section.key=value (repeatable)");
    app.add_option("-j,--jobs", jobs, "frames processed concurrently (default: run.jobs)");

    std::string script, out_dir, manifest, checkpoint, inject_gt, detections, csv, plot_data;
    std::vector<std::string> files;
    bool stats = false;
    std::uint32_t frames = 0;
    std::uint64_t seed = 0;

    CLI::App* synth = app.add_subcommand("synth", "synthesize radar tensors and labels from a scene script");
    synth->add_option("script", script, "scene script")->required();
    synth->add_option("-o,--out", out_dir, "output directory")->required();

    CLI::App* project = app.add_subcommand("project", "project 4D tensors to range-azimuth feature cubes");
    project->add_option("tensors", files, "tensor files");
    project->add_option("-m,--manifest", manifest, "manifest naming the tensors");
    project->add_option("-o,--out", out_dir, "output directory");
    project->add_flag("--stats", stats, "print memory use and per-frame latency");

    CLI::App* init = app.add_subcommand("init-checkpoint", "write seeded random weights for the configured network");
    init->add_option("-o,--out", out_dir, "checkpoint path")->required();

    CLI::App* infer = app.add_subcommand("infer", "run the network on projections and write head outputs");
    infer->add_option("projections", files, "projection files");
    infer->add_option("-m,--manifest", manifest, "manifest naming the projections");
    infer->add_option("-c,--checkpoint", checkpoint, "network checkpoint");
    infer->add_option("--inject-gt", inject_gt, "label directory; builds head outputs from ground truth");
    infer->add_option("-o,--out", out_dir, "output directory")->required();

    CLI::App* decode = app.add_subcommand("decode", "turn head outputs into detection files");
    decode->add_option("heads", files, "head output files or directories")->required();
    decode->add_option("-o,--out", out_dir, "output directory")->required();

    CLI::App* evaluate = app.add_subcommand("eval", "compute AP tables against labels");
    evaluate->add_option("-m,--manifest", manifest, "manifest with label paths and conditions")->required();
    evaluate->add_option("-d,--detections", detections, "directory of <frame_id>.txt detection files")->required();
    evaluate->add_option("--csv", csv, "write the CSV table here instead of stdout");
    evaluate->add_option("--plot-data", plot_data, "write precision-recall points here");

    CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the loss gradients");
    CLI::Option* seed_opt = gradcheck->add_option("--seed", seed, "instance seed (default: gradcheck.seed)");

    CLI::App* bench = app.add_subcommand("bench", "time the network stages on this host");
    bench->add_option("-n,--frames", frames, "number of frames")->required();

    app.add_subcommand("config", "print the effective configuration");

    std::vector<std::string> argv(args.begin() + (args.empty() ? 0 : 1), args.end());
    std::reverse(argv.begin(), argv.end());
    try {
        app.parse(argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    const auto inputs = [&] {
        FrameInputs in;
        if (!manifest.empty()) {
            in.manifest = fs::path(manifest);
        }
        in.files.assign(files.begin(), files.end());
        return in;
    };
    const auto optional_path = [](const std::string& s) {
        return s.empty() ? std::optional<fs::path>() : std::optional<fs::path>(s);
    };

    Streams io{out, err};
    try {
        RunConfig config = load_run_config(optional_path(config_path), overrides);
        if (jobs > 0) {
            config.jobs = jobs;
        }
        if (*seed_opt) {
            config.gradcheck.seed = seed;
        }
        if (synth->parsed()) {
            cmd_synth(config, script, out_dir, io);
        } else if (project->parsed()) {
            cmd_project(config, inputs(), optional_path(out_dir), stats, io);
        } else if (init->parsed()) {
            cmd_init_checkpoint(config, out_dir, io);
        } else if (infer->parsed()) {
            cmd_infer(config, inputs(), optional_path(checkpoint), optional_path(inject_gt), out_dir, io);
        } else if (decode->parsed()) {
            cmd_decode(config, expand_head_inputs(files), out_dir, io);
        } else if (evaluate->parsed()) {
            cmd_eval(config, manifest, detections, EvalOutputs{optional_path(csv), optional_path(plot_data)}, io);
        } else if (gradcheck->parsed()) {
            return cmd_gradcheck(config, io);
        } else if (bench->parsed()) {
            cmd_bench(config, frames, io);
        } else {
            out << dump_config(config);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitOk;
}

}  // namespace radekit::cli
