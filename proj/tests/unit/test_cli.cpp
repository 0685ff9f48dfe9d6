#include "radekit/box_files.hpp"
#include "radekit/commands.hpp"
#include "radekit/config.hpp"
#include "radekit/error.hpp"
#include "radekit/scene.hpp"
#include "radekit/tensor_io.hpp"

#include "../support/test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

using namespace radekit;
namespace fs = std::filesystem;

namespace {

const char* kDeskIni = R"(# small sensor for tests
[sensor]
n_r = 32
n_a = 24
n_d = 8
n_e = 6
range_max = 64
azimuth_fov = 90
elevation_fov = 30

[network]
n_cls = 3
cbam_reduction = 2
seed = 11
)";

const char* kScene = R"(frame city normal
object 1 20 2 0.5 4.2 1.8 1.6 0.3 3 1
object 2 40 -6 1 9 2.5 3 -0.4 -2 1.5
frame rural rain
object 1 12 -3 0 4 1.9 1.5 1.2 0 2
)";

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "radekit");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> list_files(const fs::path& dir)
{
    std::vector<std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) {
            out.push_back(fs::relative(e.path(), dir).string());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Runs synth, project, oracle inference, decode and eval under root.
Result pipeline(const fs::path& root, const std::string& jobs)
{
    io::write_file_atomic(root / "desk.ini", kDeskIni);
    io::write_file_atomic(root / "scene.txt", kScene);
    const std::string cfg = (root / "desk.ini").string();
    const std::string r = root.string();
    for (const auto& step : std::vector<std::vector<std::string>>{
             {"synth", r + "/scene.txt", "-o", r + "/data"},
             {"project", "-m", r + "/data/manifest.csv", "-o", r + "/proj"},
             {"infer", "-m", r + "/proj/manifest.csv", "--inject-gt", r + "/data/labels", "-o", r + "/heads"},
             {"decode", r + "/heads", "-o", r + "/dets"}}) {
        std::vector<std::string> args{"--config", cfg, "-j", jobs};
        args.insert(args.end(), step.begin(), step.end());
        const Result res = run_cli(args);
        if (res.code != 0) {
            return res;
        }
    }
    return run_cli({"--config", cfg, "-j", jobs, "eval", "-m", r + "/data/manifest.csv", "-d", r + "/dets", "--csv",
                    r + "/eval.csv", "--plot-data", r + "/pr.csv"});
}

}  // namespace

TEST_CASE("config dump parses back to the same config")
{
    RunConfig c = parse_config(kDeskIni, "desk.ini");
    c.finalize();
    CHECK(c.sensor.n_r == 32);
    CHECK(c.network.n_de == 14);
    CHECK(c.network.n_a_pad == 24);
    const std::string dump = dump_config(c);
    RunConfig again = parse_config(dump, "dump");
    again.finalize();
    CHECK(dump_config(again) == dump);
    CHECK(config_keys().size() > 40);
}

TEST_CASE("config errors name the offending line")
{
    const auto message = [](const std::string& text) {
        try {
            parse_config(text, "c.ini");
        } catch (const Error& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(message("[sensor]\nn_r = 32\nbogus = 1\n").find("c.ini:3") != std::string::npos);
    CHECK(message("[sensor]\nn_r = 32\nn_r = 16\n").find("c.ini:3") != std::string::npos);
    CHECK(message("n_r = 32\n").find("c.ini:1") != std::string::npos);
    CHECK(message("[sensor]\nn_r = abc\n").find("c.ini:2") != std::string::npos);
    CHECK(message("[network]\nuse_cbam = maybe\n").find("c.ini:2") != std::string::npos);
    RunConfig bad = parse_config("[decode]\ntau_cls = 1.5\n", "c.ini");
    CHECK_THROWS_AS(bad.finalize(), Error);
}

TEST_CASE("overrides apply after the file and the environment names a default")
{
    test::TempDir dir;
    io::write_file_atomic(dir / "desk.ini", kDeskIni);
    RunConfig c = load_run_config(dir / "desk.ini", {"decode.tau_cls=0.45", "sensor.n_r=40"});
    CHECK(c.tau_cls == 0.45);
    CHECK(c.loss.tau_cls == 0.45);
    CHECK(c.sensor.n_r == 40);
    CHECK(c.network.n_r == 40);
    CHECK_THROWS_AS(load_run_config(dir / "desk.ini", {"decode.nope=1"}), Error);
    CHECK_THROWS_AS(load_run_config(dir / "desk.ini", {"decode.tau_cls"}), Error);

    ::setenv("RADEKIT_CONFIG", (dir / "desk.ini").c_str(), 1);
    const RunConfig from_env = load_run_config(std::nullopt, {});
    ::unsetenv("RADEKIT_CONFIG");
    CHECK(from_env.sensor.n_a == 24);
    CHECK(load_run_config(std::nullopt, {}).sensor.n_a == 107);

    const Result dumped = run_cli({"--config", (dir / "desk.ini").string(), "--set", "eval.interpolation=exact", "config"});
    REQUIRE(dumped.code == 0);
    CHECK(dumped.out.find("interpolation = exact") != std::string::npos);
}

TEST_CASE("scene scripts parse and report errors by line")
{
    const auto frames = parse_scene(kScene, "s");
    REQUIRE(frames.size() == 2);
    CHECK(frames[0].frame_id == "city");
    CHECK(frames[0].condition == "normal");
    CHECK(frames[0].objects.size() == 2);
    CHECK(frames[1].objects[0].label.box.yaw == 1.2);
    CHECK(parse_scene(format_scene(frames), "s2").size() == 2);

    const auto empty = parse_scene("# nothing here\n", "e");
    REQUIRE(empty.size() == 1);
    CHECK(empty[0].frame_id == "frame0000");
    CHECK(empty[0].objects.empty());

    for (const auto& [text, line] : std::vector<std::pair<std::string, std::string>>{
             {"frame a\nobject 1 2 3\n", "s:2"},
             {"frame a\nframe a\n", "s:2"},
             {"frame a/b\n", "s:1"},
             {"\n\nwidget 1\n", "s:3"},
             {"object 0 20 0 0 4 2 1.5 0 0 1\n", "s:1"},
             {"object 1 20 0 0 4 -2 1.5 0 0 1\n", "s:1"},
             {"object 1 20 0 0 4 2 1.5 0 0 0\n", "s:1"}}) {
        try {
            parse_scene(text, "s");
            FAIL("accepted: " << text);
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::format);
            CHECK(std::string(e.what()).find(line) != std::string::npos);
        }
    }
}

TEST_CASE("synth writes labels and tensors peaking at the target bins")
{
    test::TempDir dir;
    io::write_file_atomic(dir / "desk.ini", kDeskIni);
    io::write_file_atomic(dir / "scene.txt", kScene);
    // Without floor noise the bin nearest each target is a local maximum.
    const Result res = run_cli({"--config", (dir / "desk.ini").string(), "--set", "synth.noise_floor=0", "synth",
                                (dir / "scene.txt").string(), "-o", (dir / "out").string()});
    REQUIRE(res.code == 0);
    const RunConfig cfg = load_run_config(dir / "desk.ini", {});
    const auto frames = parse_scene(kScene, "s");
    for (const SceneFrame& f : frames) {
        const auto labels = load_labels(dir / "out" / "labels" / (f.frame_id + ".txt"));
        REQUIRE(labels.size() == f.objects.size());
        const RadeTensor t = load_tensor(dir / "out" / "tensors" / (f.frame_id + ".rdt"));
        for (std::size_t i = 0; i < f.objects.size(); ++i) {
            CHECK(labels[i] == f.objects[i].label);
            const TargetSpec spec = target_for(f.objects[i], cfg.sensor, cfg.synth.width_bins);
            const auto nearest = [](double bin, std::uint32_t n) {
                return static_cast<std::uint32_t>(std::clamp(std::lround(bin), 0L, long(n) - 1));
            };
            const std::uint32_t r = nearest(cfg.sensor.range_bin(spec.range), cfg.sensor.n_r);
            const std::uint32_t a = nearest(cfg.sensor.azimuth_bin(spec.azimuth), cfg.sensor.n_a);
            const std::uint32_t d = nearest(cfg.sensor.doppler_bin(spec.doppler), cfg.sensor.n_d);
            const std::uint32_t e = nearest(cfg.sensor.elevation_bin(spec.elevation), cfg.sensor.n_e);
            // Local argmax over a window of +-3 bins on every axis.
            const float peak = t.at(r, a, d, e);
            for (int dr = -3; dr <= 3; ++dr) {
                for (int da = -3; da <= 3; ++da) {
                    for (int dd = -3; dd <= 3; ++dd) {
                        for (int de = -3; de <= 3; ++de) {
                            const long rr = long(r) + dr, aa = long(a) + da, ddd = long(d) + dd, ee = long(e) + de;
                            if (rr < 0 || aa < 0 || ddd < 0 || ee < 0 || rr >= cfg.sensor.n_r ||
                                aa >= cfg.sensor.n_a || ddd >= cfg.sensor.n_d || ee >= cfg.sensor.n_e) {
                                continue;
                            }
                            REQUIRE(t.at(rr, aa, ddd, ee) <= peak);
                        }
                    }
                }
            }
        }
    }
    const auto manifest = load_manifest(dir / "out" / "manifest.csv");
    REQUIRE(manifest.size() == 2);
    CHECK(manifest[1].condition == "rain");
}

TEST_CASE("synth is deterministic and an empty scene gives an empty frame")
{
    test::TempDir dir;
    io::write_file_atomic(dir / "desk.ini", kDeskIni);
    io::write_file_atomic(dir / "scene.txt", kScene);
    io::write_file_atomic(dir / "empty.txt", "");
    const std::string cfg = (dir / "desk.ini").string();
    REQUIRE(run_cli({"--config", cfg, "synth", (dir / "scene.txt").string(), "-o", (dir / "a").string()}).code == 0);
    REQUIRE(run_cli({"--config", cfg, "-j", "3", "synth", (dir / "scene.txt").string(), "-o", (dir / "b").string()})
                .code == 0);
    CHECK(list_files(dir / "a") == list_files(dir / "b"));
    for (const std::string& f : list_files(dir / "a")) {
        if (f != "manifest.csv") {
            CHECK(test::read_bytes(dir / "a" / f) == test::read_bytes(dir / "b" / f));
        }
    }
    REQUIRE(run_cli({"--config", cfg, "synth", (dir / "empty.txt").string(), "-o", (dir / "e").string()}).code == 0);
    CHECK(load_labels(dir / "e" / "labels" / "frame0000.txt").empty());
    CHECK(run_cli({"--config", cfg, "synth", (dir / "missing.txt").string(), "-o", (dir / "m").string()}).code == 2);
    io::write_file_atomic(dir / "far.txt", "object 1 500 0 0 4 2 1.5 0 0 1\n");
    const Result far = run_cli({"--config", cfg, "synth", (dir / "far.txt").string(), "-o", (dir / "f").string()});
    CHECK(far.code == 1);
    CHECK(far.err.find("far.txt:1") != std::string::npos);
}

TEST_CASE("oracle pipeline recovers every label")
{
    test::TempDir dir;
    const Result res = pipeline(dir.path(), "1");
    INFO(res.err);
    REQUIRE(res.code == 0);
    const std::string csv = test::read_bytes(dir / "eval.csv");
    CHECK(csv.find("mAP,Total,3D,0.5,1\n") != std::string::npos);
    CHECK(csv.find("mAP,Total,BEV,0.5,1\n") != std::string::npos);
    CHECK(csv.find("Sedan,rain,3D,0.5,1\n") != std::string::npos);
    CHECK(res.out.find("100.00") != std::string::npos);
    CHECK(fs::exists(dir / "pr.csv"));
    // Each label decodes from its peak bin at full confidence; off-peak bins of
    // the heatmap only add lower-scored boxes.
    const auto dets = load_detections(dir / "dets" / "city.txt");
    CHECK(std::count_if(dets.begin(), dets.end(), [](const Detection& d) { return d.score == 1.0; }) == 2);
}

TEST_CASE("pipeline outputs do not depend on the job count")
{
    test::TempDir one, four;
    REQUIRE(pipeline(one.path(), "1").code == 0);
    REQUIRE(pipeline(four.path(), "4").code == 0);
    const auto files = list_files(one.path());
    REQUIRE(files == list_files(four.path()));
    for (const std::string& f : files) {
        if (f.find("manifest.csv") == std::string::npos && f != "desk.ini") {
            CHECK_MESSAGE(test::read_bytes(one / f) == test::read_bytes(four / f), f);
        }
    }
}

TEST_CASE("missing detection files warn and count as misses")
{
    test::TempDir dir;
    REQUIRE(pipeline(dir.path(), "2").code == 0);
    fs::remove(dir / "dets" / "rural.txt");
    const std::string r = dir.path().string();
    const Result res = run_cli({"--config", r + "/desk.ini", "eval", "-m", r + "/data/manifest.csv", "-d", r + "/dets"});
    REQUIRE(res.code == 0);
    CHECK(res.err.find("warning") != std::string::npos);
    CHECK(res.err.find("rural") != std::string::npos);
    CHECK(res.out.find("class,condition,metric,iou_thr,AP") != std::string::npos);
    io::write_file_atomic(dir / "dets" / "stray.txt", "");
    CHECK(run_cli({"--config", r + "/desk.ini", "eval", "-m", r + "/data/manifest.csv", "-d", r + "/dets"}).code == 1);
}

TEST_CASE("corrupted input fails without leaving partial output")
{
    test::TempDir dir;
    REQUIRE(pipeline(dir.path(), "1").code == 0);
    const fs::path tensor = dir / "data" / "tensors" / "city.rdt";
    std::string bytes = test::read_bytes(tensor);
    io::write_file_atomic(dir / "bad.rdt", bytes.substr(0, bytes.size() / 2));
    bytes[0] = 'X';
    io::write_file_atomic(dir / "magic.rdt", bytes);
    const std::string cfg = (dir / "desk.ini").string();
    for (const char* name : {"bad.rdt", "magic.rdt"}) {
        const Result res = run_cli({"--config", cfg, "project", (dir / name).string(), "-o", (dir / "p2").string()});
        CHECK(res.code == 1);
        CHECK(res.err.find("error") != std::string::npos);
        if (fs::exists(dir / "p2")) {
            CHECK(list_files(dir / "p2").empty());
        }
    }
    CHECK(run_cli({"--config", cfg, "project", (dir / "none.rdt").string(), "-o", (dir / "p3").string()}).code == 2);
}

TEST_CASE("project stats report the memory reduction")
{
    const Result res = run_cli({"project", "--stats"});
    REQUIRE(res.code == 0);
    CHECK(res.out.find("geometry 256x107x64x37 -> 101x256x112") != std::string::npos);
    CHECK(res.out.find("width 4 B: full 259457024 B, projection 11583488 B, reduction 95.5355 %") !=
          std::string::npos);
    CHECK(res.out.find("width 8 B") != std::string::npos);
}

TEST_CASE("seeded checkpoints give byte-identical inference and reject other architectures")
{
    test::TempDir dir;
    REQUIRE(pipeline(dir.path(), "1").code == 0);
    const std::string r = dir.path().string();
    const std::string cfg = r + "/desk.ini";
    const Result init = run_cli({"--config", cfg, "init-checkpoint", "-o", r + "/net.rdn"});
    REQUIRE(init.code == 0);
    CHECK(init.out.find("parameters") != std::string::npos);
    REQUIRE(run_cli({"--config", cfg, "infer", "-m", r + "/proj/manifest.csv", "-c", r + "/net.rdn", "-o", r + "/n1"})
                .code == 0);
    REQUIRE(run_cli({"--config", cfg, "-j", "2", "infer", "-m", r + "/proj/manifest.csv", "-c", r + "/net.rdn", "-o",
                     r + "/n2"})
                .code == 0);
    for (const char* id : {"city.rdh", "rural.rdh"}) {
        CHECK(test::read_bytes(dir / "n1" / id) == test::read_bytes(dir / "n2" / id));
    }
    const Result other = run_cli({"--config", cfg, "--set", "network.use_cbam=false", "infer", "-m",
                                  r + "/proj/manifest.csv", "-c", r + "/net.rdn", "-o", r + "/n3"});
    CHECK(other.code == 1);
    CHECK(other.err.find("fingerprint") != std::string::npos);
    // The default sensor does not match projections made for the desk sensor.
    CHECK(run_cli({"infer", "-m", r + "/proj/manifest.csv", "--inject-gt", r + "/data/labels", "-o", r + "/n4"}).code ==
          1);
    CHECK(run_cli({"--config", cfg, "infer", "-m", r + "/proj/manifest.csv", "-o", r + "/n5"}).code == 1);
}

TEST_CASE("gradcheck passes and bench validates its frame count")
{
    const Result grad = run_cli({"--set", "gradcheck.instances=20", "gradcheck", "--seed", "3"});
    CHECK(grad.code == 0);
    CHECK(grad.out.find("FAIL") == std::string::npos);
    CHECK(grad.out.find("max relative error") != std::string::npos);

    test::TempDir dir;
    io::write_file_atomic(dir / "desk.ini", kDeskIni);
    const std::string cfg = (dir / "desk.ini").string();
    CHECK(run_cli({"--config", cfg, "bench", "-n", "0"}).code == 1);
    const Result bench = run_cli({"--config", cfg, "bench", "-n", "2"});
    REQUIRE(bench.code == 0);
    for (const char* stage : {"backbone", "neck", "heads", "end-to-end", "informational only"}) {
        CHECK(bench.out.find(stage) != std::string::npos);
    }
}

TEST_CASE("usage errors and help")
{
    CHECK(run_cli({}).code == 1);
    CHECK(run_cli({"frobnicate"}).code == 1);
    CHECK(run_cli({"--help"}).code == 0);
    CHECK(run_cli({"bench"}).code == 1);
    CHECK(run_cli({"--config", "/nonexistent/cfg.ini", "config"}).code == 2);
}
