#include "radekit/box_files.hpp"
#include "radekit/error.hpp"
#include "radekit/evaluation.hpp"
#include "radekit/manifest.hpp"

#include "../support/oracles.hpp"
#include "../support/test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace radekit;
using namespace radekit::eval;
using namespace radekit::test;

namespace {

std::vector<FrameData> as_frames(const ApInstance& in)
{
    std::vector<FrameData> frames;
    for (std::size_t f = 0; f < in.preds.size(); ++f) {
        frames.push_back({"f" + std::to_string(100 + f), f % 2 ? "rain" : "normal", in.preds[f], in.gts[f]});
    }
    return frames;
}

EvalConfig wide_roi_config()
{
    EvalConfig c;
    c.roi = Roi{-100, 100, -100, 100, -100, 100};
    return c;
}

}  // namespace

TEST_CASE("roi membership uses closed intervals on the box center")
{
    const Roi roi;
    CHECK(roi.contains(Box3D{36, 0, 1, 4, 2, 1.5, 0}));
    CHECK_FALSE(roi.contains(Box3D{80, 0, 1, 4, 2, 1.5, 0}));
    CHECK(roi.contains(Box3D{72, 6.4, 6, 4, 2, 1.5, 0}));
    CHECK(roi.contains(Box3D{0, -6.4, -2, 4, 2, 1.5, 0}));
    CHECK_FALSE(roi.contains(Box3D{10, 6.41, 0, 4, 2, 1.5, 0}));
    CHECK_FALSE(roi.contains(Box3D{10, 0, -2.01, 4, 2, 1.5, 0}));
    const std::vector<Detection> dets{{car(36, 0), 1, 0.5}, {car(80, 0), 1, 0.6}};
    CHECK(filter_roi(dets, roi).size() == 1);
    CHECK_THROWS_AS((Roi{5, 5, -1, 1, -1, 1}.validate()), Error);
}

TEST_CASE("trivial AP cases")
{
    const std::vector<LabeledBox> gts{{1, car(20, 0)}};
    CHECK(average_precision(std::vector<Detection>{{car(20, 0), 1, 0.9}}, gts, 1, Metric::box3d, 0.5) == 1.0);
    CHECK(average_precision(std::vector<Detection>{{car(20, 0), 1, 0.9}}, gts, 1, Metric::bev, 0.5,
                            Interpolation::exact) == 1.0);
    CHECK(average_precision(std::vector<Detection>{{car(23, 0), 1, 0.9}}, gts, 1, Metric::bev, 0.5) == 0.0);
    CHECK(average_precision(std::vector<Detection>{}, gts, 1, Metric::bev, 0.5) == 0.0);
    CHECK_FALSE(average_precision(std::vector<Detection>{{car(20, 0), 1, 0.9}}, gts, 2, Metric::bev, 0.5).has_value());
    CHECK_THROWS_AS(average_precision(std::vector<Detection>{}, gts, 1, Metric::bev, 0.0), Error);
    CHECK_THROWS_AS(average_precision(std::vector<Detection>{}, gts, 1, Metric::bev, 1.5), Error);
    // Wrong class never matches.
    CHECK(average_precision(std::vector<Detection>{{car(20, 0), 2, 0.9}}, gts, 1, Metric::bev, 0.5) == 0.0);
}

TEST_CASE("precision envelope handles a false positive ranked first")
{
    const std::vector<LabeledBox> gts{{1, car(20, 0)}, {1, car(40, 0)}};
    const std::vector<Detection> preds{{car(30, 3), 1, 0.95}, {car(20, 0), 1, 0.9}, {car(40, 0), 1, 0.8}};
    // Precision 1/2 at recall 1/2 and 2/3 at recall 1: envelope is 2/3 throughout.
    CHECK(*average_precision(preds, gts, 1, Metric::bev, 0.5, Interpolation::exact) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(*average_precision(preds, gts, 1, Metric::bev, 0.5) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("AP agrees with threshold enumeration on random instances")
{
    Rng rng(61);
    std::size_t with_tp = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const ApInstance in = random_ap_instance(rng, 1 + rng.index(3));
        const double thr = trial % 2 ? 0.3 : 0.5;
        const Metric metric = trial % 3 ? Metric::bev : Metric::box3d;
        Accumulator acc(metric, thr);
        for (std::size_t f = 0; f < in.preds.size(); ++f) {
            acc.add_frame(in.preds[f], in.gts[f], f);
        }
        for (int c : {1, 2}) {
            std::size_t n_gt = 0;
            const double expected = reference_ap(in, c, metric, thr, &n_gt);
            const auto exact = acc.ap(c, Interpolation::exact);
            const auto forty = acc.ap(c, Interpolation::forty_point);
            if (n_gt == 0) {
                REQUIRE_FALSE(exact.has_value());
                REQUIRE_FALSE(forty.has_value());
                continue;
            }
            REQUIRE(exact.has_value());
            REQUIRE(std::abs(*exact - expected) < 1e-9);
            // Forty recall samples can differ from the area by at most one sample width.
            REQUIRE(std::abs(*forty - *exact) <= 1.0 / 40.0 + 1e-12);
            REQUIRE(*forty >= 0.0);
            REQUIRE(*forty <= 1.0);
            with_tp += expected > 0.0;
        }
    }
    CHECK(with_tp > 100);
}

TEST_CASE("removing a false positive never lowers AP and removing a true positive never raises it")
{
    Rng rng(62);
    for (int trial = 0; trial < 200; ++trial) {
        const ApInstance in = random_ap_instance(rng, 1);
        const auto& preds = in.preds[0];
        const auto& gts = in.gts[0];
        const auto base = average_precision(preds, gts, 1, Metric::bev, 0.3, Interpolation::exact);
        if (!base) {
            continue;
        }
        const auto hits = match_class(preds, gts, 1, Metric::bev, 0.3);
        // match_class reports hits in score order; map them back to predictions.
        std::vector<Detection> ones;
        for (const Detection& d : preds) {
            if (d.class_id == 1) {
                ones.push_back(d);
            }
        }
        std::sort(ones.begin(), ones.end(), score_order);
        REQUIRE(ones.size() == hits.size());
        for (std::size_t i = 0; i < ones.size(); ++i) {
            // A false positive holds no ground truth, so dropping it leaves every other match intact.
            // A true positive can only be dropped safely from the bottom of the ranking.
            if (hits[i].true_positive && i + 1 != ones.size()) {
                continue;
            }
            std::vector<Detection> fewer = ones;
            fewer.erase(fewer.begin() + static_cast<std::ptrdiff_t>(i));
            const double after = *average_precision(fewer, gts, 1, Metric::bev, 0.3, Interpolation::exact);
            if (hits[i].true_positive) {
                REQUIRE(after <= *base + 1e-12);
            } else {
                REQUIRE(after >= *base - 1e-12);
            }
        }
    }
}

TEST_CASE("evaluate reports per-class AP and their mean")
{
    Rng rng(63);
    const ApInstance in = random_ap_instance(rng, 12);
    EvalConfig cfg = wide_roi_config();
    cfg.interpolation = Interpolation::exact;
    const EvalResult result = evaluate(as_frames(in), cfg);
    for (double thr : cfg.iou_thresholds) {
        for (Metric metric : cfg.metrics) {
            double sum = 0.0;
            int defined = 0;
            for (int c : {1, 2}) {
                const ApRow* row = result.find(c, kTotalCondition, metric, thr);
                REQUIRE(row != nullptr);
                std::size_t n_gt = 0;
                const double expected = reference_ap(in, c, metric, thr, &n_gt);
                if (n_gt > 0) {
                    REQUIRE(row->ap.has_value());
                    CHECK(std::abs(*row->ap - expected) < 1e-9);
                    sum += *row->ap;
                    ++defined;
                }
                CHECK(row->counts.tp + row->counts.fn == n_gt);
            }
            REQUIRE(defined > 0);
            CHECK(*result.map(kTotalCondition, metric, thr) == sum / defined);
            CHECK(result.find(1, "rain", metric, thr) != nullptr);
            CHECK(result.find(1, "normal", metric, thr) != nullptr);
        }
    }
}

TEST_CASE("perfect predictions score one and missing predictions score zero")
{
    std::vector<FrameData> frames;
    for (int f = 0; f < 5; ++f) {
        FrameData fd{"frame" + std::to_string(f), "", {}, {}};
        for (int i = 0; i < 3; ++i) {
            const Box3D b = car(10 + 12 * i, -3 + f, 0.1 * i);
            fd.gts.push_back({1 + i % 2, b});
            fd.preds.push_back({b, 1 + i % 2, 0.5 + 0.1 * i});
        }
        frames.push_back(fd);
    }
    const EvalResult perfect = evaluate(frames, EvalConfig{});
    for (const ApRow& row : perfect.rows) {
        REQUIRE(row.ap.has_value());
        CHECK(*row.ap == 1.0);
    }
    for (FrameData& f : frames) {
        f.preds.clear();
    }
    const EvalResult none = evaluate(frames, EvalConfig{});
    for (const ApRow& row : none.rows) {
        REQUIRE(row.ap.has_value());
        CHECK(*row.ap == 0.0);
        CHECK(row.counts.tp == 0);
    }
}

TEST_CASE("evaluation is invariant to frame, prediction and label order")
{
    Rng rng(64);
    const ApInstance in = random_ap_instance(rng, 10);
    std::vector<FrameData> frames = as_frames(in);
    const EvalConfig cfg = wide_roi_config();
    const std::string reference = format_csv(evaluate(frames, cfg), cfg);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<FrameData> shuffled = frames;
        for (std::size_t i = shuffled.size(); i > 1; --i) {
            std::swap(shuffled[i - 1], shuffled[rng.index(i)]);
        }
        for (FrameData& f : shuffled) {
            std::reverse(f.preds.begin(), f.preds.end());
            std::reverse(f.gts.begin(), f.gts.end());
        }
        CHECK(format_csv(evaluate(shuffled, cfg, 1 + trial % 4), cfg) == reference);
    }
    frames.push_back(frames.front());
    CHECK_THROWS_AS(evaluate(frames, cfg), Error);
}

TEST_CASE("classes without ground truth are undefined and excluded from the mean")
{
    std::vector<FrameData> frames{{"a", "", {{car(20, 0), 1, 0.9}, {car(30, 0), 3, 0.8}}, {{1, car(20, 0)}}}};
    const EvalConfig cfg;
    const EvalResult r = evaluate(frames, cfg);
    const ApRow* row = r.find(3, kTotalCondition, Metric::bev, 0.3);
    REQUIRE(row != nullptr);
    CHECK_FALSE(row->ap.has_value());
    CHECK(*r.map(kTotalCondition, Metric::bev, 0.3) == 1.0);
    const std::string csv = format_csv(r, cfg);
    CHECK(csv.rfind("class,condition,metric,iou_thr,AP\n", 0) == 0);
    CHECK(csv.find("Pedestrian,Total,BEV,0.3,nan") != std::string::npos);
    CHECK(csv.find("mAP,Total,BEV,0.3,1") != std::string::npos);
    const std::string table = format_table(r, cfg);
    CHECK(table.find("100.00") != std::string::npos);
    CHECK(table.find("-") != std::string::npos);
    CHECK(format_plot_data(r, cfg).rfind("class,condition,metric,iou_thr,rank,recall,precision\n", 0) == 0);
}

TEST_CASE("roi filtering applies before matching")
{
    // Ground truth outside the region is dropped along with its prediction.
    std::vector<FrameData> frames{{"a", "", {{car(80, 0), 1, 0.9}, {car(20, 0), 1, 0.8}}, {{1, car(80, 0)}, {1, car(20, 0)}}}};
    const EvalResult r = evaluate(frames, EvalConfig{});
    const ApRow* row = r.find(1, kTotalCondition, Metric::box3d, 0.5);
    REQUIRE(row != nullptr);
    CHECK(*row->ap == 1.0);
    CHECK(row->counts == Counts{1, 0, 0});
}

TEST_CASE("manifest parsing")
{
    const auto m = parse_manifest("frame_id,tensor_path,label_path,condition\n# note\n\na,t/a.rdt,l/a.txt,rain\n"
                                  "b,/abs/b.rdt,l/b.txt,\n",
                                  "/data");
    REQUIRE(m.size() == 2);
    CHECK(m[0].frame_id == "a");
    CHECK(m[0].tensor_path == std::filesystem::path("/data/t/a.rdt"));
    CHECK(m[0].condition == "rain");
    CHECK(m[1].tensor_path == std::filesystem::path("/abs/b.rdt"));
    CHECK(m[1].condition.empty());
    CHECK_THROWS_AS(parse_manifest("a,b,c\n", "/"), Error);
    CHECK_THROWS_AS(parse_manifest("a,x,y,z\na,x,y,z\n", "/"), Error);
    CHECK_THROWS_AS(parse_manifest(",x,y,z\n", "/"), Error);

    test::TempDir dir;
    save_manifest(dir / "manifest.csv", m);
    const auto round = load_manifest(dir / "manifest.csv");
    CHECK(round == m);
    std::vector<ManifestEntry> local{{"c", dir / "t" / "c.rdt", dir / "l" / "c.txt", "fog"}};
    CHECK(format_manifest(local, dir.path()).find("c,t/c.rdt,l/c.txt,fog") != std::string::npos);
    CHECK_THROWS_AS(load_manifest(dir / "missing.csv"), Error);
}

TEST_CASE("frame loading warns on missing detections and rejects unknown ones")
{
    test::TempDir dir;
    std::filesystem::create_directories(dir / "labels");
    std::filesystem::create_directories(dir / "dets");
    std::vector<ManifestEntry> m;
    for (const char* id : {"a", "b"}) {
        save_labels(dir / "labels" / (std::string(id) + ".txt"), {{1, car(20, 0)}});
        m.push_back({id, "", dir / "labels" / (std::string(id) + ".txt"), "normal"});
    }
    save_detections(detection_path(dir / "dets", "a"), {{car(20, 0), 1, 0.9}});
    std::vector<std::string> warnings;
    const auto frames = load_frames(m, dir / "dets", [&](const std::string& w) { warnings.push_back(w); });
    REQUIRE(frames.size() == 2);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("b") != std::string::npos);
    CHECK(frames[1].preds.empty());
    CHECK(frames[1].gts.size() == 1);
    const EvalResult r = evaluate(frames, EvalConfig{});
    CHECK(*r.find(1, kTotalCondition, Metric::bev, 0.5)->ap == doctest::Approx(0.5));

    save_detections(detection_path(dir / "dets", "zzz"), {});
    CHECK_THROWS_AS(load_frames(m, dir / "dets", [](const std::string&) {}), Error);
}

TEST_CASE("interpolation names parse")
{
    CHECK(parse_interpolation("40-point") == Interpolation::forty_point);
    CHECK(parse_interpolation("40") == Interpolation::forty_point);
    CHECK(parse_interpolation("exact") == Interpolation::exact);
    CHECK_THROWS_AS(parse_interpolation("11"), Error);
    CHECK(std::string(metric_name(Metric::bev)) == "BEV");
}
