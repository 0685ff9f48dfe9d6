#pragma once

#include "radekit/geometry.hpp"
#include "radekit/manifest.hpp"

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace radekit::eval {

// Axis-aligned region in the sensor frame; membership is by box center on
// closed intervals.
struct Roi {
    double x_min = 0.0, x_max = 72.0;
    double y_min = -6.4, y_max = 6.4;
    double z_min = -2.0, z_max = 6.0;

    void validate() const;
    bool contains(const Box3D& box) const;
};

std::vector<Detection> filter_roi(std::span<const Detection> items, const Roi& roi);
std::vector<LabeledBox> filter_roi(std::span<const LabeledBox> items, const Roi& roi);

enum class Metric { box3d, bev };
const char* metric_name(Metric metric);  // "3D" or "BEV"

enum class Interpolation {
    forty_point,  // mean of max precision at recall >= k/40, k = 1..40
    exact,        // area under the monotone precision envelope
};
const char* interpolation_name(Interpolation mode);
Interpolation parse_interpolation(const std::string& text);

// One scored prediction after matching. Keys order the dataset-level ranking:
// descending score, then ascending coordinates, then frame.
struct Hit {
    double score = 0.0;
    double x = 0.0, y = 0.0, z = 0.0;
    std::size_t frame = 0;
    bool true_positive = false;
};

bool hit_order(const Hit& a, const Hit& b);

// Greedy one-to-one matching within a single frame and class: predictions in
// score order each take the highest-IoU unmatched ground truth with IoU >= thr.
std::vector<Hit> match_class(std::span<const Detection> preds, std::span<const LabeledBox> gts, int class_id,
                             Metric metric, double iou_thr, std::size_t frame = 0);

// Every class present in either list, ascending.
std::vector<int> classes_present(std::span<const Detection> preds, std::span<const LabeledBox> gts);

struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
};

// Hits must already be in hit_order.
std::vector<PrPoint> pr_curve(std::span<const Hit> hits, std::size_t n_gt);
std::optional<double> ap_from_hits(std::span<const Hit> hits, std::size_t n_gt, Interpolation mode);

// Single-frame convenience; empty when the class has no ground truth.
std::optional<double> average_precision(std::span<const Detection> preds, std::span<const LabeledBox> gts,
                                        int class_id, Metric metric, double iou_thr,
                                        Interpolation mode = Interpolation::forty_point);

struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0;
    bool operator==(const Counts&) const = default;
};

// Dataset-level accumulation: matches from all frames share one ranking.
class Accumulator {
public:
    Accumulator(Metric metric, double iou_thr);

    void add_frame(std::span<const Detection> preds, std::span<const LabeledBox> gts, std::size_t frame);
    void add_hits(int class_id, std::span<const Hit> hits, std::size_t n_gt);

    std::vector<int> classes() const;
    std::optional<double> ap(int class_id, Interpolation mode) const;
    std::vector<PrPoint> curve(int class_id) const;
    Counts counts(int class_id) const;

private:
    struct PerClass {
        std::vector<Hit> hits;
        std::size_t n_gt = 0;
    };
    const PerClass* find(int class_id) const;
    std::vector<Hit> sorted_hits(const PerClass& pc) const;

    Metric metric_;
    double iou_thr_;
    std::map<int, PerClass> per_class_;
};

struct FrameData {
    std::string frame_id;
    std::string condition;
    std::vector<Detection> preds;
    std::vector<LabeledBox> gts;
};

struct EvalConfig {
    Roi roi;
    std::vector<double> iou_thresholds{0.3, 0.5};
    std::vector<Metric> metrics{Metric::box3d, Metric::bev};
    Interpolation interpolation = Interpolation::forty_point;
    std::map<int, std::string> class_names{{1, "Sedan"}, {2, "Bus or Truck"}, {3, "Pedestrian"}, {4, "Bicycle"}};

    void validate() const;
    std::string class_name(int class_id) const;
};

inline constexpr const char* kTotalCondition = "Total";
inline constexpr int kMeanClass = -1;  // row key for mAP

struct ApRow {
    int class_id = 0;  // kMeanClass for the mAP row
    std::string condition;
    Metric metric = Metric::box3d;
    double iou_thr = 0.0;
    std::optional<double> ap;
    Counts counts;  // summed over classes for the mAP row
};

struct CurveRow {
    int class_id = 0;
    std::string condition;
    Metric metric = Metric::box3d;
    double iou_thr = 0.0;
    std::vector<PrPoint> points;
};

struct EvalResult {
    std::vector<ApRow> rows;
    std::vector<CurveRow> curves;

    const ApRow* find(int class_id, const std::string& condition, Metric metric, double iou_thr) const;
    std::optional<double> map(const std::string& condition, Metric metric, double iou_thr) const;
};

// Frames are ranked by frame id before scoring, so neither frame order nor
// prediction order affects the result. Conditions are reported after "Total".
EvalResult evaluate(std::vector<FrameData> frames, const EvalConfig& config, std::size_t jobs = 1);

// Reads label files named by the manifest and "<frame_id>.txt" detection files
// from det_dir. A frame without a detection file contributes only false
// negatives; warn() receives one message per such frame. A detection file
// whose frame id is not in the manifest is an error.
std::vector<FrameData> load_frames(const std::vector<ManifestEntry>& manifest, const std::filesystem::path& det_dir,
                                   const std::function<void(const std::string&)>& warn);

std::filesystem::path detection_path(const std::filesystem::path& det_dir, const std::string& frame_id);

std::string format_csv(const EvalResult& result, const EvalConfig& config);
std::string format_table(const EvalResult& result, const EvalConfig& config);
std::string format_plot_data(const EvalResult& result, const EvalConfig& config);

}  // namespace radekit::eval
