#include "radekit/evaluation.hpp"

#include "radekit/box_files.hpp"
#include "radekit/error.hpp"
#include "radekit/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace radekit::eval {

void EvalConfig::validate() const
{
    roi.validate();
    require(!iou_thresholds.empty(), "at least one IoU threshold is required");
    for (double t : iou_thresholds) {
        require(std::isfinite(t) && t > 0.0 && t <= 1.0, "IoU threshold must lie in (0, 1]");
    }
    require(!metrics.empty(), "at least one metric is required");
}

std::string EvalConfig::class_name(int class_id) const
{
    if (class_id == kMeanClass) {
        return "mAP";
    }
    const auto it = class_names.find(class_id);
    return it == class_names.end() ? "class" + std::to_string(class_id) : it->second;
}

const ApRow* EvalResult::find(int class_id, const std::string& condition, Metric metric, double iou_thr) const
{
    for (const ApRow& r : rows) {
        if (r.class_id == class_id && r.condition == condition && r.metric == metric && r.iou_thr == iou_thr) {
            return &r;
        }
    }
    return nullptr;
}

std::optional<double> EvalResult::map(const std::string& condition, Metric metric, double iou_thr) const
{
    const ApRow* r = find(kMeanClass, condition, metric, iou_thr);
    return r == nullptr ? std::nullopt : r->ap;
}

namespace {

struct ClassHits {
    int class_id;
    std::vector<Hit> hits;
    std::size_t n_gt;
};

}  // namespace

EvalResult evaluate(std::vector<FrameData> frames, const EvalConfig& config, std::size_t jobs)
{
    config.validate();
    std::sort(frames.begin(), frames.end(),
              [](const FrameData& a, const FrameData& b) { return a.frame_id < b.frame_id; });
    for (std::size_t i = 1; i < frames.size(); ++i) {
        if (frames[i].frame_id == frames[i - 1].frame_id) {
            fail(ErrorKind::mismatch, "duplicate frame id " + frames[i].frame_id);
        }
    }
    std::set<int> class_set;
    std::set<std::string> condition_set;
    for (FrameData& f : frames) {
        f.preds = filter_roi(f.preds, config.roi);
        f.gts = filter_roi(f.gts, config.roi);
        for (int c : classes_present(f.preds, f.gts)) {
            class_set.insert(c);
        }
        if (!f.condition.empty() && f.condition != kTotalCondition) {
            condition_set.insert(f.condition);
        }
    }
    std::vector<std::string> conditions{kTotalCondition};
    conditions.insert(conditions.end(), condition_set.begin(), condition_set.end());

    EvalResult result;
    for (double thr : config.iou_thresholds) {
        for (Metric metric : config.metrics) {
            std::vector<std::vector<ClassHits>> per_frame(frames.size());
            parallel_for(frames.size(), jobs, [&](std::size_t i) {
                const FrameData& f = frames[i];
                for (int c : classes_present(f.preds, f.gts)) {
                    const auto n_gt = static_cast<std::size_t>(std::count_if(
                        f.gts.begin(), f.gts.end(), [&](const LabeledBox& b) { return b.class_id == c; }));
                    per_frame[i].push_back(ClassHits{c, match_class(f.preds, f.gts, c, metric, thr, i), n_gt});
                }
            });
            for (const std::string& cond : conditions) {
                Accumulator acc(metric, thr);
                for (std::size_t i = 0; i < frames.size(); ++i) {
                    if (cond != kTotalCondition && frames[i].condition != cond) {
                        continue;
                    }
                    for (const ClassHits& ch : per_frame[i]) {
                        acc.add_hits(ch.class_id, ch.hits, ch.n_gt);
                    }
                }
                double sum = 0.0;
                std::size_t defined = 0;
                Counts total;
                for (int c : class_set) {
                    ApRow row{c, cond, metric, thr, acc.ap(c, config.interpolation), acc.counts(c)};
                    if (row.ap) {
                        sum += *row.ap;
                        ++defined;
                    }
                    total.tp += row.counts.tp;
                    total.fp += row.counts.fp;
                    total.fn += row.counts.fn;
                    result.rows.push_back(row);
                    result.curves.push_back(CurveRow{c, cond, metric, thr, acc.curve(c)});
                }
                std::optional<double> mean;
                if (defined > 0) {
                    mean = sum / static_cast<double>(defined);
                }
                result.rows.push_back(ApRow{kMeanClass, cond, metric, thr, mean, total});
            }
        }
    }
    return result;
}

std::filesystem::path detection_path(const std::filesystem::path& det_dir, const std::string& frame_id)
{
    return det_dir / (frame_id + ".txt");
}

std::vector<FrameData> load_frames(const std::vector<ManifestEntry>& manifest, const std::filesystem::path& det_dir,
                                   const std::function<void(const std::string&)>& warn)
{
    std::set<std::string> ids;
    for (const ManifestEntry& e : manifest) {
        if (!ids.insert(e.frame_id).second) {
            fail(ErrorKind::mismatch, "duplicate frame id " + e.frame_id + " in manifest");
        }
    }
    std::error_code ec;
    if (!std::filesystem::is_directory(det_dir, ec)) {
        fail(ErrorKind::io, "detection directory not found: " + det_dir.string());
    }
    std::vector<std::string> extra;
    for (const auto& entry : std::filesystem::directory_iterator(det_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt" && !ids.count(entry.path().stem().string())) {
            extra.push_back(entry.path().filename().string());
        }
    }
    if (!extra.empty()) {
        std::sort(extra.begin(), extra.end());
        fail(ErrorKind::mismatch, "detection file " + extra.front() + " has no manifest entry");
    }
    std::vector<FrameData> frames;
    frames.reserve(manifest.size());
    for (const ManifestEntry& e : manifest) {
        if (e.label_path.empty()) {
            fail(ErrorKind::mismatch, "frame " + e.frame_id + " has no label path");
        }
        FrameData f{e.frame_id, e.condition, {}, load_labels(e.label_path)};
        const std::filesystem::path det = detection_path(det_dir, e.frame_id);
        if (std::filesystem::exists(det, ec)) {
            f.preds = load_detections(det);
        } else if (warn) {
            warn("no detections for frame " + e.frame_id + "; counting its labels as false negatives");
        }
        frames.push_back(std::move(f));
    }
    return frames;
}

namespace {

std::string ap_text(const std::optional<double>& ap)
{
    return ap ? format_number(*ap) : "nan";
}

std::string percent_text(const std::optional<double>& ap)
{
    if (!ap) {
        return "-";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * *ap);
    return buf;
}

std::string pad(std::string s, std::size_t width)
{
    if (s.size() < width) {
        s.append(width - s.size(), ' ');
    }
    return s;
}

std::string pad_left(std::string s, std::size_t width)
{
    if (s.size() < width) {
        s.insert(0, width - s.size(), ' ');
    }
    return s;
}

}  // namespace

std::string format_csv(const EvalResult& result, const EvalConfig& config)
{
    std::string out = "class,condition,metric,iou_thr,AP\n";
    for (const ApRow& r : result.rows) {
        out += config.class_name(r.class_id) + "," + r.condition + "," + metric_name(r.metric) + "," +
               format_number(r.iou_thr) + "," + ap_text(r.ap) + "\n";
    }
    return out;
}

std::string format_table(const EvalResult& result, const EvalConfig& config)
{
    std::vector<std::string> conditions;
    std::vector<int> classes;
    for (const ApRow& r : result.rows) {
        if (std::find(conditions.begin(), conditions.end(), r.condition) == conditions.end()) {
            conditions.push_back(r.condition);
        }
        if (std::find(classes.begin(), classes.end(), r.class_id) == classes.end()) {
            classes.push_back(r.class_id);
        }
    }
    std::size_t name_w = 5;
    for (int c : classes) {
        name_w = std::max(name_w, config.class_name(c).size());
    }
    name_w += 2;
    const std::size_t cell_w = 8;
    std::size_t cond_w = config.metrics.size() * cell_w;
    for (const std::string& c : conditions) {
        cond_w = std::max(cond_w, c.size() + 2);
    }

    std::string out;
    for (double thr : config.iou_thresholds) {
        out += "AP [%] at IoU " + format_number(thr) + " (" + interpolation_name(config.interpolation) + ")\n";
        std::string head = pad("", name_w);
        std::string sub = pad("", name_w);
        for (const std::string& cond : conditions) {
            head += "| " + pad(cond, cond_w) + " ";
            std::string cells;
            for (Metric m : config.metrics) {
                cells += pad_left(metric_name(m), cell_w);
            }
            sub += "| " + pad(cells, cond_w) + " ";
        }
        out += head + "\n" + sub + "\n";
        for (int c : classes) {
            std::string line = pad(config.class_name(c), name_w);
            for (const std::string& cond : conditions) {
                std::string cells;
                for (Metric m : config.metrics) {
                    const ApRow* r = result.find(c, cond, m, thr);
                    cells += pad_left(percent_text(r ? r->ap : std::nullopt), cell_w);
                }
                line += "| " + pad(cells, cond_w) + " ";
            }
            out += line + "\n";
        }
        out += "\n";
    }
    out += "Counts (" + std::string(kTotalCondition) + ")\n";
    for (double thr : config.iou_thresholds) {
        for (Metric m : config.metrics) {
            for (int c : classes) {
                const ApRow* r = result.find(c, kTotalCondition, m, thr);
                if (r == nullptr) {
                    continue;
                }
                out += pad(config.class_name(c), name_w) + pad(std::string(metric_name(m)) + "@" + format_number(thr), 9) +
                       "TP " + std::to_string(r->counts.tp) + "  FP " + std::to_string(r->counts.fp) + "  FN " +
                       std::to_string(r->counts.fn) + "\n";
            }
        }
    }
    return out;
}

std::string format_plot_data(const EvalResult& result, const EvalConfig& config)
{
    std::string out = "class,condition,metric,iou_thr,rank,recall,precision\n";
    for (const CurveRow& c : result.curves) {
        for (std::size_t i = 0; i < c.points.size(); ++i) {
            out += config.class_name(c.class_id) + "," + c.condition + "," + metric_name(c.metric) + "," +
                   format_number(c.iou_thr) + "," + std::to_string(i + 1) + "," + format_number(c.points[i].recall) +
                   "," + format_number(c.points[i].precision) + "\n";
        }
    }
    return out;
}

}  // namespace radekit::eval
