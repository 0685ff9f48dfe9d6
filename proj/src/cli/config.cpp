#include "radekit/config.hpp"

#include "radekit/box_files.hpp"
#include "radekit/error.hpp"
#include "radekit/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <set>

namespace radekit {

void RunConfig::finalize()
{
    sensor.validate();
    network = network_for(sensor);
    network.validate();
    require(std::isfinite(tau_cls) && tau_cls > 0.0 && tau_cls < 1.0, "decode.tau_cls must lie in (0, 1)");
    require(std::isfinite(nms_iou) && nms_iou > 0.0 && nms_iou <= 1.0, "decode.nms_iou must lie in (0, 1]");
    loss.tau_cls = tau_cls;
    loss.validate();
    eval.validate();
    require(std::isfinite(synth.noise_floor) && synth.noise_floor >= 0.0, "synth.noise_floor must be >= 0");
    for (double w : synth.width_bins) {
        require(std::isfinite(w) && w > 0.0, "synth widths must be > 0");
    }
    require(gradcheck.instances >= 1, "gradcheck.instances must be >= 1");
    require(std::isfinite(gradcheck.step) && gradcheck.step > 0.0, "gradcheck.step must be > 0");
    require(std::isfinite(gradcheck.tolerance) && gradcheck.tolerance > 0.0, "gradcheck.tolerance must be > 0");
}

nn::NetworkConfig RunConfig::network_for(const SensorGeometry& geometry) const
{
    nn::NetworkConfig n = nn::NetworkConfig::for_geometry(geometry, network.n_cls);
    n.use_cbam = network.use_cbam;
    n.use_dilated_neck = network.use_dilated_neck;
    n.use_expanded_heads = network.use_expanded_heads;
    n.use_input_stem = network.use_input_stem;
    n.use_feature_expansion = network.use_feature_expansion;
    n.groupnorm_groups = network.groupnorm_groups;
    n.cbam_reduction = network.cbam_reduction;
    n.seed = network.seed;
    return n;
}

namespace {

template <typename T>
T parse_unsigned(std::string_view text)
{
    T v{};
    const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size()) {
        fail(ErrorKind::validation, "expected a non-negative integer, got '" + std::string(text) + "'");
    }
    return v;
}

double parse_real(std::string_view text)
{
    double v = 0.0;
    const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size() || !std::isfinite(v)) {
        fail(ErrorKind::validation, "expected a finite number, got '" + std::string(text) + "'");
    }
    return v;
}

bool parse_bool(std::string_view text)
{
    if (text == "true" || text == "1" || text == "on" || text == "yes") {
        return true;
    }
    if (text == "false" || text == "0" || text == "off" || text == "no") {
        return false;
    }
    fail(ErrorKind::validation, "expected true or false, got '" + std::string(text) + "'");
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split_list(std::string_view text)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = text.find(',', start);
        out.push_back(trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) {
            return out;
        }
        start = comma + 1;
    }
}

std::string join(const std::vector<std::string>& parts)
{
    std::string out;
    for (const std::string& p : parts) {
        out += (out.empty() ? "" : ",") + p;
    }
    return out;
}

struct Field {
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, std::string_view)> set;
};

using Fields = std::map<std::string, Field>;

#define RK_REAL(key, expr)                                                                  \
    f[key] = {[](const RunConfig& c) { return format_number(c.expr); },                     \
              [](RunConfig& c, std::string_view v) { c.expr = parse_real(v); }}
#define RK_UINT(key, type, expr)                                                            \
    f[key] = {[](const RunConfig& c) { return std::to_string(c.expr); },                    \
              [](RunConfig& c, std::string_view v) { c.expr = parse_unsigned<type>(v); }}
#define RK_BOOL(key, expr)                                                                  \
    f[key] = {[](const RunConfig& c) { return std::string(c.expr ? "true" : "false"); },    \
              [](RunConfig& c, std::string_view v) { c.expr = parse_bool(v); }}

const Fields& fields()
{
    static const Fields table = [] {
        Fields f;
        RK_UINT("sensor.n_r", std::uint32_t, sensor.n_r);
        RK_UINT("sensor.n_a", std::uint32_t, sensor.n_a);
        RK_UINT("sensor.n_d", std::uint32_t, sensor.n_d);
        RK_UINT("sensor.n_e", std::uint32_t, sensor.n_e);
        RK_REAL("sensor.range_max", sensor.range_max);
        RK_REAL("sensor.azimuth_fov", sensor.azimuth_fov);
        RK_REAL("sensor.elevation_fov", sensor.elevation_fov);
        RK_REAL("sensor.doppler_max", sensor.doppler_max);
        RK_REAL("sensor.z0", sensor.z0);

        RK_UINT("network.n_cls", std::uint32_t, network.n_cls);
        RK_BOOL("network.use_cbam", network.use_cbam);
        RK_BOOL("network.use_dilated_neck", network.use_dilated_neck);
        RK_BOOL("network.use_expanded_heads", network.use_expanded_heads);
        RK_BOOL("network.use_input_stem", network.use_input_stem);
        RK_BOOL("network.use_feature_expansion", network.use_feature_expansion);
        RK_UINT("network.groupnorm_groups", std::uint32_t, network.groupnorm_groups);
        RK_UINT("network.cbam_reduction", std::uint32_t, network.cbam_reduction);
        RK_UINT("network.seed", std::uint64_t, network.seed);

        RK_REAL("decode.tau_cls", tau_cls);
        RK_REAL("decode.nms_iou", nms_iou);

        RK_REAL("loss.sigma", loss.sigma);
        RK_REAL("loss.alpha", loss.alpha);
        RK_REAL("loss.gamma", loss.gamma);
        RK_REAL("loss.epsilon", loss.epsilon);
        RK_REAL("loss.tau", loss.tau);
        RK_REAL("loss.beta", loss.beta);
        RK_REAL("loss.weight_focal", loss.weight_focal);
        RK_REAL("loss.weight_gwd", loss.weight_gwd);
        RK_REAL("loss.weight_l1", loss.weight_l1);
        RK_REAL("loss.match_iou", loss.match_iou);
        RK_BOOL("loss.gwd_bev_only", loss.gwd_bev_only);

        RK_REAL("eval.roi_x_min", eval.roi.x_min);
        RK_REAL("eval.roi_x_max", eval.roi.x_max);
        RK_REAL("eval.roi_y_min", eval.roi.y_min);
        RK_REAL("eval.roi_y_max", eval.roi.y_max);
        RK_REAL("eval.roi_z_min", eval.roi.z_min);
        RK_REAL("eval.roi_z_max", eval.roi.z_max);
        f["eval.iou_thresholds"] = {
            [](const RunConfig& c) {
                std::vector<std::string> parts;
                for (double t : c.eval.iou_thresholds) {
                    parts.push_back(format_number(t));
                }
                return join(parts);
            },
            [](RunConfig& c, std::string_view v) {
                c.eval.iou_thresholds.clear();
                for (std::string_view p : split_list(v)) {
                    c.eval.iou_thresholds.push_back(parse_real(p));
                }
            }};
        f["eval.metrics"] = {
            [](const RunConfig& c) {
                std::vector<std::string> parts;
                for (eval::Metric m : c.eval.metrics) {
                    parts.push_back(eval::metric_name(m));
                }
                return join(parts);
            },
            [](RunConfig& c, std::string_view v) {
                c.eval.metrics.clear();
                for (std::string_view p : split_list(v)) {
                    if (p == "3D") {
                        c.eval.metrics.push_back(eval::Metric::box3d);
                    } else if (p == "BEV") {
                        c.eval.metrics.push_back(eval::Metric::bev);
                    } else {
                        fail(ErrorKind::validation, "unknown metric '" + std::string(p) + "' (expected 3D or BEV)");
                    }
                }
            }};
        f["eval.interpolation"] = {
            [](const RunConfig& c) { return std::string(eval::interpolation_name(c.eval.interpolation)); },
            [](RunConfig& c, std::string_view v) { c.eval.interpolation = eval::parse_interpolation(std::string(v)); }};
        f["eval.class_names"] = {
            [](const RunConfig& c) {
                std::vector<std::string> parts;
                for (const auto& [id, name] : c.eval.class_names) {
                    parts.push_back(std::to_string(id) + ":" + name);
                }
                return join(parts);
            },
            [](RunConfig& c, std::string_view v) {
                c.eval.class_names.clear();
                if (v.empty()) {
                    return;
                }
                for (std::string_view p : split_list(v)) {
                    const std::size_t colon = p.find(':');
                    require(colon != std::string_view::npos, "class names are written id:name");
                    const std::string name(trim(p.substr(colon + 1)));
                    require(!name.empty() && name.find(',') == std::string::npos, "class name must be non-empty");
                    c.eval.class_names[parse_unsigned<int>(trim(p.substr(0, colon)))] = name;
                }
            }};

        RK_REAL("synth.noise_floor", synth.noise_floor);
        RK_UINT("synth.seed", std::uint64_t, synth.seed);
        RK_REAL("synth.width_range", synth.width_bins[0]);
        RK_REAL("synth.width_azimuth", synth.width_bins[1]);
        RK_REAL("synth.width_doppler", synth.width_bins[2]);
        RK_REAL("synth.width_elevation", synth.width_bins[3]);

        RK_UINT("gradcheck.seed", std::uint64_t, gradcheck.seed);
        RK_UINT("gradcheck.instances", std::uint32_t, gradcheck.instances);
        RK_REAL("gradcheck.step", gradcheck.step);
        RK_REAL("gradcheck.tolerance", gradcheck.tolerance);

        RK_UINT("run.jobs", std::uint32_t, jobs);
        return f;
    }();
    return table;
}

#undef RK_REAL
#undef RK_UINT
#undef RK_BOOL

void set_key(RunConfig& config, const std::string& key, std::string_view value, const std::string& where)
{
    const auto it = fields().find(key);
    if (it == fields().end()) {
        fail(ErrorKind::validation, where + "unknown config key '" + key + "'");
    }
    try {
        it->second.set(config, value);
    } catch (const Error& e) {
        fail(ErrorKind::validation, where + key + ": " + e.what());
    }
}

}  // namespace

std::vector<std::string> config_keys()
{
    std::vector<std::string> out;
    for (const auto& [k, f] : fields()) {
        out.push_back(k);
    }
    return out;
}

RunConfig parse_config(std::string_view text, const std::string& source, RunConfig base)
{
    std::string section;
    std::set<std::string> seen;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const std::string where = source + ":" + std::to_string(line_no) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                fail(ErrorKind::validation, where + "malformed section header");
            }
            section = std::string(trim(line.substr(1, line.size() - 2)));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            fail(ErrorKind::validation, where + "expected 'key = value'");
        }
        if (section.empty()) {
            fail(ErrorKind::validation, where + "key outside of a [section]");
        }
        const std::string key = section + "." + std::string(trim(line.substr(0, eq)));
        if (!seen.insert(key).second) {
            fail(ErrorKind::validation, where + "repeated key '" + key + "'");
        }
        set_key(base, key, trim(line.substr(eq + 1)), where);
    }
    return base;
}

void apply_override(RunConfig& config, std::string_view assignment)
{
    const std::size_t eq = assignment.find('=');
    if (eq == std::string_view::npos) {
        fail(ErrorKind::validation, "override '" + std::string(assignment) + "' is not section.key=value");
    }
    const std::string key(trim(assignment.substr(0, eq)));
    set_key(config, key, trim(assignment.substr(eq + 1)), "--set ");
}

std::string dump_config(const RunConfig& config)
{
    std::string out;
    std::string section;
    for (const auto& [key, field] : fields()) {
        const std::size_t dot = key.find('.');
        const std::string s = key.substr(0, dot);
        if (s != section) {
            out += (out.empty() ? "" : "\n") + ("[" + s + "]\n");
            section = s;
        }
        out += key.substr(dot + 1) + " = " + field.get(config) + "\n";
    }
    return out;
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& path, const std::vector<std::string>& overrides)
{
    RunConfig config;
    std::optional<std::filesystem::path> file = path;
    if (!file) {
        if (const char* env = std::getenv("RADEKIT_CONFIG"); env != nullptr && *env != '\0') {
            file = std::filesystem::path(env);
        }
    }
    if (file) {
        config = parse_config(io::read_file(*file), file->string(), config);
    }
    for (const std::string& o : overrides) {
        apply_override(config, o);
    }
    config.finalize();
    return config;
}

}  // namespace radekit
