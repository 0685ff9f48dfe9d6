#include "radekit/box_files.hpp"

#include "radekit/error.hpp"
#include "radekit/io.hpp"

#include <charconv>
#include <cmath>

namespace radekit {

std::string format_number(double value)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) {
            ++i;
        }
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') {
            ++i;
        }
        if (i > start) {
            out.push_back(line.substr(start, i - start));
        }
    }
    return out;
}

double parse_number(std::string_view field, const std::string& where)
{
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size() || !std::isfinite(v)) {
        fail(ErrorKind::format, where + ": '" + std::string(field) + "' is not a finite number");
    }
    return v;
}

long long parse_integer(std::string_view field, const std::string& where)
{
    long long v = 0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
        fail(ErrorKind::format, where + ": '" + std::string(field) + "' is not an integer");
    }
    return v;
}

namespace {

template <typename Fn>
void for_each_record(std::string_view text, const std::string& source, Fn&& fn)
{
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        const std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        ++line_no;
        const auto fields = split_fields(line);
        if (!fields.empty() && fields[0][0] != '#') {
            fn(fields, source + ":" + std::to_string(line_no));
        }
        if (nl == std::string_view::npos) {
            break;
        }
        pos = nl + 1;
    }
}

Box3D read_box(const std::vector<std::string_view>& f, std::size_t first, const std::string& where)
{
    Box3D b{parse_number(f[first], where),     parse_number(f[first + 1], where), parse_number(f[first + 2], where),
            parse_number(f[first + 3], where), parse_number(f[first + 4], where), parse_number(f[first + 5], where),
            parse_number(f[first + 6], where)};
    try {
        b.validate();
    } catch (const Error& e) {
        fail(ErrorKind::format, where + ": " + e.what());
    }
    return b;
}

void append_box(std::string& out, const Box3D& b)
{
    for (double v : {b.x, b.y, b.z, b.l, b.w, b.h, b.yaw}) {
        out += ' ';
        out += format_number(v);
    }
}

}  // namespace

std::string format_labels(const std::vector<LabeledBox>& labels)
{
    std::string out;
    for (const LabeledBox& lb : labels) {
        out += std::to_string(lb.class_id);
        append_box(out, lb.box);
        out += '\n';
    }
    return out;
}

std::vector<LabeledBox> parse_labels(std::string_view text, const std::string& source)
{
    std::vector<LabeledBox> out;
    for_each_record(text, source, [&](const std::vector<std::string_view>& f, const std::string& where) {
        if (f.size() != 8) {
            fail(ErrorKind::format, where + ": expected 8 fields 'class_id x y z l w h yaw'");
        }
        const long long cls = parse_integer(f[0], where);
        if (cls < 1) {
            fail(ErrorKind::format, where + ": class_id must be >= 1");
        }
        out.push_back({static_cast<int>(cls), read_box(f, 1, where)});
    });
    return out;
}

std::string format_detections(const std::vector<Detection>& detections)
{
    std::string out;
    for (const Detection& d : detections) {
        out += std::to_string(d.class_id);
        out += ' ';
        out += format_number(d.score);
        append_box(out, d.box);
        out += '\n';
    }
    return out;
}

std::vector<Detection> parse_detections(std::string_view text, const std::string& source)
{
    std::vector<Detection> out;
    for_each_record(text, source, [&](const std::vector<std::string_view>& f, const std::string& where) {
        if (f.size() != 9) {
            fail(ErrorKind::format, where + ": expected 9 fields 'class_id score x y z l w h yaw'");
        }
        const long long cls = parse_integer(f[0], where);
        const double score = parse_number(f[1], where);
        if (cls < 1) {
            fail(ErrorKind::format, where + ": class_id must be >= 1");
        }
        if (score < 0.0 || score > 1.0) {
            fail(ErrorKind::format, where + ": score must lie in [0, 1]");
        }
        out.push_back({read_box(f, 2, where), static_cast<int>(cls), score});
    });
    return out;
}

void save_labels(const std::filesystem::path& path, const std::vector<LabeledBox>& labels)
{
    io::write_file_atomic(path, format_labels(labels));
}

std::vector<LabeledBox> load_labels(const std::filesystem::path& path)
{
    return parse_labels(io::read_file(path), path.string());
}

void save_detections(const std::filesystem::path& path, const std::vector<Detection>& detections)
{
    io::write_file_atomic(path, format_detections(detections));
}

std::vector<Detection> load_detections(const std::filesystem::path& path)
{
    return parse_detections(io::read_file(path), path.string());
}

}  // namespace radekit
