#include "radekit/manifest.hpp"

#include "radekit/error.hpp"
#include "radekit/io.hpp"

#include <set>

namespace radekit {

namespace {

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

std::vector<std::string_view> split_commas(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

}  // namespace

std::vector<ManifestEntry> parse_manifest(std::string_view text, const std::filesystem::path& base_dir,
                                          const std::string& source)
{
    std::vector<ManifestEntry> out;
    std::set<std::string> ids;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        const std::string_view line = trim(text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos));
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto fields = split_commas(line);
        const std::string where = source + ":" + std::to_string(line_no);
        if (fields.size() != 4) {
            fail(ErrorKind::format, where + ": expected 'frame_id,tensor_path,label_path,condition'");
        }
        if (out.empty() && ids.empty() && fields[0] == "frame_id") {
            ids.insert("");  // header consumed
            continue;
        }
        if (fields[0].empty()) {
            fail(ErrorKind::format, where + ": empty frame id");
        }
        ManifestEntry e{std::string(fields[0]), std::filesystem::path(fields[1]), std::filesystem::path(fields[2]),
                        std::string(fields[3])};
        if (!ids.insert(e.frame_id).second) {
            fail(ErrorKind::format, where + ": duplicate frame id " + e.frame_id);
        }
        if (!e.tensor_path.empty() && e.tensor_path.is_relative()) {
            e.tensor_path = base_dir / e.tensor_path;
        }
        if (!e.label_path.empty() && e.label_path.is_relative()) {
            e.label_path = base_dir / e.label_path;
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path)
{
    return parse_manifest(io::read_file(path), path.parent_path(), path.string());
}

std::string format_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& base_dir)
{
    const auto rel = [&](const std::filesystem::path& p) {
        if (p.empty()) {
            return std::string();
        }
        const std::filesystem::path r = p.lexically_relative(base_dir);
        if (!r.empty() && *r.begin() != "..") {
            return r.generic_string();
        }
        return p.generic_string();
    };
    std::string out = "frame_id,tensor_path,label_path,condition\n";
    for (const ManifestEntry& e : entries) {
        out += e.frame_id + "," + rel(e.tensor_path) + "," + rel(e.label_path) + "," + e.condition + "\n";
    }
    return out;
}

void save_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries)
{
    io::write_file_atomic(path, format_manifest(entries, path.parent_path()));
}

}  // namespace radekit
