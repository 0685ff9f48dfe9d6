#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace radekit {

// Comma-separated "frame_id,tensor_path,label_path,condition"; an optional header
// line naming those columns is skipped. Relative paths resolve against base_dir.
struct ManifestEntry {
    std::string frame_id;
    std::filesystem::path tensor_path;
    std::filesystem::path label_path;
    std::string condition;

    bool operator==(const ManifestEntry&) const = default;
};

std::vector<ManifestEntry> parse_manifest(std::string_view text, const std::filesystem::path& base_dir,
                                          const std::string& source = "<manifest>");
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

// Paths are written relative to the manifest's directory when they lie beneath it.
std::string format_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& base_dir);
void save_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

}  // namespace radekit
