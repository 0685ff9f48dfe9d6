#pragma once

#include "radekit/geometry.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace radekit {

// Label file: one object per line, "class_id x y z l w h yaw" (meters, radians).
// Detection file: "class_id score x y z l w h yaw".
// Blank lines and lines starting with '#' are ignored. Numbers are written in
// shortest round-trip form, so save followed by load is exact.

std::string format_labels(const std::vector<LabeledBox>& labels);
std::vector<LabeledBox> parse_labels(std::string_view text, const std::string& source = "<labels>");

std::string format_detections(const std::vector<Detection>& detections);
std::vector<Detection> parse_detections(std::string_view text, const std::string& source = "<detections>");

void save_labels(const std::filesystem::path& path, const std::vector<LabeledBox>& labels);
std::vector<LabeledBox> load_labels(const std::filesystem::path& path);

void save_detections(const std::filesystem::path& path, const std::vector<Detection>& detections);
std::vector<Detection> load_detections(const std::filesystem::path& path);

// Helpers shared by the line-oriented text formats.
std::string format_number(double value);
std::vector<std::string_view> split_fields(std::string_view line);
double parse_number(std::string_view field, const std::string& where);
long long parse_integer(std::string_view field, const std::string& where);

}  // namespace radekit
