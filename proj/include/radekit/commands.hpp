#pragma once

#include "radekit/config.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace radekit::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitValidation = 1,
    kExitIo = 2,
    kExitCheckFailed = 3,
};

struct Streams {
    std::ostream& out;
    std::ostream& err;
};

// Frame inputs come from a manifest (its tensor_path column) or from explicit
// files, in which case the frame id is the file stem.
struct FrameInputs {
    std::optional<std::filesystem::path> manifest;
    std::vector<std::filesystem::path> files;
};

struct NamedInput {
    std::string frame_id;
    std::filesystem::path path;
};

std::vector<NamedInput> resolve_inputs(const FrameInputs& inputs);

inline constexpr const char* kTensorExt = ".rdt";
inline constexpr const char* kProjectionExt = ".rdp";
inline constexpr const char* kHeadsExt = ".rdh";
inline constexpr const char* kCheckpointExt = ".rdn";
inline constexpr const char* kManifestName = "manifest.csv";

// Writes tensors/<id>.rdt, labels/<id>.txt and manifest.csv under out_dir.
void cmd_synth(const RunConfig& config, const std::filesystem::path& script, const std::filesystem::path& out_dir,
               Streams io);

// Writes <id>.rdp per frame (plus manifest.csv when the input was a manifest).
// With stats, reports memory use at 4- and 8-byte widths and per-frame latency;
// without inputs the stats describe the configured geometry.
void cmd_project(const RunConfig& config, const FrameInputs& inputs, const std::optional<std::filesystem::path>& out_dir,
                 bool stats, Streams io);

// Seeded random weights for the configured network.
void cmd_init_checkpoint(const RunConfig& config, const std::filesystem::path& out, Streams io);

// Writes <id>.rdh per frame. With inject_gt, head outputs are built from
// <inject_gt>/<id>.txt labels instead of running the network.
void cmd_infer(const RunConfig& config, const FrameInputs& inputs,
               const std::optional<std::filesystem::path>& checkpoint,
               const std::optional<std::filesystem::path>& inject_gt, const std::filesystem::path& out_dir, Streams io);

// Thresholds at tau_cls, applies NMS and writes <id>.txt detection files.
void cmd_decode(const RunConfig& config, const std::vector<std::filesystem::path>& head_files,
                const std::filesystem::path& out_dir, Streams io);

struct EvalOutputs {
    std::optional<std::filesystem::path> csv;
    std::optional<std::filesystem::path> plot_data;
};

// Prints the aligned table; the CSV goes to a file when requested, else to out.
void cmd_eval(const RunConfig& config, const std::filesystem::path& manifest,
              const std::filesystem::path& detections, const EvalOutputs& outputs, Streams io);

// Returns kExitOk or kExitCheckFailed.
int cmd_gradcheck(const RunConfig& config, Streams io);

void cmd_bench(const RunConfig& config, std::uint32_t n_frames, Streams io);

// Full command line, including the program name in args[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace radekit::cli
