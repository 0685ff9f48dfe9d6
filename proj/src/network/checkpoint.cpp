#include "radekit/network.hpp"

#include "radekit/error.hpp"
#include "radekit/io.hpp"

namespace radekit::nn {

// "RADENETW" | u16 version | u64 fingerprint | u32 blob count |
// per blob: u32 path length, path bytes, u32 rank, u32 dims[rank], u64 payload offset |
// f32 payloads, offsets relative to the start of the payload section.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint)
{
    io::ByteWriter w;
    w.put_bytes(Checkpoint::kMagic);
    w.put<std::uint16_t>(Checkpoint::kVersion);
    w.put<std::uint64_t>(checkpoint.fingerprint);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(checkpoint.blobs.size()));
    std::uint64_t offset = 0;
    for (const Blob& blob : checkpoint.blobs) {
        std::size_t count = 1;
        for (std::uint32_t d : blob.dims) {
            count *= d;
        }
        require(count == blob.values.size(), "checkpoint: blob " + blob.path + " size does not match dims");
        w.put<std::uint32_t>(static_cast<std::uint32_t>(blob.path.size()));
        w.put_bytes(blob.path);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(blob.dims.size()));
        for (std::uint32_t d : blob.dims) {
            w.put<std::uint32_t>(d);
        }
        w.put<std::uint64_t>(offset);
        offset += count * sizeof(float);
    }
    for (const Blob& blob : checkpoint.blobs) {
        for (float v : blob.values) {
            w.put<float>(v);
        }
    }
    io::write_file_atomic(path, w.str());
}

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    const std::string bytes = io::read_file(path);
    io::ByteReader r(bytes);
    if (bytes.size() < Checkpoint::kMagic.size() || r.take(Checkpoint::kMagic.size()) != Checkpoint::kMagic) {
        fail(ErrorKind::format, path.string() + ": not a checkpoint (bad magic)");
    }
    if (r.get<std::uint16_t>() != Checkpoint::kVersion) {
        fail(ErrorKind::format, path.string() + ": unsupported checkpoint version");
    }
    Checkpoint ckpt;
    ckpt.fingerprint = r.get<std::uint64_t>();
    const auto count = r.get<std::uint32_t>();

    std::vector<std::uint64_t> offsets;
    for (std::uint32_t i = 0; i < count; ++i) {
        Blob blob;
        const auto len = r.get<std::uint32_t>();
        blob.path = std::string(r.take(len));
        const auto rank = r.get<std::uint32_t>();
        if (rank > 8) {
            fail(ErrorKind::format, path.string() + ": blob " + blob.path + " has implausible rank");
        }
        for (std::uint32_t k = 0; k < rank; ++k) {
            blob.dims.push_back(r.get<std::uint32_t>());
        }
        offsets.push_back(r.get<std::uint64_t>());
        ckpt.blobs.push_back(std::move(blob));
    }
    const std::size_t payload_start = r.position();
    std::size_t payload_end = payload_start;
    for (std::size_t i = 0; i < ckpt.blobs.size(); ++i) {
        Blob& blob = ckpt.blobs[i];
        std::size_t n = 1;
        for (std::uint32_t d : blob.dims) {
            n *= d;
        }
        const std::uint64_t begin = payload_start + offsets[i];
        if (begin + n * sizeof(float) > bytes.size()) {
            fail(ErrorKind::truncated, path.string() + ": payload of blob " + blob.path + " is truncated");
        }
        io::ByteReader payload(std::string_view(bytes).substr(begin, n * sizeof(float)));
        blob.values.resize(n);
        for (float& v : blob.values) {
            v = payload.get<float>();
        }
        payload_end = std::max<std::size_t>(payload_end, begin + n * sizeof(float));
    }
    if (payload_end != bytes.size()) {
        fail(ErrorKind::format, path.string() + ": trailing bytes after checkpoint payload");
    }
    return ckpt;
}

}  // namespace radekit::nn
