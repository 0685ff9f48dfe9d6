#include "radekit/tensor_io.hpp"

#include "radekit/error.hpp"
#include "radekit/io.hpp"

#include <cmath>

namespace radekit {

std::size_t TensorFile::element_count() const
{
    std::size_t n = 1;
    for (std::uint32_t d : dims) {
        n *= d;
    }
    return n;
}

std::string encode_tensor_file(const TensorFile& file)
{
    require(file.element_width == 4 || file.element_width == 8, "tensor file: element width must be 4 or 8");
    require(file.pad.has_value() == (file.dims.size() == 3), "tensor file: pad record present iff rank is 3");
    const std::size_t count = file.element_count();
    require((file.element_width == 4 ? file.f32.size() : file.f64.size()) == count,
            "tensor file: payload size does not match dims");

    io::ByteWriter w;
    w.put_bytes(TensorFile::kMagic);
    w.put<std::uint16_t>(TensorFile::kVersion);
    w.put<std::uint16_t>(static_cast<std::uint16_t>(file.dims.size()));
    for (std::uint32_t d : file.dims) {
        w.put<std::uint32_t>(d);
    }
    w.put<std::uint8_t>(file.element_width);
    const SensorGeometry& g = file.geometry;
    for (double v : {double(g.n_r), double(g.n_a), double(g.n_d), double(g.n_e), g.range_max, g.azimuth_fov,
                     g.elevation_fov, g.doppler_max, g.z0}) {
        w.put<double>(v);
    }
    if (file.pad) {
        w.put<std::uint32_t>(file.pad->original_n_a);
        w.put<std::uint32_t>(file.pad->pad_columns);
    }
    if (file.element_width == 4) {
        for (float v : file.f32) {
            w.put<float>(v);
        }
    } else {
        for (double v : file.f64) {
            w.put<double>(v);
        }
    }
    return w.take();
}

namespace {

std::uint32_t bin_count(double v, const char* name)
{
    if (!(v >= 1.0 && v <= 4294967295.0) || v != std::floor(v)) {
        fail(ErrorKind::format, std::string("tensor file: geometry field ") + name + " is not a bin count");
    }
    return static_cast<std::uint32_t>(v);
}

}  // namespace

TensorFile decode_tensor_file(std::string_view bytes)
{
    io::ByteReader r(bytes);
    if (bytes.size() < TensorFile::kMagic.size()) {
        fail(ErrorKind::truncated, "tensor file: shorter than its magic");
    }
    if (r.take(TensorFile::kMagic.size()) != TensorFile::kMagic) {
        fail(ErrorKind::format, "tensor file: bad magic");
    }
    TensorFile file;
    const auto version = r.get<std::uint16_t>();
    if (version != TensorFile::kVersion) {
        fail(ErrorKind::format, "tensor file: unsupported version " + std::to_string(version));
    }
    const auto rank = r.get<std::uint16_t>();
    if (rank < 1 || rank > 8) {
        fail(ErrorKind::format, "tensor file: unsupported rank " + std::to_string(rank));
    }
    for (std::uint16_t i = 0; i < rank; ++i) {
        file.dims.push_back(r.get<std::uint32_t>());
    }
    file.element_width = r.get<std::uint8_t>();
    if (file.element_width != 4 && file.element_width != 8) {
        fail(ErrorKind::format, "tensor file: element width must be 4 or 8");
    }
    double fields[9];
    for (double& v : fields) {
        v = r.get<double>();
    }
    SensorGeometry& g = file.geometry;
    g.n_r = bin_count(fields[0], "n_r");
    g.n_a = bin_count(fields[1], "n_a");
    g.n_d = bin_count(fields[2], "n_d");
    g.n_e = bin_count(fields[3], "n_e");
    g.range_max = fields[4];
    g.azimuth_fov = fields[5];
    g.elevation_fov = fields[6];
    g.doppler_max = fields[7];
    g.z0 = fields[8];
    try {
        g.validate();
    } catch (const Error& e) {
        fail(ErrorKind::format, std::string("tensor file: ") + e.what());
    }
    if (rank == 3) {
        PadRecord pad;
        pad.original_n_a = r.get<std::uint32_t>();
        pad.pad_columns = r.get<std::uint32_t>();
        file.pad = pad;
    }

    std::size_t count = 1;
    for (std::uint32_t d : file.dims) {
        if (d == 0) {
            fail(ErrorKind::format, "tensor file: zero dimension");
        }
        count *= d;
    }
    const std::size_t payload = count * file.element_width;
    if (r.remaining() < payload) {
        fail(ErrorKind::truncated, "tensor file: payload truncated (" + std::to_string(r.remaining()) + " of " +
                                       std::to_string(payload) + " bytes)");
    }
    if (r.remaining() > payload) {
        fail(ErrorKind::format, "tensor file: trailing bytes after payload");
    }
    if (file.element_width == 4) {
        file.f32.resize(count);
        for (float& v : file.f32) {
            v = r.get<float>();
        }
    } else {
        file.f64.resize(count);
        for (double& v : file.f64) {
            v = r.get<double>();
        }
    }
    return file;
}

void save_tensor(const std::filesystem::path& path, const RadeTensor& tensor)
{
    TensorFile file;
    const SensorGeometry& g = tensor.geometry();
    file.dims = {g.n_r, g.n_a, g.n_d, g.n_e};
    file.element_width = 4;
    file.geometry = g;
    file.f32.assign(tensor.data().begin(), tensor.data().end());
    io::write_file_atomic(path, encode_tensor_file(file));
}

RadeTensor load_tensor(const std::filesystem::path& path)
{
    TensorFile file = decode_tensor_file(io::read_file(path));
    const SensorGeometry& g = file.geometry;
    if (file.dims.size() != 4 || file.element_width != 4) {
        fail(ErrorKind::format, path.string() + ": not a rank-4 f32 radar tensor");
    }
    if (file.dims != std::vector<std::uint32_t>{g.n_r, g.n_a, g.n_d, g.n_e}) {
        fail(ErrorKind::mismatch, path.string() + ": dims disagree with the geometry block");
    }
    return RadeTensor(g, std::move(file.f32));
}

void save_projection(const std::filesystem::path& path, const RaProjection& projection)
{
    TensorFile file;
    file.dims = {projection.channels(), projection.rows(), projection.cols()};
    file.element_width = 4;
    file.geometry = projection.geometry();
    file.pad = projection.pad_record();
    file.f32.assign(projection.data().begin(), projection.data().end());
    io::write_file_atomic(path, encode_tensor_file(file));
}

RaProjection load_projection(const std::filesystem::path& path)
{
    TensorFile file = decode_tensor_file(io::read_file(path));
    const SensorGeometry& g = file.geometry;
    if (file.dims.size() != 3 || file.element_width != 4) {
        fail(ErrorKind::format, path.string() + ": not a rank-3 f32 projection");
    }
    if (file.dims != std::vector<std::uint32_t>{g.n_de(), g.n_r, g.n_a_pad()}) {
        fail(ErrorKind::mismatch, path.string() + ": dims disagree with the geometry block");
    }
    if (*file.pad != PadRecord{g.n_a, g.n_a_pad() - g.n_a}) {
        fail(ErrorKind::mismatch, path.string() + ": pad record disagrees with the geometry block");
    }
    return RaProjection(g, std::move(file.f32));
}

}  // namespace radekit
