#include "radekit/head_outputs.hpp"

#include "radekit/error.hpp"
#include "radekit/io.hpp"
#include "radekit/tensor_io.hpp"

#include <cmath>

namespace radekit {

void HeadOutputs::validate() const
{
    require(n_cls >= 1 && rows >= 1 && cols >= 1, "head outputs: empty shape");
    require(conf.size() == std::size_t{n_cls} * plane() && params.size() == kParamChannels * plane(),
            "head outputs: buffer sizes do not match shape");
    for (double v : conf) {
        require(v >= 0.0 && v <= 1.0, "head outputs: confidence outside [0, 1]");
    }
    for (double v : params) {
        require(std::isfinite(v), "head outputs: non-finite parameter");
    }
}

void save_head_outputs(const std::filesystem::path& path, const HeadOutputs& outputs, const SensorGeometry& geometry)
{
    outputs.validate();
    require(outputs.rows == geometry.n_r && outputs.cols == geometry.n_a_pad(),
            "head outputs: grid does not match geometry");
    TensorFile file;
    file.dims = {outputs.n_cls + static_cast<std::uint32_t>(kParamChannels), outputs.rows, outputs.cols};
    file.element_width = 8;
    file.geometry = geometry;
    file.pad = PadRecord{geometry.n_a, geometry.n_a_pad() - geometry.n_a};
    file.f64.reserve(file.element_count());
    file.f64.insert(file.f64.end(), outputs.conf.begin(), outputs.conf.end());
    file.f64.insert(file.f64.end(), outputs.params.begin(), outputs.params.end());
    io::write_file_atomic(path, encode_tensor_file(file));
}

HeadOutputs load_head_outputs(const std::filesystem::path& path, SensorGeometry* geometry)
{
    TensorFile file = decode_tensor_file(io::read_file(path));
    if (file.dims.size() != 3 || file.element_width != 8 || file.dims[0] <= kParamChannels) {
        fail(ErrorKind::format, path.string() + ": not a head-output file");
    }
    const SensorGeometry& g = file.geometry;
    if (file.dims[1] != g.n_r || file.dims[2] != g.n_a_pad()) {
        fail(ErrorKind::mismatch, path.string() + ": grid disagrees with the geometry block");
    }
    HeadOutputs out(file.dims[0] - static_cast<std::uint32_t>(kParamChannels), file.dims[1], file.dims[2]);
    const std::size_t split = out.conf.size();
    std::copy(file.f64.begin(), file.f64.begin() + static_cast<std::ptrdiff_t>(split), out.conf.begin());
    std::copy(file.f64.begin() + static_cast<std::ptrdiff_t>(split), file.f64.end(), out.params.begin());
    try {
        out.validate();
    } catch (const Error& e) {
        fail(ErrorKind::format, path.string() + ": " + e.what());
    }
    if (geometry != nullptr) {
        *geometry = g;
    }
    return out;
}

}  // namespace radekit
