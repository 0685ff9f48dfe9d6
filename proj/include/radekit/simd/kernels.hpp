#pragma once

#include <cstddef>
#include <string_view>

// Data-parallel inner loops. Every kernel set computes bit-identical results:
// max reductions are exact, and the convolution accumulates each output element
// with fused multiply-adds in the fixed order (input channel, kernel row, kernel column).

namespace radekit::simd {

struct ConvPlan {
    const float* input = nullptr;  // [in_channels][padded_h][padded_w], zero border already applied
    std::size_t in_channels = 0;
    std::size_t padded_h = 0;
    std::size_t padded_w = 0;
    const float* weight = nullptr;  // [out_channels][in_channels][kernel][kernel]
    const float* bias = nullptr;    // [out_channels], may be null
    std::size_t out_channels = 0;
    std::size_t kernel = 1;
    std::size_t dilation = 1;
    // Output rows are written with the padded row pitch: [out_channels][out_h][padded_w].
    // Columns at or beyond out_w() are scratch and must be ignored by the caller.
    float* output = nullptr;

    std::size_t reach() const { return dilation * (kernel - 1); }
    std::size_t out_h() const { return padded_h - reach(); }
    std::size_t out_w() const { return padded_w - reach(); }
    // Number of flat output positions that must be computed per channel.
    std::size_t flat_extent() const { return (out_h() - 1) * padded_w + out_w(); }
};

struct KernelSet {
    std::string_view name;
    // dst[i * dst_stride] = max_j src[i * len + j]
    void (*max_last_axis)(const float* src, std::size_t rows, std::size_t len, float* dst,
                          std::size_t dst_stride);
    // dst[j * dst_stride] = max_i src[i * len + j]
    void (*max_first_axis)(const float* src, std::size_t rows, std::size_t len, float* dst,
                           std::size_t dst_stride);
    void (*conv2d)(const ConvPlan& plan);
};

const KernelSet& scalar_kernels();

// Null when the AVX2 variant was not compiled in or the host lacks AVX2+FMA.
const KernelSet* avx2_kernels();

// Selected once per process: AVX2 when available, unless RADEKIT_KERNELS=scalar.
const KernelSet& active_kernels();

}  // namespace radekit::simd
