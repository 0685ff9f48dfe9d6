#include "radekit/simd/kernels.hpp"

#include <cmath>

namespace radekit::simd {
namespace {

void max_last_axis(const float* src, std::size_t rows, std::size_t len, float* dst, std::size_t dst_stride)
{
    for (std::size_t i = 0; i < rows; ++i) {
        const float* row = src + i * len;
        float m = row[0];
        for (std::size_t j = 1; j < len; ++j) {
            m = row[j] > m ? row[j] : m;
        }
        dst[i * dst_stride] = m;
    }
}

void max_first_axis(const float* src, std::size_t rows, std::size_t len, float* dst, std::size_t dst_stride)
{
    for (std::size_t j = 0; j < len; ++j) {
        float m = src[j];
        for (std::size_t i = 1; i < rows; ++i) {
            const float v = src[i * len + j];
            m = v > m ? v : m;
        }
        dst[j * dst_stride] = m;
    }
}

void conv2d(const ConvPlan& plan)
{
    const std::size_t k = plan.kernel;
    const std::size_t taps = k * k;
    const std::size_t plane = plan.padded_h * plan.padded_w;
    const std::size_t extent = plan.flat_extent();
    const std::size_t out_plane = plan.out_h() * plan.padded_w;

    for (std::size_t oc = 0; oc < plan.out_channels; ++oc) {
        const float* w_oc = plan.weight + oc * plan.in_channels * taps;
        const float b = plan.bias ? plan.bias[oc] : 0.0f;
        float* out = plan.output + oc * out_plane;
        for (std::size_t p = 0; p < extent; ++p) {
            float acc = b;
            for (std::size_t ic = 0; ic < plan.in_channels; ++ic) {
                const float* in = plan.input + ic * plane + p;
                const float* w = w_oc + ic * taps;
                for (std::size_t ky = 0; ky < k; ++ky) {
                    const float* in_row = in + ky * plan.dilation * plan.padded_w;
                    for (std::size_t kx = 0; kx < k; ++kx) {
                        acc = std::fma(w[ky * k + kx], in_row[kx * plan.dilation], acc);
                    }
                }
            }
            out[p] = acc;
        }
    }
}

}  // namespace

const KernelSet& scalar_kernels()
{
    static const KernelSet set{"scalar", &max_last_axis, &max_first_axis, &conv2d};
    return set;
}

}  // namespace radekit::simd
