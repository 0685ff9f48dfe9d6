#include "radekit/simd/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace radekit::simd {
namespace {

inline float hmax(__m256 v)
{
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_max_ps(lo, hi);
    lo = _mm_max_ps(lo, _mm_movehl_ps(lo, lo));
    lo = _mm_max_ss(lo, _mm_shuffle_ps(lo, lo, 0x1));
    return _mm_cvtss_f32(lo);
}

void max_last_axis(const float* src, std::size_t rows, std::size_t len, float* dst, std::size_t dst_stride)
{
    for (std::size_t i = 0; i < rows; ++i) {
        const float* row = src + i * len;
        float m = row[0];
        std::size_t j = 0;
        if (len >= 8) {
            __m256 acc = _mm256_loadu_ps(row);
            for (j = 8; j + 8 <= len; j += 8) {
                acc = _mm256_max_ps(acc, _mm256_loadu_ps(row + j));
            }
            m = hmax(acc);
        }
        for (; j < len; ++j) {
            m = row[j] > m ? row[j] : m;
        }
        dst[i * dst_stride] = m;
    }
}

void max_first_axis(const float* src, std::size_t rows, std::size_t len, float* dst, std::size_t dst_stride)
{
    std::size_t j = 0;
    for (; j + 8 <= len; j += 8) {
        __m256 acc = _mm256_loadu_ps(src + j);
        for (std::size_t i = 1; i < rows; ++i) {
            acc = _mm256_max_ps(acc, _mm256_loadu_ps(src + i * len + j));
        }
        alignas(32) float lanes[8];
        _mm256_store_ps(lanes, acc);
        for (std::size_t l = 0; l < 8; ++l) {
            dst[(j + l) * dst_stride] = lanes[l];
        }
    }
    for (; j < len; ++j) {
        float m = src[j];
        for (std::size_t i = 1; i < rows; ++i) {
            const float v = src[i * len + j];
            m = v > m ? v : m;
        }
        dst[j * dst_stride] = m;
    }
}

constexpr std::size_t kChannelChunk = 32;

// Accumulates input channels [ic0, ic1) into OCB output channels over 16 flat positions.
template <int OCB>
inline void conv_block16(const ConvPlan& plan, std::size_t oc, std::size_t ic0, std::size_t ic1, std::size_t p,
                         bool first_chunk)
{
    const std::size_t k = plan.kernel;
    const std::size_t taps = k * k;
    const std::size_t plane = plan.padded_h * plan.padded_w;
    const std::size_t out_plane = plan.out_h() * plan.padded_w;
    const std::size_t w_stride = plan.in_channels * taps;

    __m256 acc[OCB][2];
    for (int o = 0; o < OCB; ++o) {
        float* out = plan.output + (oc + o) * out_plane + p;
        if (first_chunk) {
            const __m256 b = _mm256_set1_ps(plan.bias ? plan.bias[oc + o] : 0.0f);
            acc[o][0] = b;
            acc[o][1] = b;
        } else {
            acc[o][0] = _mm256_loadu_ps(out);
            acc[o][1] = _mm256_loadu_ps(out + 8);
        }
    }
    for (std::size_t ic = ic0; ic < ic1; ++ic) {
        const float* in = plan.input + ic * plane + p;
        const float* w = plan.weight + oc * w_stride + ic * taps;
        for (std::size_t ky = 0; ky < k; ++ky) {
            const float* in_row = in + ky * plan.dilation * plan.padded_w;
            for (std::size_t kx = 0; kx < k; ++kx) {
                const float* src = in_row + kx * plan.dilation;
                const __m256 x0 = _mm256_loadu_ps(src);
                const __m256 x1 = _mm256_loadu_ps(src + 8);
                const std::size_t t = ky * k + kx;
                for (int o = 0; o < OCB; ++o) {
                    const __m256 wv = _mm256_broadcast_ss(w + o * w_stride + t);
                    acc[o][0] = _mm256_fmadd_ps(wv, x0, acc[o][0]);
                    acc[o][1] = _mm256_fmadd_ps(wv, x1, acc[o][1]);
                }
            }
        }
    }
    for (int o = 0; o < OCB; ++o) {
        float* out = plan.output + (oc + o) * out_plane + p;
        _mm256_storeu_ps(out, acc[o][0]);
        _mm256_storeu_ps(out + 8, acc[o][1]);
    }
}

// Scalar tail with the same accumulation order, so results match the vector lanes bit for bit.
inline void conv_tail(const ConvPlan& plan, std::size_t oc, std::size_t ic0, std::size_t ic1, std::size_t p,
                      bool first_chunk)
{
    const std::size_t k = plan.kernel;
    const std::size_t taps = k * k;
    const std::size_t plane = plan.padded_h * plan.padded_w;
    const std::size_t out_plane = plan.out_h() * plan.padded_w;
    float* out = plan.output + oc * out_plane + p;
    float acc = first_chunk ? (plan.bias ? plan.bias[oc] : 0.0f) : *out;
    for (std::size_t ic = ic0; ic < ic1; ++ic) {
        const float* in = plan.input + ic * plane + p;
        const float* w = plan.weight + oc * plan.in_channels * taps + ic * taps;
        for (std::size_t ky = 0; ky < k; ++ky) {
            const float* in_row = in + ky * plan.dilation * plan.padded_w;
            for (std::size_t kx = 0; kx < k; ++kx) {
                acc = std::fma(w[ky * k + kx], in_row[kx * plan.dilation], acc);
            }
        }
    }
    *out = acc;
}

template <int OCB>
void conv_channels(const ConvPlan& plan, std::size_t oc)
{
    const std::size_t extent = plan.flat_extent();
    for (std::size_t ic0 = 0; ic0 < plan.in_channels; ic0 += kChannelChunk) {
        const std::size_t ic1 = std::min(plan.in_channels, ic0 + kChannelChunk);
        const bool first = ic0 == 0;
        std::size_t p = 0;
        for (; p + 16 <= extent; p += 16) {
            conv_block16<OCB>(plan, oc, ic0, ic1, p, first);
        }
        for (; p < extent; ++p) {
            for (int o = 0; o < OCB; ++o) {
                conv_tail(plan, oc + o, ic0, ic1, p, first);
            }
        }
    }
}

void conv2d(const ConvPlan& plan)
{
    std::size_t oc = 0;
    for (; oc + 6 <= plan.out_channels; oc += 6) {
        conv_channels<6>(plan, oc);
    }
    switch (plan.out_channels - oc) {
    case 5: conv_channels<5>(plan, oc); break;
    case 4: conv_channels<4>(plan, oc); break;
    case 3: conv_channels<3>(plan, oc); break;
    case 2: conv_channels<2>(plan, oc); break;
    case 1: conv_channels<1>(plan, oc); break;
    default: break;
    }
}

}  // namespace

const KernelSet* avx2_kernels()
{
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    static const KernelSet set{"avx2", &max_last_axis, &max_first_axis, &conv2d};
    return supported ? &set : nullptr;
}

}  // namespace radekit::simd
