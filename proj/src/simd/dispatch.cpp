#include "radekit/simd/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace radekit::simd {

#if !defined(RADEKIT_HAVE_AVX2)
const KernelSet* avx2_kernels() { return nullptr; }
#endif

const KernelSet& active_kernels()
{
    static const KernelSet& chosen = []() -> const KernelSet& {
        const char* env = std::getenv("RADEKIT_KERNELS");
        if (env != nullptr && std::string_view(env) == "scalar") {
            return scalar_kernels();
        }
        if (const KernelSet* fast = avx2_kernels()) {
            return *fast;
        }
        return scalar_kernels();
    }();
    return chosen;
}

}  // namespace radekit::simd
