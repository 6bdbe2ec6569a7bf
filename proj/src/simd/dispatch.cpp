#include <atomic>
#include <stdexcept>

#include "ssep/simd.hpp"

namespace ssep::simd {

namespace {

const Kernels kScalar{scalar::dot_u8, scalar::discord, scalar::sqdiff, scalar::dot, scalar::axpy};
#ifdef SSEP_HAVE_AVX2_BUILD
const Kernels kAvx2{avx2::dot_u8, avx2::discord, avx2::sqdiff, avx2::dot, avx2::axpy};
#endif

Isa detect() {
#ifdef SSEP_HAVE_AVX2_BUILD
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Isa::avx2;
#endif
    return Isa::scalar;
}

std::atomic<Isa>& current() {
    static std::atomic<Isa> isa{detect()};
    return isa;
}

}  // namespace

bool isa_available(Isa isa) {
    if (isa == Isa::scalar) return true;
    return detect() == Isa::avx2;
}

const Kernels& kernels_for(Isa isa) {
#ifdef SSEP_HAVE_AVX2_BUILD
    if (isa == Isa::avx2) {
        if (!isa_available(isa)) throw std::runtime_error("simd: AVX2 not available on this CPU");
        return kAvx2;
    }
#endif
    (void)isa;
    return kScalar;
}

const Kernels& kernels() { return kernels_for(current().load(std::memory_order_relaxed)); }

Isa active_isa() { return current().load(); }

void force_isa(Isa isa) {
    if (!isa_available(isa)) throw std::runtime_error("simd: requested ISA not available");
    current().store(isa);
}

const char* isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

}  // namespace ssep::simd
