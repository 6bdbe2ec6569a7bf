#pragma once

#include <cstddef>
#include <cstdint>

// Data-parallel reductions used by full rescans and table builds. Each has a
// scalar reference and an AVX2 variant; the variant is picked once at startup
// from cpuid and can be pinned for equivalence tests.
namespace ssep::simd {

enum class Isa { scalar, avx2 };

struct Kernels {
    // Σ w[i]·e[i], e in {0,1}
    double (*dot_u8)(const double* w, const std::uint8_t* e, std::size_t n);
    // Σ (a[i]-b[i])²·[ea[i] != eb[i]]
    double (*discord)(const double* a, const double* b, const std::uint8_t* ea,
                      const std::uint8_t* eb, std::size_t n);
    // Σ (a[i]-b[i])²
    double (*sqdiff)(const double* a, const double* b, std::size_t n);
    // Σ a[i]·b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y += alpha·x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

const Kernels& kernels();
const Kernels& kernels_for(Isa isa);
Isa active_isa();
bool isa_available(Isa isa);
// Pin the dispatch (tests, benchmarks). Throws if the ISA is unavailable.
void force_isa(Isa isa);
const char* isa_name(Isa isa);

namespace scalar {
double dot_u8(const double*, const std::uint8_t*, std::size_t);
double discord(const double*, const double*, const std::uint8_t*, const std::uint8_t*, std::size_t);
double sqdiff(const double*, const double*, std::size_t);
double dot(const double*, const double*, std::size_t);
void axpy(double, const double*, double*, std::size_t);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define SSEP_HAVE_AVX2_BUILD 1
namespace avx2 {
double dot_u8(const double*, const std::uint8_t*, std::size_t);
double discord(const double*, const double*, const std::uint8_t*, const std::uint8_t*, std::size_t);
double sqdiff(const double*, const double*, std::size_t);
double dot(const double*, const double*, std::size_t);
void axpy(double, const double*, double*, std::size_t);
}  // namespace avx2
#endif

}  // namespace ssep::simd
