// Compiled with -mavx2 -mfma; only reached after a cpuid check.
#include <immintrin.h>

#include "ssep/simd.hpp"

namespace ssep::simd::avx2 {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

// Four bytes -> 4 x 64-bit lane mask (all ones where byte != 0).
inline __m256d byte_mask(const std::uint8_t* p) {
    int v;
    __builtin_memcpy(&v, p, 4);
    __m128i b = _mm_cvtsi32_si128(v);
    __m256i q = _mm256_cvtepu8_epi64(b);
    __m256i z = _mm256_cmpeq_epi64(q, _mm256_setzero_si256());
    return _mm256_castsi256_pd(_mm256_xor_si256(z, _mm256_set1_epi64x(-1)));
}

inline __m256d neq_mask(const std::uint8_t* a, const std::uint8_t* b) {
    int va, vb;
    __builtin_memcpy(&va, a, 4);
    __builtin_memcpy(&vb, b, 4);
    __m256i q = _mm256_cvtepu8_epi64(_mm_cvtsi32_si128(va ^ vb));
    __m256i z = _mm256_cmpeq_epi64(q, _mm256_setzero_si256());
    return _mm256_castsi256_pd(_mm256_xor_si256(z, _mm256_set1_epi64x(-1)));
}

}  // namespace

double dot_u8(const double* w, const std::uint8_t* e, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_and_pd(_mm256_loadu_pd(w + i), byte_mask(e + i)));
        acc1 = _mm256_add_pd(acc1, _mm256_and_pd(_mm256_loadu_pd(w + i + 4), byte_mask(e + i + 4)));
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i)
        if (e[i]) s += w[i];
    return s;
}

double discord(const double* a, const double* b, const std::uint8_t* ea, const std::uint8_t* eb,
               std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        d = _mm256_and_pd(d, neq_mask(ea + i, eb + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        if (ea[i] != eb[i]) {
            double d = a[i] - b[i];
            s += d * d;
        }
    }
    return s;
}

double sqdiff(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
        acc0 = _mm256_fmadd_pd(d0, d0, acc0);
        acc1 = _mm256_fmadd_pd(d1, d1, acc1);
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace ssep::simd::avx2
