#include "ssep/simd.hpp"

namespace ssep::simd::scalar {

double dot_u8(const double* w, const std::uint8_t* e, std::size_t n) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (e[i]) s += w[i];
    return s;
}

double discord(const double* a, const double* b, const std::uint8_t* ea, const std::uint8_t* eb,
               std::size_t n) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (ea[i] != eb[i]) {
            double d = a[i] - b[i];
            s += d * d;
        }
    }
    return s;
}

double sqdiff(const double* a, const double* b, std::size_t n) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace ssep::simd::scalar
