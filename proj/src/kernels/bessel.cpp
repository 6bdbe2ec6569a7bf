#include <cmath>
#include <cstdlib>

#include "ssep/kernels.hpp"

namespace ssep {

namespace {

constexpr double kSeriesLimit = 30.0;

double series(long k, double z) {
    double half = 0.5 * z;
    double term = std::exp(double(k) * std::log(half) - std::lgamma(double(k) + 1) - z);
    if (term == 0) return 0;
    double q = half * half, sum = term;
    for (long m = 0; m < 400; ++m) {
        term *= q / (double(m + 1) * double(m + 1 + k));
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return sum;
}

// Start index for the backward sweep: beyond it the row is below 1e-30 of its mass.
long miller_start(double z, long kmax) {
    return kmax + 30 + long(std::ceil(12.0 * std::sqrt(z)));
}

// Backward recurrence I_{k-1} = I_{k+1} + (2k/z) I_k, normalised by
// I_0 + 2 Σ_{k>=1} I_k = e^z.
std::vector<double> miller(double z, long kmax) {
    long N = miller_start(z, kmax);
    std::vector<double> row(kmax + 1, 0.0);
    double next = 0, cur = 1e-280, sum = 0;
    for (long k = N; k >= 1; --k) {
        double prev = next + (2.0 * k / z) * cur;
        if (k <= kmax) row[k] = cur;
        sum += 2 * cur;
        next = cur;
        cur = prev;
        if (cur > 1e250) {
            next *= 1e-250;
            cur *= 1e-250;
            sum *= 1e-250;
            for (long j = k; j <= kmax && j >= 0; ++j) row[j] *= 1e-250;
        }
    }
    row[0] = cur;
    sum += cur;
    for (auto& v : row) v /= sum;
    return row;
}

}  // namespace

double scaled_bessel_i(long k, double z) {
    require(z >= 0, "scaled_bessel_i: z must be nonnegative");
    k = std::labs(k);
    if (z == 0) return k == 0 ? 1.0 : 0.0;
    if (z <= kSeriesLimit) return series(k, z);
    return miller(z, k)[k];
}

std::vector<double> scaled_bessel_row(double z, long kmax) {
    require(z >= 0 && kmax >= 0, "scaled_bessel_row: need z >= 0, kmax >= 0");
    if (z == 0) {
        std::vector<double> row(kmax + 1, 0.0);
        row[0] = 1;
        return row;
    }
    if (z < 1e-3) {
        // The recurrence factor 2k/z overflows for tiny z; the series is trivial here.
        std::vector<double> row(kmax + 1, 0.0);
        for (long k = 0; k <= kmax; ++k) {
            row[k] = series(k, z);
            if (row[k] == 0) break;
        }
        return row;
    }
    return miller(z, kmax);
}

}  // namespace ssep
