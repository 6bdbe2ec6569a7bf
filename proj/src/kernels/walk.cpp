#include <algorithm>
#include <cmath>
#include <numbers>

#include "ssep/kernels.hpp"

namespace ssep {

double rw_transition(int d, double t, const LatticeVector& x) {
    require(d >= 1, "rw_transition: d must be >= 1");
    require(t >= 0, "rw_transition: t must be >= 0");
    require(int(x.size()) == d, "rw_transition: coordinate dimension mismatch");
    double p = 1;
    for (long c : x) {
        p *= rw_factor(t, c);
        if (p == 0) break;
    }
    return p;
}

std::vector<double> rw_row(double t, long kmax) {
    require(t >= 0, "rw_row: t must be >= 0");
    return scaled_bessel_row(2 * t, kmax);
}

namespace {

// Row long enough that the dropped tail is below 1e-30.
std::vector<double> full_row(double t) {
    long extent = 30 + long(std::ceil(12.0 * std::sqrt(2 * t)));
    return rw_row(t, extent);
}

}  // namespace

std::vector<double> ring_kernel(double t, long L) {
    require(L >= 1, "ring_kernel: L must be >= 1");
    std::vector<double> row = full_row(t);
    long K = long(row.size()) - 1;
    std::vector<double> ring(L, 0.0);
    ring[0] += row[0];
    for (long k = 1; k <= K; ++k) {
        ring[k % L] += row[k];
        ring[(L - k % L) % L] += row[k];
    }
    return ring;
}

double torus_transition(int d, long L, double t, const LatticeVector& x) {
    require(int(x.size()) == d, "torus_transition: coordinate dimension mismatch");
    std::vector<double> ring = ring_kernel(t, L);
    double p = 1;
    for (long c : x) p *= ring[((c % L) + L) % L];
    return p;
}

double gaussian_kernel(int d, double t, const std::vector<double>& u) {
    require(t > 0, "gaussian_kernel: t must be positive");
    require(int(u.size()) == d, "gaussian_kernel: dimension mismatch");
    double r2 = 0;
    for (double c : u) r2 += c * c;
    return std::pow(4 * std::numbers::pi * t, -0.5 * d) * std::exp(-r2 / (4 * t));
}

namespace {

struct LcltConsts {
    double tn2, pref, first, mid;
    LcltConsts(int d, int n, double t) {
        tn2 = t * double(n) * n;
        pref = std::pow(double(n), -d) * std::pow(4 * std::numbers::pi * t, -0.5 * d);
        first = std::pow(tn2, -0.5 * (d + 2));
        mid = std::pow(tn2, -0.5 * d);
    }
    LcltError eval(double q, double r2) const {
        LcltError e;
        e.actual = q;
        e.gaussian = pref * std::exp(-r2 / (4 * tn2));
        e.gap = std::abs(e.actual - e.gaussian);
        // At x = 0 only the first branch is defined.
        e.envelope = r2 > 0 ? std::min(first, mid / r2) : first;
        e.ratio = e.gap / e.envelope;
        return e;
    }
};

}  // namespace

LcltError lclt_error(int d, int n, double t, const LatticeVector& x) {
    require(t > 0 && n >= 1, "lclt_error: need t > 0 and n >= 1");
    double q = rw_transition(d, t * double(n) * n, x);
    return LcltConsts(d, n, t).eval(q, norm2(x));
}

LcltSweep lclt_sweep(int d, const std::vector<int>& ns, const std::vector<double>& ts,
                     double radius_factor) {
    require(d >= 1 && d <= 3, "lclt_sweep: d must be 1, 2 or 3");
    LcltSweep out;
    for (int n : ns) {
        long R = long(std::floor(radius_factor * n));
        double R2 = double(R) * R;
        double best = 0;
        for (double t : ts) {
            // Sign symmetry: the first orthant covers the whole ball.
            std::vector<double> row = rw_row(t * double(n) * n, R);
            LcltConsts k(d, n, t);
            long r1 = d >= 2 ? R : 0, r2 = d >= 3 ? R : 0;
            for (long c = 0; c <= r2; ++c) {
                for (long b = 0; b <= r1; ++b) {
                    double rbc = double(b) * b + double(c) * c;
                    if (rbc > R2) break;
                    double pbc = (d >= 2 ? row[b] : 1.0) * (d >= 3 ? row[c] : 1.0);
                    for (long a = 0; a <= R; ++a) {
                        double r2a = rbc + double(a) * a;
                        if (r2a > R2) break;
                        LcltError e = k.eval(pbc * row[a], r2a);
                        best = std::max(best, e.ratio);
                    }
                }
            }
        }
        out.n.push_back(n);
        out.max_ratio.push_back(best);
    }
    return out;
}

}  // namespace ssep
