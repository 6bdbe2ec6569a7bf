#include <array>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>

#include "ssep/kernels.hpp"
#include "ssep/quadrature.hpp"
#include "ssep/simd.hpp"

namespace ssep {

namespace {

// Resolvent time integrals ∫_0^∞ e^{-t}(...) dt run over [t_min, kTmax] in log t;
// e^{-60} is far below every tolerance used here.
constexpr double kTmax = 60.0;
constexpr double kPanel = 0.5;

double t_floor(int n) { return 1e-6 / (double(n) * n); }

// Sum of w_i f(t_i) over the log rule of the given order.
template <class F>
double log_quad(F&& f, double t_min, double t_max, int order) {
    LogRule r = log_rule(t_min, t_max, kPanel, order);
    double s = 0;
    for (std::size_t i = 0; i < r.t.size(); ++i) s += r.w[i] * f(r.t[i]);
    return s;
}

// Two rules of different order; the gap is the error estimate.
template <class F>
double checked_quad(F&& f, double t_min, double t_max, const char* what) {
    double hi = log_quad(f, t_min, t_max, 20);
    double lo = log_quad(f, t_min, t_max, 15);
    if (std::abs(hi - lo) > 1e-10 * std::abs(hi) + 1e-300) {
        std::ostringstream os;
        os << what << ": quadrature estimates disagree (" << hi << " vs " << lo << ")";
        throw ConvergenceError(os.str());
    }
    return hi;
}

// Ring factor at one coordinate, from a full Bessel row.
double ring_value(const std::vector<double>& row, long L, long x) {
    long K = long(row.size()) - 1;
    x = ((x % L) + L) % L;
    double s = 0;
    for (long k = x; k <= K; k += L) s += row[k];
    for (long k = L - x; k <= K; k += L)
        if (k > 0) s += row[k];
    return s;
}

std::vector<double> long_row(double tau) {
    return rw_row(tau, 30 + long(std::ceil(12.0 * std::sqrt(2 * tau))));
}

}  // namespace

ResolventField resolvent(int d, int n, long L) {
    require(d >= 1 && d <= 4, "resolvent: d must be in [1, 4]");
    require(n >= 1, "resolvent: n must be >= 1");
    require(L >= 2, "resolvent: L must be >= 2");
    ResolventField f;
    f.d = d;
    f.n = n;
    f.torus = Torus(d, L);
    const double n2 = double(n) * n;
    const long h = L / 2 + 1;  // folded coordinates 0..L/2

    std::size_t oct = 1;
    for (int j = 0; j < d; ++j) oct *= std::size_t(h);
    std::vector<double> acc(oct, 0.0);
    const auto& K = simd::kernels();

    double t_min = t_floor(n);
    LogRule rule = log_rule(t_min, kTmax, kPanel, 20);
    LogRule check = log_rule(t_min, kTmax, kPanel, 15);
    double tail = 0;
    std::vector<double> fac(h);
    for (std::size_t i = 0; i < rule.t.size(); ++i) {
        double t = rule.t[i];
        double weight = rule.w[i] * std::exp(-t);
        std::vector<double> row = long_row(t * n2);
        std::vector<double> ring = ring_kernel(t * n2, L);
        for (long x = 0; x < h; ++x) fac[x] = ring[x];
        // Outer coordinates enumerate the prefix; the innermost is one axpy.
        std::size_t lines = oct / std::size_t(h);
        for (std::size_t li = 0; li < lines; ++li) {
            double p = weight;
            std::size_t rest = li;
            for (int j = 1; j < d; ++j) {
                p *= fac[rest % std::size_t(h)];
                rest /= std::size_t(h);
            }
            K.axpy(p, fac.data(), acc.data() + li * std::size_t(h), std::size_t(h));
        }
        // 1D mass beyond |x| > L/2 on Z, weighted like g.
        double beyond = 0;
        for (long k = L / 2 + 1; k < long(row.size()); ++k) beyond += 2 * row[k];
        tail += weight * beyond;
    }
    // Lower-order rule at the origin only, for the error estimate.
    double origin_lo = 0;
    for (std::size_t i = 0; i < check.t.size(); ++i) {
        double t = check.t[i];
        origin_lo += check.w[i] * std::exp(-t) * std::pow(ring_kernel(t * n2, L)[0], d);
    }
    // ∫_0^{t_min}: the walk has not moved to first order.
    double s0 = t_min - 0.5 * t_min * t_min * (1 + 2 * d * n2);
    double s1 = 0.5 * n2 * t_min * t_min;
    acc[0] += s0;
    origin_lo += s0;
    for (int j = 0; j < d; ++j) {
        std::size_t idx = 1;
        for (int k = 0; k < j; ++k) idx *= std::size_t(h);
        if (L > 2) acc[idx] += s1;
        else acc[idx] += 2 * s1;
    }

    f.g.resize(f.torus.sites());
    for (std::uint64_t x = 0; x < f.torus.sites(); ++x) {
        std::size_t idx = 0, mul = 1;
        for (int j = 0; j < d; ++j) {
            idx += std::size_t(f.torus.fold(f.torus.coord(x, j))) * mul;
            mul *= std::size_t(h);
        }
        f.g[x] = acc[idx];
    }

    f.origin = f.g[0];
    f.quad_error = std::abs(f.origin - origin_lo);
    double mass = 0;
    for (double v : f.g) mass += v;
    f.mass = mass;
    f.l2norm = K.dot(f.g.data(), f.g.data(), f.g.size());
    // Gradient energy per axis over contiguous blocks, wrap included.
    double grad = 0;
    for (int j = 0; j < d; ++j) {
        std::size_t sj = f.torus.stride(j), block = sj * std::size_t(L);
        for (std::size_t b = 0; b < f.g.size(); b += block) {
            const double* p = f.g.data() + b;
            grad += K.sqdiff(p, p + sj, block - sj);
            grad += K.sqdiff(p + block - sj, p, sj);
        }
    }
    f.gradient = n2 * grad;
    f.tail_mass = d * tail;
    return f;
}

ResolventCheck check_resolvent(const ResolventField& f) {
    ResolventCheck c;
    c.mass_gap = std::abs(f.mass - 1.0);
    const double n2 = double(f.n) * f.n;
    const Torus& T = f.torus;
    for (std::uint64_t x = 0; x < T.sites(); ++x) {
        double lap = 0;
        for (int j = 0; j < f.d; ++j)
            lap += f.g[T.step(x, j, 1)] + f.g[T.step(x, j, -1)] - 2 * f.g[x];
        double r = f.g[x] - n2 * lap - (x == 0 ? 1.0 : 0.0);
        c.max_residual = std::max(c.max_residual, std::abs(r));
    }
    c.energy_gap = std::abs(f.origin - f.l2norm - f.gradient);
    return c;
}

double green_at(int d, int n, const LatticeVector& x) {
    require(int(x.size()) == d, "green_at: dimension mismatch");
    const double n2 = double(n) * n;
    auto f = [&](double t) {
        double p = std::exp(-t);
        for (long c : x) p *= rw_factor(t * n2, c);
        return p;
    };
    double t_min = t_floor(n);
    double v = checked_quad(f, t_min, kTmax, "green_at");
    if (norm2(x) == 0) v += t_min - 0.5 * t_min * t_min * (1 + 2 * d * n2);
    return v;
}

double green_origin(int d, int n) { return green_at(d, n, LatticeVector(d, 0)); }

double green_at_torus(int d, int n, long L, const LatticeVector& x) {
    require(int(x.size()) == d, "green_at_torus: dimension mismatch");
    const double n2 = double(n) * n;
    auto f = [&](double t) {
        std::vector<double> row = long_row(t * n2);
        double p = std::exp(-t);
        for (long c : x) p *= ring_value(row, L, c);
        return p;
    };
    double t_min = t_floor(n);
    double v = checked_quad(f, t_min, kTmax, "green_at_torus");
    if (norm2(x) == 0) v += t_min - 0.5 * t_min * t_min * (1 + 2 * d * n2);
    return v;
}

namespace {

// Hankel expansion of e^{-z} I_0(z) for large z.
double hankel_i0(double z) {
    double term = 1, sum = 1;
    for (int k = 1; k <= 10; ++k) {
        term *= (2.0 * k - 1) * (2.0 * k - 1) / (8.0 * k * z);
        sum += term;
    }
    return sum / std::sqrt(2 * std::numbers::pi * z);
}

double compute_green_constant(int d) {
    constexpr double split = 50.0, far = 1e8;
    auto head = [&](double t) { return std::pow(scaled_bessel_i(0, 2 * t), d); };
    double t_min = 1e-12;
    double v = checked_quad(head, t_min, split, "green_constant") + t_min;
    auto mid = [&](double t) { return std::pow(hankel_i0(2 * t), d); };
    v += checked_quad(mid, split, far, "green_constant tail");
    // Beyond `far`: leading asymptote plus its first correction.
    double a = std::pow(4 * std::numbers::pi, -0.5 * d);
    double p = 0.5 * d - 1;
    v += a * std::pow(far, -p) / p + a * (d / 16.0) * std::pow(far, -0.5 * d) / (0.5 * d);
    return v;
}

}  // namespace

double green_constant(int d) {
    require(d >= 3 && d <= 8, "green_constant: d must be in [3, 8]");
    static std::array<double, 9> cache{};
    static std::array<std::once_flag, 9> flags;
    std::call_once(flags[d], [d] { cache[d] = compute_green_constant(d); });
    return cache[d];
}

GnL2 gn_l2_scaling(int d, int n) {
    require(d >= 2, "gn_l2_scaling: d must be >= 2");
    const double n2 = double(n) * n;
    auto f = [&](double r) { return r * std::exp(-r) * std::pow(scaled_bessel_i(0, 2 * r * n2), d); };
    double t_min = t_floor(n);
    GnL2 out;
    out.sum_sq = checked_quad(f, t_min, kTmax, "gn_l2_scaling") + 0.5 * t_min * t_min;
    double b = beta(d, n);
    out.scaled = b * b * out.sum_sq;
    return out;
}

double gn_l2_torus(int d, int n, long L) {
    const double n2 = double(n) * n;
    auto f = [&](double r) {
        return r * std::exp(-r) * std::pow(ring_value(long_row(r * n2), L, 0), d);
    };
    double t_min = t_floor(n);
    return checked_quad(f, t_min, kTmax, "gn_l2_torus") + 0.5 * t_min * t_min;
}

std::vector<GnL2> gn_l2_sweep(int d, const std::vector<int>& ns) {
    std::vector<GnL2> out;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        out.push_back(gn_l2_scaling(d, ns[i]));
        if (i > 0 && !(out[i].scaled < out[i - 1].scaled)) {
            std::ostringstream os;
            os << "beta^2 * sum g^2 increased from n=" << ns[i - 1] << " to n=" << ns[i];
            throw InvariantViolation(os.str());
        }
    }
    return out;
}

double sigma_squared(int d, double rho) {
    require(d >= 2, "sigma_squared: d = 1 is out of scope");
    require(rho >= 0 && rho <= 1, "sigma_squared: density outside [0, 1]");
    if (d == 2) return chi(rho) / (2 * std::numbers::pi);
    return 2 * green_constant(d) * chi(rho);
}

}  // namespace ssep
