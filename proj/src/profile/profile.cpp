#include "ssep/profile.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>

#include "ssep/kernels.hpp"
#include "ssep/simd.hpp"

namespace ssep {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

// FFTW planning is not thread-safe.
std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

// In-place d-dimensional DFT over an L^d array in torus order.
void dft(std::vector<std::complex<double>>& a, int d, long L, int sign) {
    std::vector<int> dims(d, int(L));
    auto* p = reinterpret_cast<fftw_complex*>(a.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        plan = fftw_plan_dft(d, dims.data(), p, p, sign, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_destroy_plan(plan);
}

// Signed frequency of index c on a ring of size L.
long freq(long c, long L) { return c <= L / 2 ? c : c - L; }

}  // namespace

// ---- DensityProfile --------------------------------------------------------

DensityProfile::DensityProfile(int d, Evaluator f, std::vector<double> period, double fourth_bound,
                               std::string spec)
    : d_(d), f_(std::move(f)), period_(std::move(period)), fourth_bound_(fourth_bound),
      spec_(std::move(spec)) {
    require(d >= 1, "profile: dimension must be >= 1");
    require(int(period_.size()) == d, "profile: period vector must have d entries");
    for (double P : period_) require(P > 0, "profile: periods must be positive");
}

DensityProfile DensityProfile::constant(int d, double rho, double period) {
    require(rho >= 0 && rho <= 1, "profile: constant density must lie in [0, 1]");
    std::ostringstream os;
    os << "constant:" << rho;
    DensityProfile p(d, [rho](const std::vector<double>&) { return rho; },
                     std::vector<double>(d, period), 0.0, os.str());
    p.constant_ = rho;
    return p;
}

DensityProfile DensityProfile::sine(int d, const SineSpec& s, double period) {
    require(s.mode >= 1, "profile: sine mode must be >= 1");
    require(s.mean - std::abs(s.amplitude) >= 0 && s.mean + std::abs(s.amplitude) <= 1,
            "profile: sine amplitude takes the density outside [0, 1]");
    double k = kTwoPi * s.mode / period;
    std::ostringstream os;
    os << "sine:" << s.mean << "," << s.amplitude << "," << s.mode;
    DensityProfile p(
        d, [s, k](const std::vector<double>& u) { return s.mean + s.amplitude * std::sin(k * u[0]); },
        std::vector<double>(d, period), std::abs(s.amplitude) * k * k * k * k, os.str());
    p.sine_ = s;
    return p;
}

DensityProfile DensityProfile::parse(const std::string& spec, int d, double period) {
    auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw InvalidArgument("profile spec '" + spec + "': expected constant:<rho> or sine:<mean>,<amp>,<mode>");
    std::string kind = spec.substr(0, colon), args = spec.substr(colon + 1);
    std::vector<double> v;
    std::stringstream ss(args);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw InvalidArgument("profile spec '" + spec + "': bad number '" + item + "'");
        }
    }
    if (kind == "constant" && v.size() == 1) return constant(d, v[0], period);
    if (kind == "sine" && (v.size() == 2 || v.size() == 3)) {
        SineSpec s{v[0], v[1], v.size() == 3 ? int(v[2]) : 1};
        if (v.size() == 3 && double(s.mode) != v[2])
            throw InvalidArgument("profile spec '" + spec + "': mode must be an integer");
        return sine(d, s, period);
    }
    throw InvalidArgument("profile spec '" + spec + "': expected constant:<rho> or sine:<mean>,<amp>,<mode>");
}

void DensityProfile::validate(int m) const {
    std::vector<double> u(d_), w(d_);
    std::size_t total = 1;
    for (int j = 0; j < d_; ++j) total *= std::size_t(m);
    double worst4 = 0;
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t r = idx;
        for (int j = 0; j < d_; ++j) {
            u[j] = period_[j] * double(r % m) / m + 0.0137 * period_[j];
            r /= m;
        }
        double v = f_(u);
        if (!(v >= 0 && v <= 1)) throw InvalidArgument("profile '" + spec_ + "' leaves [0, 1]");
        for (int j = 0; j < d_; ++j) {
            w = u;
            w[j] += period_[j];
            if (std::abs(f_(w) - v) > 1e-12)
                throw InvalidArgument("profile '" + spec_ + "' is not periodic with the declared period");
            // Fourth central difference along axis j.
            double h = period_[j] / 64;
            double f4 = 0;
            const double c[5] = {1, -4, 6, -4, 1};
            for (int q = 0; q < 5; ++q) {
                w = u;
                w[j] += (q - 2) * h;
                f4 += c[q] * f_(w);
            }
            worst4 = std::max(worst4, std::abs(f4) / std::pow(h, 4));
        }
    }
    // Difference quotients overshoot the derivative by O(h²); allow 1%.
    if (worst4 > 1.01 * fourth_bound_ + 1e-9)
        throw InvalidArgument("profile '" + spec_ + "' exceeds its declared fourth-derivative bound");
}

// ---- HeatSolution ----------------------------------------------------------

HeatSolution::HeatSolution(const DensityProfile& p, int S) : d_(p.dim()), period_(p.period()) {
    if (S <= 0) S = d_ <= 2 ? 64 : (d_ == 3 ? 32 : 16);
    std::size_t N = 1;
    for (int j = 0; j < d_; ++j) N *= std::size_t(S);
    std::vector<std::complex<double>> a(N);
    std::vector<double> u(d_);
    for (std::size_t idx = 0; idx < N; ++idx) {
        std::size_t r = idx;
        for (int j = 0; j < d_; ++j) {
            u[j] = period_[j] * double(r % S) / S;
            r /= S;
        }
        a[idx] = p(u);
    }
    dft(a, d_, S, FFTW_FORWARD);
    double resolved = 0;
    for (std::size_t idx = 0; idx < N; ++idx) {
        std::complex<double> c = a[idx] / double(N);
        std::vector<int> k(d_);
        std::size_t r = idx;
        bool high = false;
        double rate = 0;
        for (int j = 0; j < d_; ++j) {
            k[j] = int(freq(long(r % S), S));
            r /= S;
            if (std::abs(k[j]) >= S / 4) high = true;
            double kj = kTwoPi * k[j] / period_[j];
            rate += kj * kj;
        }
        if (high) resolved = std::max(resolved, std::abs(c));
        if (std::abs(c) > 1e-15) {
            k_.push_back(k);
            coef_.push_back(c);
            rate_.push_back(rate);
        }
    }
    if (resolved > 1e-12)
        throw ConvergenceError("heat solution: profile '" + p.spec() +
                               "' is not resolved by the Fourier sample grid");
}

double HeatSolution::value(double t, const std::vector<double>& u) const {
    require(t >= 0, "heat solution: t must be >= 0");
    std::complex<double> s = 0;
    for (std::size_t m = 0; m < coef_.size(); ++m) {
        double ang = 0;
        for (int j = 0; j < d_; ++j) ang += kTwoPi * k_[m][j] * u[j] / period_[j];
        s += coef_[m] * std::exp(-rate_[m] * t) * std::polar(1.0, ang);
    }
    return s.real();
}

double solve_macroscopic(const DensityProfile& p, double t, const std::vector<double>& u) {
    require(t >= 0, "solve_macroscopic: t must be >= 0");
    return HeatSolution(p).value(t, u);
}

// ---- MeanField -------------------------------------------------------------

MeanField::MeanField(const DensityProfile& p, int n, long L) : n_(n), torus_(p.dim(), L) {
    const int d = p.dim();
    for (int j = 0; j < d; ++j) {
        double cells = p.period()[j] * n;
        if (std::abs(cells - double(L)) > 1e-9 * L)
            throw InvalidArgument("mean field: torus side must equal n times the profile period");
    }
    const std::uint64_t N = torus_.sites();
    init_.resize(N);
    std::vector<std::complex<double>> a(N);
    std::vector<double> u(d);
    for (std::uint64_t x = 0; x < N; ++x) {
        for (int j = 0; j < d; ++j) u[j] = double(torus_.coord(x, j)) / n;
        init_[x] = p(u);
        a[x] = init_[x];
    }
    auto [lo, hi] = std::minmax_element(init_.begin(), init_.end());
    lo_ = *lo;
    hi_ = *hi;
    dft(a, d, L, FFTW_FORWARD);
    const double n2 = double(n) * n;
    double dropped = 0;
    for (int pass = 0; pass < 2; ++pass) {
        double cut = pass == 0 ? 1e-13 : 0.0;
        k_.clear();
        coef_.clear();
        rate_.clear();
        dropped = 0;
        for (std::uint64_t idx = 0; idx < N; ++idx) {
            std::complex<double> c = a[idx] / double(N);
            if (std::abs(c) <= cut || std::abs(c) == 0) {
                dropped += std::abs(c);
                continue;
            }
            std::vector<long> k(d);
            double rate = 0;
            for (int j = 0; j < d; ++j) {
                k[j] = torus_.coord(idx, j);
                rate += 2 * n2 * (1 - std::cos(kTwoPi * double(k[j]) / L));
            }
            k_.push_back(k);
            coef_.push_back(c);
            rate_.push_back(rate);
        }
        if (dropped < 1e-11) break;
    }
}

std::complex<double> MeanField::phase(std::size_t m, std::uint64_t site) const {
    double ang = 0;
    const long L = torus_.side();
    for (int j = 0; j < torus_.dim(); ++j)
        ang += double((k_[m][j] * torus_.coord(site, j)) % L) / L;
    return std::polar(1.0, kTwoPi * ang);
}

double MeanField::value(std::uint64_t site, double s) const {
    std::complex<double> v = 0;
    for (std::size_t m = 0; m < coef_.size(); ++m)
        v += coef_[m] * std::exp(-rate_[m] * s) * phase(m, site);
    return v.real();
}

namespace {

// ∫_0^t e^{-λs} ds
double decay_integral(double lambda, double t) {
    if (lambda * t < 1e-8) return t * (1 - 0.5 * lambda * t);
    return -std::expm1(-lambda * t) / lambda;
}

// ∫_a^b e^{-λs} ds
double decay_window(double lambda, double a, double b) {
    return std::exp(-lambda * a) * decay_integral(lambda, b - a);
}

}  // namespace

double MeanField::integral(std::uint64_t site, double t) const {
    std::complex<double> v = 0;
    for (std::size_t m = 0; m < coef_.size(); ++m)
        v += coef_[m] * decay_integral(rate_[m], t) * phase(m, site);
    return v.real();
}

MeanField::Paired MeanField::pair(const std::vector<double>& h) const {
    require(h.size() == torus_.sites(), "mean field: paired table has the wrong size");
    Paired out;
    const std::uint64_t N = torus_.sites();
    if (coef_.size() > 8) {
        // Many modes: one FFT of h beats direct sums.
        std::vector<std::complex<double>> a(h.begin(), h.end());
        dft(a, torus_.dim(), torus_.side(), FFTW_BACKWARD);
        for (std::size_t m = 0; m < coef_.size(); ++m) {
            std::uint64_t idx = 0;
            for (int j = 0; j < torus_.dim(); ++j) idx += std::uint64_t(k_[m][j]) * torus_.stride(j);
            out.w_.push_back(coef_[m] * a[idx]);
            out.rate_.push_back(rate_[m]);
        }
        return out;
    }
    for (std::size_t m = 0; m < coef_.size(); ++m) {
        std::complex<double> s = 0;
        for (std::uint64_t x = 0; x < N; ++x)
            if (h[x] != 0) s += h[x] * phase(m, x);
        out.w_.push_back(coef_[m] * s);
        out.rate_.push_back(rate_[m]);
    }
    return out;
}

double MeanField::Paired::value(double s) const {
    std::complex<double> v = 0;
    for (std::size_t m = 0; m < w_.size(); ++m) v += w_[m] * std::exp(-rate_[m] * s);
    return v.real();
}

double MeanField::Paired::integral(double t) const {
    std::complex<double> v = 0;
    for (std::size_t m = 0; m < w_.size(); ++m) v += w_[m] * decay_integral(rate_[m], t);
    return v.real();
}

std::vector<double> MeanField::field(double s) const {
    const std::uint64_t N = torus_.sites();
    std::vector<std::complex<double>> a(N, 0.0);
    for (std::size_t m = 0; m < coef_.size(); ++m) {
        std::uint64_t idx = 0;
        for (int j = 0; j < torus_.dim(); ++j) idx += std::uint64_t(k_[m][j]) * torus_.stride(j);
        a[idx] = coef_[m] * std::exp(-rate_[m] * s);
    }
    dft(a, torus_.dim(), torus_.side(), FFTW_BACKWARD);
    std::vector<double> out(N);
    for (std::uint64_t x = 0; x < N; ++x) out[x] = a[x].real();
    return out;
}

double MeanField::sq_gap_integral(std::uint64_t x, std::uint64_t y, double a, double b) const {
    // Δ(s) = Σ_m a_m e^{-λ_m s}; the zero mode cancels.
    std::vector<std::complex<double>> amp;
    std::vector<double> rate;
    for (std::size_t m = 0; m < coef_.size(); ++m) {
        if (rate_[m] == 0) continue;
        std::complex<double> c = coef_[m] * (phase(m, x) - phase(m, y));
        if (std::abs(c) == 0) continue;
        amp.push_back(c);
        rate.push_back(rate_[m]);
    }
    if (amp.size() <= 32) {
        std::complex<double> s = 0;
        for (std::size_t i = 0; i < amp.size(); ++i)
            for (std::size_t j = 0; j < amp.size(); ++j)
                s += amp[i] * amp[j] * decay_window(rate[i] + rate[j], a, b);
        return s.real();
    }
    // Dense spectra: 8-point Gauss–Legendre on [a, b].
    static const double xg[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                 0.9602898564975363};
    static const double wg[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                 0.1012285362903763};
    double mid = 0.5 * (a + b), hw = 0.5 * (b - a), s = 0;
    for (int q = 0; q < 4; ++q) {
        for (int sg : {-1, 1}) {
            double v = value(x, mid + sg * hw * xg[q]) - value(y, mid + sg * hw * xg[q]);
            s += wg[q] * v * v;
        }
    }
    return s * hw;
}

double MeanField::chi_integral(std::uint64_t x, double a, double b) const {
    std::vector<std::complex<double>> amp;
    std::vector<double> rate;
    std::complex<double> first = 0;
    for (std::size_t m = 0; m < coef_.size(); ++m) {
        std::complex<double> c = coef_[m] * phase(m, x);
        if (std::abs(c) == 0) continue;
        amp.push_back(c);
        rate.push_back(rate_[m]);
        first += c * decay_window(rate_[m], a, b);
    }
    if (amp.size() <= 32) {
        std::complex<double> sq = 0;
        for (std::size_t i = 0; i < amp.size(); ++i)
            for (std::size_t j = 0; j < amp.size(); ++j)
                sq += amp[i] * amp[j] * decay_window(rate[i] + rate[j], a, b);
        return first.real() - sq.real();
    }
    static const double xg[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                 0.9602898564975363};
    static const double wg[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                 0.1012285362903763};
    double mid = 0.5 * (a + b), hw = 0.5 * (b - a), s = 0;
    for (int q = 0; q < 4; ++q)
        for (int sg : {-1, 1}) s += wg[q] * chi(value(x, mid + sg * hw * xg[q]));
    return s * hw;
}

// ---- discrete density --------------------------------------------------------

namespace {

// Wrapped-kernel convolution, one axis at a time.
std::vector<double> convolve(const std::vector<double>& in, const Torus& T, double tau) {
    const long L = T.side();
    std::vector<double> ring = ring_kernel(tau, L);
    std::vector<double> twice(2 * L);
    for (long i = 0; i < 2 * L; ++i) twice[i] = ring[i % L];
    const auto& K = simd::kernels();
    std::vector<double> cur = in, next(in.size());
    std::vector<double> line(L), out(L);
    for (int j = 0; j < T.dim(); ++j) {
        std::uint64_t sj = T.stride(j), block = sj * std::uint64_t(L);
        for (std::uint64_t b = 0; b < cur.size(); b += block) {
            for (std::uint64_t off = 0; off < sj; ++off) {
                for (long c = 0; c < L; ++c) line[c] = cur[b + off + c * sj];
                std::fill(out.begin(), out.end(), 0.0);
                // out[i] = Σ_c line[c]·ring[(i - c) mod L]
                for (long c = 0; c < L; ++c)
                    if (line[c] != 0) K.axpy(line[c], twice.data() + (L - c), out.data(), L);
                for (long c = 0; c < L; ++c) next[b + off + c * sj] = out[c];
            }
        }
        std::swap(cur, next);
    }
    return cur;
}

}  // namespace

DiscreteDensityField discrete_density(const DensityProfile& p, int n, long L, double t,
                                      DensityMethod method) {
    require(t >= 0, "discrete_density: t must be >= 0");
    MeanField mf(p, n, L);
    DiscreteDensityField f;
    f.n = n;
    f.L = L;
    f.t = t;
    if (t == 0) {
        f.values = mf.initial_field();
    } else if (method == DensityMethod::spectral) {
        f.values = mf.field(t);
    } else {
        f.values = convolve(mf.initial_field(), mf.torus(), t * double(n) * n);
    }
    for (double v : f.values)
        if (v < -1e-12 || v > 1 + 1e-12) throw InvariantViolation("discrete density left [0, 1]");
    return f;
}

ScaleComparison compare_scales(const DensityProfile& p, int n, long L, double T, int times) {
    require(times >= 2 && T > 0, "compare_scales: need T > 0 and at least two times");
    MeanField mf(p, n, L);
    HeatSolution heat(p);
    const Torus& tor = mf.torus();
    ScaleComparison out;
    std::vector<double> u(tor.dim());
    for (int i = 0; i < times; ++i) {
        double t = T * i / (times - 1);
        std::vector<double> field = mf.field(t);
        for (std::uint64_t x = 0; x < tor.sites(); ++x) {
            for (int j = 0; j < tor.dim(); ++j) u[j] = double(tor.coord(x, j)) / n;
            double e = std::abs(field[x] - heat.value(t, u));
            if (e > out.sup_error) {
                out.sup_error = e;
                out.at_time = t;
                out.at_site = x;
            }
        }
    }
    return out;
}

}  // namespace ssep
