#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ssep/common.hpp"
#include "ssep/torus.hpp"

namespace ssep {

struct SineSpec {
    double mean = 0.5;
    double amplitude = 0.25;
    int mode = 1;
};

// Initial density u ↦ ρ₀(u) on the macroscopic torus.
class DensityProfile {
public:
    using Evaluator = std::function<double(const std::vector<double>&)>;

    DensityProfile(int d, Evaluator f, std::vector<double> period, double fourth_bound,
                   std::string spec = "custom");

    static DensityProfile constant(int d, double rho, double period);
    // mean + amplitude·sin(2π·mode·u₁/period)
    static DensityProfile sine(int d, const SineSpec& s, double period);
    // "constant:<rho>" or "sine:<mean>,<amplitude>,<mode>"
    static DensityProfile parse(const std::string& spec, int d, double period);

    double operator()(const std::vector<double>& u) const { return f_(u); }
    int dim() const { return d_; }
    const std::vector<double>& period() const { return period_; }
    double fourth_bound() const { return fourth_bound_; }
    const std::string& spec() const { return spec_; }
    std::optional<double> constant_value() const { return constant_; }
    std::optional<SineSpec> sine_spec() const { return sine_; }

    // Range, periodicity and fourth-difference checks on a sample grid.
    void validate(int samples_per_axis = 24) const;

private:
    int d_;
    Evaluator f_;
    std::vector<double> period_;
    double fourth_bound_;
    std::string spec_;
    std::optional<double> constant_;
    std::optional<SineSpec> sine_;
};

// Continuum heat flow ∂_t ρ = Δρ on the declared period, by Fourier modes.
class HeatSolution {
public:
    explicit HeatSolution(const DensityProfile& p, int samples_per_axis = 0);
    double value(double t, const std::vector<double>& u) const;
    std::size_t modes() const { return coef_.size(); }

private:
    int d_;
    std::vector<double> period_;
    std::vector<std::vector<int>> k_;
    std::vector<std::complex<double>> coef_;
    std::vector<double> rate_;
};

double solve_macroscopic(const DensityProfile& p, double t, const std::vector<double>& u);

// Exact mean field ρ^n_s(x) = E η_s(x) on the torus as a sparse sum of
// discrete Fourier modes, each decaying at 2n²Σ_j(1 - cos(2πk_j/L)).
class MeanField {
public:
    MeanField(const DensityProfile& p, int n, long L);

    int n() const { return n_; }
    const Torus& torus() const { return torus_; }
    std::size_t modes() const { return coef_.size(); }

    double value(std::uint64_t site, double s) const;
    // ∫_0^t ρ_s(x) ds
    double integral(std::uint64_t site, double t) const;
    // Initial value ρ₀(x/n) sampled at construction.
    double initial(std::uint64_t site) const { return init_[site]; }
    const std::vector<double>& initial_field() const { return init_; }
    double min_initial() const { return lo_; }
    double max_initial() const { return hi_; }

    // s ↦ Σ_x h(x) ρ_s(x) for a fixed table h, with exact time integrals.
    class Paired {
    public:
        double value(double s) const;
        double integral(double t) const;

    private:
        friend class MeanField;
        std::vector<std::complex<double>> w_;
        std::vector<double> rate_;
    };
    Paired pair(const std::vector<double>& h) const;

    // Full field at time s by inverse FFT.
    std::vector<double> field(double s) const;

    // ∫ (ρ_s(x) - ρ_s(y))² ds over [a, b]; exact up to 32 active modes,
    // 8-point Gauss–Legendre beyond that.
    double sq_gap_integral(std::uint64_t x, std::uint64_t y, double a, double b) const;

    // ∫ χ(ρ_s(x)) ds over [a, b], same evaluation rules.
    double chi_integral(std::uint64_t x, double a, double b) const;

private:
    int n_;
    Torus torus_;
    std::vector<double> init_;
    double lo_ = 0, hi_ = 0;
    std::vector<std::vector<long>> k_;
    std::vector<std::complex<double>> coef_;
    std::vector<double> rate_;
    std::complex<double> phase(std::size_t m, std::uint64_t site) const;
};

struct DiscreteDensityField {
    int n = 0;
    long L = 0;
    double t = 0;
    std::vector<double> values;
};

enum class DensityMethod { spectral, convolution };

DiscreteDensityField discrete_density(const DensityProfile& p, int n, long L, double t,
                                      DensityMethod method = DensityMethod::spectral);

struct ScaleComparison {
    double sup_error = 0;
    double at_time = 0;
    std::uint64_t at_site = 0;
};

// sup over torus sites and `times` equispaced times in [0,T] of |ρ^n_t(x) - ρ(t,x/n)|.
ScaleComparison compare_scales(const DensityProfile& p, int n, long L, double T, int times = 32);

}  // namespace ssep
