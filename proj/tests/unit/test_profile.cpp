#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numeric>

#include "ssep/profile.hpp"

using namespace ssep;

TEST_CASE("constant profile is stationary") {
    auto p = DensityProfile::constant(2, 0.5, 4.0);
    for (double t : {0.0, 0.3, 2.0}) CHECK(solve_macroscopic(p, t, {0.7, 1.9}) == doctest::Approx(0.5));
    auto f = discrete_density(p, 8, 32, 0.4);
    for (double v : f.values) CHECK(v == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("single sine mode decays at the continuum rate") {
    const double P = 4.0, k = 2 * M_PI / P;
    auto p = DensityProfile::sine(2, {0.5, 0.25, 1}, P);
    for (double t : {0.0, 0.1, 0.5}) {
        for (double u : {0.0, 0.3, 1.7}) {
            double want = 0.5 + 0.25 * std::exp(-k * k * t) * std::sin(k * u);
            CHECK(solve_macroscopic(p, t, {u, 0.2}) == doctest::Approx(want).epsilon(1e-12));
        }
    }
}

TEST_CASE("heat flow of a two-mode profile against direct convolution") {
    // ρ₀(u) = 1/2 + 0.2 sin(2πu/P) + 0.1 cos(6πu/P), period P in d = 1.
    const double P = 3.0;
    auto rho0 = [P](double u) {
        return 0.5 + 0.2 * std::sin(2 * M_PI * u / P) + 0.1 * std::cos(6 * M_PI * u / P);
    };
    DensityProfile p(1, [&](const std::vector<double>& u) { return rho0(u[0]); }, {P}, 2000.0);
    const double t = 0.05, u = 0.4;
    // Σ over images of ∫ q̄_t(u - v) ρ₀(v) dv equals ∫_R q̄_t(u - v) ρ₀(v) dv.
    auto integrand = [&](double v) {
        return std::exp(-(u - v) * (u - v) / (4 * t)) / std::sqrt(4 * M_PI * t) * rho0(v);
    };
    double w = 12 * std::sqrt(t);
    double ref = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, u - w,
                                                                               u + w, 12, 1e-14);
    CHECK(solve_macroscopic(p, t, {u}) == doctest::Approx(ref).epsilon(1e-10));
}

TEST_CASE("long times relax to the spatial mean") {
    auto p = DensityProfile::sine(2, {0.4, 0.3, 2}, 2.0);
    CHECK(solve_macroscopic(p, 50.0, {0.3, 0.1}) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("negative time is refused") {
    auto p = DensityProfile::constant(2, 0.5, 4.0);
    CHECK_THROWS_AS(solve_macroscopic(p, -1.0, {0.0, 0.0}), InvalidArgument);
}

TEST_CASE("profile validation catches range and periodicity") {
    DensityProfile bad(1, [](const std::vector<double>& u) { return 0.9 + 0.2 * std::sin(u[0]); },
                       {2 * M_PI}, 1.0);
    CHECK_THROWS(bad.validate());
    DensityProfile aperiodic(1, [](const std::vector<double>& u) { return 0.5 + 0.1 * std::sin(u[0]); },
                             {3.0}, 1.0);
    CHECK_THROWS(aperiodic.validate());
    CHECK_NOTHROW(DensityProfile::parse("sine:0.5,0.25,1", 2, 4.0).validate());
    CHECK_THROWS_AS(DensityProfile::parse("ramp:1", 2, 4.0), InvalidArgument);
}

TEST_CASE("discrete field: initial values, mass, bounds") {
    const int n = 8;
    const long L = 32;
    auto p = DensityProfile::sine(2, {0.5, 0.25, 1}, 4.0);
    auto f0 = discrete_density(p, n, L, 0.0);
    Torus tor(2, L);
    double mass0 = 0;
    for (std::uint64_t x = 0; x < tor.sites(); ++x) {
        std::vector<double> u{double(tor.coord(x, 0)) / n, double(tor.coord(x, 1)) / n};
        CHECK(f0.values[x] == doctest::Approx(p(u)).epsilon(1e-13));
        mass0 += f0.values[x];
    }
    for (double t : {0.01, 0.2, 1.0}) {
        auto f = discrete_density(p, n, L, t);
        double mass = std::accumulate(f.values.begin(), f.values.end(), 0.0);
        CHECK(std::abs(mass - mass0) < 1e-10);
        for (double v : f.values) {
            CHECK(v >= 0.25 - 1e-12);
            CHECK(v <= 0.75 + 1e-12);
        }
    }
}

TEST_CASE("spectral and convolution evaluations agree") {
    const int n = 8;
    const long L = 32;
    auto p = DensityProfile::sine(2, {0.5, 0.25, 1}, 4.0);
    for (double t : {0.05, 0.5}) {
        auto a = discrete_density(p, n, L, t, DensityMethod::spectral);
        auto b = discrete_density(p, n, L, t, DensityMethod::convolution);
        double worst = 0;
        for (std::size_t i = 0; i < a.values.size(); ++i)
            worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("discrete Fourier mode decays at the lattice symbol") {
    const int n = 4;
    const long L = 16;
    auto p = DensityProfile::sine(1, {0.5, 0.25, 1}, 4.0);
    const double rate = 2.0 * n * n * (1 - std::cos(2 * M_PI / L));
    MeanField mf(p, n, L);
    for (double t : {0.0, 0.3, 1.1}) {
        for (std::uint64_t x : {1u, 3u, 10u}) {
            double want = 0.5 + 0.25 * std::exp(-rate * t) * std::sin(2 * M_PI * x / L);
            CHECK(mf.value(x, t) == doctest::Approx(want).epsilon(1e-13));
        }
    }
    // time integral against the closed form
    double want = 0.5 * 1.1 + 0.25 * std::sin(2 * M_PI * 3 / L) * (1 - std::exp(-rate * 1.1)) / rate;
    CHECK(mf.integral(3, 1.1) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("scale comparison converges at second order") {
    auto p = DensityProfile::sine(2, {0.5, 0.25, 1}, 4.0);
    CHECK(compare_scales(DensityProfile::constant(2, 0.5, 4.0), 8, 32, 1.0, 8).sup_error < 1e-14);
    double e16 = compare_scales(p, 16, 64, 1.0, 16).sup_error;
    double e32 = compare_scales(p, 32, 128, 1.0, 16).sup_error;
    CHECK(e16 / e32 == doctest::Approx(4.0).epsilon(0.2));
}
