#include <doctest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>

#include "ssep/kernels.hpp"

using namespace ssep;

namespace {

// e^{-z} I_k(z) from the power series in long double, independent of the
// library's backward recurrence.
double series_scaled_i(long k, double z) {
    long double half = z / 2.0L, term = 1, sum = 0;
    for (long j = 1; j <= k; ++j) term *= half / j;
    for (long m = 0; m < 400; ++m) {
        sum += term;
        term *= half * half / ((m + 1.0L) * (m + 1.0L + k));
        if (term < 1e-30L * sum) break;
    }
    return double(sum * std::exp(-(long double)z));
}

}  // namespace

TEST_CASE("walk kernel against the Bessel series") {
    CHECK(rw_transition(2, 0.0, {0, 0}) == 1.0);
    CHECK(rw_transition(2, 0.0, {1, 0}) == 0.0);
    CHECK(rw_transition(1, 1.0, {0}) == doctest::Approx(0.308508).epsilon(1e-6));
    CHECK(rw_transition(1, 1.0, {0}) == doctest::Approx(series_scaled_i(0, 2.0)).epsilon(1e-13));

    double want = series_scaled_i(1, 2.0) * series_scaled_i(0, 2.0);
    CHECK(rw_transition(2, 1.0, {1, 0}) == doctest::Approx(want).epsilon(1e-13));
    CHECK(rw_transition(2, 1.0, {1, 0}) ==
          doctest::Approx(rw_transition(1, 1, {1}) * rw_transition(1, 1, {0})).epsilon(1e-14));
}

TEST_CASE("scaled Bessel against Boost over orders and arguments") {
    for (double z : {1e-3, 0.5, 2.0, 17.0, 150.0, 900.0}) {
        auto row = scaled_bessel_row(z, 40);
        for (long k : {0L, 1L, 3L, 10L, 40L}) {
            double ref = double(boost::math::cyl_bessel_i(double(k), (long double)z) *
                                std::exp(-(long double)z));
            if (ref < 1e-280) continue;
            CAPTURE(z);
            CAPTURE(k);
            CHECK(scaled_bessel_i(k, z) == doctest::Approx(ref).epsilon(1e-11));
            CHECK(row[k] == doctest::Approx(ref).epsilon(1e-11));
        }
    }
    CHECK(scaled_bessel_i(-3, 2.0) == scaled_bessel_i(3, 2.0));
}

TEST_CASE("walk kernel is a symmetric probability kernel") {
    for (double t : {0.1, 1.0, 7.5}) {
        double total = 0;
        for (long x = -80; x <= 80; ++x) {
            double p = rw_transition(1, t, {x});
            CHECK(p >= 0);
            CHECK(p == rw_transition(1, t, {-x}));
            total += p;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("Chapman-Kolmogorov on a truncated support") {
    const double s = 0.7, t = 1.3;
    const long R = 30;
    for (LatticeVector x : {LatticeVector{0, 0}, LatticeVector{2, -1}, LatticeVector{5, 3}}) {
        double sum = 0;
        for (long a = -R; a <= R; ++a)
            for (long b = -R; b <= R; ++b)
                sum += rw_transition(2, s, {a, b}) * rw_transition(2, t, {x[0] - a, x[1] - b});
        CHECK(std::abs(sum - rw_transition(2, s + t, x)) < 1e-8);
    }
}

TEST_CASE("torus kernel wraps the infinite kernel") {
    const long L = 7;
    const double t = 2.0;
    for (long x = 0; x < L; ++x) {
        double wrapped = 0;
        for (long w = -20; w <= 20; ++w) wrapped += rw_transition(1, t, {x + w * L});
        CHECK(torus_transition(1, L, t, {x}) == doctest::Approx(wrapped).epsilon(1e-12));
    }
    auto ring = ring_kernel(t, L);
    double mass = 0;
    for (double p : ring) mass += p;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("local CLT gap vanishes for large times") {
    auto e1 = lclt_error(1, 1, 50.0, {0});
    auto e2 = lclt_error(1, 1, 5000.0, {0});
    CHECK(e2.gap < e1.gap);
    CHECK(e2.gap < 1e-6);
}

TEST_CASE("resolvent identities on the torus") {
    for (auto [d, n] : {std::pair{2, 8}, std::pair{3, 4}}) {
        auto f = resolvent(d, n, 4L * n);
        auto c = check_resolvent(f);
        CAPTURE(d);
        CHECK(c.mass_gap < 1e-8);
        CHECK(c.max_residual < 1e-8);
        CHECK(c.energy_gap < 1e-8);
        LatticeVector e1(d, 0);
        e1[0] = 1;
        CHECK(green_at_torus(d, n, 4L * n, e1) == doctest::Approx(f.at(e1)).epsilon(1e-8));
    }
}

TEST_CASE("d = 3 Green constant against an independent quadrature") {
    auto q = [](double t) {
        double v = double(boost::math::cyl_bessel_i(0.0, (long double)(2 * t)) *
                          std::exp(-(long double)(2 * t)));
        return v * v * v;
    };
    // [0, 200] by Simpson, tail by the asymptotic (4πt)^{-3/2}.
    const int N = 400000;
    const double a = 200.0, h = a / N;
    double s = q(0) + q(a);
    for (int i = 1; i < N; ++i) s += (i % 2 ? 4 : 2) * q(i * h);
    double head = s * h / 3;
    double tail = 2 * std::pow(4 * M_PI, -1.5) / std::sqrt(a);
    CHECK(green_constant(3) == doctest::Approx(head + tail).epsilon(2e-5));
    CHECK(green_constant(3) == doctest::Approx(0.252731).epsilon(1e-5));
}

TEST_CASE("limit variance rate") {
    CHECK(sigma_squared(2, 0.5) == doctest::Approx(0.0397887).epsilon(1e-6));
    CHECK(sigma_squared(3, 0.5) == doctest::Approx(0.126366).epsilon(1e-5));
    CHECK(sigma_squared(2, 0.0) == 0.0);
    CHECK(sigma_squared(3, 0.0) == 0.0);
}

TEST_CASE("gradient energy scaling decreases along n") {
    auto sweep = gn_l2_sweep(2, {16, 32, 64});
    REQUIRE(sweep.size() == 3);
    CHECK(sweep[0].scaled > sweep[1].scaled);
    CHECK(sweep[1].scaled > sweep[2].scaled);
    std::vector<double> n3;
    for (int n : {16, 32, 64}) n3.push_back(std::pow(n, 3.0) * gn_l2_scaling(3, n).sum_sq);
    CHECK(n3.back() / n3.front() < 2.0);
    CHECK(n3.front() / n3.back() < 2.0);
}
