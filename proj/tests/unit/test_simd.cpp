#include <doctest.h>

#include <cmath>
#include <vector>

#include "ssep/rng.hpp"
#include "ssep/simd.hpp"

using namespace ssep;

namespace {

struct Data {
    std::vector<double> a, b;
    std::vector<std::uint8_t> ea, eb;
};

Data make(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Data d;
    for (std::size_t i = 0; i < n; ++i) {
        d.a.push_back(rng.uniform() * 2 - 1);
        d.b.push_back(rng.uniform() * 2 - 1);
        d.ea.push_back(rng.bernoulli(0.5));
        d.eb.push_back(rng.bernoulli(0.3));
    }
    return d;
}

// Lengths straddling the 4- and 16-lane tails.
const std::size_t kLengths[] = {0, 1, 3, 4, 5, 15, 16, 17, 63, 64, 1000, 4099};

}  // namespace

TEST_CASE("AVX2 reductions match the scalar reference") {
    if (!simd::isa_available(simd::Isa::avx2)) {
        MESSAGE("AVX2 not available on this machine; only the scalar path is exercised");
        return;
    }
    const auto& S = simd::kernels_for(simd::Isa::scalar);
    const auto& V = simd::kernels_for(simd::Isa::avx2);
    for (std::size_t n : kLengths) {
        auto d = make(n, 17 + n);
        CAPTURE(n);
        double tol = 1e-13 * (1.0 + double(n));
        CHECK(std::abs(S.dot_u8(d.a.data(), d.ea.data(), n) - V.dot_u8(d.a.data(), d.ea.data(), n)) <= tol);
        CHECK(std::abs(S.discord(d.a.data(), d.b.data(), d.ea.data(), d.eb.data(), n) -
                       V.discord(d.a.data(), d.b.data(), d.ea.data(), d.eb.data(), n)) <= tol);
        CHECK(std::abs(S.sqdiff(d.a.data(), d.b.data(), n) - V.sqdiff(d.a.data(), d.b.data(), n)) <= tol);
        CHECK(std::abs(S.dot(d.a.data(), d.b.data(), n) - V.dot(d.a.data(), d.b.data(), n)) <= tol);
        auto y1 = d.b, y2 = d.b;
        S.axpy(0.37, d.a.data(), y1.data(), n);
        V.axpy(0.37, d.a.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-15));
    }
}

TEST_CASE("scalar reductions against naive loops") {
    const auto& S = simd::kernels_for(simd::Isa::scalar);
    auto d = make(257, 5);
    double dot_u8 = 0, disc = 0, sq = 0, dot = 0;
    for (std::size_t i = 0; i < 257; ++i) {
        dot_u8 += d.ea[i] ? d.a[i] : 0.0;
        double g = d.a[i] - d.b[i];
        if (d.ea[i] != d.eb[i]) disc += g * g;
        sq += g * g;
        dot += d.a[i] * d.b[i];
    }
    CHECK(S.dot_u8(d.a.data(), d.ea.data(), 257) == doctest::Approx(dot_u8).epsilon(1e-13));
    CHECK(S.discord(d.a.data(), d.b.data(), d.ea.data(), d.eb.data(), 257) ==
          doctest::Approx(disc).epsilon(1e-13));
    CHECK(S.sqdiff(d.a.data(), d.b.data(), 257) == doctest::Approx(sq).epsilon(1e-13));
    CHECK(S.dot(d.a.data(), d.b.data(), 257) == doctest::Approx(dot).epsilon(1e-13));
}

TEST_CASE("dispatch can be pinned") {
    auto before = simd::active_isa();
    simd::force_isa(simd::Isa::scalar);
    CHECK(simd::active_isa() == simd::Isa::scalar);
    CHECK(simd::kernels().dot == simd::kernels_for(simd::Isa::scalar).dot);
    simd::force_isa(before);
    CHECK(simd::active_isa() == before);
}
