#include <doctest.h>

#include <cmath>

#include "ssep/stats.hpp"

using namespace ssep;

namespace {

std::vector<double> uniform_grid(int K, double T) {
    std::vector<double> g;
    for (int k = 0; k <= K; ++k) g.push_back(T * k / K);
    return g;
}

PredictionBundle brownian_prediction(const std::vector<double>& grid, double rate) {
    PredictionBundle p;
    p.t = grid;
    for (double t : grid) {
        p.continuum.push_back(rate * t);
        p.oracle.push_back(rate * t);
        p.oracle_se.push_back(0.0);
    }
    return p;
}

}  // namespace

TEST_CASE("one replica leaves the variance undefined") {
    auto recs = synthetic_paths(SyntheticLaw::brownian, 1, uniform_grid(4, 1.0), 1.0, 1);
    auto s = summarize(recs);
    CHECK_FALSE(s.variance_defined);
    CHECK(s.M == 1);
}

TEST_CASE("all-zero paths have zero moments") {
    std::vector<PathRecord> recs(50);
    for (std::size_t i = 0; i < recs.size(); ++i) {
        recs[i].seed = i;
        recs[i].t = uniform_grid(4, 1.0);
        recs[i].gamma.assign(5, 0.0);
    }
    auto s = summarize(recs, 5);
    for (const auto& ts : s.times) {
        CHECK(ts.mean == 0.0);
        CHECK(ts.var == 0.0);
    }
}

TEST_CASE("variance estimate of Gaussian paths") {
    const double v = 0.7;
    auto recs = synthetic_paths(SyntheticLaw::brownian, 8000, uniform_grid(8, 1.0), v, 11);
    auto s = summarize(recs);
    const auto& last = s.times.back();
    CHECK(std::abs(last.var - v) <= 3 * last.se_var);
    CHECK(std::abs(last.mean) <= 3 * last.se_mean);
}

TEST_CASE("mixed manifests are refused") {
    auto recs = synthetic_paths(SyntheticLaw::brownian, 10, uniform_grid(4, 1.0), 1.0, 1);
    recs[3].manifest = "other";
    CHECK_THROWS_AS(summarize(recs), InvalidArgument);
}

TEST_CASE("accumulator merge is associative") {
    auto recs = synthetic_paths(SyntheticLaw::brownian, 300, uniform_grid(4, 1.0), 1.0, 2);
    PathAccumulator all(5), a(5), b(5), c(5);
    for (std::size_t i = 0; i < recs.size(); ++i) {
        all.add(recs[i]);
        (i < 100 ? a : i < 200 ? b : c).add(recs[i]);
    }
    PathAccumulator ab = a, bc = b;
    ab.merge(b);
    ab.merge(c);
    bc.merge(c);
    a.merge(bc);
    for (std::size_t k = 0; k < 5; ++k) {
        CHECK(ab.variance(k) == doctest::Approx(all.variance(k)).epsilon(1e-12));
        CHECK(a.variance(k) == doctest::Approx(all.variance(k)).epsilon(1e-12));
        CHECK(ab.central(k, 4) == doctest::Approx(all.central(k, 4)).epsilon(1e-12));
    }
}

TEST_CASE("gaussianity: Brownian control passes, exponential control fails") {
    auto grid = uniform_grid(16, 1.0);
    auto good = summarize(synthetic_paths(SyntheticLaw::brownian, 4000, grid, 0.13, 3));
    auto bad = summarize(synthetic_paths(SyntheticLaw::exponential, 4000, grid, 0.13, 3));
    CHECK(test_gaussianity(good).pass());
    CHECK_FALSE(test_gaussianity(bad).pass());
    CHECK(good.ks <= 1.63 / std::sqrt(4000.0));
}

TEST_CASE("increments: Brownian control passes, correlated control fails") {
    auto grid = uniform_grid(8, 1.0);
    auto p = brownian_prediction(grid, 0.5);
    auto good = summarize(synthetic_paths(SyntheticLaw::brownian, 6400, grid, 0.5, 4));
    auto bad = summarize(synthetic_paths(SyntheticLaw::correlated, 6400, grid, 0.5, 4));
    CHECK(test_increments(good, p).pass());
    CHECK_FALSE(test_increments(bad, p).pass());
}

TEST_CASE("variance verdict on a calibrated ensemble") {
    auto grid = uniform_grid(8, 1.0);
    auto p = brownian_prediction(grid, 0.5);
    auto s = summarize(synthetic_paths(SyntheticLaw::brownian, 4000, grid, 0.5, 5));
    auto v = test_variance(s, p);
    CHECK(v.pass());
    // verdicts are pure functions of their inputs
    auto w = test_variance(s, p);
    REQUIRE(v.checks.size() == w.checks.size());
    for (std::size_t i = 0; i < v.checks.size(); ++i) CHECK(v.checks[i].statistic == w.checks[i].statistic);
    PredictionBundle off = p;
    for (auto& c : off.continuum) c *= 1.5;
    CHECK_FALSE(test_variance(s, off).pass());
}

TEST_CASE("tightness of Brownian paths") {
    auto recs = synthetic_paths(SyntheticLaw::brownian, 4000, uniform_grid(16, 1.0), 1.0, 6);
    auto r = tightness_statistics(recs, 1.0);
    CHECK(r.exponent == doctest::Approx(2.0).epsilon(0.05));
    CHECK(r.gaussian_ratio == doctest::Approx(1.0).epsilon(0.1));
    CHECK(test_tightness(recs, 1.0).pass());
    auto coarse = synthetic_paths(SyntheticLaw::brownian, 10, uniform_grid(8, 1.0), 1.0, 6);
    CHECK_THROWS_AS(tightness_statistics(coarse, 1.0), InvalidArgument);
}

TEST_CASE("remainder verdict") {
    std::vector<RemainderPoint> pts{{3, 16, 0.10, 0.005, 0.3}, {3, 32, 0.05, 0.003, 0.15},
                                    {3, 64, 0.02, 0.002, 0.08}};
    CHECK(test_remainder(pts).pass());
    pts[2].mean_r2 = 0.2;
    CHECK_FALSE(test_remainder(pts).pass());
    pts.pop_back();
    CHECK_THROWS_AS(test_remainder(pts), InvalidArgument);
}

TEST_CASE("compensated sums") {
    CompensatedSum s;
    s.add(1e16);
    for (int i = 0; i < 1000; ++i) s.add(1.0);
    s.add(-1e16);
    CHECK(s.value() == 1000.0);
}
