#include <doctest.h>

#include <cmath>

#include "ssep/analysis.hpp"
#include "ssep/common.hpp"

using namespace ssep;

TEST_CASE("identity cases in closed form") {
    CHECK(case_reference(CaseId::eqd2, 2, 10, 0, 1) == doctest::Approx(1e-2 * std::log(101.0)).epsilon(1e-14));
    CHECK(case_reference(CaseId::eqd1, 1, 10, 0, 1) ==
          doctest::Approx(2e-2 * (std::sqrt(101.0) - 1)).epsilon(1e-14));
    for (CaseId id : {CaseId::eqd1, CaseId::eqd2}) {
        auto c = check_identity(id, 10, 0, 1);
        CHECK(c.gap < 1e-10);
        auto z = check_identity(id, 10, 0.5, 0.5);
        CHECK(z.integral == 0.0);
        CHECK(z.reference == 0.0);
    }
    CHECK_THROWS_AS(check_identity(CaseId::eqd3, 10, 0, 1), InvalidArgument);
}

TEST_CASE("identities hold across n and gaps") {
    for (int n : {4, 64, 256})
        for (double gap : {1e-6, 1e-3, 0.5})
            for (CaseId id : {CaseId::eqd1, CaseId::eqd2}) CHECK(check_identity(id, n, 0.25, 0.25 + gap).gap < 1e-10);
}

TEST_CASE("d = 3 bound constant") {
    AppendixGrid g;
    g.ns = {4, 16, 64};
    g.finest = 8;
    auto b = check_bound(CaseId::eqd3, 3, g);
    CHECK(b.stable);
    CHECK(b.fitted_constant == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("case names round-trip") {
    for (CaseId id : {CaseId::eqd1, CaseId::eqd2, CaseId::eqd3, CaseId::eq1d3, CaseId::trlogrs, CaseId::eq3d3})
        CHECK(parse_case(case_name(id)) == id);
    CHECK_THROWS_AS(parse_case("eq9"), InvalidArgument);
}
