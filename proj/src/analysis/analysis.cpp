#include "ssep/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "ssep/common.hpp"
#include "ssep/quadrature.hpp"

namespace ssep {

const char* case_name(CaseId id) {
    switch (id) {
        case CaseId::eqd1: return "eqd1";
        case CaseId::eqd2: return "eqd2";
        case CaseId::eqd3: return "eqd3";
        case CaseId::eq1d3: return "eq1d3";
        case CaseId::trlogrs: return "trlogrs";
        case CaseId::eq3d3: return "eq3d3";
    }
    return "?";
}

CaseId parse_case(const std::string& name) {
    for (CaseId id : {CaseId::eqd1, CaseId::eqd2, CaseId::eqd3, CaseId::eq1d3, CaseId::trlogrs,
                      CaseId::eq3d3})
        if (name == case_name(id)) return id;
    throw InvalidArgument("unknown appendix case '" + name + "'");
}

namespace {

void check_params(int d, int n, double s, double t) {
    require(n >= 1, "appendix: n must be >= 1");
    require(d >= 1, "appendix: d must be >= 1");
    require(s >= 0 && s <= t, "appendix: need 0 <= s <= t");
}

// (1 + n²u)^{-p}
double kern(double n2, double u, double p) { return std::pow(1 + n2 * u, -p); }

double loglog_factor(double n2, double u) { return 1 / (1 + std::log1p(n2 * u)); }

// ∫_s^t f(t - r, r - s) dr, split at the midpoint and graded toward both ends
// where the integrand varies on the scale 1/n².
double two_sided(const Integrand& left, const Integrand& right, double gap, double n2) {
    double h = 1 / n2, half = gap / 2;
    // left(u) with u = r - s ∈ [0, gap/2], right(u) with u = t - r ∈ [0, gap/2]
    return integrate_graded(left, 0, half, h, 1e-12, 0).value +
           integrate_graded(right, 0, half, h, 1e-12, 0).value;
}

}  // namespace

double case_integral(CaseId id, int d, int n, double s, double t) {
    check_params(d, n, s, t);
    const double n2 = double(n) * n, gap = t - s, hd = d / 2.0;
    if (gap == 0) return 0;
    switch (id) {
        case CaseId::eqd1:
            return integrate_graded([&](double u) { return kern(n2, u, 0.5); }, 0, gap, 1 / n2, 1e-12, 0).value;
        case CaseId::eqd2:
            return integrate_graded([&](double u) { return kern(n2, u, 1.0); }, 0, gap, 1 / n2, 1e-12, 0).value;
        case CaseId::eqd3:
            return integrate_graded([&](double u) { return kern(n2, u, hd); }, 0, gap, 1 / n2, 1e-12, 0).value;
        case CaseId::eq1d3:
            return two_sided([&](double u) { return kern(n2, gap - u, 1.0) * kern(n2, u, hd); },
                             [&](double u) { return kern(n2, u, 1.0) * kern(n2, gap - u, hd); }, gap, n2);
        case CaseId::trlogrs:
            return two_sided(
                [&](double u) { return kern(n2, gap - u, 1.0) * loglog_factor(n2, gap - u) * kern(n2, u, hd); },
                [&](double u) { return kern(n2, u, 1.0) * loglog_factor(n2, u) * kern(n2, gap - u, hd); },
                gap, n2);
        case CaseId::eq3d3:
            return two_sided([&](double u) { return kern(n2, gap - u, hd) * kern(n2, u, hd); },
                             [&](double u) { return kern(n2, u, hd) * kern(n2, gap - u, hd); }, gap, n2);
    }
    return 0;
}

double case_reference(CaseId id, int d, int n, double s, double t) {
    check_params(d, n, s, t);
    const double n2 = double(n) * n, x = n2 * (t - s), L = std::log1p(x);
    switch (id) {
        case CaseId::eqd1: return 2 / n2 * (std::sqrt(1 + x) - 1);
        case CaseId::eqd2: return L / n2;
        case CaseId::eqd3:
            require(d >= 3, "eqd3 is stated for d >= 3");
            return 1 / n2;
        case CaseId::eq1d3:
            if (d == 1) return 1 / (n2 * (1 + L));
            if (d == 2) return L / (n2 * (1 + x));
            return 1 / (n2 * (1 + x));
        case CaseId::trlogrs:
            if (d <= 2) {
                require(n >= 3, "trlogrs for d <= 2 needs log log n > 0");
                return std::log(std::log(double(n))) / n2 * std::pow(1 + x, -d / 2.0);
            }
            return 1 / n2 / (1 + x) / (1 + L);
        case CaseId::eq3d3:
            require(d >= 3, "eq3d3 is stated for d >= 3");
            return 1 / n2 * std::pow(1 + x, -d / 2.0);
    }
    return 0;
}

IdentityCheck check_identity(CaseId id, int n, double s, double t) {
    require(id == CaseId::eqd1 || id == CaseId::eqd2, "check_identity: eqd1 or eqd2 only");
    IdentityCheck c;
    c.integral = case_integral(id, 1, n, s, t);
    c.reference = case_reference(id, 1, n, s, t);
    double diff = std::abs(c.integral - c.reference);
    c.gap = c.reference != 0 ? diff / std::abs(c.reference) : diff;
    return c;
}

namespace {

std::vector<std::pair<double, double>> grid_pairs(const AppendixGrid& g) {
    std::vector<std::pair<double, double>> out;
    for (int k = 0; k <= g.finest; ++k) {
        double gap = std::ldexp(g.T, -k);
        if (gap < g.min_gap) continue;
        for (double s : {0.0, g.T / 4, g.T / 2, 3 * g.T / 4})
            if (s + gap <= g.T * (1 + 1e-12)) out.push_back({s, std::min(g.T, s + gap)});
    }
    return out;
}

}  // namespace

BoundCheck check_bound(CaseId id, int d, const AppendixGrid& grid) {
    require(id != CaseId::eqd1 && id != CaseId::eqd2, "check_bound: identities are not bounds");
    BoundCheck b;
    b.id = id;
    b.d = d;
    b.ns = grid.ns;
    auto pairs = grid_pairs(grid);
    for (int n : grid.ns) {
        double mx = 0;
        for (auto [s, t] : pairs) {
            IntegralCase c;
            c.id = id;
            c.d = d;
            c.n = n;
            c.s = s;
            c.t = t;
            c.integral = case_integral(id, d, n, s, t);
            c.reference = case_reference(id, d, n, s, t);
            c.ratio = c.integral / c.reference;
            mx = std::max(mx, c.ratio);
            b.cases.push_back(c);
        }
        b.max_ratio.push_back(mx);
    }
    auto [lo, hi] = std::minmax_element(b.max_ratio.begin(), b.max_ratio.end());
    b.fitted_constant = *hi;
    b.spread = *hi / *lo;
    b.stable = std::isfinite(b.fitted_constant) && b.spread <= 2.0;
    return b;
}

bool AppendixReport::pass(double identity_tol) const {
    return identity_gap <= identity_tol &&
           std::all_of(bounds.begin(), bounds.end(), [](const BoundCheck& b) { return b.stable; });
}

AppendixReport run_appendix(const AppendixGrid& grid) {
    AppendixReport rep;
    auto pairs = grid_pairs(grid);
    for (CaseId id : {CaseId::eqd1, CaseId::eqd2}) {
        for (int n : grid.ns) {
            for (auto [s, t] : pairs) {
                auto c = check_identity(id, n, s, t);
                rep.rows.push_back({id, 1, n, s, t, c.integral, c.reference, c.integral / c.reference});
                rep.identity_gap = std::max(rep.identity_gap, c.gap);
            }
        }
    }
    const std::pair<CaseId, std::vector<int>> plan[] = {
        {CaseId::eqd3, {3, 4}},
        {CaseId::eq1d3, {1, 2, 3}},
        {CaseId::trlogrs, {1, 2, 3}},
        {CaseId::eq3d3, {3, 4}},
    };
    for (const auto& [id, dims] : plan) {
        for (int d : dims) {
            auto b = check_bound(id, d, grid);
            rep.rows.insert(rep.rows.end(), b.cases.begin(), b.cases.end());
            rep.bounds.push_back(std::move(b));
        }
    }
    return rep;
}

}  // namespace ssep
