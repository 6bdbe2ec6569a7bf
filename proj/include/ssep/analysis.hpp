#pragma once

#include <string>
#include <vector>

namespace ssep {

enum class CaseId { eqd1, eqd2, eqd3, eq1d3, trlogrs, eq3d3 };
const char* case_name(CaseId id);
CaseId parse_case(const std::string& name);

struct IntegralCase {
    CaseId id = CaseId::eqd2;
    int d = 0;
    int n = 0;
    double s = 0, t = 0;
    double integral = 0;
    double reference = 0;  // closed form, or the bound without its constant
    double ratio = 0;      // integral / reference
};

// Left-hand side of each case by adaptive quadrature.
double case_integral(CaseId id, int d, int n, double s, double t);
// Closed form (identities) or the right-hand side without the constant (bounds).
double case_reference(CaseId id, int d, int n, double s, double t);

struct IdentityCheck {
    double integral = 0;
    double reference = 0;
    double gap = 0;  // relative; absolute when the reference is 0
};

// eqd1 or eqd2 only.
IdentityCheck check_identity(CaseId id, int n, double s, double t);

struct AppendixGrid {
    std::vector<int> ns{4, 16, 64, 256};
    double T = 1.0;
    int finest = 16;  // gaps T·2^-k for k = 0..finest, starts at multiples of T/4
    double min_gap = 1e-6;
};

struct BoundCheck {
    CaseId id = CaseId::eqd3;
    int d = 0;
    std::vector<IntegralCase> cases;
    std::vector<int> ns;
    std::vector<double> max_ratio;  // per n
    double fitted_constant = 0;     // max over the grid
    double spread = 0;              // max/min of the per-n maxima
    bool stable = false;            // finite and spread <= 2
};

BoundCheck check_bound(CaseId id, int d, const AppendixGrid& grid = {});

struct AppendixReport {
    std::vector<IntegralCase> rows;
    double identity_gap = 0;  // worst relative gap over both identities
    std::vector<BoundCheck> bounds;
    bool pass(double identity_tol = 1e-10) const;
};

// Both identities on the grid plus every bound in the dimensions it covers.
AppendixReport run_appendix(const AppendixGrid& grid = {});

}  // namespace ssep
