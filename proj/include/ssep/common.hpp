#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssep {

using LatticeVector = std::vector<long>;

struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Raised when a structural identity fails beyond its tolerance.
struct InvariantViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw InvalidArgument(msg);
}

// Bernoulli variance. The single place where χ is defined.
inline double chi(double rho) { return rho * (1.0 - rho); }

// Occupation-time scaling: √n, n/√log n, n for d = 1, 2, ≥3.
inline double beta(int d, int n) {
    require(d >= 1 && n >= 1, "beta: need d >= 1, n >= 1");
    if (d == 1) return std::sqrt(double(n));
    if (d == 2) {
        require(n >= 2, "beta: d = 2 needs n >= 2");
        return n / std::sqrt(std::log(double(n)));
    }
    return double(n);
}

inline double norm2(const LatticeVector& x) {
    double s = 0;
    for (long c : x) s += double(c) * double(c);
    return s;
}

}  // namespace ssep
