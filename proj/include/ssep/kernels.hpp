#pragma once

#include <vector>

#include "ssep/common.hpp"
#include "ssep/torus.hpp"

namespace ssep {

// ---- Bessel --------------------------------------------------------------

// e^{-z} I_k(z) for integer k (I_{-k} = I_k), z >= 0.
double scaled_bessel_i(long k, double z);

// e^{-z} I_k(z) for k = 0..kmax in one backward sweep.
std::vector<double> scaled_bessel_row(double z, long kmax);

// ---- walk kernels --------------------------------------------------------
// Walk time is unaccelerated: rate one to each of the 2d neighbours.

double rw_transition(int d, double t, const LatticeVector& x);

// One coordinate factor e^{-2t} I_x(2t).
inline double rw_factor(double t, long x) { return scaled_bessel_i(x, 2 * t); }

// Factors for x = 0..kmax.
std::vector<double> rw_row(double t, long kmax);

// One coordinate of the walk on the ring Z/LZ, values for x = 0..L-1.
std::vector<double> ring_kernel(double t, long L);

// Torus walk probability: product of ring factors.
double torus_transition(int d, long L, double t, const LatticeVector& x);

// (4πt)^{-d/2} exp(-|u|²/4t)
double gaussian_kernel(int d, double t, const std::vector<double>& u);

struct LcltError {
    double actual = 0;     // q_t(0,x)
    double gaussian = 0;   // n^{-d} q̄_t(x/n)
    double gap = 0;
    double envelope = 0;
    double ratio = 0;
};

// t is accelerated (macroscopic) time: q_t = 𝔮_{tn²}.
LcltError lclt_error(int d, int n, double t, const LatticeVector& x);

struct LcltSweep {
    std::vector<int> n;
    std::vector<double> max_ratio;
};

// Max gap/envelope per n over t in ts and all |x| <= radius_factor·n.
LcltSweep lclt_sweep(int d, const std::vector<int>& ns, const std::vector<double>& ts,
                     double radius_factor = 4.0);

// ---- resolvent -----------------------------------------------------------

// g_n on the torus (Z/LZ)^d. On the torus the wrapped infinite-lattice
// resolvent is the exact resolvent, so nothing is truncated.
struct ResolventField {
    int d = 0;
    int n = 0;
    Torus torus;
    std::vector<double> g;  // full table, torus site order
    double origin = 0;      // g(0)
    double mass = 0;        // Σ g
    double l2norm = 0;      // Σ g²
    double gradient = 0;    // n² Σ_{x,j} (g(x) - g(x+e_j))²
    double quad_error = 0;  // embedded estimate at the origin
    // Infinite-lattice mass outside the fundamental box (union bound over axes).
    double tail_mass = 0;

    double at(const LatticeVector& x) const { return g[torus.index(x)]; }
};

ResolventField resolvent(int d, int n, long L);

struct ResolventCheck {
    double mass_gap = 0;      // |Σg - 1|
    double max_residual = 0;  // max_x |(1-Δ_n)g - δ_0|
    double energy_gap = 0;    // |g(0) - Σg² - n²Σ|∇g|²|
};

ResolventCheck check_resolvent(const ResolventField& f);

// Infinite-lattice g_n(0) = ∫ e^{-t} q_{tn²}(0,0) dt.
double green_origin(int d, int n);

// Infinite-lattice g_n(x) for a single site.
double green_at(int d, int n, const LatticeVector& x);

// Torus g_n(x) by the same single-site quadrature (used as a cross-check).
double green_at_torus(int d, int n, long L, const LatticeVector& x);

// g_d(0) = ∫_0^∞ 𝔮_t(0,0) dt, d >= 3.
double green_constant(int d);

struct GnL2 {
    double sum_sq = 0;         // Σ g_n²
    double scaled = 0;         // β² Σ g_n²
};

// Σ g_n² = ∫ r e^{-r} q_r(0,0) dr on Z^d.
GnL2 gn_l2_scaling(int d, int n);

// Same quantity on the torus of side L.
double gn_l2_torus(int d, int n, long L);

// Checks β²Σg² strictly decreases along ns; throws InvariantViolation if not.
std::vector<GnL2> gn_l2_sweep(int d, const std::vector<int>& ns);

// Limit variance rate σ_d²(ρ): χ/(2π) for d = 2, 2 g_d(0) χ for d >= 3.
double sigma_squared(int d, double rho);

}  // namespace ssep
