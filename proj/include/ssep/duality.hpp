#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ssep/engine.hpp"

namespace ssep {

enum class CorrMethod { duality_mc, projection, full_lattice_mc };
const char* method_name(CorrMethod m);

// φ(t₁,…,t_k; x₁,…,x_k) = E Π η̄_{t_i}(x_i) on the geometry of an oracle.
struct CorrelationQuery {
    std::vector<double> times;
    std::vector<std::uint64_t> sites;
    void validate() const;
};

struct CorrelationEstimate {
    double value = 0;
    double stderr = 0;
    CorrMethod method = CorrMethod::duality_mc;
    std::uint64_t replicas = 0;
};

struct VariancePrediction {
    double finite_n = 0;    // 2β² ∫∫ φ(s,r;0,0)
    double stderr = 0;
    double diagonal = 0;    // deterministic z = 0 part of the projection
    double correction = 0;  // off-diagonal part, Monte Carlo
    double continuum = 0;   // ∫ σ_d²(ρ(s,0)) ds
    std::uint64_t replicas = 0;
};

struct OracleOptions {
    std::size_t replicas = 200000;
    int batches = 32;
    std::uint64_t seed = 1;
    int workers = 1;
};

bool adjacent(const Torus& torus, std::uint64_t x, std::uint64_t y);

// Correlations from few-particle stirring duality. The geometry (n, L, ρ^n)
// comes from a context; the resolvent tables are not needed.
class DualityOracle {
public:
    DualityOracle(std::shared_ptr<const KernelContext> ctx, OracleOptions opt = {});

    const KernelContext& context() const { return *ctx_; }
    const OracleOptions& options() const { return opt_; }

    // φ(t,t;x₁,x₂) = -n² E ∫₀^t 1{X¹_u ~ X²_u} (ρ_{t-u}(X¹_u) - ρ_{t-u}(X²_u))² du.
    CorrelationEstimate corr_equal_time_pair(double t, std::uint64_t x1, std::uint64_t x2) const;

    // φ(s,t;y,x) = Σ_z q_{t-s}(x,z) κ_s(z,y): the z = y term q·χ(ρ_s(y)) exactly,
    // the rest by sampling z from the walk and one pair run per sample.
    CorrelationEstimate corr_two_time(double s, double t, std::uint64_t y, std::uint64_t x) const;

    // k = 1 gives 0, k = 2 dispatches to the two routines above.
    CorrelationEstimate evaluate(const CorrelationQuery& q) const;

    VariancePrediction occupation_variance(double t) const;

    // E ∫ of the pair integrand for one trajectory started at (x1, x2) over [0, t].
    double pair_integral(double t, std::uint64_t x1, std::uint64_t x2, Rng& rng) const;

private:
    std::shared_ptr<const KernelContext> ctx_;
    OracleOptions opt_;
    bool flat_;  // spatially constant ρ^n: every pair integrand vanishes

    template <class Sample>
    CorrelationEstimate batch_mean(std::uint64_t key, const Sample& sample) const;
};

// ---- lemma sweeps ------------------------------------------------------------

enum class Lemma { onetime, onetime2d, twotimes, twotimestwopt, threetimes, fourtimes, meeting };
Lemma parse_lemma(const std::string& name);
const char* lemma_name(Lemma l);

struct SweepPoint {
    int n = 0;
    double x = 0;       // n, time gap or time, depending on the lemma
    double value = 0;   // quantity entering the fit
    double stderr = 0;
    double raw = 0;     // value before any log-factor normalisation
};

struct ExponentFit {
    int n = 0;  // 0 for a fit across n
    double exponent = 0;
    double ci = 0;  // 95% half-width
    double prefactor = 0;
};

struct ScalingReport {
    Lemma lemma = Lemma::onetime;
    int d = 0;
    std::string variable;
    std::vector<SweepPoint> points;
    std::vector<ExponentFit> fits;
    double stability = 0;  // max/min of the normalised tail (meeting only)
    bool indirect = false;
    std::string note;
};

struct SweepOptions {
    double t = 0.25;      // evaluation time for one-time lemmas
    double T = 1.0;
    int m = 4;
    SineSpec sine{0.5, 0.25, 1};
    std::vector<double> gaps;   // twotimes; default T/4, T/8, ..., T/1024
    std::vector<double> times;  // meeting; default one decade
    OracleOptions oracle{20000, 32, 1, 1};
};

// Oracle values along an n list (>= 3 values) and fitted exponents. Throws
// ConvergenceError when a point's standard error exceeds 30% of its value.
ScalingReport lemma_scaling_sweep(Lemma lemma, const std::vector<int>& ns,
                                  const SweepOptions& opt = {});

// Weighted least squares of log y on log x. Zero errors fall back to OLS.
ExponentFit fit_power(const std::vector<double>& x, const std::vector<double>& y,
                      const std::vector<double>& se);

}  // namespace ssep
