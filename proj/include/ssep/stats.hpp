#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssep/engine.hpp"

namespace ssep {

// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x);
    double value() const { return sum_ + comp_; }
    void merge(const CompensatedSum& o);

private:
    double sum_ = 0, comp_ = 0;
};

// Streaming power sums over replicas for one batch; merge is associative.
class PathAccumulator {
public:
    explicit PathAccumulator(std::size_t grid = 0);
    void add(const PathRecord& r);
    void merge(const PathAccumulator& o);

    std::size_t count() const { return count_; }
    std::size_t grid() const { return K_; }
    double mean(std::size_t k) const;
    double variance(std::size_t k) const;  // unbiased
    double central(std::size_t k, int p) const;  // biased p-th central moment, p ∈ {2,3,4}
    double covariance(std::size_t i, std::size_t j) const;
    double qv_mean(std::size_t k) const;
    double qv_variance(std::size_t k) const;
    double r2_mean(std::size_t k) const;
    double rb_mean() const;
    bool has_qv() const { return qv_count_ == count_ && count_ > 0; }
    bool has_rb() const { return rb_count_ == count_ && count_ > 0; }

private:
    std::size_t K_ = 0, count_ = 0, qv_count_ = 0, rb_count_ = 0;
    std::vector<CompensatedSum> g1_, g2_, g3_, g4_, cross_, q1_, q2_, r2_;
    CompensatedSum rb_;
};

struct TimeSummary {
    double t = 0;
    double mean = 0, se_mean = 0;
    double var = 0, se_var = 0;
    double skew = 0, kurt = 0;  // standardized third and fourth moments
    double qv_mean = kNaN, se_qv_mean = kNaN, qv_var = kNaN, qv_sd = kNaN, qv_max = kNaN;
    double r2_mean = kNaN, se_r2 = kNaN;
};

struct EnsembleSummary {
    std::string manifest;
    std::size_t M = 0;
    int batches = 0;
    bool variance_defined = false;  // false when M < 2
    std::vector<TimeSummary> times;
    std::vector<std::vector<double>> cov;                  // Cov(Γ(t_i), Γ(t_j))
    std::vector<std::vector<std::vector<double>>> batch_cov;  // per batch
    double rb_mean = kNaN, se_rb = kNaN;
    double ks = kNaN;  // sup |F_M - Φ| of standardized Γ(T)
    double qv_rate_max = kNaN;  // max over replicas and t > 0 of ⟨M⟩(t)/t
    std::vector<std::uint64_t> seeds;
};

// Records are put in canonical seed order and cut into contiguous batches.
// Throws InvalidArgument on mixed manifests or grids.
EnsembleSummary summarize(std::vector<PathRecord> records, int batches = 32);

struct PredictionBundle {
    std::vector<double> t;
    std::vector<double> continuum;  // ∫_0^t σ_d² ds
    std::vector<double> oracle;     // finite-n variance from duality
    std::vector<double> oracle_se;
    double covariance(std::size_t i, std::size_t j) const;
    void validate() const;
};

struct Check {
    std::string name;
    bool pass = false;
    double statistic = 0;
    double threshold = 0;
    std::string detail;
};

struct Verdict {
    std::string test;
    std::vector<Check> checks;
    bool pass() const;
    void add(Check c) { checks.push_back(std::move(c)); }
};

struct VarianceBands {
    double continuum_band = 0.15;  // relative, at T
    double z = 3.0;
    std::size_t min_replicas = 1000;
};

// Oracle agreement at every grid time, continuum band at T, centering
// tripwire, and, when QV was recorded, the ⟨M⟩ mean band and monotonicity.
Verdict test_variance(const EnsembleSummary& s, const PredictionBundle& p,
                      const VarianceBands& bands = {});

struct GaussianBands {
    double ks_allowance = 0.02;
    double kurt_lo = 2.6, kurt_hi = 3.4;
    double skew_abs = 0.2;
    std::size_t min_replicas = 4000;
};

Verdict test_gaussianity(const EnsembleSummary& s, const GaussianBands& bands = {});

// Cov(Γ(t)-Γ(s), Γ(s)) ≈ 0 for grid pairs, and Cov(Γ(s),Γ(t)) within a
// relative band of the predicted ∫_0^s σ².
Verdict test_increments(const EnsembleSummary& s, const PredictionBundle& p,
                        double band = 0.2, double z = 3.0);

struct RemainderPoint {
    int d = 0;
    int n = 0;
    double mean_r2 = 0;
    double se = 0;
    double bound = 0;  // 3β²Σg²
};

Verdict test_remainder(const std::vector<RemainderPoint>& by_n, double z = 3.0);

struct QvRun {
    int n = 0;
    EnsembleSummary summary;
};

// Mean ⟨M⟩(t) within a relative band of ∫σ² at every grid time, the
// across-replica spread of ⟨M⟩(T) shrinking along n, and one rate constant
// C = max ⟨M⟩(t)/t serving every run (per-run maxima within a factor 2).
Verdict test_qv(const std::vector<QvRun>& runs, const PredictionBundle& p, double band);

struct TightnessResult {
    std::vector<double> gaps;
    std::vector<double> m4;      // E[(Γ(t)-Γ(s))⁴] pooled over grid pairs with that gap
    std::vector<double> m2;
    double exponent = 0;
    double exponent_ci = 0;
    double constant_spread = 0;  // max/min of m4/gap²
    double gaussian_ratio = 0;   // m4 / (3 m2²) at the largest gap
};

TightnessResult tightness_statistics(const std::vector<PathRecord>& records, double T);

struct TightnessBands {
    double min_exponent = 1.7;
    double max_spread = 2.0;
    double ratio_lo = 0.7, ratio_hi = 1.3;
};

Verdict test_tightness(const std::vector<PathRecord>& records, double T,
                       const TightnessBands& bands = {});

// ---- calibration paths --------------------------------------------------------

enum class SyntheticLaw { brownian, exponential, correlated };

// Γ paths on the grid with Var Γ(t) = rate·t: Brownian increments, centred
// exponential marginals at each time, or increments anticorrelated with the past.
std::vector<PathRecord> synthetic_paths(SyntheticLaw law, std::size_t M,
                                        const std::vector<double>& grid, double rate,
                                        std::uint64_t seed);

}  // namespace ssep
