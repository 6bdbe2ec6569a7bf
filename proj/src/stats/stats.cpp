#include "ssep/stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ssep/duality.hpp"

namespace ssep {

void CompensatedSum::add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
        comp_ += (sum_ - t) + x;
    else
        comp_ += (x - t) + sum_;
    sum_ = t;
}

void CompensatedSum::merge(const CompensatedSum& o) {
    add(o.sum_);
    add(o.comp_);
}

// ---- accumulator ----------------------------------------------------------------

PathAccumulator::PathAccumulator(std::size_t grid)
    : K_(grid), g1_(grid), g2_(grid), g3_(grid), g4_(grid), cross_(grid * grid), q1_(grid),
      q2_(grid), r2_(grid) {}

namespace {

bool all_finite(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

void PathAccumulator::add(const PathRecord& r) {
    require(r.gamma.size() == K_, "accumulator: grid size mismatch");
    for (std::size_t k = 0; k < K_; ++k) {
        double g = r.gamma[k];
        g1_[k].add(g);
        g2_[k].add(g * g);
        g3_[k].add(g * g * g);
        g4_[k].add(g * g * g * g);
        for (std::size_t j = 0; j < K_; ++j) cross_[k * K_ + j].add(g * r.gamma[j]);
    }
    if (r.QV.size() == K_ && all_finite(r.QV)) {
        ++qv_count_;
        for (std::size_t k = 0; k < K_; ++k) {
            q1_[k].add(r.QV[k]);
            q2_[k].add(r.QV[k] * r.QV[k]);
        }
    }
    if (r.R.size() == K_ && all_finite(r.R))
        for (std::size_t k = 0; k < K_; ++k) r2_[k].add(r.R[k] * r.R[k]);
    if (std::isfinite(r.rb_r2)) {
        ++rb_count_;
        rb_.add(r.rb_r2);
    }
    ++count_;
}

void PathAccumulator::merge(const PathAccumulator& o) {
    if (o.count_ == 0) return;
    if (count_ == 0 && K_ == 0) {
        *this = o;
        return;
    }
    require(o.K_ == K_, "accumulator: grid size mismatch");
    for (std::size_t k = 0; k < K_; ++k) {
        g1_[k].merge(o.g1_[k]);
        g2_[k].merge(o.g2_[k]);
        g3_[k].merge(o.g3_[k]);
        g4_[k].merge(o.g4_[k]);
        q1_[k].merge(o.q1_[k]);
        q2_[k].merge(o.q2_[k]);
        r2_[k].merge(o.r2_[k]);
    }
    for (std::size_t i = 0; i < cross_.size(); ++i) cross_[i].merge(o.cross_[i]);
    rb_.merge(o.rb_);
    count_ += o.count_;
    qv_count_ += o.qv_count_;
    rb_count_ += o.rb_count_;
}

double PathAccumulator::mean(std::size_t k) const { return g1_[k].value() / double(count_); }

double PathAccumulator::variance(std::size_t k) const {
    if (count_ < 2) return kNaN;
    double n = double(count_), m = mean(k);
    return std::max(0.0, (g2_[k].value() - n * m * m) / (n - 1));
}

double PathAccumulator::central(std::size_t k, int p) const {
    double n = double(count_), m = mean(k);
    double s1 = g1_[k].value() / n, s2 = g2_[k].value() / n, s3 = g3_[k].value() / n,
           s4 = g4_[k].value() / n;
    switch (p) {
        case 2: return std::max(0.0, s2 - m * m);
        case 3: return s3 - 3 * m * s2 + 2 * m * m * m;
        case 4: return s4 - 4 * m * s3 + 6 * m * m * s2 - 3 * m * m * m * m;
        default: (void)s1; throw InvalidArgument("central moment order must be 2, 3 or 4");
    }
}

double PathAccumulator::covariance(std::size_t i, std::size_t j) const {
    if (count_ < 2) return kNaN;
    double n = double(count_);
    return (cross_[i * K_ + j].value() - n * mean(i) * mean(j)) / (n - 1);
}

double PathAccumulator::qv_mean(std::size_t k) const {
    return has_qv() ? q1_[k].value() / double(count_) : kNaN;
}

double PathAccumulator::qv_variance(std::size_t k) const {
    if (!has_qv() || count_ < 2) return kNaN;
    double n = double(count_), m = qv_mean(k);
    return std::max(0.0, (q2_[k].value() - n * m * m) / (n - 1));
}

double PathAccumulator::r2_mean(std::size_t k) const {
    double v = r2_[k].value() / double(count_);
    return v;
}

double PathAccumulator::rb_mean() const { return has_rb() ? rb_.value() / double(count_) : kNaN; }

// ---- summary ---------------------------------------------------------------------

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Standard error of a statistic from its batch values.
double batch_se(const std::vector<double>& v) {
    std::size_t B = v.size();
    if (B < 2) return kNaN;
    double m = 0;
    for (double x : v) m += x;
    m /= double(B);
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / double(B - 1) / double(B));
}

}  // namespace

EnsembleSummary summarize(std::vector<PathRecord> records, int batches) {
    require(!records.empty(), "summarize: no records");
    require(batches >= 1, "summarize: need at least one batch");
    const std::string& manifest = records.front().manifest;
    const std::vector<double>& grid = records.front().t;
    const std::size_t K = grid.size();
    for (const auto& r : records) {
        if (r.manifest != manifest) throw InvalidArgument("summarize: records from mixed manifests");
        if (r.t != grid) throw InvalidArgument("summarize: records on different time grids");
    }
    std::stable_sort(records.begin(), records.end(),
                     [](const PathRecord& a, const PathRecord& b) { return a.seed < b.seed; });

    const std::size_t M = records.size();
    const std::size_t B = std::min<std::size_t>(std::size_t(batches), M);
    std::vector<PathAccumulator> acc(B, PathAccumulator(K));
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t i = b * M / B; i < (b + 1) * M / B; ++i) acc[b].add(records[i]);
    PathAccumulator all(K);
    for (const auto& a : acc) all.merge(a);

    EnsembleSummary s;
    s.manifest = manifest;
    s.M = M;
    s.batches = int(B);
    s.variance_defined = M >= 2;
    for (const auto& r : records) s.seeds.push_back(r.seed);
    const bool batched = B >= 2 && M / B >= 2;
    const bool has_r = all_finite(records.front().R) && !records.front().R.empty();

    for (std::size_t k = 0; k < K; ++k) {
        TimeSummary ts;
        ts.t = grid[k];
        ts.mean = all.mean(k);
        ts.var = all.variance(k);
        double c2 = all.central(k, 2);
        if (c2 > 0) {
            ts.skew = all.central(k, 3) / std::pow(c2, 1.5);
            ts.kurt = all.central(k, 4) / (c2 * c2);
        } else {
            ts.skew = ts.kurt = kNaN;
        }
        std::vector<double> bm, bv, bq, br;
        for (const auto& a : acc) {
            bm.push_back(a.mean(k));
            bv.push_back(a.variance(k));
            bq.push_back(a.qv_mean(k));
            br.push_back(a.r2_mean(k));
        }
        ts.se_mean = batch_se(bm);
        ts.se_var = batched ? batch_se(bv) : kNaN;
        if (all.has_qv()) {
            ts.qv_mean = all.qv_mean(k);
            ts.se_qv_mean = batch_se(bq);
            ts.qv_var = all.qv_variance(k);
            ts.qv_sd = std::sqrt(ts.qv_var);
            ts.qv_max = -INFINITY;
            for (const auto& r : records) ts.qv_max = std::max(ts.qv_max, r.QV[k]);
        }
        if (has_r) {
            ts.r2_mean = all.r2_mean(k);
            ts.se_r2 = batch_se(br);
        }
        s.times.push_back(ts);
    }

    s.cov.assign(K, std::vector<double>(K));
    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t j = 0; j < K; ++j) s.cov[i][j] = all.covariance(i, j);
    if (batched) {
        for (const auto& a : acc) {
            std::vector<std::vector<double>> c(K, std::vector<double>(K));
            for (std::size_t i = 0; i < K; ++i)
                for (std::size_t j = 0; j < K; ++j) c[i][j] = a.covariance(i, j);
            s.batch_cov.push_back(std::move(c));
        }
    }

    if (all.has_rb()) {
        s.rb_mean = all.rb_mean();
        std::vector<double> b;
        for (const auto& a : acc) b.push_back(a.rb_mean());
        s.se_rb = batch_se(b);
    }

    if (all.has_qv()) {
        s.qv_rate_max = 0;
        for (const auto& r : records)
            for (std::size_t k = 1; k < K; ++k)
                s.qv_rate_max = std::max(s.qv_rate_max, r.QV[k] / grid[k]);
    }

    const TimeSummary& last = s.times.back();
    if (s.variance_defined && last.var > 0) {
        std::vector<double> z;
        double sd = std::sqrt(last.var);
        for (const auto& r : records) z.push_back((r.gamma.back() - last.mean) / sd);
        std::sort(z.begin(), z.end());
        double D = 0;
        for (std::size_t i = 0; i < M; ++i) {
            double F = normal_cdf(z[i]);
            D = std::max({D, double(i + 1) / double(M) - F, F - double(i) / double(M)});
        }
        s.ks = D;
    }
    return s;
}

// ---- predictions -------------------------------------------------------------------

double PredictionBundle::covariance(std::size_t i, std::size_t j) const {
    return continuum[std::min(i, j)];
}

void PredictionBundle::validate() const {
    require(t.size() == continuum.size() && t.size() == oracle.size() &&
                t.size() == oracle_se.size(),
            "predictions: field lengths differ");
    for (std::size_t k = 1; k < t.size(); ++k)
        require(continuum[k] >= continuum[k - 1] && t[k] > t[k - 1],
                "predictions: continuum variance must be nondecreasing in t");
}

bool Verdict::pass() const {
    return !checks.empty() &&
           std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

namespace {

std::string at_time(double t) {
    std::ostringstream os;
    os << "t=" << t;
    return os.str();
}

void require_grid(const EnsembleSummary& s, const PredictionBundle& p) {
    p.validate();
    require(p.t.size() == s.times.size(), "predictions and summary have different grids");
    for (std::size_t k = 0; k < p.t.size(); ++k)
        require(std::abs(p.t[k] - s.times[k].t) <= 1e-12 * std::max(1.0, p.t[k]),
                "predictions and summary have different grid times");
}

Check replica_check(std::size_t M, std::size_t need) {
    return {"replicas", M >= need, double(M), double(need), "M below the test's minimum"};
}

}  // namespace

Verdict test_variance(const EnsembleSummary& s, const PredictionBundle& p,
                      const VarianceBands& bands) {
    require_grid(s, p);
    Verdict v;
    v.test = "variance";
    v.add(replica_check(s.M, bands.min_replicas));
    const std::size_t K = s.times.size();

    double worst = 0;
    std::string where;
    double worst_c = 0;
    std::string where_c;
    for (std::size_t k = 1; k < K; ++k) {
        const auto& ts = s.times[k];
        double se = std::hypot(ts.se_var, p.oracle_se[k]);
        double z = std::abs(ts.var - p.oracle[k]) / se;
        if (!(z <= worst) ) {
            worst = z;
            where = at_time(ts.t);
        }
        double zc = std::abs(ts.mean) / ts.se_mean;
        if (!(zc <= worst_c)) {
            worst_c = zc;
            where_c = at_time(ts.t);
        }
    }
    v.add({"oracle_z", worst <= bands.z, worst, bands.z, "max |Var - oracle| / σ at " + where});
    v.add({"centering_z", worst_c <= bands.z, worst_c, bands.z, "max |E Γ| / σ at " + where_c});

    double rel = std::abs(s.times.back().var - p.continuum.back()) / p.continuum.back();
    v.add({"continuum_band", rel <= bands.continuum_band, rel, bands.continuum_band,
           "|Var Γ(T) - ∫σ²| / ∫σ²"});

    if (std::isfinite(s.times.back().qv_mean)) {
        double wr = 0;
        std::string wt;
        bool mono = true;
        for (std::size_t k = 1; k < K; ++k) {
            double r = std::abs(s.times[k].qv_mean - p.continuum[k]) / p.continuum[k];
            if (r > wr) {
                wr = r;
                wt = at_time(s.times[k].t);
            }
            if (s.times[k].qv_mean < s.times[k - 1].qv_mean) mono = false;
        }
        v.add({"qv_band", wr <= bands.continuum_band, wr, bands.continuum_band,
               "max |E⟨M⟩ - ∫σ²| / ∫σ² at " + wt});
        v.add({"qv_monotone", mono, mono ? 1.0 : 0.0, 1.0, "E⟨M⟩(t) nondecreasing"});
    }
    return v;
}

Verdict test_gaussianity(const EnsembleSummary& s, const GaussianBands& bands) {
    Verdict v;
    v.test = "gaussianity";
    v.add(replica_check(s.M, bands.min_replicas));
    const auto& last = s.times.back();
    double ks_lim = 1.63 / std::sqrt(double(s.M)) + bands.ks_allowance;
    v.add({"ks", s.ks <= ks_lim, s.ks, ks_lim, "sup |F_M - Φ| of standardized Γ(T)"});
    v.add({"kurtosis", last.kurt >= bands.kurt_lo && last.kurt <= bands.kurt_hi, last.kurt,
           bands.kurt_hi, "standardized fourth moment in [2.6, 3.4]"});
    v.add({"skewness", std::abs(last.skew) <= bands.skew_abs, last.skew, bands.skew_abs,
           "|skewness|"});
    return v;
}

Verdict test_increments(const EnsembleSummary& s, const PredictionBundle& p, double band,
                        double z) {
    require_grid(s, p);
    const std::size_t K = s.times.size();
    require(K >= 5, "test_increments: need at least 4 grid times after 0");
    require(!s.batch_cov.empty(), "test_increments: summary has no batch covariances");
    Verdict v;
    v.test = "increments";
    double worst = 0, worst_rel = 0;
    std::string where, where_rel;
    for (std::size_t i = 1; i < K; ++i) {
        for (std::size_t j = i + 1; j < K; ++j) {
            // Cov(Γ_j - Γ_i, Γ_i) = C_ij - C_ii
            double c = s.cov[i][j] - s.cov[i][i];
            std::vector<double> b;
            for (const auto& bc : s.batch_cov) b.push_back(bc[i][j] - bc[i][i]);
            double zz = std::abs(c) / batch_se(b);
            if (!(zz <= worst)) {
                worst = zz;
                where = "s=" + std::to_string(s.times[i].t) + " t=" + std::to_string(s.times[j].t);
            }
            double rel = std::abs(s.cov[i][j] - p.covariance(i, j)) / p.covariance(i, j);
            if (rel > worst_rel) {
                worst_rel = rel;
                where_rel =
                    "s=" + std::to_string(s.times[i].t) + " t=" + std::to_string(s.times[j].t);
            }
        }
    }
    v.add({"increment_cov_z", worst <= z, worst, z, "max |Cov(ΔΓ, Γ(s))| / σ at " + where});
    v.add({"cov_band", worst_rel <= band, worst_rel, band,
           "max |Cov(Γ(s),Γ(t)) - ∫_0^s σ²| / ∫_0^s σ² at " + where_rel});
    return v;
}

Verdict test_remainder(const std::vector<RemainderPoint>& by_n, double z) {
    require(by_n.size() >= 3, "test_remainder: need runs at >= 3 values of n");
    std::vector<RemainderPoint> pts = by_n;
    std::sort(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.n < b.n; });
    Verdict v;
    v.test = "remainder";
    for (const auto& p : pts) {
        double lim = p.bound + z * p.se;
        v.add({"bound_n" + std::to_string(p.n), p.mean_r2 <= lim, p.mean_r2, lim,
               "E[R(T)²] <= 3β²Σg² + 3σ"});
    }
    for (std::size_t i = 1; i < pts.size(); ++i) {
        bool dec = pts[i].mean_r2 < pts[i - 1].mean_r2;
        v.add({"decrease_n" + std::to_string(pts[i].n), dec, pts[i].mean_r2, pts[i - 1].mean_r2,
               "E[R(T)²] strictly below the previous n"});
    }
    return v;
}

Verdict test_qv(const std::vector<QvRun>& runs, const PredictionBundle& p, double band) {
    require(!runs.empty(), "test_qv: no runs");
    Verdict v;
    v.test = "quadratic_variation";
    for (const auto& r : runs) {
        const auto& s = r.summary;
        require(std::isfinite(s.times.back().qv_mean), "test_qv: run without quadratic variation");
        require(s.times.back().t <= p.t.back() + 1e-12, "test_qv: run beyond the predictions");
        double wr = 0;
        std::string wt;
        for (std::size_t k = 1; k < s.times.size(); ++k) {
            double t = s.times[k].t;
            // predictions may sit on a finer grid; interpolate ∫σ² linearly
            auto it = std::lower_bound(p.t.begin(), p.t.end(), t - 1e-12);
            std::size_t j = std::size_t(it - p.t.begin());
            double c = p.continuum[j];
            if (std::abs(p.t[j] - t) > 1e-12 && j > 0) {
                double w = (t - p.t[j - 1]) / (p.t[j] - p.t[j - 1]);
                c = (1 - w) * p.continuum[j - 1] + w * p.continuum[j];
            }
            double rel = std::abs(s.times[k].qv_mean - c) / c;
            if (rel > wr) {
                wr = rel;
                wt = at_time(t);
            }
        }
        v.add({"qv_band_n" + std::to_string(r.n), wr <= band, wr, band,
               "max |E⟨M⟩(t) - ∫σ²| / ∫σ² at " + wt});
    }
    std::vector<const QvRun*> sorted;
    for (const auto& r : runs) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(), [](auto a, auto b) { return a->n < b->n; });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        double a = sorted[i - 1]->summary.times.back().qv_sd;
        double b = sorted[i]->summary.times.back().qv_sd;
        v.add({"qv_sd_decrease_n" + std::to_string(sorted[i]->n), b < a, b, a,
               "sd ⟨M⟩(T) below the previous n"});
    }
    double lo = INFINITY, hi = 0;
    for (const auto& r : runs) {
        lo = std::min(lo, r.summary.qv_rate_max);
        hi = std::max(hi, r.summary.qv_rate_max);
    }
    v.add({"qv_rate_constant", std::isfinite(hi) && hi / lo <= 2.0, hi / lo, 2.0,
           "C = " + std::to_string(hi) + " bounds ⟨M⟩(t)/t in every run; per-run maxima spread"});
    return v;
}

// ---- tightness ------------------------------------------------------------------------

TightnessResult tightness_statistics(const std::vector<PathRecord>& records, double T) {
    require(!records.empty(), "tightness: no records");
    const auto& grid = records.front().t;
    const std::size_t K = grid.size() - 1;
    require(K >= 16 && K % 16 == 0, "tightness: grid must refine T/16");
    const double h = T / double(K);
    for (std::size_t k = 0; k <= K; ++k)
        require(std::abs(grid[k] - h * double(k)) <= 1e-9 * T, "tightness: grid must be uniform");
    TightnessResult res;
    for (std::size_t steps = K / 16; steps <= K / 2; steps *= 2) {
        CompensatedSum s2, s4;
        std::size_t count = 0;
        for (const auto& r : records) {
            for (std::size_t i = 0; i + steps <= K; ++i) {
                double dg = r.gamma[i + steps] - r.gamma[i];
                s2.add(dg * dg);
                s4.add(dg * dg * dg * dg);
                ++count;
            }
        }
        res.gaps.push_back(h * double(steps));
        res.m2.push_back(s2.value() / double(count));
        res.m4.push_back(s4.value() / double(count));
    }
    auto fit = fit_power(res.gaps, res.m4, std::vector<double>(res.gaps.size(), 0.0));
    res.exponent = fit.exponent;
    res.exponent_ci = fit.ci;
    double lo = INFINITY, hi = 0;
    for (std::size_t i = 0; i < res.gaps.size(); ++i) {
        double c = res.m4[i] / (res.gaps[i] * res.gaps[i]);
        lo = std::min(lo, c);
        hi = std::max(hi, c);
    }
    res.constant_spread = hi / lo;
    res.gaussian_ratio = res.m4.back() / (3 * res.m2.back() * res.m2.back());
    return res;
}

Verdict test_tightness(const std::vector<PathRecord>& records, double T,
                       const TightnessBands& bands) {
    auto r = tightness_statistics(records, T);
    Verdict v;
    v.test = "tightness";
    v.add({"exponent", r.exponent >= bands.min_exponent, r.exponent, bands.min_exponent,
           "fitted exponent of E[(ΔΓ)⁴] in the gap"});
    v.add({"constant_spread", r.constant_spread <= bands.max_spread, r.constant_spread,
           bands.max_spread, "max/min of E[(ΔΓ)⁴]/gap² over dyadic gaps"});
    v.add({"gaussian_ratio", r.gaussian_ratio >= bands.ratio_lo && r.gaussian_ratio <= bands.ratio_hi,
           r.gaussian_ratio, bands.ratio_hi, "E[(ΔΓ)⁴] / 3Var(ΔΓ)² at gap T/2"});
    return v;
}

// ---- calibration -------------------------------------------------------------------------

std::vector<PathRecord> synthetic_paths(SyntheticLaw law, std::size_t M,
                                        const std::vector<double>& grid, double rate,
                                        std::uint64_t seed) {
    require(grid.size() >= 2 && grid.front() == 0, "synthetic: grid must start at 0");
    require(rate > 0, "synthetic: rate must be positive");
    const std::size_t K = grid.size();
    std::vector<PathRecord> out;
    out.reserve(M);
    const double a = 0.5;  // autoregression for the correlated law
    for (std::size_t i = 0; i < M; ++i) {
        PathRecord r;
        r.seed = replica_seed(seed, i);
        Rng rng(r.seed);
        r.t = grid;
        r.gamma.assign(K, 0.0);
        switch (law) {
            case SyntheticLaw::brownian:
                for (std::size_t k = 1; k < K; ++k)
                    r.gamma[k] = r.gamma[k - 1] + std::sqrt(rate * (grid[k] - grid[k - 1])) * rng.normal();
                break;
            case SyntheticLaw::exponential: {
                double e = rng.exponential(1.0) - 1.0;
                for (std::size_t k = 1; k < K; ++k) r.gamma[k] = std::sqrt(rate * grid[k]) * e;
                break;
            }
            case SyntheticLaw::correlated:
                for (std::size_t k = 1; k < K; ++k) {
                    double v = rate * grid[k] - a * a * rate * grid[k - 1];
                    r.gamma[k] = a * r.gamma[k - 1] + std::sqrt(v) * rng.normal();
                }
                break;
        }
        r.M = r.gamma;
        r.R.assign(K, 0.0);
        r.QV.assign(K, kNaN);
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace ssep
