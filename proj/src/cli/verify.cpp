#include <algorithm>
#include <cmath>
#include <filesystem>
#include <json.hpp>
#include <sstream>

#include "ssep/cli.hpp"

namespace ssep {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json verdict_json(const Verdict& v) {
    json j = {{"test", v.test}, {"pass", v.pass()}, {"checks", json::array()}};
    for (const auto& c : v.checks) {
        j["checks"].push_back({{"name", c.name},
                               {"pass", c.pass},
                               {"statistic", std::isfinite(c.statistic) ? json(c.statistic) : json()},
                               {"threshold", c.threshold},
                               {"detail", c.detail}});
    }
    return j;
}

void verdict_text(std::ostream& os, const std::string& where, const Verdict& v) {
    for (const auto& c : v.checks) {
        char line[256];
        std::snprintf(line, sizeof line, "%-28s %-14s %-22s %12.5g %12.5g  %s\n", where.c_str(),
                      v.test.c_str(), c.name.c_str(), c.statistic, c.threshold,
                      c.pass ? "PASS" : "FAIL");
        os << line;
    }
}

bool all_rb(const std::vector<PathRecord>& recs) {
    return std::all_of(recs.begin(), recs.end(),
                       [](const PathRecord& r) { return std::isfinite(r.rb_r2); });
}

}  // namespace

bool VerifyReport::pass() const {
    for (const auto& r : runs)
        for (const auto& v : r.verdicts)
            if (!v.pass()) return false;
    for (const auto& v : cross)
        if (!v.pass()) return false;
    return true;
}

std::string VerifyReport::to_json() const {
    json j = {{"pass", pass()}, {"runs", json::array()}, {"cross", json::array()}};
    for (const auto& r : runs) {
        json jr = {{"dir", r.dir},
                   {"d", r.d},
                   {"n", r.n},
                   {"replicas", r.summary.M},
                   {"config_digest", r.summary.manifest},
                   {"verdicts", json::array()}};
        for (const auto& v : r.verdicts) jr["verdicts"].push_back(verdict_json(v));
        j["runs"].push_back(jr);
    }
    for (const auto& v : cross) j["cross"].push_back(verdict_json(v));
    return j.dump(2) + "\n";
}

std::string VerifyReport::to_text() const {
    std::ostringstream os;
    char head[256];
    std::snprintf(head, sizeof head, "%-28s %-14s %-22s %12s %12s  %s\n", "run", "test", "check",
                  "statistic", "threshold", "result");
    os << head;
    for (const auto& r : runs) {
        std::string where = fs::path(r.dir).filename().string() + " n=" + std::to_string(r.n);
        for (const auto& v : r.verdicts) verdict_text(os, where, v);
    }
    for (const auto& v : cross) verdict_text(os, "(across runs)", v);
    os << (pass() ? "ALL PASS\n" : "SOME CHECKS FAILED\n");
    return os.str();
}

VerifyReport verify_runs(const std::vector<RunData>& runs, const PredictionTable& predictions,
                         const VerifyOptions& opt) {
    require(!runs.empty(), "verify: no runs given");
    const int d = runs.front().manifest.config.d;
    for (const auto& r : runs) {
        if (r.manifest.config.d != d)
            throw InvalidArgument("verify: runs mix d = " + std::to_string(d) + " and d = " +
                                  std::to_string(r.manifest.config.d) +
                                  "; their variance rates are not comparable");
    }

    VerifyReport rep;
    std::vector<QvRun> qv_runs;
    std::vector<RemainderPoint> remainder;
    PredictionBundle qv_pred;
    for (const auto& run : runs) {
        const auto& cfg = run.manifest.config;
        for (const auto& [n, recs] : run.records) {
            if (recs.empty()) continue;
            RunVerdicts rv;
            rv.dir = run.dir;
            rv.d = d;
            rv.n = n;
            rv.summary = summarize(recs, opt.batches);
            const auto& s = rv.summary;

            PredictionBundle p;
            auto it = predictions.by_n.find(n);
            if (it != predictions.by_n.end() && it->second.t.size() == s.times.size()) {
                p = it->second;
            } else {
                ExperimentConfig one = cfg;
                one.ns = {n};
                p = predict_variance(one, n, OracleOptions{});
            }

            VarianceBands vb = opt.variance;
            vb.continuum_band = d == 2 ? opt.continuum_band_d2 : opt.continuum_band_d3;
            rv.verdicts.push_back(test_variance(s, p, vb));
            rv.verdicts.push_back(test_gaussianity(s, opt.gaussian));
            if (s.times.size() >= 5 && !s.batch_cov.empty())
                rv.verdicts.push_back(test_increments(s, p, opt.increment_band));
            if (cfg.grid % 16 == 0) rv.verdicts.push_back(test_tightness(recs, cfg.T, opt.tightness));

            if (std::isfinite(s.times.back().qv_mean)) {
                qv_runs.push_back({n, s});
                qv_pred = p;
            }
            if (all_rb(recs) || std::isfinite(s.times.back().r2_mean)) {
                RemainderPoint rp;
                rp.d = d;
                rp.n = n;
                const bool rb = all_rb(recs);
                rp.mean_r2 = rb ? s.rb_mean : s.times.back().r2_mean;
                rp.se = rb ? s.se_rb : s.times.back().se_r2;
                double b = beta(d, n);
                rp.bound = 3 * b * b * gn_l2_torus(d, n, long(cfg.m) * n);
                remainder.push_back(rp);
            }
            rv.prediction = std::move(p);
            rep.runs.push_back(std::move(rv));
        }
    }
    if (!qv_runs.empty()) {
        std::sort(qv_runs.begin(), qv_runs.end(), [](auto& a, auto& b) { return a.n < b.n; });
        rep.cross.push_back(test_qv(qv_runs, qv_pred, opt.qv_band));
    }
    if (remainder.size() >= 3) rep.cross.push_back(test_remainder(remainder));
    return rep;
}

VerifyReport write_report(const std::vector<std::string>& run_dirs, const std::string& out_dir,
                          const PredictionTable& predictions, const VerifyOptions& opt) {
    require(!run_dirs.empty(), "report: no run directories given");
    std::vector<RunData> runs;
    for (const auto& d : run_dirs) runs.push_back(load_run(d));
    VerifyReport rep = verify_runs(runs, predictions, opt);
    fs::create_directories(out_dir);

    std::ostringstream var, hist;
    var << "run,n,t,emp_var,emp_var_se,oracle_var,oracle_se,continuum\n";
    hist << "run,n,bin_lo,bin_hi,count,density,normal\n";
    constexpr int kBins = 40;
    constexpr double kRange = 4.0;
    for (const auto& rv : rep.runs) {
        const std::string tag = fs::path(rv.dir).filename().string();
        const PredictionBundle& p = rv.prediction;
        for (std::size_t k = 0; k < rv.summary.times.size(); ++k) {
            const auto& ts = rv.summary.times[k];
            var << tag << ',' << rv.n << ',' << fmt_double(ts.t) << ',' << fmt_double(ts.var)
                << ',' << fmt_double(ts.se_var) << ',' << fmt_double(p.oracle[k]) << ','
                << fmt_double(p.oracle_se[k]) << ',' << fmt_double(p.continuum[k]) << '\n';
        }
        const auto& recs =
            std::find_if(runs.begin(), runs.end(), [&](auto& r) { return r.dir == rv.dir; })
                ->records.at(rv.n);
        const auto& last = rv.summary.times.back();
        const double sd = std::sqrt(last.var);
        std::vector<std::size_t> counts(kBins, 0);
        for (const auto& r : recs) {
            double z = (r.gamma.back() - last.mean) / sd;
            int b = int(std::floor((z + kRange) / (2 * kRange) * kBins));
            if (b >= 0 && b < kBins) ++counts[b];
        }
        const double w = 2 * kRange / kBins;
        for (int b = 0; b < kBins; ++b) {
            double lo = -kRange + b * w, hi = lo + w, mid = lo + w / 2;
            double normal = std::exp(-mid * mid / 2) / std::sqrt(2 * M_PI);
            hist << tag << ',' << rv.n << ',' << fmt_double(lo) << ',' << fmt_double(hi) << ','
                 << counts[b] << ',' << fmt_double(double(counts[b]) / (recs.size() * w)) << ','
                 << fmt_double(normal) << '\n';
        }
    }
    const fs::path out(out_dir);
    write_file((out / "variance.csv").string(), var.str());
    write_file((out / "histogram.csv").string(), hist.str());
    write_file((out / "verdicts.json").string(), rep.to_json());
    write_file((out / "verdicts.txt").string(), rep.to_text());
    return rep;
}

}  // namespace ssep
