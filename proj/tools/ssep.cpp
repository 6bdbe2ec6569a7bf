// ssep: kernels, profile, simulate, oracle, verify, report.
// Exit status: 0 success, 1 verdict failure or runtime error, 2 usage/config error.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "ssep/analysis.hpp"
#include "ssep/cli.hpp"
#include "ssep/duality.hpp"
#include "ssep/kernels.hpp"
#include "ssep/profile.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ssep;

namespace {

constexpr int kVerdictFail = 1;
constexpr int kUsage = 2;

std::string output_root() {
    const char* env = std::getenv(kOutputRootEnv);
    return env && *env ? env : "runs";
}

// Writes to the named file, or stdout for "" / "-".
void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
    } else {
        if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
        write_file(path, text);
    }
}

std::string join(const std::vector<std::string>& v, char sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? std::string(1, sep) : "") + v[i];
    return out;
}

struct Flags {
    ExperimentConfig cfg;
    std::string ns = "32";
    std::string method = "tracker";
    std::string config_path;
    bool no_qv = false;
};

void add_model_flags(CLI::App* sc, Flags& f) {
    sc->add_option("--dim", f.cfg.d, "dimension (2 or 3)");
    sc->add_option("--n", f.ns, "scaling parameter, comma-separated list allowed");
    sc->add_option("--torus-mult", f.cfg.m, "torus side L = m·n");
    sc->add_option("--horizon", f.cfg.T, "macroscopic horizon T");
    sc->add_option("--profile", f.cfg.profile, "constant:<rho> or sine:<mean>,<amplitude>,<mode>");
    sc->add_option("--grid", f.cfg.grid, "number of recording intervals on [0, T]");
    sc->add_option("--seed", f.cfg.seed, "master seed");
    sc->add_option("--workers", f.cfg.workers, "worker threads");
    sc->add_option("--config", f.config_path, "INI config; its keys override flags");
}

ExperimentConfig resolve(Flags& f) {
    f.cfg.ns = parse_int_list(f.ns);
    f.cfg.method = parse_method(f.method);
    if (f.no_qv) f.cfg.qv = false;
    if (!f.config_path.empty()) f.cfg = parse_config(read_file(f.config_path), f.cfg);
    return f.cfg;
}

// ---- kernels ---------------------------------------------------------------------

int cmd_kernels(int d, const std::vector<int>& ns, double t, const std::string& table_out,
                double radius) {
    require(d == 2 || d == 3, "kernels: --dim must be 2 or 3");
    require(t > 0, "kernels: --time must be positive");
    std::ostringstream table;
    std::vector<std::string> head{"n"};
    for (int j = 0; j < d; ++j) head.push_back("x" + std::to_string(j + 1));
    for (const char* c : {"q_t", "gaussian", "gap", "envelope"}) head.push_back(c);
    table << join(head, ',') << '\n';

    json summary = {{"d", d}, {"time", t}, {"n", json::array()}};
    auto sweep = lclt_sweep(d, ns, {t}, radius);
    for (std::size_t i = 0; i < ns.size(); ++i) {
        const int n = ns[i];
        const double g0 = green_origin(d, n);
        const double b = beta(d, n);
        auto l2 = gn_l2_scaling(d, n);
        json row = {{"n", n},
                    {"g_n(0)", g0},
                    {"sum_g2", l2.sum_sq},
                    {"beta2_g_n(0)", b * b * g0},
                    {"beta2_sum_g2", l2.scaled},
                    {"lclt_max_ratio", sweep.max_ratio[i]}};
        if (d == 2) row["4pi_n2_over_logn_g_n(0)"] = 4 * M_PI * double(n) * n / std::log(n) * g0;
        if (d == 3) row["n2_g_n(0)"] = double(n) * n * g0;
        summary["n"].push_back(row);

        if (table_out.empty()) continue;
        const long R = long(std::floor(radius * n));
        LatticeVector x(d, 0);
        // First orthant; the kernel is symmetric under sign flips.
        std::function<void(int)> rec = [&](int j) {
            if (j == d) {
                if (norm2(x) > double(R) * R) return;
                auto e = lclt_error(d, n, t, x);
                table << n;
                for (long c : x) table << ',' << c;
                table << ',' << fmt_double(e.actual) << ',' << fmt_double(e.gaussian) << ','
                      << fmt_double(e.gap) << ',' << fmt_double(e.envelope) << '\n';
                return;
            }
            for (long c = 0; c <= R; ++c) {
                x[j] = c;
                rec(j + 1);
            }
            x[j] = 0;
        };
        rec(0);
    }
    if (ns.size() >= 2) {
        std::vector<double> r(sweep.max_ratio.begin(), sweep.max_ratio.end());
        auto [lo, hi] = std::minmax_element(r.begin(), r.end());
        summary["lclt_fitted_constant"] = *hi;
        summary["lclt_spread"] = *hi / *lo;
    }
    if (d == 3) summary["g_3(0)"] = green_constant(3);
    if (!table_out.empty()) emit(table_out, table.str());
    std::cout << summary.dump(2) << '\n';
    return 0;
}

// ---- profile ---------------------------------------------------------------------

int cmd_profile(int d, const std::string& spec, int n, int m, double t, const std::string& out) {
    auto p = DensityProfile::parse(spec, d, double(m));
    p.validate();
    const long L = long(m) * n;
    MeanField mf(p, n, L);
    const Torus& tor = mf.torus();
    std::ostringstream os;
    std::vector<std::string> head;
    for (int j = 0; j < d; ++j) head.push_back("x" + std::to_string(j + 1));
    for (const char* c : {"rho_n", "rho", "gap"}) head.push_back(c);
    os << join(head, ',') << '\n';
    auto field = mf.field(t);
    double worst = 0;
    std::vector<double> u(d);
    for (std::uint64_t x = 0; x < tor.sites(); ++x) {
        for (int j = 0; j < d; ++j) {
            u[j] = double(tor.coord(x, j)) / n;
            os << tor.coord(x, j) << ',';
        }
        double exact = solve_macroscopic(p, t, u);
        double gap = std::abs(field[x] - exact);
        worst = std::max(worst, gap);
        os << fmt_double(field[x]) << ',' << fmt_double(exact) << ',' << fmt_double(gap) << '\n';
    }
    emit(out, os.str());
    std::cerr << "sup |rho_n - rho| = " << worst << " over " << tor.sites() << " sites\n";
    return 0;
}

// ---- simulate --------------------------------------------------------------------

int cmd_simulate(Flags& f, const std::string& out) {
    ExperimentConfig cfg = resolve(f);
    if (!out.empty()) cfg.output = out;
    if (cfg.output.empty()) {
        cfg.output = (fs::path(output_root()) / ("d" + std::to_string(cfg.d) + "_" +
                                                 cfg.digest(cfg.ns.front()).substr(0, 8)))
                         .string();
    }
    cfg.validate();
    auto man = run_experiment(cfg, [](int n, std::size_t done, std::size_t total) {
        std::fprintf(stderr, "\rn=%d %zu/%zu", n, done, total);
        if (done == total) std::fprintf(stderr, "\n");
    });
    std::uint64_t ev = 0;
    for (const auto& [n, e] : man.events) ev += e;
    std::cout << cfg.output << "/manifest.json  replicas=" << cfg.replicas << " events=" << ev
              << " wall=" << man.wall_seconds << "s\n";
    return 0;
}

// ---- oracle ----------------------------------------------------------------------

// "t1,t2:x1,y1;x2,y2" in lattice coordinates, wrapped onto the torus.
CorrelationQuery parse_query(const std::string& spec, const Torus& tor) {
    auto parts = split(spec, ':');
    require(parts.size() == 2, "query '" + spec + "': expected <times>:<sites>");
    CorrelationQuery q;
    for (const auto& s : split(parts[0], ',')) q.times.push_back(std::stod(s));
    for (const auto& site : split(parts[1], ';')) {
        auto c = split(site, ',');
        require(int(c.size()) == tor.dim(), "query '" + spec + "': site needs d coordinates");
        LatticeVector x;
        for (const auto& v : c) x.push_back(std::stol(v));
        q.sites.push_back(tor.index(x));
    }
    require(q.times.size() == q.sites.size(), "query '" + spec + "': one time per site");
    return q;
}

int cmd_oracle(Flags& f, const std::vector<std::string>& queries, std::size_t replicas,
               bool variance, const std::string& out) {
    ExperimentConfig cfg = resolve(f);
    cfg.method = Method::tracker;
    cfg.validate();
    OracleOptions opt;
    opt.replicas = replicas;
    opt.seed = cfg.seed;
    opt.workers = cfg.workers;
    if (variance) {
        PredictionTable tab;
        for (int n : cfg.ns) tab.by_n[n] = predict_variance(cfg, n, opt);
        emit(out, tab.to_csv());
        return 0;
    }
    require(!queries.empty(), "oracle: give at least one --query, or --variance");
    std::ostringstream os;
    os << "query_id,n,value,stderr,method,replicas\n";
    for (int n : cfg.ns) {
        auto box = make_box(cfg.d, n, cfg.m, cfg.T);
        auto ctx = make_context(box, DensityProfile::parse(cfg.profile, cfg.d, double(cfg.m)),
                                cfg.grid, false);
        DualityOracle oracle(ctx, opt);
        for (std::size_t i = 0; i < queries.size(); ++i) {
            auto e = oracle.evaluate(parse_query(queries[i], ctx->torus));
            os << i << ',' << n << ',' << fmt_double(e.value) << ',' << fmt_double(e.stderr) << ','
               << method_name(e.method) << ',' << e.replicas << '\n';
        }
    }
    emit(out, os.str());
    return 0;
}

// ---- verify / report -------------------------------------------------------------

int cmd_appendix(const std::string& table_out, const std::string& report) {
    auto rep = run_appendix();
    std::ostringstream os;
    os << "case,d,n,s,t,integral,reference,ratio\n";
    for (const auto& r : rep.rows)
        os << case_name(r.id) << ',' << r.d << ',' << r.n << ',' << fmt_double(r.s) << ','
           << fmt_double(r.t) << ',' << fmt_double(r.integral) << ',' << fmt_double(r.reference)
           << ',' << fmt_double(r.ratio) << '\n';
    emit(table_out, os.str());
    json j = {{"identity_gap", rep.identity_gap}, {"bounds", json::array()}, {"pass", rep.pass()}};
    std::printf("%-10s %2s %12s %8s  %s\n", "case", "d", "constant", "spread", "result");
    std::printf("%-10s %2s %12.3e %8s  %s\n", "identities", "1", rep.identity_gap, "-",
                rep.identity_gap <= 1e-10 ? "PASS" : "FAIL");
    for (const auto& b : rep.bounds) {
        j["bounds"].push_back({{"case", case_name(b.id)},
                               {"d", b.d},
                               {"n", b.ns},
                               {"max_ratio", b.max_ratio},
                               {"fitted_constant", b.fitted_constant},
                               {"spread", b.spread},
                               {"stable", b.stable}});
        std::printf("%-10s %2d %12.5g %8.3f  %s\n", case_name(b.id), b.d, b.fitted_constant,
                    b.spread, b.stable ? "PASS" : "FAIL");
    }
    if (!report.empty()) emit(report, j.dump(2) + "\n");
    return rep.pass() ? 0 : kVerdictFail;
}

PredictionTable load_predictions(const std::string& path) {
    if (path.empty()) return {};
    return PredictionTable::from_csv(read_file(path));
}

int cmd_verify(const std::vector<std::string>& dirs, const std::string& predictions,
               const std::string& report) {
    require(!dirs.empty(), "verify: give --runs <dir...> or --appendix");
    std::vector<RunData> runs;
    for (const auto& d : dirs) runs.push_back(load_run(d));
    auto rep = verify_runs(runs, load_predictions(predictions));
    std::cout << rep.to_text();
    if (!report.empty()) emit(report, rep.to_json());
    return rep.pass() ? 0 : kVerdictFail;
}

int cmd_report(const std::vector<std::string>& dirs, const std::string& predictions,
               const std::string& out) {
    require(!dirs.empty(), "report: give at least one run directory");
    std::string dir = out.empty() ? (fs::path(output_root()) / "report").string() : out;
    auto rep = write_report(dirs, dir, load_predictions(predictions));
    std::cout << rep.to_text() << "report written to " << dir << '\n';
    return rep.pass() ? 0 : kVerdictFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Occupation-time fluctuations of the stirring process"};
    app.require_subcommand(1);

    // kernels
    auto* k = app.add_subcommand("kernels", "resolvent summary and local CLT table");
    int k_dim = 3;
    std::string k_n = "16,32,64";
    double k_time = 0.25, k_radius = 1.0;
    std::string k_table;
    k->add_option("--dim", k_dim);
    k->add_option("--n", k_n);
    k->add_option("--time", k_time, "macroscopic time of the local CLT table");
    k->add_option("--radius", k_radius, "table radius in units of n");
    k->add_option("--table-out", k_table, "CSV path for the local CLT table");

    // profile
    auto* p = app.add_subcommand("profile", "discrete vs continuum density");
    int p_dim = 2, p_n = 16, p_m = 1;
    double p_time = 0.05;
    std::string p_spec = "sine:0.5,0.25,1", p_out;
    p->add_option("--dim", p_dim);
    p->add_option("--profile", p_spec);
    p->add_option("--n", p_n);
    p->add_option("--torus-mult", p_m);
    p->add_option("--time", p_time);
    p->add_option("--out", p_out, "CSV path (stdout if omitted)");

    // simulate
    auto* s = app.add_subcommand("simulate", "replica farm writing PathRecords");
    Flags s_flags;
    std::string s_out;
    add_model_flags(s, s_flags);
    s->add_option("--replicas", s_flags.cfg.replicas);
    s->add_option("--method", s_flags.method, "tracker (Γ only) or lattice (Γ, M, R, ⟨M⟩)");
    s->add_flag("--no-qv", s_flags.no_qv, "lattice: skip the quadratic variation");
    s->add_flag("--labels", s_flags.cfg.labels, "lattice: track labels for E[R(T)² | stirring]");
    s->add_option("--out", s_out, "run directory (default under $SSEP_OUTPUT_ROOT)");

    // oracle
    auto* o = app.add_subcommand("oracle", "duality correlations and variance predictions");
    Flags o_flags;
    std::vector<std::string> o_queries;
    std::size_t o_replicas = 200000;
    bool o_variance = false;
    std::string o_out;
    add_model_flags(o, o_flags);
    o->add_option("--query", o_queries, "<t1,t2>:<x1,..;y1,..>");
    o->add_option("--replicas", o_replicas);
    o->add_flag("--variance", o_variance, "predictions CSV at every grid time");
    o->add_option("--out", o_out, "CSV path (stdout if omitted)");

    // verify
    auto* v = app.add_subcommand("verify", "statistical verdicts on completed runs");
    std::vector<std::string> v_runs;
    std::string v_pred, v_report, v_table;
    bool v_appendix = false;
    v->add_option("--runs", v_runs);
    v->add_option("--predictions", v_pred, "CSV from `oracle --variance`");
    v->add_option("--report", v_report, "JSON verdict path");
    v->add_flag("--appendix", v_appendix, "quadrature checks of the integral lemmas");
    v->add_option("--table-out", v_table, "appendix CSV path (stdout if omitted)");

    // report
    auto* r = app.add_subcommand("report", "plot-ready CSVs and verdicts");
    std::vector<std::string> r_runs;
    std::string r_pred, r_out;
    r->add_option("--runs", r_runs);
    r->add_option("--predictions", r_pred);
    r->add_option("--out", r_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kUsage;
    }

    try {
        if (*k) return cmd_kernels(k_dim, parse_int_list(k_n), k_time, k_table, k_radius);
        if (*p) return cmd_profile(p_dim, p_spec, p_n, p_m, p_time, p_out);
        if (*s) return cmd_simulate(s_flags, s_out);
        if (*o) return cmd_oracle(o_flags, o_queries, o_replicas, o_variance, o_out);
        if (*v) {
            if (v_appendix) return cmd_appendix(v_table, v_report);
            return cmd_verify(v_runs, v_pred, v_report);
        }
        if (*r) return cmd_report(r_runs, r_pred, r_out);
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kVerdictFail;
    }
    return kUsage;
}
