#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "ssep/cli.hpp"

namespace ssep {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json config_json(const ExperimentConfig& c) {
    return {{"d", c.d},         {"n", c.ns},           {"m", c.m},
            {"T", c.T},         {"profile", c.profile}, {"method", method_name(c.method)},
            {"replicas", c.replicas}, {"seed", c.seed}, {"grid", c.grid},
            {"qv", c.qv},       {"labels", c.labels},  {"workers", c.workers},
            {"output", c.output}};
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    c.d = j.at("d");
    c.ns = j.at("n").get<std::vector<int>>();
    c.m = j.at("m");
    c.T = j.at("T");
    c.profile = j.at("profile");
    c.method = parse_method(j.at("method"));
    c.replicas = j.at("replicas");
    c.seed = j.at("seed");
    c.grid = j.at("grid");
    c.qv = j.at("qv");
    c.labels = j.at("labels");
    c.workers = j.at("workers");
    c.output = j.at("output");
    return c;
}

std::string utc_now() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

void append_rows(std::ostream& paths, std::ostream& reps, int n, std::size_t first,
                 const std::vector<PathRecord>& chunk) {
    for (std::size_t k = 0; k < chunk.size(); ++k) {
        const PathRecord& r = chunk[k];
        const std::string head = std::to_string(first + k) + "," + std::to_string(n) + "," +
                                 std::to_string(r.seed) + ",";
        for (std::size_t j = 0; j < r.t.size(); ++j) {
            paths << head << fmt_double(r.t[j]) << ',' << fmt_double(r.gamma[j]) << ','
                  << fmt_double(r.M[j]) << ',' << fmt_double(r.R[j]) << ','
                  << fmt_double(r.QV[j]) << '\n';
        }
        reps << head << r.events << ',' << fmt_double(r.rb_r2) << '\n';
    }
}

double parse_csv_double(const std::string& s) {
    if (s == "nan") return kNaN;
    return std::stod(s);
}

}  // namespace

std::shared_ptr<const KernelContext> context_for(const ExperimentConfig& cfg, int n) {
    auto box = make_box(cfg.d, n, cfg.m, cfg.T);
    auto profile = DensityProfile::parse(cfg.profile, cfg.d, double(cfg.m));
    return make_context(box, profile, cfg.grid, cfg.method == Method::lattice);
}

PathRecord simulate_replica(const ExperimentConfig& cfg,
                            const std::shared_ptr<const KernelContext>& ctx, std::size_t i) {
    const std::uint64_t seed = replica_seed(cfg.seed, i);
    PathRecord r;
    if (cfg.method == Method::tracker) {
        // The tracker keeps per-site scratch, so each worker thread owns one.
        thread_local std::unique_ptr<OriginTracker> tracker;
        thread_local const KernelContext* owner = nullptr;
        if (!tracker || owner != ctx.get()) {
            tracker = std::make_unique<OriginTracker>(ctx);
            owner = ctx.get();
        }
        r = tracker->run(seed);
    } else {
        r = simulate_lattice(ctx, seed, cfg.labels, cfg.qv);
    }
    r.seed = seed;
    r.manifest = cfg.digest(ctx->box.n);
    return r;
}

std::string RunManifest::to_json() const {
    json j;
    j["config"] = config_json(config);
    j["version"] = version;
    j["seed_rule"] = seed_rule;
    json dig = json::object(), ev = json::object();
    for (const auto& [n, s] : config_digest) dig[std::to_string(n)] = s;
    for (const auto& [n, e] : events) ev[std::to_string(n)] = e;
    j["config_digest"] = dig;
    j["events"] = ev;
    j["wall_seconds"] = wall_seconds;
    j["started"] = started;
    j["outputs"] = json::array();
    for (const auto& f : outputs)
        j["outputs"].push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
    RunManifest m;
    try {
        json j = json::parse(text);
        m.config = config_from_json(j.at("config"));
        m.version = j.at("version");
        m.seed_rule = j.at("seed_rule");
        for (auto& [k, v] : j.at("config_digest").items()) m.config_digest[std::stoi(k)] = v;
        for (auto& [k, v] : j.at("events").items()) m.events[std::stoi(k)] = v;
        m.wall_seconds = j.at("wall_seconds");
        m.started = j.at("started");
        for (const auto& f : j.at("outputs"))
            m.outputs.push_back({f.at("name"), f.at("sha256"), f.at("bytes")});
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("corrupt manifest: ") + e.what());
    }
    return m;
}

RunManifest run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
    cfg.validate();
    require(!cfg.output.empty(), "run_experiment: no output directory");
    const fs::path dir(cfg.output);
    fs::create_directories(dir);
    // A stale manifest would vouch for files about to be replaced.
    fs::remove(dir / "manifest.json");

    RunManifest man;
    man.config = cfg;
    man.started = utc_now();
    man.seed_rule = "replica i of n uses derive_seed(seed, i, \"replica\"); the engine derives "
                    "its \"init\" and \"dynamics\" streams from that";
    auto t0 = std::chrono::steady_clock::now();

    write_file((dir / "config.ini").string(), cfg.serialize());
    man.outputs.push_back({"config.ini", "", 0});
    if (cfg.replicas > 0) {
        std::ofstream paths(dir / "paths.csv", std::ios::binary | std::ios::trunc);
        std::ofstream reps(dir / "replicas.csv", std::ios::binary | std::ios::trunc);
        if (!paths || !reps) throw std::runtime_error("cannot create CSV files in " + dir.string());
        paths << "replica,n,seed,t,Gamma,M,R,QV\n";
        reps << "replica,n,seed,events,rb_r2\n";
        for (int n : cfg.ns) {
            auto ctx = context_for(cfg, n);
            man.config_digest[n] = cfg.digest(n);
            std::uint64_t events = 0;
            // Chunks keep memory flat and rows in replica order for any worker count.
            const std::size_t chunk = std::size_t(std::max(8, 32 * cfg.workers));
            for (std::size_t first = 0; first < cfg.replicas; first += chunk) {
                std::size_t count = std::min(chunk, cfg.replicas - first);
                auto recs = run_replicas<PathRecord>(count, cfg.workers, [&](std::size_t k) {
                    return simulate_replica(cfg, ctx, first + k);
                });
                for (const auto& r : recs) events += r.events;
                append_rows(paths, reps, n, first, recs);
                if (!paths || !reps)
                    throw std::runtime_error("write to " + dir.string() + " failed (disk full?)");
                if (progress) progress(n, first + count, cfg.replicas);
            }
            man.events[n] = events;
        }
        paths.close();
        reps.close();
        if (!paths || !reps) throw std::runtime_error("closing CSVs in " + dir.string() + " failed");
        man.outputs.push_back({"paths.csv", "", 0});
        man.outputs.push_back({"replicas.csv", "", 0});
    }
    for (auto& f : man.outputs) {
        f.sha256 = file_sha256((dir / f.name).string());
        f.bytes = fs::file_size(dir / f.name);
    }
    man.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_file((dir / "manifest.json").string(), man.to_json());
    return man;
}

RunData load_run(const std::string& dir_name) {
    const fs::path dir(dir_name);
    if (!fs::is_directory(dir)) throw InvalidArgument("run directory '" + dir_name + "' not found");
    if (!fs::exists(dir / "manifest.json"))
        throw InvalidArgument("'" + dir_name + "' has no manifest.json (incomplete run?)");
    RunData data;
    data.dir = dir_name;
    data.manifest = RunManifest::from_json(read_file((dir / "manifest.json").string()));
    for (const auto& f : data.manifest.outputs) {
        if (!fs::exists(dir / f.name))
            throw InvalidArgument("'" + dir_name + "': missing output " + f.name);
        if (file_sha256((dir / f.name).string()) != f.sha256)
            throw InvalidArgument("'" + dir_name + "': digest mismatch on " + f.name +
                                  " (partial or modified run)");
    }
    if (!fs::exists(dir / "paths.csv")) return data;

    const auto& cfg = data.manifest.config;
    std::map<std::pair<int, std::size_t>, PathRecord> recs;
    {
        std::istringstream is(read_file((dir / "paths.csv").string()));
        std::string line;
        std::getline(is, line);
        while (std::getline(is, line)) {
            auto f = split(line, ',');
            if (f.size() != 8) throw InvalidArgument("paths.csv: malformed row '" + line + "'");
            int n = std::stoi(f[1]);
            auto& r = recs[{n, std::stoull(f[0])}];
            r.seed = std::stoull(f[2]);
            r.t.push_back(parse_csv_double(f[3]));
            r.gamma.push_back(parse_csv_double(f[4]));
            r.M.push_back(parse_csv_double(f[5]));
            r.R.push_back(parse_csv_double(f[6]));
            r.QV.push_back(parse_csv_double(f[7]));
        }
    }
    {
        std::istringstream is(read_file((dir / "replicas.csv").string()));
        std::string line;
        std::getline(is, line);
        while (std::getline(is, line)) {
            auto f = split(line, ',');
            if (f.size() != 5) throw InvalidArgument("replicas.csv: malformed row '" + line + "'");
            auto it = recs.find({std::stoi(f[1]), std::stoull(f[0])});
            if (it == recs.end()) throw InvalidArgument("replicas.csv: row without a path");
            it->second.events = std::stoull(f[3]);
            it->second.rb_r2 = parse_csv_double(f[4]);
        }
    }
    for (auto& [key, r] : recs) {
        r.manifest = data.manifest.config_digest.at(key.first);
        // NaN columns come back as all-NaN vectors; the engine reports them that way too.
        data.records[key.first].push_back(std::move(r));
    }
    for (int n : cfg.ns) {
        std::size_t got = data.records.count(n) ? data.records[n].size() : 0;
        if (got != cfg.replicas)
            throw InvalidArgument("'" + dir_name + "': n = " + std::to_string(n) + " has " +
                                  std::to_string(got) + " replicas, manifest says " +
                                  std::to_string(cfg.replicas));
    }
    return data;
}

// ---- predictions ----------------------------------------------------------------

PredictionBundle predict_variance(const ExperimentConfig& cfg, int n, const OracleOptions& opt) {
    auto box = make_box(cfg.d, n, cfg.m, cfg.T);
    auto profile = DensityProfile::parse(cfg.profile, cfg.d, double(cfg.m));
    auto ctx = make_context(box, profile, cfg.grid, false);
    DualityOracle oracle(ctx, opt);
    PredictionBundle p;
    for (double t : ctx->grid) {
        p.t.push_back(t);
        if (t == 0) {
            p.continuum.push_back(0);
            p.oracle.push_back(0);
            p.oracle_se.push_back(0);
            continue;
        }
        auto v = oracle.occupation_variance(t);
        p.continuum.push_back(v.continuum);
        p.oracle.push_back(v.finite_n);
        p.oracle_se.push_back(v.stderr);
    }
    p.validate();
    return p;
}

std::string PredictionTable::to_csv() const {
    std::ostringstream os;
    os << "n,t,continuum,oracle,oracle_se\n";
    for (const auto& [n, p] : by_n)
        for (std::size_t k = 0; k < p.t.size(); ++k)
            os << n << ',' << fmt_double(p.t[k]) << ',' << fmt_double(p.continuum[k]) << ','
               << fmt_double(p.oracle[k]) << ',' << fmt_double(p.oracle_se[k]) << '\n';
    return os.str();
}

PredictionTable PredictionTable::from_csv(const std::string& text) {
    PredictionTable out;
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line.rfind("n,t,continuum,oracle,oracle_se", 0) != 0)
        throw InvalidArgument("predictions: expected header n,t,continuum,oracle,oracle_se");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto f = split(line, ',');
        if (f.size() != 5) throw InvalidArgument("predictions: malformed row '" + line + "'");
        auto& p = out.by_n[std::stoi(f[0])];
        p.t.push_back(std::stod(f[1]));
        p.continuum.push_back(std::stod(f[2]));
        p.oracle.push_back(std::stod(f[3]));
        p.oracle_se.push_back(std::stod(f[4]));
    }
    for (auto& [n, p] : out.by_n) p.validate();
    return out;
}

}  // namespace ssep
