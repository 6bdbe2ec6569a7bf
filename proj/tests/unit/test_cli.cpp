#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <json.hpp>
#include <unistd.h>

#include "ssep/cli.hpp"

using namespace ssep;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("ssep_unit_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(counter()++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

ExperimentConfig tiny(int d, const fs::path& out) {
    ExperimentConfig c;
    c.d = d;
    c.ns = {4};
    c.m = 4;
    c.T = 0.25;
    c.profile = "sine:0.5,0.25,1";
    c.replicas = 40;
    c.seed = 3;
    c.grid = 16;
    c.output = out.string();
    return c;
}

}  // namespace

TEST_CASE("config text round-trips") {
    ExperimentConfig c;
    c.d = 2;
    c.ns = {16, 32};
    c.T = 0.375;
    c.profile = "sine:0.5,0.2,2";
    c.method = Method::lattice;
    c.labels = true;
    c.qv = false;
    c.workers = 3;
    c.output = "some/dir";
    auto back = parse_config(c.serialize());
    CHECK(back == c);
    CHECK(parse_config(back.serialize()).serialize() == c.serialize());
}

TEST_CASE("config parsing errors") {
    CHECK_THROWS_AS(parse_config("[model]\nd = 2\ncolour = red\n"), InvalidArgument);
    CHECK_THROWS_AS(parse_config("[extras]\nx = 1\n"), InvalidArgument);
    CHECK_THROWS_AS(parse_config("[model]\nT = fast\n"), InvalidArgument);
    CHECK_THROWS_AS(parse_config("[run]\nmethod = magic\n"), InvalidArgument);
    auto c = parse_config("[model]\nd = 5\n");
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    ExperimentConfig base;
    base.seed = 77;
    CHECK(parse_config("[model]\nd = 2\n", base).seed == 77);
}

TEST_CASE("digest ignores workers and output") {
    ExperimentConfig a, b;
    b.workers = 4;
    b.output = "elsewhere";
    CHECK(a.digest(32) == b.digest(32));
    b.seed = 2;
    CHECK(a.digest(32) != b.digest(32));
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("zero replicas writes only the config and the manifest") {
    TempDir tmp;
    auto c = tiny(2, tmp.path / "run");
    c.replicas = 0;
    auto man = run_experiment(c);
    CHECK(fs::exists(tmp.path / "run" / "manifest.json"));
    CHECK_FALSE(fs::exists(tmp.path / "run" / "paths.csv"));
    CHECK(man.outputs.size() == 1);
}

TEST_CASE("runs are reproducible for any worker count") {
    TempDir tmp;
    auto a = tiny(2, tmp.path / "a");
    auto b = a;
    b.output = (tmp.path / "b").string();
    b.workers = 3;
    auto ma = run_experiment(a);
    auto mb = run_experiment(b);
    for (const char* f : {"paths.csv", "replicas.csv"})
        CHECK(file_sha256((tmp.path / "a" / f).string()) == file_sha256((tmp.path / "b" / f).string()));
    CHECK(ma.config_digest == mb.config_digest);
    CHECK(ma.events == mb.events);

    auto run = load_run((tmp.path / "a").string());
    REQUIRE(run.records.at(4).size() == 40);
    // single replicas regenerate bit-identically
    auto ctx = context_for(a, 4);
    auto r7 = simulate_replica(a, ctx, 7);
    CHECK(r7.gamma == run.records.at(4)[7].gamma);
    CHECK(RunManifest::from_json(ma.to_json()).to_json() == ma.to_json());
}

TEST_CASE("tampered runs are rejected") {
    TempDir tmp;
    auto c = tiny(2, tmp.path / "run");
    run_experiment(c);
    {
        std::ofstream os(tmp.path / "run" / "paths.csv", std::ios::app);
        os << "999,4,1,0,0,0,0,0\n";
    }
    CHECK_THROWS_AS(load_run((tmp.path / "run").string()), InvalidArgument);
    fs::remove(tmp.path / "run" / "manifest.json");
    CHECK_THROWS_AS(load_run((tmp.path / "run").string()), InvalidArgument);
}

TEST_CASE("verification refuses mixed dimensions and empty input") {
    TempDir tmp;
    auto c2 = tiny(2, tmp.path / "d2");
    auto c3 = tiny(3, tmp.path / "d3");
    c2.replicas = c3.replicas = 8;
    run_experiment(c2);
    run_experiment(c3);
    std::vector<RunData> runs{load_run(c2.output), load_run(c3.output)};
    CHECK_THROWS_AS(verify_runs(runs, {}), InvalidArgument);
    CHECK_THROWS_AS(write_report({}, (tmp.path / "rep").string(), {}), InvalidArgument);
}

TEST_CASE("report on a small run has every section") {
    TempDir tmp;
    auto c = tiny(2, tmp.path / "run");
    c.method = Method::lattice;
    c.replicas = 128;  // increments need two replicas per batch
    run_experiment(c);
    PredictionTable pred;
    OracleOptions o{2000, 8, 1, 1};
    pred.by_n[4] = predict_variance(c, 4, o);
    auto back = PredictionTable::from_csv(pred.to_csv());
    CHECK(back.by_n.at(4).oracle == pred.by_n.at(4).oracle);
    auto rep = write_report({c.output}, (tmp.path / "rep").string(), pred);
    REQUIRE(rep.runs.size() == 1);
    std::set<std::string> tests;
    for (const auto& v : rep.runs[0].verdicts) tests.insert(v.test);
    for (const char* t : {"variance", "gaussianity", "increments", "tightness"}) CHECK(tests.count(t) == 1);
    CHECK(rep.cross.size() == 1);  // quadratic variation
    for (const char* f : {"variance.csv", "histogram.csv", "verdicts.json", "verdicts.txt"})
        CHECK(fs::exists(tmp.path / "rep" / f));
    auto j = nlohmann::json::parse(read_file((tmp.path / "rep" / "verdicts.json").string()));
    CHECK(j["runs"].size() == 1);
    // pure function of the CSVs
    auto again = write_report({c.output}, (tmp.path / "rep2").string(), pred);
    CHECK(read_file((tmp.path / "rep" / "verdicts.json").string()) ==
          read_file((tmp.path / "rep2" / "verdicts.json").string()));
}
