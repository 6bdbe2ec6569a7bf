#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ssep/duality.hpp"
#include "ssep/engine.hpp"
#include "ssep/stats.hpp"

namespace ssep {

inline constexpr const char* kArtifactVersion = "0.3.0";

// Environment variable naming the default output root.
inline constexpr const char* kOutputRootEnv = "SSEP_OUTPUT_ROOT";

enum class Method { tracker, lattice };
const char* method_name(Method m);
Method parse_method(const std::string& s);

struct ExperimentConfig {
    int d = 3;
    std::vector<int> ns{32};
    int m = 4;
    double T = 1.0;
    std::string profile = "constant:0.5";
    std::size_t replicas = 100;
    std::uint64_t seed = 1;
    int grid = 16;
    std::string output;
    int workers = 1;
    Method method = Method::tracker;
    bool qv = true;       // lattice only
    bool labels = false;  // lattice only: conditional E[R(T)²]

    // Builds every box and profile the run would use; throws InvalidArgument.
    void validate() const;
    // Canonical INI text; parse_config(serialize()) == *this.
    std::string serialize() const;
    // Digest of everything that determines the numbers (not workers, not output).
    std::string digest(int n) const;
    bool operator==(const ExperimentConfig&) const = default;
};

// Keys present in the text override the corresponding fields of base.
ExperimentConfig parse_config(const std::string& ini_text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path);

// Lower-case hex SHA-256.
std::string sha256_hex(const std::string& bytes);
std::string file_sha256(const std::string& path);

struct OutputFile {
    std::string name;  // relative to the run directory
    std::string sha256;
    std::uint64_t bytes = 0;
};

struct RunManifest {
    ExperimentConfig config;
    std::string version = kArtifactVersion;
    std::string seed_rule;
    std::map<int, std::string> config_digest;   // per n
    std::map<int, std::uint64_t> events;        // per n, summed over replicas
    double wall_seconds = 0;
    std::string started;                        // UTC timestamp
    std::vector<OutputFile> outputs;

    std::string to_json() const;
    static RunManifest from_json(const std::string& text);
};

using ProgressFn = std::function<void(int n, std::size_t done, std::size_t total)>;

// Simulates every n of the config into config.output: paths.csv,
// replicas.csv, config.ini and manifest.json (written last).
RunManifest run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = nullptr);

// One replica of the config at index i, as run_experiment would produce it.
PathRecord simulate_replica(const ExperimentConfig& cfg,
                            const std::shared_ptr<const KernelContext>& ctx, std::size_t i);

std::shared_ptr<const KernelContext> context_for(const ExperimentConfig& cfg, int n);

struct RunData {
    std::string dir;
    RunManifest manifest;
    std::map<int, std::vector<PathRecord>> records;  // per n, replica order
};

// Verifies every digest before parsing; a mismatch means a partial or
// modified run and throws InvalidArgument.
RunData load_run(const std::string& dir);

// ---- predictions ----------------------------------------------------------------

struct PredictionTable {
    std::map<int, PredictionBundle> by_n;
    std::string to_csv() const;  // n,t,continuum,oracle,oracle_se
    static PredictionTable from_csv(const std::string& text);
};

// Oracle variance and continuum integral at every grid time of the config.
PredictionBundle predict_variance(const ExperimentConfig& cfg, int n, const OracleOptions& opt);

// ---- verdicts ---------------------------------------------------------------------

struct VerifyOptions {
    VarianceBands variance;
    double continuum_band_d2 = 0.20;  // replaces variance.continuum_band in d = 2
    double continuum_band_d3 = 0.15;
    GaussianBands gaussian;
    TightnessBands tightness;
    double increment_band = 0.2;
    double qv_band = 0.15;
    int batches = 32;
};

struct RunVerdicts {
    std::string dir;
    int d = 0;
    int n = 0;
    EnsembleSummary summary;
    PredictionBundle prediction;
    std::vector<Verdict> verdicts;
};

struct VerifyReport {
    std::vector<RunVerdicts> runs;
    std::vector<Verdict> cross;  // verdicts spanning several runs (QV along n, remainder)
    bool pass() const;
    std::string to_json() const;
    std::string to_text() const;
};

// Refuses runs of mixed dimension. Missing predictions for an n are computed
// with the oracle defaults.
VerifyReport verify_runs(const std::vector<RunData>& runs, const PredictionTable& predictions,
                         const VerifyOptions& opt = {});

// Plot-ready CSVs into out_dir: variance.csv, histogram.csv, plus
// verdicts.json and verdicts.txt. Returns the report for the exit status.
VerifyReport write_report(const std::vector<std::string>& run_dirs, const std::string& out_dir,
                          const PredictionTable& predictions, const VerifyOptions& opt = {});

// ---- CSV helpers ------------------------------------------------------------------

std::string fmt_double(double x);  // shortest round-trip form, "nan" for NaN
std::vector<std::string> split(const std::string& s, char sep);
std::vector<int> parse_int_list(const std::string& s);
void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace ssep
