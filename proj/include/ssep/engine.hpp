#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ssep/kernels.hpp"
#include "ssep/profile.hpp"
#include "ssep/rng.hpp"
#include "ssep/torus.hpp"

namespace ssep {

struct SimulationBox {
    int d = 0;
    int n = 0;
    int m = 0;     // macroscopic period: L = m·n
    long L = 0;
    double T = 0;  // horizon, macroscopic time
    std::uint64_t sites = 0;
    std::uint64_t edges = 0;
};

// Throws InvalidArgument if L < 4·n·ceil(√T)·safety.
SimulationBox make_box(int d, int n, int m, double T, int safety = 1);

// Read-only tables shared by every replica of one configuration.
struct KernelContext {
    SimulationBox box;
    Torus torus;
    double beta = 0;
    DensityProfile profile;
    std::shared_ptr<const MeanField> mean;
    std::vector<double> grid;  // t_0 = 0 < ... < t_K = T

    // Resolvent tables; empty unless built with_resolvent.
    std::shared_ptr<const ResolventField> resolvent;
    std::vector<double> g_scaled;  // n·β·g, so Q = Σ (Δ g_scaled)² over discordant edges
    std::optional<MeanField::Paired> g_mean;  // s ↦ Σ_x g(x) ρ_s(x)

    // Deterministic centering terms at grid times.
    std::vector<double> rho_origin_integral;  // ∫_0^t ρ_s(0) ds
    std::vector<double> g_mean_value;         // Σ g ρ_t
    std::vector<double> g_mean_integral;      // ∫_0^t Σ g ρ_s ds

    bool has_resolvent() const { return resolvent != nullptr; }
};

std::shared_ptr<const KernelContext> make_context(const SimulationBox& box,
                                                  const DensityProfile& profile, int grid_size,
                                                  bool with_resolvent);

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct PathRecord {
    std::uint64_t seed = 0;
    std::string manifest;  // digest of the producing configuration, set by the runner
    std::vector<double> t;
    std::vector<double> gamma;
    std::vector<double> M;
    std::vector<double> R;
    std::vector<double> QV;
    double rb_r2 = kNaN;  // E[R(T)² | stirring], when labels were tracked
    std::uint64_t events = 0;
};

// Per-replica stream root.
inline std::uint64_t replica_seed(std::uint64_t master, std::uint64_t replica) {
    return derive_seed(master, replica, "replica");
}

// Full-lattice stirring dynamics with incremental observables. With Labels,
// every particle's path is tracked, which gives E[R(T)² | stirring] exactly.
template <bool Labels>
class BasicStirringState {
public:
    // Without track_qv the quadratic variation is skipped (QV reported as NaN),
    // which saves the neighbourhood scan on every effective swap.
    BasicStirringState(std::shared_ptr<const KernelContext> ctx, std::uint64_t seed,
                       bool track_qv = true);

    // Advance to time t (t >= now), recording grid observables on the way.
    void run_to(double t);
    double now() const { return now_; }

    PathRecord observables() const;

    std::uint64_t particles() const { return particles_; }
    std::uint64_t events() const { return events_; }
    std::uint64_t swaps() const { return swaps_; }
    const std::vector<std::uint8_t>& occupancy() const { return eta_; }

    // Incremental values and their full rescans.
    double G() const { return G_; }
    double Q() const { return Q_; }
    double rescan_G() const;
    double rescan_Q() const;
    double max_audit_drift() const { return drift_; }

    // Apply the stirring move on edge (x, x+e_j) at the current time.
    void swap_edge(std::uint64_t x, int j);

    double rb_r2() const;

private:
    std::shared_ptr<const KernelContext> ctx_;
    const Torus* tor_;
    std::uint64_t seed_;
    bool track_qv_;
    Rng rng_;
    std::vector<std::uint8_t> eta_;
    const double* g_;
    const double* gs_;
    std::uint64_t particles_ = 0, events_ = 0, swaps_ = 0;
    double now_ = 0;
    double last_ = 0;  // time of the last accumulator flush
    double G_ = 0, Q_ = 0;
    double int_eta0_ = 0, int_Gd_ = 0, int_Q_ = 0;
    double G_ref_ = 0;  // G at t = 0; ∫G is accumulated as a deviation from it
    double G0_bar_ = 0;
    std::size_t next_grid_ = 1;
    std::vector<double> rec_eta0_, rec_G_, rec_intG_, rec_Q_;
    double drift_ = 0;
    // Labels
    std::vector<std::uint32_t> lab_;
    struct LabelClock {
        double acc = 0;   // ∫ g(position) up to `last`
        double last = 0;
    };
    std::vector<LabelClock> clock_;

    void flush(double t);
    void record_grid(std::size_t k);
    void apply(std::uint64_t x, std::uint64_t y);
};

using StirringState = BasicStirringState<false>;
using LabeledStirringState = BasicStirringState<true>;

StirringState init_bernoulli(std::shared_ptr<const KernelContext> ctx, std::uint64_t seed);

// One replica on the full lattice, run to the horizon.
PathRecord simulate_lattice(std::shared_ptr<const KernelContext> ctx, std::uint64_t seed,
                            bool labels = false, bool track_qv = true);

// Exact sampler for Γ alone. Walks the graphical construction backwards from
// (origin, T), following only the labels that ever sit at the origin; their
// initial sites are then the only places where η₀ is sampled. M, R and QV are
// left as NaN.
class OriginTracker {
public:
    explicit OriginTracker(std::shared_ptr<const KernelContext> ctx);
    PathRecord run(std::uint64_t seed);
    std::uint64_t last_tokens() const { return tokens_; }

private:
    std::shared_ptr<const KernelContext> ctx_;
    std::vector<std::int32_t> owner_;
    std::uint64_t tokens_ = 0;
};

// ---- few-particle stirring ---------------------------------------------------

struct FewParticleResult {
    std::vector<std::vector<std::uint64_t>> positions;  // per requested time, per particle
    double meeting_time = std::numeric_limits<double>::infinity();
    std::uint64_t events = 0;
};

// Observer called on every holding interval [a, b) with the positions held there.
using HoldingObserver =
    std::function<void(double a, double b, const std::vector<std::uint64_t>& pos)>;

// k <= 4 labelled stirring particles on the torus, accelerated by n². With
// coupled = true particles 0 and 1 jump onto each other independently when
// adjacent and move together after meeting.
FewParticleResult few_particle_run(const Torus& torus, int n,
                                   const std::vector<std::uint64_t>& start, bool coupled,
                                   const std::vector<double>& times, Rng& rng,
                                   const HoldingObserver& observe = nullptr);

// ---- replica farm --------------------------------------------------------------

// Calls job(i) for i in [0, count) on `workers` threads; results land at index i.
template <class Result>
std::vector<Result> run_replicas(std::size_t count, int workers,
                                 const std::function<Result(std::size_t)>& job);

}  // namespace ssep

#include "ssep/detail/farm.hpp"
