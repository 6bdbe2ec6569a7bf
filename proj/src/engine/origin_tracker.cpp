#include <algorithm>
#include <random>

#include "ssep/engine.hpp"

namespace ssep {

OriginTracker::OriginTracker(std::shared_ptr<const KernelContext> ctx) : ctx_(std::move(ctx)) {
    owner_.assign(ctx_->torus.sites(), -1);
}

namespace {

struct Visit {
    std::int32_t tok;
    double lo, hi;  // forward time
};

// Backward sweep over the graphical construction. Proposals arrive at rate
// n²·2d·(tokens); their individual times are never needed, only the times of
// moves that touch the origin. Given the count N of proposals left before the
// horizon, those times are uniform order statistics, so the next origin move
// at step i is placed by one Beta(i, N-i+1) draw and N is redrawn afterwards.
template <int Dirs>
std::uint64_t sweep(const Torus& tor, double n2, double T, Rng& rng,
                    std::vector<std::int32_t>& owner, std::vector<std::uint64_t>& pos,
                    std::vector<Visit>& visits) {
    pos.assign(1, 0);
    owner[0] = 0;
    std::int32_t at_origin = 0;
    double hi = T;
    double u = 0;
    std::uint64_t events = 0;
    std::mt19937_64& eng = rng.engine();
    for (;;) {
        double rem = T - u;
        double lambda = n2 * Dirs * double(pos.size());
        auto left = std::poisson_distribution<std::uint64_t>(lambda * rem)(eng);
        std::uint64_t i = 0;
        bool touched = false;
        while (i < left) {
            ++i;
            std::uint64_t r = rng.below(pos.size() * Dirs);
            auto tok = std::int32_t(r / Dirs);
            int dir = int(r - std::uint64_t(tok) * Dirs);
            std::uint64_t x = pos[tok];
            std::uint64_t y = tor.neighbor(x, dir);
            std::int32_t other = owner[y];
            // An edge between two tokens is proposed from both ends.
            if (other >= 0 && (eng() & 1)) continue;
            pos[tok] = y;
            owner[y] = tok;
            if (other >= 0) {
                pos[other] = x;
                owner[x] = other;
            } else {
                owner[x] = -1;
            }
            if (x == 0 || y == 0) {
                touched = true;
                break;
            }
        }
        events += i;
        if (!touched) break;
        double a = std::gamma_distribution<double>(double(i))(eng);
        double b = std::gamma_distribution<double>(double(left - i + 1))(eng);
        u += rem * a / (a + b);
        double s = T - u;
        visits.push_back({at_origin, s, hi});
        hi = s;
        if (owner[0] < 0) {
            owner[0] = std::int32_t(pos.size());
            pos.push_back(0);
        }
        at_origin = owner[0];
    }
    visits.push_back({at_origin, 0.0, hi});
    return events;
}

}  // namespace

PathRecord OriginTracker::run(std::uint64_t seed) {
    const Torus& tor = ctx_->torus;
    const double T = ctx_->box.T;
    const double n2 = double(ctx_->box.n) * ctx_->box.n;
    Rng rng(derive_seed(seed, 0, "dynamics"));
    std::vector<std::uint64_t> pos;
    std::vector<Visit> visits;
    std::uint64_t events = 0;
    switch (tor.dim()) {
        case 1: events = sweep<2>(tor, n2, T, rng, owner_, pos, visits); break;
        case 2: events = sweep<4>(tor, n2, T, rng, owner_, pos, visits); break;
        case 3: events = sweep<6>(tor, n2, T, rng, owner_, pos, visits); break;
        case 4: events = sweep<8>(tor, n2, T, rng, owner_, pos, visits); break;
        default: throw InvalidArgument("origin tracker: dimension must be in [1, 4]");
    }

    Rng init(derive_seed(seed, 0, "init"));
    const MeanField& mf = *ctx_->mean;
    std::vector<std::uint8_t> eta0(pos.size());
    for (std::size_t k = 0; k < pos.size(); ++k) {
        eta0[k] = init.uniform() < mf.initial(pos[k]) ? 1 : 0;
        owner_[pos[k]] = -1;
    }
    tokens_ = pos.size();

    const auto& grid = ctx_->grid;
    std::vector<double> occ(grid.size(), 0.0);
    for (const Visit& v : visits) {
        if (!eta0[v.tok]) continue;
        for (std::size_t k = 1; k < grid.size(); ++k)
            occ[k] += std::max(0.0, std::min(v.hi, grid[k]) - v.lo);
    }
    PathRecord rec;
    rec.seed = seed;
    rec.events = events;
    rec.t = grid;
    for (std::size_t k = 0; k < grid.size(); ++k)
        rec.gamma.push_back(ctx_->beta * (occ[k] - ctx_->rho_origin_integral[k]));
    rec.M.assign(grid.size(), kNaN);
    rec.R.assign(grid.size(), kNaN);
    rec.QV.assign(grid.size(), kNaN);
    return rec;
}

}  // namespace ssep
