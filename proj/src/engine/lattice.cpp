#include <cmath>
#include <sstream>

#include "ssep/engine.hpp"
#include "ssep/simd.hpp"

namespace ssep {

template <bool Labels>
BasicStirringState<Labels>::BasicStirringState(std::shared_ptr<const KernelContext> ctx,
                                               std::uint64_t seed, bool track_qv)
    : ctx_(std::move(ctx)), tor_(&ctx_->torus), seed_(seed), track_qv_(track_qv),
      rng_(derive_seed(seed, 0, "dynamics")) {
    if (!ctx_->has_resolvent())
        throw InvalidArgument("lattice engine: context was built without the resolvent table");
    const std::uint64_t N = tor_->sites();
    g_ = ctx_->resolvent->g.data();
    gs_ = ctx_->g_scaled.data();
    eta_.resize(N);
    Rng init(derive_seed(seed, 0, "init"));
    const MeanField& mf = *ctx_->mean;
    for (std::uint64_t x = 0; x < N; ++x) {
        eta_[x] = init.uniform() < mf.initial(x) ? 1 : 0;
        particles_ += eta_[x];
    }
    G_ = rescan_G();
    Q_ = track_qv_ ? rescan_Q() : kNaN;
    G0_bar_ = G_ - ctx_->g_mean_value[0];
    G_ref_ = G_;
    std::size_t K = ctx_->grid.size();
    rec_eta0_.assign(K, kNaN);
    rec_G_.assign(K, kNaN);
    rec_intG_.assign(K, kNaN);
    rec_Q_.assign(K, kNaN);
    record_grid(0);
    if constexpr (Labels) {
        if (N > std::uint64_t(UINT32_MAX)) throw InvalidArgument("lattice engine: too many sites for labels");
        lab_.resize(N);
        for (std::uint64_t x = 0; x < N; ++x) lab_[x] = std::uint32_t(x);
        clock_.assign(N, LabelClock{});
    }
}

template <bool Labels>
double BasicStirringState<Labels>::rescan_G() const {
    return simd::kernels().dot_u8(g_, eta_.data(), eta_.size());
}

template <bool Labels>
double BasicStirringState<Labels>::rescan_Q() const {
    const auto& K = simd::kernels();
    const long L = tor_->side();
    double q = 0;
    for (int j = 0; j < tor_->dim(); ++j) {
        std::uint64_t sj = tor_->stride(j), block = sj * std::uint64_t(L);
        for (std::uint64_t b = 0; b < eta_.size(); b += block) {
            const double* p = gs_ + b;
            const std::uint8_t* e = eta_.data() + b;
            q += K.discord(p, p + sj, e, e + sj, block - sj);
            q += K.discord(p + block - sj, p, e + block - sj, e, sj);
        }
    }
    return q;
}

template <bool Labels>
void BasicStirringState<Labels>::flush(double t) {
    double dt = t - last_;
    int_eta0_ += eta_[0] * dt;
    int_Gd_ += (G_ - G_ref_) * dt;
    int_Q_ += Q_ * dt;
    last_ = t;
}

template <bool Labels>
void BasicStirringState<Labels>::record_grid(std::size_t k) {
    if (k > 0) {
        double rg = rescan_G(), rq = track_qv_ ? rescan_Q() : kNaN;
        double drift = std::abs(rg - G_);
        if (track_qv_) drift = std::max(drift, std::abs(rq - Q_));
        drift_ = std::max(drift_, drift);
        if (drift > 1e-8) {
            std::ostringstream os;
            os << "lattice engine: accumulator drift " << drift << " at t = " << now_;
            throw InvariantViolation(os.str());
        }
        G_ = rg;
        Q_ = rq;
    }
    rec_eta0_[k] = int_eta0_;
    rec_G_[k] = G_;
    rec_intG_[k] = G_ref_ * now_ + int_Gd_;
    rec_Q_[k] = track_qv_ ? int_Q_ : kNaN;
}

template <bool Labels>
void BasicStirringState<Labels>::apply(std::uint64_t x, std::uint64_t y) {
    const int dirs = track_qv_ ? 2 * tor_->dim() : 0;
    const std::uint8_t ex = eta_[x], ey = eta_[y];
    double dq = 0;
    const double gx = gs_[x], gy = gs_[y];
    for (int dir = 0; dir < dirs; ++dir) {
        std::uint64_t u = tor_->neighbor(x, dir);
        if (u != y) {
            double w = (gx - gs_[u]) * (gx - gs_[u]);
            dq += ex != eta_[u] ? -w : w;
        }
        std::uint64_t v = tor_->neighbor(y, dir);
        if (v != x) {
            double w = (gy - gs_[v]) * (gy - gs_[v]);
            dq += ey != eta_[v] ? -w : w;
        }
    }
    G_ += (double(ey) - double(ex)) * (g_[x] - g_[y]);
    if (track_qv_) Q_ += dq;
    eta_[x] = ey;
    eta_[y] = ex;
    ++swaps_;
}

template <bool Labels>
void BasicStirringState<Labels>::swap_edge(std::uint64_t x, int j) {
    std::uint64_t y = tor_->step(x, j, 1);
    if constexpr (Labels) {
        std::uint32_t lx = lab_[x], ly = lab_[y];
        LabelClock& cx = clock_[lx];
        cx.acc += g_[x] * (now_ - cx.last);
        cx.last = now_;
        LabelClock& cy = clock_[ly];
        cy.acc += g_[y] * (now_ - cy.last);
        cy.last = now_;
        lab_[x] = ly;
        lab_[y] = lx;
    }
    if (eta_[x] != eta_[y]) {
        flush(now_);
        apply(x, y);
    }
}

template <bool Labels>
void BasicStirringState<Labels>::run_to(double t) {
    require(t >= now_, "run_to: target time is in the past");
    const auto& grid = ctx_->grid;
    const double n2 = double(ctx_->box.n) * ctx_->box.n;
    const std::uint64_t E = tor_->edges();
    const double rate = n2 * double(E);
    const std::uint64_t d = std::uint64_t(tor_->dim());
    for (;;) {
        bool at_grid = next_grid_ < grid.size() && grid[next_grid_] <= t;
        double target = at_grid ? grid[next_grid_] : t;
        double dt = rng_.exponential(rate);
        if (now_ + dt >= target) {
            // Memoryless clocks: stopping here and redrawing later is exact.
            now_ = target;
            if (at_grid) {
                flush(now_);
                record_grid(next_grid_);
                ++next_grid_;
                if (target < t) continue;
            }
            break;
        }
        now_ += dt;
        ++events_;
        std::uint64_t e = rng_.below(E);
        std::uint64_t x = d == 2 ? e >> 1 : d == 3 ? e / 3 : e / d;
        int j = int(e - x * d);
        swap_edge(x, j);
    }
    flush(now_);
}

template <bool Labels>
double BasicStirringState<Labels>::rb_r2() const {
    if constexpr (!Labels) {
        return kNaN;
    } else {
        const MeanField& mf = *ctx_->mean;
        double s1 = 0, s2 = 0;
        for (std::uint64_t x = 0; x < eta_.size(); ++x) {
            std::uint32_t l = lab_[x];
            double acc = clock_[l].acc + g_[x] * (now_ - clock_[l].last);
            double w = g_[l] - g_[x] + acc;
            double r0 = mf.initial(l);
            s1 += chi(r0) * w * w;
            s2 += r0 * w;
        }
        const auto& gm = *ctx_->g_mean;
        double C = gm.value(0) - gm.value(now_) + gm.integral(now_);
        double b = ctx_->beta;
        return b * b * (s1 + (s2 - C) * (s2 - C));
    }
}

template <bool Labels>
PathRecord BasicStirringState<Labels>::observables() const {
    PathRecord r;
    r.seed = seed_;
    r.events = events_;
    const double b = ctx_->beta;
    for (std::size_t k = 0; k < ctx_->grid.size(); ++k) {
        r.t.push_back(ctx_->grid[k]);
        double gamma = b * (rec_eta0_[k] - ctx_->rho_origin_integral[k]);
        double Gbar = rec_G_[k] - ctx_->g_mean_value[k];
        double intGbar = rec_intG_[k] - ctx_->g_mean_integral[k];
        double R = b * (G0_bar_ - Gbar + intGbar);
        double M = gamma - R;
        if (std::isfinite(gamma) && std::abs(gamma - (M + R)) > 1e-9)
            throw InvariantViolation("path record: Gamma != M + R");
        r.gamma.push_back(gamma);
        r.R.push_back(R);
        r.M.push_back(M);
        r.QV.push_back(rec_Q_[k]);
    }
    if (Labels && now_ == ctx_->box.T) r.rb_r2 = rb_r2();
    return r;
}

template class BasicStirringState<false>;
template class BasicStirringState<true>;

StirringState init_bernoulli(std::shared_ptr<const KernelContext> ctx, std::uint64_t seed) {
    return StirringState(std::move(ctx), seed);
}

PathRecord simulate_lattice(std::shared_ptr<const KernelContext> ctx, std::uint64_t seed,
                            bool labels, bool track_qv) {
    double T = ctx->box.T;
    if (labels) {
        LabeledStirringState s(ctx, seed, track_qv);
        s.run_to(T);
        return s.observables();
    }
    StirringState s(ctx, seed, track_qv);
    s.run_to(T);
    return s.observables();
}

}  // namespace ssep
