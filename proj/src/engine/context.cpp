#include <cmath>
#include <sstream>

#include "ssep/engine.hpp"

namespace ssep {

SimulationBox make_box(int d, int n, int m, double T, int safety) {
    require(d >= 1 && d <= 4, "box: dimension must be in [1, 4]");
    require(n >= 2, "box: n must be >= 2");
    require(m >= 1, "box: torus multiplier must be >= 1");
    require(T > 0, "box: horizon must be positive");
    require(safety >= 1, "box: safety factor must be >= 1");
    SimulationBox b;
    b.d = d;
    b.n = n;
    b.m = m;
    b.L = long(m) * n;
    b.T = T;
    long need = 4L * n * long(std::ceil(std::sqrt(T))) * safety;
    if (b.L < need) {
        std::ostringstream os;
        os << "box: torus side " << b.L << " is below 4·n·ceil(sqrt(T))·safety = " << need
           << "; raise the torus multiplier";
        throw InvalidArgument(os.str());
    }
    b.sites = 1;
    for (int j = 0; j < d; ++j) b.sites *= std::uint64_t(b.L);
    b.edges = b.sites * std::uint64_t(d);
    return b;
}

std::shared_ptr<const KernelContext> make_context(const SimulationBox& box,
                                                  const DensityProfile& profile, int grid_size,
                                                  bool with_resolvent) {
    require(grid_size >= 1, "context: grid needs at least one step");
    require(profile.dim() == box.d, "context: profile dimension differs from the box");
    auto ctx = std::make_shared<KernelContext>(KernelContext{
        box, Torus(box.d, box.L), beta(box.d, box.n), profile, nullptr, {}, nullptr, {}, {}, {}, {}, {}});
    ctx->mean = std::make_shared<MeanField>(profile, box.n, box.L);
    for (int k = 0; k <= grid_size; ++k) ctx->grid.push_back(box.T * k / grid_size);
    for (double t : ctx->grid) ctx->rho_origin_integral.push_back(ctx->mean->integral(0, t));
    if (with_resolvent) {
        ctx->resolvent = std::make_shared<ResolventField>(resolvent(box.d, box.n, box.L));
        double scale = box.n * ctx->beta;
        ctx->g_scaled.resize(ctx->resolvent->g.size());
        for (std::size_t i = 0; i < ctx->g_scaled.size(); ++i)
            ctx->g_scaled[i] = scale * ctx->resolvent->g[i];
        ctx->g_mean = ctx->mean->pair(ctx->resolvent->g);
        for (double t : ctx->grid) {
            ctx->g_mean_value.push_back(ctx->g_mean->value(t));
            ctx->g_mean_integral.push_back(ctx->g_mean->integral(t));
        }
    }
    return ctx;
}

}  // namespace ssep
