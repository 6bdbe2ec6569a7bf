#include <algorithm>

#include "ssep/engine.hpp"

namespace ssep {

FewParticleResult few_particle_run(const Torus& torus, int n,
                                   const std::vector<std::uint64_t>& start, bool coupled,
                                   const std::vector<double>& times, Rng& rng,
                                   const HoldingObserver& observe) {
    const std::size_t k = start.size();
    require(k >= 1 && k <= 4, "few_particle_run: between 1 and 4 particles");
    require(!coupled || k >= 2, "few_particle_run: coupling needs two particles");
    for (std::size_t i = 0; i < k; ++i) {
        require(start[i] < torus.sites(), "few_particle_run: start outside the torus");
        for (std::size_t j = 0; j < i; ++j)
            require(start[i] != start[j], "few_particle_run: start sites must be distinct");
    }
    require(!times.empty(), "few_particle_run: no observation times");
    require(std::is_sorted(times.begin(), times.end()) && times.front() >= 0,
            "few_particle_run: times must be sorted and non-negative");

    const double n2 = double(n) * n;
    const std::uint64_t dirs = 2 * std::uint64_t(torus.dim());
    const double horizon = times.back();
    FewParticleResult res;
    std::vector<std::uint64_t> pos = start;
    bool merged = false;
    // Particle 1 rides on particle 0 once merged.
    auto active = [&](std::size_t slot) { return merged && slot >= 1 ? slot + 1 : slot; };
    auto move = [&](std::size_t i, std::uint64_t to) {
        pos[i] = to;
        if (merged && i == 0) pos[1] = to;
    };

    std::size_t ti = 0;
    double now = 0;
    for (;;) {
        std::size_t live = merged ? k - 1 : k;
        double next = now + rng.exponential(n2 * double(dirs) * double(live));
        while (ti < times.size() && times[ti] < next) {
            res.positions.push_back(pos);
            ++ti;
        }
        double stop = std::min(next, horizon);
        if (observe && stop > now) observe(now, stop, pos);
        if (next >= horizon) break;
        now = next;
        ++res.events;
        std::uint64_t r = rng.below(live * dirs);
        std::size_t i = active(std::size_t(r / dirs));
        int dir = int(r % dirs);
        std::uint64_t y = torus.neighbor(pos[i], dir);
        std::size_t j = k;
        for (std::size_t q = 0; q < k; ++q)
            if (q != i && pos[q] == y && !(merged && q == 1)) j = q;
        if (coupled && !merged && j < k && (i + j == 1)) {
            pos[i] = y;
            merged = true;
            res.meeting_time = now;
            continue;
        }
        if (j < k) {
            if (rng.bits() & 1) continue;
            std::uint64_t x = pos[i];
            move(i, y);
            move(j, x);
        } else {
            move(i, y);
        }
    }
    while (ti < times.size()) {
        res.positions.push_back(pos);
        ++ti;
    }
    return res;
}

}  // namespace ssep
