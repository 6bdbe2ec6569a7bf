#include "ssep/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

#include "ssep/common.hpp"

namespace ssep {

namespace bq = boost::math::quadrature;

namespace {

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

Panel gk_panel(const Integrand& f, double a, double b) {
    double err = 0;
    double v = bq::gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0, &err);
    // The reported error is measured on [-1, 1]; rescale to the panel.
    return {a, b, v, err * std::abs(b - a) / 2};
}

}  // namespace

// Global adaptive bisection on the panel with the largest error. Boost's own
// recursive driver compares unscaled panel errors against scaled tolerances.
QuadResult integrate(const Integrand& f, double a, double b, double rel, double abs_floor) {
    if (a == b) return {};
    std::priority_queue<Panel> heap;
    Panel top = gk_panel(f, a, b);
    double value = top.value, error = top.error;
    heap.push(top);
    constexpr int kMaxPanels = 4000;
    auto done = [&] { return error <= std::max(rel * std::abs(value), abs_floor); };
    while (!done() && int(heap.size()) < kMaxPanels) {
        Panel p = heap.top();
        double mid = 0.5 * (p.a + p.b);
        if (!(mid > p.a && mid < p.b)) break;
        heap.pop();
        Panel l = gk_panel(f, p.a, mid), r = gk_panel(f, mid, p.b);
        value += l.value + r.value - p.value;
        error += l.error + r.error - p.error;
        heap.push(l);
        heap.push(r);
        // Running sums drift; resum once refinement stalls near roundoff.
        if (error <= 64 * std::numeric_limits<double>::epsilon() * std::abs(value)) break;
    }
    auto panels = std::move(heap);
    double comp = 0;
    value = error = 0;
    while (!panels.empty()) {
        double x = panels.top().value, t = value + x;
        comp += std::abs(value) >= std::abs(x) ? (value - t) + x : (x - t) + value;
        value = t;
        error += panels.top().error;
        panels.pop();
    }
    value += comp;
    if (!std::isfinite(value) || error > std::max(rel * std::abs(value), abs_floor)) {
        std::ostringstream os;
        os << "quadrature on [" << a << ", " << b << "] did not converge: value " << value
           << ", error estimate " << error;
        throw ConvergenceError(os.str());
    }
    return {value, error};
}

QuadResult integrate_graded(const Integrand& f, double a, double b, double h, double rel,
                            double abs_floor) {
    require(h > 0, "integrate_graded: h must be positive");
    QuadResult out;
    double lo = a, step = h;
    while (lo < b) {
        double hi = std::min(b, a + step);
        // Each piece gets a share of the floor; relative accuracy is per piece.
        QuadResult r = integrate(f, lo, hi, rel, abs_floor * 0.1);
        out.value += r.value;
        out.error += r.error;
        lo = hi;
        step *= 2;
    }
    return out;
}

namespace {

template <int N>
void append_panels(LogRule& r, double lo, double hi, double width) {
    const auto& x = bq::gauss<double, N>::abscissa();
    const auto& w = bq::gauss<double, N>::weights();
    int panels = std::max(1, int(std::ceil((hi - lo) / width)));
    double hw = (hi - lo) / panels / 2;
    for (int p = 0; p < panels; ++p) {
        double mid = lo + (2 * p + 1) * hw;
        auto push = [&](double xi, double wi) {
            double v = mid + hw * xi;
            double t = std::exp(v);
            r.t.push_back(t);
            r.w.push_back(wi * hw * t);
        };
        // boost stores the non-negative half of the symmetric rule.
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] == 0) {
                push(0, w[i]);
            } else {
                push(x[i], w[i]);
                push(-x[i], w[i]);
            }
        }
    }
}

}  // namespace

LogRule log_rule(double t_min, double t_max, double panel_width, int order) {
    require(t_min > 0 && t_max > t_min, "log_rule: need 0 < t_min < t_max");
    LogRule r;
    double lo = std::log(t_min), hi = std::log(t_max);
    switch (order) {
        case 10: append_panels<10>(r, lo, hi, panel_width); break;
        case 15: append_panels<15>(r, lo, hi, panel_width); break;
        case 20: append_panels<20>(r, lo, hi, panel_width); break;
        default: throw InvalidArgument("log_rule: order must be 10, 15 or 20");
    }
    return r;
}

}  // namespace ssep
