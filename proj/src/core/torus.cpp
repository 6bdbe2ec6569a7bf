#include "ssep/torus.hpp"

namespace ssep {

Torus::Torus(int d, long L) : d_(d), L_(L) {
    require(d >= 1 && d <= 6, "torus: dimension must be in [1, 6]");
    require(L >= 2, "torus: side must be >= 2");
    stride_.resize(d);
    std::uint64_t s = 1;
    for (int j = 0; j < d; ++j) {
        stride_[j] = s;
        s *= std::uint64_t(L);
    }
    sites_ = s;
    pow2_ = (L & (L - 1)) == 0;
    if (pow2_) {
        while ((1L << shift_) < L) ++shift_;
        mask_ = std::uint64_t(L - 1);
    }
}

std::uint64_t Torus::index(const LatticeVector& x) const {
    require(int(x.size()) == d_, "torus: coordinate dimension mismatch");
    std::uint64_t idx = 0;
    for (int j = 0; j < d_; ++j) {
        long c = ((x[j] % L_) + L_) % L_;
        idx += std::uint64_t(c) * stride_[j];
    }
    return idx;
}

LatticeVector Torus::coords(std::uint64_t x) const {
    LatticeVector c(d_);
    for (int j = 0; j < d_; ++j) c[j] = coord(x, j);
    return c;
}

}  // namespace ssep
