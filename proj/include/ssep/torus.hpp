#pragma once

#include <cstdint>
#include <vector>

#include "ssep/common.hpp"

namespace ssep {

// Periodic box (Z/LZ)^d with row-major site numbering; axis 0 is contiguous.
class Torus {
public:
    Torus() = default;
    Torus(int d, long L);

    int dim() const { return d_; }
    long side() const { return L_; }
    std::uint64_t sites() const { return sites_; }
    std::uint64_t edges() const { return sites_ * std::uint64_t(d_); }
    std::uint64_t stride(int j) const { return stride_[j]; }

    long coord(std::uint64_t x, int j) const {
        if (pow2_) return long((x >> (shift_ * j)) & mask_);
        return long((x / stride_[j]) % std::uint64_t(L_));
    }

    // Neighbor x ± e_j.
    std::uint64_t step(std::uint64_t x, int j, int sign) const {
        long c = coord(x, j);
        long c2 = c + sign;
        if (c2 < 0) c2 += L_;
        else if (c2 >= L_) c2 -= L_;
        return x + std::uint64_t(c2 - c) * stride_[j];
    }

    // Direction dir in [0, 2d): axis dir/2, sign by parity.
    std::uint64_t neighbor(std::uint64_t x, int dir) const {
        return step(x, dir >> 1, (dir & 1) ? -1 : 1);
    }

    std::uint64_t index(const LatticeVector& x) const;
    LatticeVector coords(std::uint64_t x) const;

    // Representative of c mod L in [-(L-1)/2, L/2].
    long centered(long c) const {
        long r = ((c % L_) + L_) % L_;
        return r > L_ / 2 ? r - L_ : r;
    }

    // min(c, L - c) for c in [0, L).
    long fold(long c) const { return c <= L_ - c ? c : L_ - c; }

private:
    int d_ = 0;
    long L_ = 0;
    std::uint64_t sites_ = 0;
    std::vector<std::uint64_t> stride_;
    bool pow2_ = false;
    int shift_ = 0;
    std::uint64_t mask_ = 0;
};

}  // namespace ssep
