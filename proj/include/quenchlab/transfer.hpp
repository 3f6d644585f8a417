#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "quenchlab/potentials.hpp"

namespace quenchlab {

// ---------------------------------------------------------------------------
// Integer-height models on W x H grids of free sites with a frozen exterior,
// evaluated exactly by a column transfer pass.  Increment factors are
// exp(-d^2/(2J)) (gaussian) or I_d(J) (bessel).  Conductance encoding:
//   J > 0   coupling J
//   J == 0  closed edge: increment pinned to 0
//   J < 0   no interaction across this edge
// ---------------------------------------------------------------------------

struct GridHeightSpec {
    int W = 1, H = 1;
    bool bessel = false;
    std::vector<double> Jh; // (W+1) x H, edge between (x-1,y) and (x,y); x = 0 and x = W touch the exterior
    std::vector<double> Jv; // W x (H+1), edge between (x,y-1) and (x,y); y = 0 and y = H touch the exterior
    double lambda = 0.0;
    int ox = 0, oy = 0; // observable site

    GridHeightSpec() = default;
    GridHeightSpec(int W_, int H_, double J, bool bessel_ = false)
        : W(W_), H(H_), bessel(bessel_), Jh(static_cast<size_t>(W_ + 1) * H_, J),
          Jv(static_cast<size_t>(W_) * (H_ + 1), J), ox(W_ / 2), oy(H_ / 2) {}

    double &jh(int x, int y) { return Jh[static_cast<size_t>(y) * (W + 1) + x]; }
    double &jv(int x, int y) { return Jv[static_cast<size_t>(y) * W + x]; }
    double jh(int x, int y) const { return Jh[static_cast<size_t>(y) * (W + 1) + x]; }
    double jv(int x, int y) const { return Jv[static_cast<size_t>(y) * W + x]; }
};

struct GridHeightResult {
    double var = 0.0;
    double mean = 0.0;
    double log_z = 0.0;
    int M = 0;
    double err_bound = 0.0;
};

namespace detail {

inline double grid_factor(bool bessel, double J, int d) {
    if (J < 0.0) return 1.0;        // absent
    if (J == 0.0) return d == 0 ? 1.0 : 0.0; // closed: pinned increment
    if (bessel) return bessel_i(d, J);
    return std::exp(-0.5 * d * d / J);
}

struct GridTransfer {
    const GridHeightSpec &spec;
    int M, D, H;
    size_t nstates;
    std::vector<double> scratch;

    explicit GridTransfer(const GridHeightSpec &s, int M_) : spec(s), M(M_), D(2 * M_ + 1), H(s.H) {
        nstates = 1;
        for (int i = 0; i < H; ++i) {
            nstates *= static_cast<size_t>(D);
            if (nstates > (size_t{1} << 33)) throw std::runtime_error("grid transfer: state space too large");
        }
        scratch.resize(nstates);
    }

    int digit(size_t s, int y) const {
        size_t p = 1;
        for (int i = 0; i < y; ++i) p *= D;
        return static_cast<int>((s / p) % D) - M;
    }

    // multiply v pointwise by the intra-column factors of column x
    void apply_intra(int x, std::vector<double> &v) const {
        std::vector<int> phi(H);
        for (size_t s = 0; s < nstates; ++s) {
            size_t t = s;
            for (int y = 0; y < H; ++y) {
                phi[y] = static_cast<int>(t % D) - M;
                t /= D;
            }
            double w = 1.0;
            w *= grid_factor(spec.bessel, spec.jv(x, 0), std::abs(phi[0]));
            for (int y = 1; y < H && w != 0.0; ++y)
                w *= grid_factor(spec.bessel, spec.jv(x, y), std::abs(phi[y] - phi[y - 1]));
            if (w != 0.0) w *= grid_factor(spec.bessel, spec.jv(x, H), std::abs(phi[H - 1]));
            if (w != 0.0 && spec.lambda > 0.0 && x == spec.ox)
                w *= bessel_i(std::abs(phi[spec.oy]), spec.lambda);
            v[s] *= w;
        }
    }

    // contract row y of v with the kernel K(a,b) = factor(J, a-b)
    void apply_kernel(double J, int y, std::vector<double> &v) {
        if (J == 0.0) return; // identity: the increment is pinned
        size_t stride = 1;
        for (int i = 0; i < y; ++i) stride *= D;
        std::vector<double> K(static_cast<size_t>(D) * D);
        for (int a = 0; a < D; ++a)
            for (int b = 0; b < D; ++b)
                K[static_cast<size_t>(a) * D + b] = grid_factor(spec.bessel, J, std::abs(a - b));
        auto &out = scratch;
        size_t block = stride * D;
        for (size_t base = 0; base < nstates; base += block)
            for (size_t off = 0; off < stride; ++off) {
                size_t p = base + off;
                for (int a = 0; a < D; ++a) {
                    double acc = 0.0;
                    const double *Ka = &K[static_cast<size_t>(a) * D];
                    for (int b = 0; b < D; ++b) acc += Ka[b] * v[p + static_cast<size_t>(b) * stride];
                    out[p + static_cast<size_t>(a) * stride] = acc;
                }
            }
        v.swap(out);
    }

    // boundary factor for column x against the frozen exterior
    void apply_boundary(int xedge, std::vector<double> &v) const {
        for (size_t s = 0; s < nstates; ++s) {
            double w = 1.0;
            size_t t = s;
            for (int y = 0; y < H && w != 0.0; ++y) {
                int d = static_cast<int>(t % D) - M;
                t /= D;
                w *= grid_factor(spec.bessel, spec.jh(xedge, y), std::abs(d));
            }
            v[s] *= w;
        }
    }

    double rescale(std::vector<double> &v) const {
        double mx = 0.0;
        for (double x : v) mx = std::max(mx, std::fabs(x));
        if (mx <= 0.0) throw std::runtime_error("grid transfer: partition vanished (truncation too tight)");
        for (double &x : v) x /= mx;
        return std::log(mx);
    }
};

} // namespace detail

inline GridHeightResult grid_height_var_fixed(const GridHeightSpec &spec, int M) {
    detail::GridTransfer tr(spec, M);
    size_t n = tr.nstates;
    double logscale = 0.0;

    std::vector<double> F(n, 1.0);
    tr.apply_boundary(0, F);
    tr.apply_intra(0, F);
    logscale += tr.rescale(F);
    for (int x = 1; x <= spec.ox; ++x) {
        for (int y = 0; y < spec.H; ++y) tr.apply_kernel(spec.jh(x, y), y, F);
        tr.apply_intra(x, F);
        logscale += tr.rescale(F);
    }
    std::vector<double> B(n, 1.0);
    tr.apply_boundary(spec.W, B);
    for (int x = spec.W - 1; x >= spec.ox + 1; --x) {
        tr.apply_intra(x, B);
        for (int y = 0; y < spec.H; ++y) tr.apply_kernel(spec.jh(x, y), y, B);
        logscale += tr.rescale(B);
    }
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    size_t p = 1;
    for (int i = 0; i < spec.oy; ++i) p *= tr.D;
    for (size_t s = 0; s < n; ++s) {
        double w = F[s] * B[s];
        if (w == 0.0) continue;
        int d = static_cast<int>((s / p) % tr.D) - M;
        s0 += w;
        s1 += w * d;
        s2 += w * static_cast<double>(d) * d;
    }
    GridHeightResult res;
    if (s0 <= 0.0) throw std::runtime_error("grid transfer: zero partition function");
    res.mean = s1 / s0;
    res.var = s2 / s0 - res.mean * res.mean;
    res.log_z = logscale + std::log(s0);
    res.M = M;
    return res;
}

// doubling certification in the height cutoff
inline GridHeightResult grid_height_var(const GridHeightSpec &spec, int M_start = 2,
                                        double tol = 1e-11, int M_max = 12) {
    GridHeightResult prev = grid_height_var_fixed(spec, M_start);
    for (int M = M_start + 1; M <= M_max; ++M) {
        GridHeightResult cur = grid_height_var_fixed(spec, M);
        double d = std::fabs(cur.var - prev.var) + std::fabs(cur.log_z - prev.log_z);
        if (d < tol * (1.0 + std::fabs(cur.var) + std::fabs(cur.log_z))) {
            cur.err_bound = d + 1e-14;
            return cur;
        }
        prev = cur;
    }
    prev.err_bound = 1e30; // not certified
    return prev;
}

} // namespace quenchlab
