#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "quenchlab/percolation.hpp"
#include "quenchlab/transfer.hpp"

namespace quenchlab {

// ---------------------------------------------------------------------------
// Coarse graining: from a bond configuration omega on Z^2 to the renormalized
// conductance model.  The pipeline, per construction:
//   dual config -> good cells -> crossing paths C* -> kept primal edges C
//   -> omega_C (C open, everything else closed)
//   -> clusters of (window, E \ C) with conductance beta / (bundle count)
// The bound chain compares, on the same height window,
//   Var(omega)  >=  Var(omega_C)  >=  Var(floored conductances),
// every step a pointwise conductance decrease.
// ---------------------------------------------------------------------------

struct CoarseSpec {
    int L0 = 1;
    double beta = 1.0;
    GoodBoxDims dims;
    SiteGrid r1;          // renormalized site field on the coarse cells
    CrossingPaths paths;

    int win_x0 = 0, win_y0 = 0, win_n = 0; // fine height window (square)
    BondGrid omega_win, omega_c;

    struct Bundle {
        int cu = -1, cv = -1; // cluster ids, -1 = pinned (boundary) cluster
        int count = 0;
    };
    int nclusters = 0;
    std::vector<int> cluster_of; // fine site (window indexing) -> cluster, -1 pinned
    std::vector<Bundle> bundles;
    int m_cap = 1;
    bool validation_passed = true;

    GridHeightSpec spec_omega, spec_omega_c, spec_floor;
};

namespace detail {

// copy the sampled bits of `src` into a window [x0, x0+n-1]^2 (vertex range),
// including the one-step boundary edges on every side
inline BondGrid restrict_window(const BondGrid &src, int x0, int y0, int n) {
    BondGrid out(x0 - 1, y0 - 1, n + 2, n + 2, src.offset);
    for (int y = out.y0; y <= out.y0 + out.ny - 1; ++y)
        for (int x = out.x0; x <= out.x0 + out.nx - 2; ++x)
            out.set_h(x, y, src.h(x, y));
    for (int y = out.y0; y <= out.y0 + out.ny - 2; ++y)
        for (int x = out.x0; x <= out.x0 + out.nx - 1; ++x)
            out.set_v(x, y, src.v(x, y));
    return out;
}

} // namespace detail

inline CoarseSpec coarse_grain(const BondGrid &omega, int L0, double beta, const GoodBoxDims &dims,
                               int coarse_radius) {
    CoarseSpec cs;
    cs.L0 = L0;
    cs.beta = beta;
    cs.dims = dims;
    int pitch = 2 * L0 + 1;
    int R = coarse_radius * pitch + L0;
    cs.win_x0 = -R;
    cs.win_y0 = -R;
    cs.win_n = 2 * R + 1;

    cs.r1 = renormalized_sites(omega, L0, dims, -coarse_radius, -coarse_radius,
                               2 * coarse_radius + 1, 2 * coarse_radius + 1);
    cs.paths = extract_crossing_paths(omega, cs.r1, L0, dims, -R, -R, 2 * R + 1, 2 * R + 1);
    cs.validation_passed = cs.paths.validation_passed;

    cs.omega_win = detail::restrict_window(omega, -R, -R, 2 * R + 1);
    cs.omega_c = BondGrid(cs.omega_win.x0, cs.omega_win.y0, cs.omega_win.nx, cs.omega_win.ny, 0);
    for (auto &[x, y, horiz] : cs.paths.primal_edges) {
        if (horiz && cs.omega_c.h_in_range(x, y)) cs.omega_c.set_h(x, y, 1);
        if (!horiz && cs.omega_c.v_in_range(x, y)) cs.omega_c.set_v(x, y, 1);
    }
    // omega >= omega_C edgewise (the selected edges are open by construction)
    for (size_t i = 0; i < cs.omega_c.hbits.size(); ++i)
        if (cs.omega_c.hbits[i] > cs.omega_win.hbits[i])
            throw std::logic_error("coarse_grain: omega_C exceeds omega");
    for (size_t i = 0; i < cs.omega_c.vbits.size(); ++i)
        if (cs.omega_c.vbits[i] > cs.omega_win.vbits[i])
            throw std::logic_error("coarse_grain: omega_C exceeds omega");

    // clusters of the window under the closed edges of omega_C; closed edges
    // to the exterior pin a cluster
    int W = cs.win_n;
    UnionFind uf(W * W + 1);
    int frozen = W * W;
    auto sid = [&](int x, int y) { return (x + R) + W * (y + R); };
    for (int y = -R; y <= R; ++y)
        for (int x = -R - 1; x <= R; ++x) {
            if (cs.omega_c.h(x, y) == 1) continue;
            int a = x < -R ? frozen : sid(x, y);
            int b = x + 1 > R ? frozen : sid(x + 1, y);
            uf.merge(a, b);
        }
    for (int y = -R - 1; y <= R; ++y)
        for (int x = -R; x <= R; ++x) {
            if (cs.omega_c.v(x, y) == 1) continue;
            int a = y < -R ? frozen : sid(x, y);
            int b = y + 1 > R ? frozen : sid(x, y + 1);
            uf.merge(a, b);
        }
    cs.cluster_of.assign(W * W, -1);
    std::map<int, int> label;
    int froot = uf.find(frozen);
    for (int s = 0; s < W * W; ++s) {
        int r = uf.find(s);
        if (r == froot) continue;
        auto it = label.find(r);
        if (it == label.end()) it = label.insert({r, cs.nclusters++}).first;
        cs.cluster_of[s] = it->second;
    }
    // bundle counts between clusters along open omega_C edges
    std::map<std::pair<int, int>, int> counts;
    auto cl = [&](int x, int y) {
        if (x < -R || x > R || y < -R || y > R) return -1;
        return cs.cluster_of[sid(x, y)];
    };
    for (int y = -R; y <= R; ++y)
        for (int x = -R - 1; x <= R; ++x)
            if (cs.omega_c.h(x, y) == 1) {
                int a = cl(x, y), b = cl(x + 1, y);
                if (a == b) continue;
                counts[{std::min(a, b), std::max(a, b)}]++;
            }
    for (int y = -R - 1; y <= R; ++y)
        for (int x = -R; x <= R; ++x)
            if (cs.omega_c.v(x, y) == 1) {
                int a = cl(x, y), b = cl(x, y + 1);
                if (a == b) continue;
                counts[{std::min(a, b), std::max(a, b)}]++;
            }
    int max_count = 1;
    for (auto &[pr, c] : counts) {
        cs.bundles.push_back({pr.first, pr.second, c});
        max_count = std::max(max_count, c);
    }
    cs.m_cap = std::max((dims.long_side + 1) * (dims.short_side + 1), max_count);

    // the three grid specs of the bound chain
    auto make_spec = [&](const BondGrid &bits, bool floored) {
        GridHeightSpec spec(W, W, beta, false);
        spec.ox = R;
        spec.oy = R;
        auto bundle_count = [&](int a, int b) {
            auto it = counts.find({std::min(a, b), std::max(a, b)});
            return it == counts.end() ? 1 : it->second;
        };
        for (int y = -R; y <= R; ++y)
            for (int x = -R - 1; x <= R; ++x) {
                double J = bits.h(x, y) ? beta : 0.0;
                if (floored && J > 0.0) {
                    int a = cl(x, y), b = cl(x + 1, y);
                    J = a == b ? beta : beta * bundle_count(a, b) / cs.m_cap;
                }
                spec.jh(x + R + 1, y + R) = J;
            }
        for (int y = -R - 1; y <= R; ++y)
            for (int x = -R; x <= R; ++x) {
                double J = bits.v(x, y) ? beta : 0.0;
                if (floored && J > 0.0) {
                    int a = cl(x, y), b = cl(x, y + 1);
                    J = a == b ? beta : beta * bundle_count(a, b) / cs.m_cap;
                }
                spec.jv(x + R, y + R + 1) = J;
            }
        return spec;
    };
    cs.spec_omega = make_spec(cs.omega_win, false);
    cs.spec_omega_c = make_spec(cs.omega_c, false);
    cs.spec_floor = make_spec(cs.omega_c, true);
    return cs;
}

struct BoundChain {
    double var_omega = 0.0, var_omega_c = 0.0, var_floor = 0.0;
    bool monotone = false;
    bool validation_passed = true;
    int m_max = 0;
    double min_nonzero_conductance = 0.0;
    CoarseSpec spec;
};

inline BoundChain bound_chain(uint64_t seed, double p, int L0, double beta, int coarse_radius,
                              const GoodBoxDims &dims, int M = 2) {
    int pitch = 2 * L0 + 1;
    int R = coarse_radius * pitch + L0;
    int margin = dims.window_radius + 4;
    int S = R + margin;
    BondGrid omega = sample_bernoulli_grid(-S, -S, 2 * S + 1, 2 * S + 1, p, seed);
    CoarseSpec cs = coarse_grain(omega, L0, beta, dims, coarse_radius);

    BoundChain bc;
    bc.validation_passed = cs.validation_passed;
    bc.var_omega = grid_height_var_fixed(cs.spec_omega, M).var;
    bc.var_omega_c = grid_height_var_fixed(cs.spec_omega_c, M).var;
    bc.var_floor = grid_height_var_fixed(cs.spec_floor, M).var;
    bc.monotone = bc.var_omega >= bc.var_omega_c - 1e-9 && bc.var_omega_c >= bc.var_floor - 1e-9;
    for (auto &b : cs.bundles) bc.m_max = std::max(bc.m_max, b.count);
    bc.min_nonzero_conductance = beta;
    for (auto &b : cs.bundles)
        bc.min_nonzero_conductance =
            std::min(bc.min_nonzero_conductance, beta * b.count / cs.m_cap);
    bc.spec = std::move(cs);
    return bc;
}

// empirical good-cell probability at the origin
inline double goodbox_probability(double p, const GoodBoxDims &dims, int nseeds,
                                  uint64_t seed0) {
    int S = dims.window_radius + 4;
    int hits = 0;
    for (int s = 0; s < nseeds; ++s) {
        BondGrid omega = sample_bernoulli_grid(-S, -S, 2 * S + 1, 2 * S + 1, p,
                                               RngStream::mix(seed0 ^ (0x600dull + s)));
        if (good_box(omega, 0, 0, dims).verdict) ++hits;
    }
    return static_cast<double>(hits) / nseeds;
}

} // namespace quenchlab
