#include <doctest.h>

#include <cmath>

#include "quenchlab/exact.hpp"
#include "quenchlab/renorm.hpp"

using namespace quenchlab;

TEST_CASE("coarse graining of the fully open configuration") {
    auto omega = sample_bernoulli_grid(-9, -9, 19, 19, 1.0, 1);
    auto cs = coarse_grain(omega, 1, 0.25, GoodBoxDims::micro(1), 1);
    for (auto b : cs.r1.bits) CHECK(b == 1);
    CHECK(cs.validation_passed);
    CHECK(cs.paths.bridges_found == cs.paths.bridges_requested);
    // floored conductances sit in [beta/m_cap, beta] wherever nonzero
    for (double j : cs.spec_floor.Jh) {
        if (j > 0.0) {
            CHECK(j >= 0.25 / cs.m_cap - 1e-15);
            CHECK(j <= 0.25 + 1e-15);
        }
    }
    auto a = grid_height_var_fixed(cs.spec_omega, 2);
    auto b = grid_height_var_fixed(cs.spec_omega_c, 2);
    auto c = grid_height_var_fixed(cs.spec_floor, 2);
    CHECK(a.var >= b.var - 1e-12);
    CHECK(b.var >= c.var - 1e-12);
}

TEST_CASE("coarse graining of the fully closed configuration") {
    auto omega = sample_bernoulli_grid(-9, -9, 19, 19, 0.0, 1);
    auto cs = coarse_grain(omega, 1, 0.25, GoodBoxDims::micro(1), 1);
    for (auto b : cs.r1.bits) CHECK(b == 0);
    CHECK(cs.bundles.empty());
    auto a = grid_height_var_fixed(cs.spec_omega, 2);
    CHECK(a.var == 0.0); // everything pinned through the closed edges
}

TEST_CASE("omega dominates omega_C edgewise, and reusing omega_C is idempotent") {
    auto omega = sample_bernoulli_grid(-9, -9, 19, 19, 0.85, 77);
    auto cs = coarse_grain(omega, 1, 0.25, GoodBoxDims::micro(1), 1);
    for (size_t i = 0; i < cs.omega_c.hbits.size(); ++i)
        CHECK(cs.omega_c.hbits[i] <= cs.omega_win.hbits[i]);
    for (size_t i = 0; i < cs.omega_c.vbits.size(); ++i)
        CHECK(cs.omega_c.vbits[i] <= cs.omega_win.vbits[i]);
    // running the height model on omega_C twice is the same computation
    auto b1 = grid_height_var_fixed(cs.spec_omega_c, 2);
    auto b2 = grid_height_var_fixed(cs.spec_omega_c, 2);
    CHECK(b1.var == b2.var);
}

TEST_CASE("bound chain monotone on supercritical seeds") {
    int mono = 0;
    for (int s = 0; s < 8; ++s) {
        auto bc = bound_chain(3100 + s, 0.85, 1, 0.25, 1, GoodBoxDims::micro(1), 2);
        if (bc.monotone) ++mono;
        CHECK(bc.var_omega >= -1e-15);
    }
    CHECK(mono == 8);
}

TEST_CASE("bound chain with overlapping curtains: three strictly ordered levels") {
    // curtains longer than the cell pitch can enclose the origin, giving a
    // genuinely three-level chain
    GoodBoxDims overlap{1, 6, 3};
    auto bc = bound_chain(9000, 0.95, 1, 0.25, 1, overlap, 2);
    CHECK(bc.monotone);
    CHECK(bc.var_omega > bc.var_omega_c);
    CHECK(bc.var_omega_c > bc.var_floor);
    CHECK(bc.var_floor > 0.0);
    CHECK(bc.m_max >= 1);
    CHECK(bc.min_nonzero_conductance >= 0.25 / bc.spec.m_cap - 1e-15);
}

TEST_CASE("omega_C grid value matches the quotient cluster model") {
    GoodBoxDims overlap{1, 6, 3};
    int pitch = 3, R = pitch + 1;
    int S = R + overlap.window_radius + 4;
    auto omega = sample_bernoulli_grid(-S, -S, 2 * S + 1, 2 * S + 1, 0.95, 9000);
    auto cs = coarse_grain(omega, 1, 0.25, overlap, 1);
    auto grid_val = grid_height_var_fixed(cs.spec_omega_c, 3);

    // quotient: one vertex per cluster plus a frozen node; each bundle of m
    // open edges collapses to conductance beta/m
    int nv = cs.nclusters + 1;
    std::vector<std::pair<int, int>> el;
    std::vector<double> js;
    for (auto &b : cs.bundles) {
        int u = b.cu < 0 ? cs.nclusters : b.cu;
        int v = b.cv < 0 ? cs.nclusters : b.cv;
        el.push_back({u, v});
        js.push_back(0.25 / b.count);
    }
    GibbsSpec q;
    q.graph = build_from_edges(nv, el);
    q.family = ModelFamily::Height;
    for (size_t i = 0; i < js.size(); ++i)
        q.slot_pot[static_cast<int>(i)] = EdgePotential::gaussian_height(js[i]);
    q.frozen = {cs.nclusters};
    int W = cs.win_n;
    int origin_cluster = cs.cluster_of[(0 + R) + W * (0 + R)];
    if (origin_cluster < 0) {
        CHECK(grid_val.var == doctest::Approx(0.0).epsilon(1e-12));
    } else {
        auto quotient = exact_height(q, origin_cluster);
        CHECK(grid_val.var == doctest::Approx(quotient.value).epsilon(1e-8));
    }
}

TEST_CASE("good-cell probability climbs with the scale in the squarish family") {
    double p10 = goodbox_probability(0.6, GoodBoxDims::squarish(10), 120, 5);
    double p20 = goodbox_probability(0.6, GoodBoxDims::squarish(20), 120, 5);
    CHECK(p20 > p10);
    CHECK(p20 > 0.15);
}

TEST_CASE("standard dimensions at small scales: the crossing event degenerates") {
    // the width-1 rectangles of the verbatim rule make the event essentially
    // impossible at p = 0.6 and these scales; recorded for transparency
    double p10 = goodbox_probability(0.6, GoodBoxDims::standard(10), 60, 5);
    CHECK(p10 <= 0.05);
}
