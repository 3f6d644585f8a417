#include <doctest.h>

#include <cmath>
#include <sstream>

#include "quenchlab/percolation.hpp"

using namespace quenchlab;

TEST_CASE("bernoulli sampling on graphs") {
    auto g = subdivide_edges(build_lattice_box(2, 2), 3);
    auto ones = sample_bernoulli(g, DisorderKind::Site, 1.0, 1);
    for (auto b : ones.bits) CHECK(b == 1);
    auto zeros = sample_bernoulli(g, DisorderKind::Site, 0.0, 1);
    for (const auto &v : g.vertices) {
        if (v.role == VertexRole::Lattice)
            CHECK(zeros.bits[v.id] == 0);
        else
            CHECK(zeros.bits[v.id] == 1); // off-lattice sites forced open
    }
    CHECK_THROWS_AS(sample_bernoulli(g, DisorderKind::Site, 1.5, 1), std::invalid_argument);

    // empirical mean within 3 sigma at p = 0.5
    auto big = build_lattice_box(2, 20);
    long n = 0, k = 0;
    for (int rep = 0; rep < 600; ++rep) {
        auto c = sample_bernoulli(big, DisorderKind::Edge, 0.5, 1000 + rep);
        for (auto b : c.bits) {
            n++;
            k += b;
        }
    }
    double mean = static_cast<double>(k) / n;
    double sigma = 0.5 / std::sqrt(static_cast<double>(n));
    CHECK(std::fabs(mean - 0.5) <= 3.0 * sigma);

    // determinism under the seed
    auto c1 = sample_bernoulli(big, DisorderKind::Edge, 0.37, 99);
    auto c2 = sample_bernoulli(big, DisorderKind::Edge, 0.37, 99);
    CHECK(c1.bits == c2.bits);
}

TEST_CASE("disorder run-length round trip") {
    auto g = build_lattice_box(2, 3);
    auto c = sample_bernoulli(g, DisorderKind::Edge, 0.3, 5);
    std::stringstream ss;
    save_disorder(c, ss);
    auto d = load_disorder(ss);
    CHECK(d.bits == c.bits);
    CHECK(d.kind == c.kind);
    CHECK(d.seed == c.seed);
}

TEST_CASE("dual configuration is an involution") {
    auto g = sample_bernoulli_grid(-5, -5, 11, 11, 0.5, 42);
    auto d = dual_config(g);
    CHECK(d.offset == 1);
    auto dd = dual_config(d);
    CHECK(dd.offset == 0);
    for (int y = dd.y0; y <= dd.y0 + dd.ny - 1; ++y)
        for (int x = dd.x0; x <= dd.x0 + dd.nx - 2; ++x)
            CHECK(dd.h(x, y) == g.h(x, y));
    for (int y = dd.y0; y <= dd.y0 + dd.ny - 2; ++y)
        for (int x = dd.x0; x <= dd.x0 + dd.nx - 1; ++x)
            CHECK(dd.v(x, y) == g.v(x, y));

    BondGrid all1(-3, -3, 7, 7, 0);
    for (auto &b : all1.hbits) b = 1;
    for (auto &b : all1.vbits) b = 1;
    auto d1 = dual_config(all1);
    for (auto b : d1.hbits) CHECK(b == 0);
    for (auto b : d1.vbits) CHECK(b == 0);
}

TEST_CASE("good box verdicts at the extremes") {
    GoodBoxDims dims = GoodBoxDims::micro(1); // 1 x 2 rectangles
    BondGrid open(-8, -8, 17, 17, 0);
    for (auto &b : open.hbits) b = 1;
    for (auto &b : open.vbits) b = 1;
    CHECK(good_box(open, 0, 0, dims).verdict);
    BondGrid closed(-8, -8, 17, 17, 0);
    CHECK_FALSE(good_box(closed, 0, 0, dims).verdict);
}

TEST_CASE("good box verdict is monotone increasing in the primal configuration") {
    GoodBoxDims dims = GoodBoxDims::micro(1);
    for (int seed = 0; seed < 40; ++seed) {
        auto g = sample_bernoulli_grid(-8, -8, 17, 17, 0.7, 900 + seed);
        bool before = good_box(g, 0, 0, dims).verdict;
        bool flipped = false;
        for (size_t i = 0; i < g.hbits.size() && !flipped; ++i)
            if (!g.hbits[i]) {
                g.hbits[i] = 1;
                flipped = true;
            }
        if (!flipped) continue;
        bool after = good_box(g, 0, 0, dims).verdict;
        if (before) CHECK(after); // opening primal edges never destroys crossings
    }
}

TEST_CASE("renormalized sites at the extremes and monotone in p") {
    GoodBoxDims dims = GoodBoxDims::micro(1);
    BondGrid open(-12, -12, 25, 25, 0);
    for (auto &b : open.hbits) b = 1;
    for (auto &b : open.vbits) b = 1;
    auto r = renormalized_sites(open, 1, dims, -1, -1, 3, 3);
    for (auto b : r.bits) CHECK(b == 1);

    BondGrid closed(-12, -12, 25, 25, 0);
    auto r0 = renormalized_sites(closed, 1, dims, -1, -1, 3, 3);
    for (auto b : r0.bits) CHECK(b == 0);

    int open_hi = 0, open_lo = 0;
    for (int seed = 0; seed < 60; ++seed) {
        auto ghi = sample_bernoulli_grid(-12, -12, 25, 25, 0.92, 1700 + seed);
        auto glo = sample_bernoulli_grid(-12, -12, 25, 25, 0.65, 1700 + seed);
        open_hi += good_box(ghi, 0, 0, dims).verdict ? 1 : 0;
        open_lo += good_box(glo, 0, 0, dims).verdict ? 1 : 0;
    }
    CHECK(open_hi > open_lo);
}

TEST_CASE("renormalized field is 1-dependent: distant cells uncorrelated") {
    GoodBoxDims dims = GoodBoxDims::micro(1);
    int n = 300;
    double sa = 0, sb = 0, sab = 0;
    for (int seed = 0; seed < n; ++seed) {
        auto g = sample_bernoulli_grid(-16, -16, 33, 33, 0.8, 33000 + seed);
        // cells at coarse distance 3: the dual windows are disjoint
        int a = good_box(g, -9, 0, dims).verdict ? 1 : 0;
        int b = good_box(g, 9, 0, dims).verdict ? 1 : 0;
        sa += a;
        sb += b;
        sab += a * b;
    }
    double pa = sa / n, pb = sb / n;
    double cov = sab / n - pa * pb;
    double se = std::sqrt(pa * (1 - pa) * pb * (1 - pb) / n);
    CHECK(std::fabs(cov) <= 3.0 * se + 1e-12);
}

TEST_CASE("crossing paths: full configuration bridges all open cells") {
    GoodBoxDims dims = GoodBoxDims::micro(1);
    BondGrid open(-12, -12, 25, 25, 0);
    for (auto &b : open.hbits) b = 1;
    for (auto &b : open.vbits) b = 1;
    auto r = renormalized_sites(open, 1, dims, -1, -1, 3, 3);
    auto paths = extract_crossing_paths(open, r, 1, dims, -4, -4, 9, 9);
    CHECK(paths.bridges_requested == 12);
    CHECK(paths.bridges_found == 12);
    CHECK(!paths.primal_edges.empty());
    CHECK(paths.validation_passed);
}

TEST_CASE("crossing paths: no adjacent open pair means no selected edges") {
    GoodBoxDims dims = GoodBoxDims::micro(1);
    BondGrid open(-12, -12, 25, 25, 0);
    for (auto &b : open.hbits) b = 1;
    for (auto &b : open.vbits) b = 1;
    SiteGrid r(-1, -1, 3, 3);
    r.set(0, 0, 1); // a single open cell
    auto paths = extract_crossing_paths(open, r, 1, dims, -4, -4, 9, 9);
    CHECK(paths.bridges_requested == 0);
    CHECK(paths.primal_edges.empty());
    CHECK(paths.validation_passed);
}

TEST_CASE("crossing paths validate on most supercritical seeds") {
    GoodBoxDims dims = GoodBoxDims::micro(1);
    int pass = 0, total = 40;
    for (int seed = 0; seed < total; ++seed) {
        auto g = sample_bernoulli_grid(-12, -12, 25, 25, 0.85, 52000 + seed);
        auto r = renormalized_sites(g, 1, dims, -1, -1, 3, 3);
        auto paths = extract_crossing_paths(g, r, 1, dims, -4, -4, 9, 9);
        if (paths.validation_passed) ++pass;
        CHECK(paths.bridges_found <= paths.bridges_requested);
    }
    CHECK(pass >= total * 95 / 100);
}

TEST_CASE("conditional domination criterion") {
    for (double q : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        int s = 4;
        std::vector<double> prob(1u << s);
        for (uint32_t r = 0; r < prob.size(); ++r) {
            double pr = 1.0;
            for (int x = 0; x < s; ++x) pr *= (r >> x) & 1u ? q : 1.0 - q;
            prob[r] = pr;
        }
        auto rep = check_conditional_domination(prob, s, q + 1e-12);
        CHECK(rep.max_conditional == doctest::Approx(q).epsilon(1e-12));
        CHECK(rep.dominated);
        auto rep2 = check_conditional_domination(prob, s, q - 0.01);
        CHECK_FALSE(rep2.dominated);
    }
    std::vector<double> bad{0.5, 0.5, 0.0, 0.0};
    CHECK_THROWS_AS(check_conditional_domination(bad, 2, 0.5), std::invalid_argument);
}

TEST_CASE("union find basics") {
    UnionFind uf(6);
    uf.merge(0, 1);
    uf.merge(2, 3);
    CHECK(uf.connected(0, 1));
    CHECK_FALSE(uf.connected(1, 2));
    uf.merge(1, 2);
    CHECK(uf.connected(0, 3));
}
