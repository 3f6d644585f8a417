#include <doctest.h>

#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "quenchlab/exact.hpp"
#include "quenchlab/mcmc.hpp"

using namespace quenchlab;

namespace {

GibbsSpec angle_spec(LatticeGraph g, EdgePotential pot) {
    GibbsSpec s;
    s.graph = std::move(g);
    s.family = ModelFamily::Angle;
    s.default_pot = pot;
    return s;
}

} // namespace

TEST_CASE("angle chain reproduces the single-edge expectation within 3 sigma") {
    auto spec = angle_spec(build_from_edges(2, {{0, 1}}), EdgePotential::xy(2.0));
    ChainConfig cfg;
    cfg.sweeps = 60000;
    cfg.burnin = 4000;
    cfg.replicas = 4;
    cfg.seed = 11;
    auto est = run_angle_chain(spec, cfg, {{0, 1, 1}})[0];
    double exact = bessel_i(1, 2.0) / bessel_i(0, 2.0);
    CHECK(std::fabs(est.mean - exact) <= 3.0 * est.se);
    CHECK(est.se < 0.01);
    CHECK(est.neff > 100);
}

TEST_CASE("angle chain at zero coupling stays centred") {
    auto spec = angle_spec(build_from_edges(2, {{0, 1}}), EdgePotential::xy(0.0));
    ChainConfig cfg;
    cfg.sweeps = 30000;
    cfg.burnin = 2000;
    cfg.replicas = 2;
    cfg.seed = 3;
    auto est = run_angle_chain(spec, cfg, {{0, 1, 1}})[0];
    CHECK(std::fabs(est.mean) <= 3.0 * est.se + 1e-12);
}

TEST_CASE("angle chain matches the exact heat-kernel plaquette") {
    auto g = build_rect(2, 2);
    auto spec = angle_spec(g, EdgePotential::villain(1.0));
    double exact = exact_angle(spec, {0, 3, 1}).value;
    ChainConfig cfg;
    cfg.sweeps = 50000;
    cfg.burnin = 4000;
    cfg.replicas = 4;
    cfg.seed = 21;
    auto est = run_angle_chain(spec, cfg, {{0, 3, 1}})[0];
    CHECK(std::fabs(est.mean - exact) <= 3.0 * est.se);
}

TEST_CASE("chains are bit-identical under the same seed") {
    auto spec = angle_spec(build_rect(2, 2), EdgePotential::xy(1.0));
    ChainConfig cfg;
    cfg.sweeps = 4000;
    cfg.burnin = 500;
    cfg.replicas = 3;
    cfg.seed = 5;
    auto a = run_angle_chain(spec, cfg, {{0, 3, 1}})[0];
    auto b = run_angle_chain(spec, cfg, {{0, 3, 1}})[0];
    CHECK(a.mean == b.mean);
    CHECK(a.se == b.se);

    GridHeightSpec grid(3, 3, 1.5, false);
    auto ha = run_height_chain(grid, cfg);
    auto hb = run_height_chain(grid, cfg);
    CHECK(ha.mean == hb.mean);
    CHECK(ha.se == hb.se);
}

TEST_CASE("height chain: single site against the exact value") {
    double beta = 1.5;
    GridHeightSpec grid(1, 1, beta, false);
    ChainConfig cfg;
    cfg.sweeps = 120000;
    cfg.burnin = 5000;
    cfg.replicas = 4;
    cfg.seed = 19;
    auto est = run_height_chain(grid, cfg);
    auto exact = grid_height_var(grid, 3, 1e-11, 12);
    CHECK(std::fabs(est.mean - exact.var) <= 3.0 * est.se);
}

TEST_CASE("height chain: everything closed gives exactly zero") {
    GridHeightSpec grid(3, 3, 1.0, false);
    for (auto &j : grid.Jh) j = 0.0;
    for (auto &j : grid.Jv) j = 0.0;
    ChainConfig cfg;
    cfg.sweeps = 2000;
    cfg.burnin = 100;
    cfg.replicas = 1;
    cfg.seed = 1;
    auto est = run_height_chain(grid, cfg);
    CHECK(est.mean == 0.0);
    CHECK(est.se == 0.0);
}

TEST_CASE("height chain matches the transfer value on the 3x3 block") {
    GridHeightSpec grid(3, 3, 2.0, true);
    auto exact = grid_height_var(grid, 3, 1e-10, 12);
    ChainConfig cfg;
    cfg.sweeps = 60000;
    cfg.burnin = 4000;
    cfg.replicas = 4;
    cfg.seed = 77;
    auto est = run_height_chain(grid, cfg);
    CHECK(std::fabs(est.mean - exact.var) <= 3.0 * est.se);
}

TEST_CASE("angle chain stationarity: chi-squared on the 3-site chain") {
    double beta = 1.0;
    auto spec = angle_spec(build_from_edges(3, {{0, 1}, {1, 2}}), EdgePotential::xy(beta));
    int nb = 12;
    std::vector<double> counts(nb * nb, 0.0);
    long long nsamp = 0;
    ChainConfig cfg;
    cfg.sweeps = 140000;
    cfg.burnin = 4000;
    cfg.thin = 2;
    cfg.seed = 9;
    run_angle_sweeps(spec, cfg, [&](const std::vector<double> &theta) {
        auto bin = [&](double t) {
            double x = std::remainder(t, two_pi);
            if (x < 0) x += two_pi;
            int b = static_cast<int>(x / two_pi * nb);
            return std::min(b, nb - 1);
        };
        counts[bin(theta[0] - theta[1]) * nb + bin(theta[1] - theta[2])] += 1.0;
        ++nsamp;
    });
    // expected cell masses from the factorized 1-D density
    std::vector<double> cell(nb, 0.0);
    int fine = 4096;
    double z = 0.0;
    for (int t = 0; t < fine; ++t) {
        double w = std::exp(beta * std::cos(two_pi * t / fine));
        z += w;
        cell[t * nb / fine] += w;
    }
    for (auto &c : cell) c /= z;
    double stat = 0.0;
    for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j) {
            double expect = nsamp * cell[i] * cell[j];
            double diff = counts[i * nb + j] - expect;
            stat += diff * diff / expect;
        }
    double p = chi2_pvalue(stat, nb * nb - 1);
    CHECK(p > 0.01);
}

TEST_CASE("height chain stationarity: chi-squared on the 3-site chain") {
    double beta = 2.0;
    GridHeightSpec grid(3, 1, beta, true);
    int M = 7;
    std::map<std::array<long, 3>, double> exact;
    double z = 0.0;
    for (long a = -M; a <= M; ++a)
        for (long b = -M; b <= M; ++b)
            for (long c = -M; c <= M; ++c) {
                double w = bessel_i(std::labs(a), beta) * bessel_i(std::labs(a - b), beta) *
                           bessel_i(std::labs(b - c), beta) * bessel_i(std::labs(c), beta);
                // two vertical boundary edges per site
                w *= std::pow(bessel_i(std::labs(a), beta) * bessel_i(std::labs(b), beta) *
                                  bessel_i(std::labs(c), beta),
                              2.0);
                exact[{a, b, c}] = w;
                z += w;
            }
    for (auto &[k, v] : exact) v /= z;

    std::map<std::array<long, 3>, double> counts;
    long long nsamp = 0;
    ChainConfig cfg;
    cfg.sweeps = 120000;
    cfg.burnin = 4000;
    cfg.thin = 2;
    cfg.seed = 13;
    run_height_sweeps(grid, cfg, [&](const std::vector<long> &h, const std::vector<int> &cl) {
        counts[{h[cl[0]], h[cl[1]], h[cl[2]]}] += 1.0;
        ++nsamp;
    });
    double stat = 0.0;
    int cells = 0;
    double mass = 0.0, obs_mass = 0.0;
    for (auto &[state, prob] : exact) {
        if (prob < 5e-4) continue;
        double expect = nsamp * prob;
        double o = counts.count(state) ? counts[state] : 0.0;
        stat += (o - expect) * (o - expect) / expect;
        ++cells;
        mass += prob;
        obs_mass += o;
    }
    double rest_expect = nsamp * (1.0 - mass);
    double rest_obs = nsamp - obs_mass;
    if (rest_expect > 5.0) {
        stat += (rest_obs - rest_expect) * (rest_obs - rest_expect) / rest_expect;
        ++cells;
    }
    double p = chi2_pvalue(stat, cells - 1);
    CHECK(p > 0.01);
}

TEST_CASE("estimated variance trends: non-decreasing in beta and L within 2 sigma") {
    ChainConfig cfg;
    cfg.sweeps = 20000;
    cfg.burnin = 2000;
    cfg.replicas = 4;
    cfg.seed = 41;
    auto at = [&](int L, double beta) {
        GridHeightSpec grid(2 * L + 1, 2 * L + 1, beta, false);
        return run_height_chain(grid, cfg);
    };
    auto a = at(2, 1.0), b = at(2, 3.0);
    CHECK(b.mean >= a.mean - 2.0 * (a.se + b.se));
    auto c = at(4, 3.0);
    CHECK(c.mean >= b.mean - 2.0 * (b.se + c.se));
}

TEST_CASE("disorder average reduces to the clean estimate at p = 1") {
    ChainConfig cfg;
    cfg.sweeps = 12000;
    cfg.burnin = 1000;
    cfg.replicas = 2;
    cfg.seed = 8;
    auto avg = disorder_average_height(2, 2.0, false, 1.0, 5, cfg);
    ChainConfig cfg2 = cfg;
    cfg2.seed = RngStream::mix(cfg.seed ^ (0x9177ull + 0));
    GridHeightSpec grid(5, 5, 2.0, false);
    auto clean = run_height_chain(grid, cfg2);
    CHECK(avg.mean == clean.mean);
}

TEST_CASE("slope fitting") {
    std::vector<double> x{1.0, 2.0, 3.0, 4.0};
    std::vector<double> y{2.1, 4.05, 6.1, 7.9};
    std::vector<double> se{0.1, 0.1, 0.1, 0.1};
    auto f = fit_slope(x, y, se);
    CHECK(f.slope == doctest::Approx(1.97).epsilon(0.05));
    CHECK(f.t > 10.0);
}

TEST_CASE("chi-squared p-value sanity") {
    CHECK(chi2_pvalue(0.0, 5.0) == doctest::Approx(1.0));
    CHECK(chi2_pvalue(4.351, 5.0) == doctest::Approx(0.5).epsilon(0.01));
    CHECK(chi2_pvalue(100.0, 5.0) < 1e-10);
}

TEST_CASE("estimated variance non-decreasing in the open density within 2 sigma") {
    ChainConfig cfg;
    cfg.sweeps = 16000;
    cfg.burnin = 2000;
    cfg.replicas = 4;
    cfg.seed = 53;
    auto lo = disorder_average_height(2, 2.0, false, 0.8, 6, cfg);
    auto hi = disorder_average_height(2, 2.0, false, 1.0, 1, cfg);
    CHECK(hi.mean >= lo.mean - 2.0 * (lo.se + hi.se));
}
