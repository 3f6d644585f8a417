#include <doctest.h>

#include <cmath>
#include <vector>

#include "quenchlab/potentials.hpp"
#include "quenchlab/rng.hpp"

using namespace quenchlab;

namespace {

// 40-term ascending-series oracle, independent of the library path
double bessel_series_oracle(int k, double x) {
    k = std::abs(k);
    double sum = 0.0;
    for (int j = 0; j < 40; ++j) {
        double t = 1.0;
        for (int i = 1; i <= j; ++i) t *= (0.5 * x) / i;
        for (int i = 1; i <= j + k; ++i) t *= (0.5 * x) / i;
        sum += t;
    }
    return sum;
}

} // namespace

TEST_CASE("bessel I: values at zero argument") {
    CHECK(bessel_i(0, 0.0) == 1.0);
    CHECK(bessel_i(1, 0.0) == 0.0);
    CHECK(bessel_i(5, 0.0) == 0.0);
}

TEST_CASE("bessel I: series oracle agreement") {
    CHECK(bessel_i(1, 2.0) == doctest::Approx(bessel_series_oracle(1, 2.0)).epsilon(1e-12));
    CHECK(bessel_i(0, 2.0) == doctest::Approx(2.2795853023360673).epsilon(1e-12));
    CHECK(bessel_i(1, 2.0) == doctest::Approx(1.5906368546373291).epsilon(1e-12));
    for (int k = 0; k <= 6; ++k)
        for (double x : {0.1, 0.7, 3.0, 9.5})
            CHECK(bessel_i(k, x) == doctest::Approx(bessel_series_oracle(k, x)).epsilon(1e-12));
}

TEST_CASE("bessel I: symmetric in k; series and recurrence agree at the crossover") {
    CHECK(bessel_i(-3, 1.7) == bessel_i(3, 1.7));
    for (int k = 0; k <= 8; ++k)
        for (double x : {12.0, 15.0, 18.0}) {
            double series = bessel_i_series(k, x);
            double recurrence = bessel_i_scaled_table(k, x)[k] * std::exp(x);
            CHECK(std::fabs(series - recurrence) / series < 1e-12);
        }
}

TEST_CASE("bessel I: large-x expansion I_k(J) sqrt(2 pi J) e^{-J} -> 1 - (4k^2-1)/(8J)") {
    for (int k = 0; k <= 2; ++k)
        for (double J : {50.0, 200.0, 800.0}) {
            double scaled = bessel_i_scaled(k, J) * std::sqrt(two_pi * J);
            double expansion = 1.0 - (4.0 * k * k - 1.0) / (8.0 * J);
            CHECK(std::fabs(scaled - expansion) < 3.0 / (J * J));
        }
}

TEST_CASE("heat kernel: conventions and symmetry") {
    CHECK(heat_kernel(0.0, 1.234) == 1.0);
    for (double beta : {0.02, 0.3, 2.0, 40.0})
        for (double t : {0.3, 1.0, 2.9}) {
            CHECK(heat_kernel(beta, t) == doctest::Approx(heat_kernel(beta, two_pi - t)).epsilon(1e-13));
            CHECK(heat_kernel(beta, t) == doctest::Approx(heat_kernel(beta, t + two_pi)).epsilon(1e-13));
        }
}

TEST_CASE("heat kernel: the two series forms agree to 1e-12 relative") {
    // includes the representation-switch regimes on both sides of 1/(2 pi)
    // relative agreement with an absolute floor: where the kernel underflows
    // the alternating Fourier sum cancels only down to machine precision
    std::vector<double> betas{1e-3, 0.05, 1.0 / two_pi, 0.5, 2.0, 31.0, 1e3};
    RngStream rng(77);
    for (double beta : betas)
        for (int i = 0; i < 24; ++i) {
            double t = rng.uniform(0.0, two_pi);
            double a = heat_kernel_gaussian_form(beta, t);
            double b = heat_kernel_fourier_form(beta, t);
            double v = heat_kernel(beta, t);
            CHECK(std::fabs(a - b) <= 1e-12 * std::max(a, b) + 1e-12);
            CHECK(std::fabs(v - a) <= 1e-12 * std::max(v, a) + 1e-12);
        }
    CHECK(heat_kernel(0.5, 0.0) ==
          doctest::Approx(heat_kernel_gaussian_form(0.5, 0.0)).epsilon(1e-13));
}

TEST_CASE("fourier coefficients per variant") {
    auto vil = fourier_coeffs(EdgePotential::villain(1.0), 4);
    CHECK(vil.at(1) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    auto xy = fourier_coeffs(EdgePotential::xy(2.0), 4);
    for (int k = 0; k <= 2; ++k)
        CHECK(xy.at(k) == doctest::Approx(bessel_series_oracle(k, 2.0)).epsilon(1e-12));
    // a single point mass at J = 1 is the plain heat-kernel interaction
    auto mix = fourier_coeffs(EdgePotential::annealed(MixingMeasure::delta(1.0), 1.0), 4);
    for (int k = 0; k <= 4; ++k) CHECK(mix.at(k) == doctest::Approx(vil.at(k)).epsilon(1e-14));
    CHECK(vil.tail_bound < 1e-4);
    CHECK(vil.tail_bound > 0.0);
    // the bound really covers the tail
    double true_tail = 0.0;
    for (int k = 5; k < 60; ++k) true_tail += 2.0 * std::exp(-0.5 * k * k);
    CHECK(vil.tail_bound >= true_tail);
}

TEST_CASE("coefficients are nonnegative, even, and decreasing in |k|") {
    std::vector<EdgePotential> pots{
        EdgePotential::xy(0.7), EdgePotential::villain(2.5), EdgePotential::gaussian_height(1.2),
        EdgePotential::bessel_height(3.0),
        EdgePotential::annealed(MixingMeasure::point_masses({{0.5, 0.3}, {2.0, 0.7}}), 1.5)};
    for (const auto &p : pots)
        for (int k = 0; k < 12; ++k) {
            CHECK(p.coeff(k) >= 0.0);
            CHECK(p.coeff(k) == p.coeff(-k));
            CHECK(p.coeff(k + 1) <= p.coeff(k) + 1e-15);
        }
}

TEST_CASE("bessel power convergence (I_k(n b)/I_0(n b))^n -> exp(-k^2/(2b))") {
    for (double beta : {0.5, 2.0})
        for (int k = 0; k <= 2; ++k) {
            double target = std::exp(-0.5 * k * k / beta);
            double first = 0.0, last = 0.0;
            for (int n : {1, 2, 4, 8, 16, 32, 64}) {
                double ratio = bessel_i_scaled(k, n * beta) / bessel_i_scaled(0, n * beta);
                double err = std::fabs(std::pow(ratio, n) - target);
                CHECK(err <= 3.0 / n);
                if (n == 1) first = err;
                last = err;
            }
            if (k > 0) CHECK(last < 0.25 * first + 1e-12);
        }
}

TEST_CASE("heat-kernel semigroup: coefficient convolution composes the betas") {
    // sum_m exp(-m^2/(2 b1)) exp(-(k-m)^2/(2 b2)) = exp(-k^2/(2(b1+b2))) theta(k),
    // where theta is 1 up to corrections of order exp(-2 pi^2/(1/b1 + 1/b2)):
    // negligible once the couplings are not small.
    double b1 = 5.0, b2 = 8.0;
    auto conv = [&](int k) {
        double s = 0.0;
        for (int m = -200; m <= 200; ++m)
            s += std::exp(-0.5 * m * m / b1) * std::exp(-0.5 * (k - m) * (k - m) / b2);
        return s;
    };
    double ratio0 = conv(0);
    for (int k = 1; k <= 5; ++k) {
        double expect = std::exp(-0.5 * k * k / (b1 + b2));
        CHECK(conv(k) / ratio0 == doctest::Approx(expect).epsilon(1e-9));
    }
}

TEST_CASE("mixture identities") {
    std::vector<double> grid{0.0, 0.5, 1.0, 2.0, 4.0};
    CHECK(mixture_identity_check("quadratic", grid) == 0.0);
    CHECK(mixture_identity_check("abs", grid) <= 1e-10);
    CHECK(mixture_identity_check("abs", {0.0}) <= 1e-12);
    CHECK_THROWS_AS(mixture_identity_check("cubic", grid), std::invalid_argument);
}

TEST_CASE("annealed interaction evaluation") {
    MixingMeasure d1 = MixingMeasure::delta(1.0);
    for (double t : {0.0, 0.9, 2.2})
        CHECK(annealed_villain_eval(d1, 1.3, t) == doctest::Approx(heat_kernel(1.3, t)).epsilon(1e-14));
    // beta = 0: every atom contributes v_0 = 1
    MixingMeasure two = MixingMeasure::point_masses({{1.0, 0.5}, {2.0, 0.5}});
    CHECK(annealed_villain_eval(two, 0.0, 1.0) == 1.0);
    CHECK(annealed_villain_eval(two, 1.0, 0.0) ==
          doctest::Approx(0.5 * heat_kernel(1.0, 0.0) + 0.5 * heat_kernel(2.0, 0.0)).epsilon(1e-14));
    CHECK_THROWS_AS(annealed_villain_eval(MixingMeasure::exp_subordinator(), 1.0, 0.0),
                    std::invalid_argument);
}

TEST_CASE("frozen and free views") {
    EdgePotential frozen = EdgePotential::frozen();
    CHECK(frozen.coeff(0) == 1.0);
    CHECK(frozen.coeff(7) == 1.0);
    CHECK(frozen.height_factor(0) == 1.0);
    CHECK(frozen.height_factor(3) == 0.0);
    EdgePotential free_e = EdgePotential::free_edge();
    CHECK(free_e.coeff(0) == 1.0);
    CHECK(free_e.coeff(2) == 0.0);
    CHECK(free_e.height_factor(5) == 1.0);
    CHECK_THROWS_AS(fourier_coeffs(frozen, 3), std::domain_error);
}

TEST_CASE("mixing measure loading and validation") {
    CHECK_THROWS_AS(MixingMeasure::point_masses({{-1.0, 0.5}}), std::invalid_argument);
    CHECK_THROWS_AS(MixingMeasure::point_masses({{1.0, -0.5}}), std::invalid_argument);
    auto m = MixingMeasure::point_masses({{1.0, 2.0}, {2.0, 6.0}});
    CHECK(m.atoms[0].second == doctest::Approx(0.25));
    CHECK(m.atoms[1].second == doctest::Approx(0.75));
}
