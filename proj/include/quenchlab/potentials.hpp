#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace quenchlab {

inline constexpr double two_pi = 6.283185307179586476925286766559;

// ---------------------------------------------------------------------------
// Modified Bessel function I_k
// ---------------------------------------------------------------------------

// I_k(x) by the ascending series. Terms are positive, no cancellation.
// Truncates when a term drops below 1e-17 of the running sum.
inline double bessel_i_series(int k, double x) {
    k = std::abs(k);
    if (x == 0.0) return k == 0 ? 1.0 : 0.0;
    double half = 0.5 * x;
    // t0 = (x/2)^k / k!
    double t = 1.0;
    for (int j = 1; j <= k; ++j) t *= half / j;
    double sum = t;
    double q = half * half;
    for (int j = 1; j < 400; ++j) {
        t *= q / (static_cast<double>(j) * (j + k));
        sum += t;
        if (t < 1e-17 * sum) break;
    }
    return sum;
}

// Scaled values e^{-x} I_k(x) for k = 0..kmax via normalized downward
// recurrence (I_{m-1} = I_{m+1} + (2m/x) I_m, normalized against
// e^x = I_0 + 2 sum_{m>=1} I_m).  Stable for large x where the series
// needs many terms.
inline std::vector<double> bessel_i_scaled_table(int kmax, double x) {
    if (x <= 0.0) {
        std::vector<double> t(kmax + 1, 0.0);
        t[0] = 1.0;
        return t;
    }
    int start = kmax + 2 + static_cast<int>(2.0 * std::sqrt((kmax + 40.0) * (x + 40.0)));
    std::vector<double> v(kmax + 1, 0.0);
    double ip1 = 0.0, i0 = 1e-280;
    double norm = 0.0;
    for (int m = start; m >= 1; --m) {
        double im1 = ip1 + (2.0 * m / x) * i0;
        ip1 = i0;
        i0 = im1;
        if (m - 1 <= kmax) v[m - 1] = i0;
        if (m - 1 >= 1) norm += 2.0 * i0; // accumulates 2*I_{m-1} for m-1>=1
        if (i0 > 1e260) {
            double s = 1e-260;
            i0 *= s; ip1 *= s; norm *= s;
            for (double &y : v) y *= s;
        }
    }
    norm += i0; // + I_0
    for (double &y : v) y /= norm;
    return v;
}

inline double bessel_i_scaled(int k, double x) {
    k = std::abs(k);
    if (x <= 15.0) return bessel_i_series(k, x) * std::exp(-x);
    return bessel_i_scaled_table(k, x)[k];
}

// I_k(x).  Series for x <= 15, normalized recurrence above.
inline double bessel_i(int k, double x) {
    if (x < 0.0) throw std::invalid_argument("bessel_i: negative argument");
    k = std::abs(k);
    if (x <= 15.0) return bessel_i_series(k, x);
    return bessel_i_scaled_table(k, x)[k] * std::exp(x);
}

// ---------------------------------------------------------------------------
// Heat kernel on the circle
//   v_b(t) = sqrt(2 pi b) sum_k exp(-b (t - 2 pi k)^2 / 2)
//          = sum_k exp(-k^2/(2b)) e^{ikt},       v_0 = 1.
// Representation switch at b = 1/(2 pi): Gaussian sum for large b,
// Fourier sum for small b; both then converge in a handful of terms.
// ---------------------------------------------------------------------------

inline double heat_kernel(double beta, double theta) {
    if (beta < 0.0) throw std::invalid_argument("heat_kernel: negative beta");
    if (beta == 0.0) return 1.0;
    double t = std::remainder(theta, two_pi); // t in [-pi, pi]
    if (beta >= 1.0 / two_pi) {
        // images k and -(k+1) paired so the loop walks outward from t
        double sum = std::exp(-0.5 * beta * t * t);
        for (int k = 1; k <= 64; ++k) {
            double a = t - two_pi * k;
            double b = t + two_pi * k;
            double term = std::exp(-0.5 * beta * a * a) + std::exp(-0.5 * beta * b * b);
            sum += term;
            if (term < 1e-18 * sum) break;
        }
        return std::sqrt(two_pi * beta) * sum;
    }
    double sum = 1.0;
    for (int k = 1; k <= 256; ++k) {
        double term = std::exp(-0.5 * k * k / beta);
        sum += 2.0 * term * std::cos(k * t);
        if (term < 1e-18) break;
    }
    return sum;
}

// Gaussian-sum and Fourier-sum forms exposed separately (used as mutual
// oracles in the tests).
inline double heat_kernel_gaussian_form(double beta, double theta, int terms = 64) {
    if (beta == 0.0) return 1.0;
    double t = std::remainder(theta, two_pi);
    double sum = 0.0;
    for (int k = -terms; k <= terms; ++k) {
        double a = t - two_pi * k;
        sum += std::exp(-0.5 * beta * a * a);
    }
    return std::sqrt(two_pi * beta) * sum;
}

inline double heat_kernel_fourier_form(double beta, double theta, int terms = 512) {
    if (beta == 0.0) return 1.0;
    double sum = 1.0;
    for (int k = 1; k <= terms; ++k)
        sum += 2.0 * std::exp(-0.5 * k * k / beta) * std::cos(k * theta);
    return sum;
}

// ---------------------------------------------------------------------------
// Mixing measures for annealed interactions
// ---------------------------------------------------------------------------

struct MixingMeasure {
    enum class Kind { PointMasses, ExpSubordinator };

    Kind kind = Kind::PointMasses;
    // point masses (J_i, w_i), weights normalized to 1
    std::vector<std::pair<double, double>> atoms;

    static MixingMeasure point_masses(std::vector<std::pair<double, double>> a) {
        MixingMeasure m;
        m.kind = Kind::PointMasses;
        double tot = 0.0;
        for (auto &[J, w] : a) {
            if (J <= 0.0) throw std::invalid_argument("mixing measure: support must be in (0,inf)");
            if (w < 0.0) throw std::invalid_argument("mixing measure: negative weight");
            tot += w;
        }
        if (tot <= 0.0) throw std::invalid_argument("mixing measure: zero total mass");
        for (auto &[J, w] : a) w /= tot;
        m.atoms = std::move(a);
        return m;
    }

    // mixing measure of V(x) = |x|:  mu(dJ) = (2 pi J)^{-1/2} e^{-J/2} dJ
    static MixingMeasure exp_subordinator() {
        MixingMeasure m;
        m.kind = Kind::ExpSubordinator;
        return m;
    }

    static MixingMeasure delta(double J) { return point_masses({{J, 1.0}}); }

    // text table "J w" per line, '#' comments allowed
    static MixingMeasure load(const std::string &path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("mixing measure: cannot open " + path);
        std::vector<std::pair<double, double>> a;
        std::string line;
        while (std::getline(in, line)) {
            auto h = line.find('#');
            if (h != std::string::npos) line.resize(h);
            std::istringstream ls(line);
            double J, w;
            if (ls >> J >> w) a.push_back({J, w});
        }
        return point_masses(std::move(a));
    }
};

// ---------------------------------------------------------------------------
// Edge potentials.
//
// Each variant provides one even nonnegative coefficient sequence c(k):
//   XY / BesselHeight : c(k) = I_k(beta)
//   Villain / GaussianHeight : c(k) = exp(-k^2 / (2 beta))
//   AnnealedMixture : c(k) = sum_i w_i exp(-k^2 / (2 beta J_i))
// In the angle models c(k) is the Fourier coefficient of the edge weight;
// in the height models c(dphi) is the Gibbs factor of the increment.
// Frozen pins the increment (angle weight has c(k) == 1 for all k; the
// height factor is the indicator of dphi = 0).  Free is the weight-1 edge.
// ---------------------------------------------------------------------------

struct EdgePotential {
    enum class Kind { XY, Villain, GaussianHeight, BesselHeight, Frozen, Free, AnnealedMixture };

    Kind kind = Kind::Free;
    double beta = 0.0;
    MixingMeasure mixing;

    static EdgePotential xy(double b) { return {Kind::XY, b, {}}; }
    static EdgePotential villain(double b) { return {Kind::Villain, b, {}}; }
    static EdgePotential gaussian_height(double b) { return {Kind::GaussianHeight, b, {}}; }
    static EdgePotential bessel_height(double b) { return {Kind::BesselHeight, b, {}}; }
    static EdgePotential frozen() { return {Kind::Frozen, 0.0, {}}; }
    static EdgePotential free_edge() { return {Kind::Free, 0.0, {}}; }
    static EdgePotential annealed(MixingMeasure m, double b) {
        if (m.kind != MixingMeasure::Kind::PointMasses)
            throw std::invalid_argument("annealed potential: only point-mass mixing measures carry a coefficient view");
        return {Kind::AnnealedMixture, b, std::move(m)};
    }

    bool is_bessel_family() const { return kind == Kind::XY || kind == Kind::BesselHeight; }
    bool is_gaussian_family() const {
        return kind == Kind::Villain || kind == Kind::GaussianHeight || kind == Kind::AnnealedMixture;
    }

    // c(k); see table above
    double coeff(int k) const {
        k = std::abs(k);
        switch (kind) {
        case Kind::XY:
        case Kind::BesselHeight:
            if (beta == 0.0) return k == 0 ? 1.0 : 0.0;
            return bessel_i(k, beta);
        case Kind::Villain:
        case Kind::GaussianHeight:
            if (beta == 0.0) return k == 0 ? 1.0 : 0.0;
            return std::exp(-0.5 * k * k / beta);
        case Kind::AnnealedMixture: {
            if (beta == 0.0) return k == 0 ? 1.0 : 0.0;
            double s = 0.0;
            for (auto &[J, w] : mixing.atoms) s += w * std::exp(-0.5 * k * k / (beta * J));
            return s;
        }
        case Kind::Frozen:
            return 1.0;
        case Kind::Free:
            return k == 0 ? 1.0 : 0.0;
        }
        return 0.0;
    }

    // Gibbs factor of a height increment
    double height_factor(long dphi) const {
        if (kind == Kind::Frozen) return dphi == 0 ? 1.0 : 0.0;
        if (kind == Kind::Free) return 1.0;
        if (dphi > 2000000 || dphi < -2000000) return 0.0;
        return coeff(static_cast<int>(dphi));
    }

    // angle weight w(theta), normalized so that the Fourier coefficients
    // are exactly coeff(k)
    double angle_weight(double theta) const {
        switch (kind) {
        case Kind::XY:
            return std::exp(beta * std::cos(theta));
        case Kind::BesselHeight:
            return std::exp(beta * std::cos(theta));
        case Kind::Villain:
        case Kind::GaussianHeight:
            return heat_kernel(beta, theta);
        case Kind::AnnealedMixture: {
            double s = 0.0;
            for (auto &[J, w] : mixing.atoms) s += w * heat_kernel(beta * J, theta);
            return s;
        }
        case Kind::Free:
            return 1.0;
        case Kind::Frozen:
            throw std::domain_error("frozen edge has no pointwise angle weight; contract it first");
        }
        return 1.0;
    }

    // true if, used as a height interaction, the increment is pinned to 0
    bool pins_height() const {
        if (kind == Kind::Frozen) return true;
        if (kind == Kind::Free) return false;
        return beta == 0.0 && kind != Kind::Free;
    }

    // true if, used as an angle interaction, the two angles are pinned equal
    bool pins_angle() const { return kind == Kind::Frozen; }

    // certified upper bound on c(K+1)/c(K) for all k >= K (coefficients are
    // log-concave and decreasing in |k| for every variant)
    double tail_ratio(int K) const {
        switch (kind) {
        case Kind::XY:
        case Kind::BesselHeight: {
            if (beta == 0.0) return 0.0;
            double a = bessel_i_scaled(K + 1, beta), b = bessel_i_scaled(K, beta);
            return b > 0.0 ? a / b : 0.0;
        }
        case Kind::Villain:
        case Kind::GaussianHeight:
            if (beta == 0.0) return 0.0;
            return std::exp(-(2.0 * K + 1.0) / (2.0 * beta));
        case Kind::AnnealedMixture: {
            if (beta == 0.0) return 0.0;
            double Jmax = 0.0;
            for (auto &[J, w] : mixing.atoms) Jmax = std::max(Jmax, J);
            return std::exp(-(2.0 * K + 1.0) / (2.0 * beta * Jmax));
        }
        case Kind::Frozen:
            return 1.0;
        case Kind::Free:
            return 0.0;
        }
        return 0.0;
    }
};

// ---------------------------------------------------------------------------
// Fourier coefficient view with a rigorous tail bound
// ---------------------------------------------------------------------------

struct FourierSeries {
    int K = 0;                      // truncation order, coefficients for |k| <= K
    std::vector<double> c;          // c[k], k = 0..K (even in k)
    double tail_bound = 0.0;        // upper bound on sum_{|k|>K} c(k)

    double at(int k) const {
        k = std::abs(k);
        return k <= K ? c[k] : 0.0;
    }
};

inline FourierSeries fourier_coeffs(const EdgePotential &p, int K) {
    if (K < 0) throw std::invalid_argument("fourier_coeffs: K < 0");
    if (p.kind == EdgePotential::Kind::Frozen)
        throw std::domain_error("fourier_coeffs: frozen edge coefficients are not summable");
    FourierSeries f;
    f.K = K;
    f.c.resize(K + 1);
    for (int k = 0; k <= K; ++k) f.c[k] = p.coeff(k);
    double q = p.tail_ratio(K);
    if (q >= 1.0) {
        f.tail_bound = std::numeric_limits<double>::infinity();
    } else {
        // sum_{k>K} c(k) <= c(K) * q / (1-q), doubled for the two signs
        f.tail_bound = 2.0 * f.c[K] * q / (1.0 - q);
    }
    return f;
}

// ---------------------------------------------------------------------------
// Annealed interaction F(theta) = int v_{beta J}(theta) kappa(dJ)
// ---------------------------------------------------------------------------

inline double annealed_villain_eval(const MixingMeasure &kappa, double beta, double theta) {
    if (kappa.kind != MixingMeasure::Kind::PointMasses)
        throw std::invalid_argument("annealed_villain_eval: continuous mixing measure without a quadrature rule");
    double s = 0.0;
    for (auto &[J, w] : kappa.atoms) s += w * heat_kernel(beta * J, theta);
    return s;
}

// ---------------------------------------------------------------------------
// Mixture identity  e^{-V(x)} = int e^{-x^2/(2J)} mu_V(dJ)
// for the registered potentials.  "quadratic" (V = x^2/2) is the point mass
// at J = 1; "abs" (V = |x|) uses the exponential subordinator density
// (2 pi J)^{-1/2} e^{-J/2}, integrated adaptively.  Returns the maximum
// absolute discrepancy over the grid.
// ---------------------------------------------------------------------------

namespace detail {

// adaptive Simpson on [a,b]
template <class F>
double adaptive_simpson(F f, double a, double b, double fa, double fm, double fb, double eps, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::fabs(left + right - whole) < 15.0 * eps)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, eps * 0.5, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, eps * 0.5, depth - 1);
}

template <class F>
double integrate(F f, double a, double b, double eps = 1e-13) {
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return adaptive_simpson(f, a, b, fa, fm, fb, eps, 40);
}

} // namespace detail

inline double mixture_identity_check(const std::string &name, const std::vector<double> &grid) {
    double max_err = 0.0;
    if (name == "quadratic") {
        for (double x : grid) {
            double lhs = std::exp(-0.5 * x * x);
            double rhs = std::exp(-x * x / 2.0); // point mass at J = 1
            max_err = std::max(max_err, std::fabs(lhs - rhs));
        }
        return max_err;
    }
    if (name == "abs") {
        for (double x : grid) {
            double lhs = std::exp(-std::fabs(x));
            // substitute J = s^2: integrand 2 (2 pi)^{-1/2} e^{-s^2/2} e^{-x^2/(2 s^2)} ds
            auto f = [x](double s) {
                if (s <= 0.0) return x == 0.0 ? 2.0 / std::sqrt(two_pi) : 0.0;
                double e = -0.5 * s * s - (x == 0.0 ? 0.0 : 0.5 * x * x / (s * s));
                if (e < -700.0) return 0.0;
                return 2.0 / std::sqrt(two_pi) * std::exp(e);
            };
            double rhs = detail::integrate(f, 0.0, 14.0, 1e-14);
            max_err = std::max(max_err, std::fabs(lhs - rhs));
        }
        return max_err;
    }
    throw std::invalid_argument("mixture_identity_check: unknown potential name " + name);
}

} // namespace quenchlab
