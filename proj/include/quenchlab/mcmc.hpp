#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "quenchlab/exact.hpp"
#include "quenchlab/rng.hpp"
#include "quenchlab/transfer.hpp"

namespace quenchlab {

inline int worker_count() {
    const char *s = std::getenv("QUENCHLAB_THREADS");
    int n = s ? std::atoi(s) : static_cast<int>(std::thread::hardware_concurrency());
    return std::max(1, std::min(n, 32));
}

template <class F>
inline void parallel_for(int n, F fn) {
    int nw = std::min(worker_count(), n);
    if (nw <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < nw; ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto &t : pool) t.join();
}

// ---------------------------------------------------------------------------
// Chain configuration and estimates
// ---------------------------------------------------------------------------

struct ChainConfig {
    long long sweeps = 20000;
    long long burnin = 2000;
    int thin = 1;
    double proposal = 1.0; // wrapped-gaussian width (angle chains)
    uint64_t seed = 1;
    int replicas = 4;

    void validate() const {
        if (burnin >= sweeps) throw std::invalid_argument("chain config: burnin >= sweeps");
        if (replicas < 1) throw std::invalid_argument("chain config: replicas < 1");
    }
};

struct Estimate {
    double mean = 0.0;
    double se = 0.0;
    double neff = 0.0;
    int replicas = 0;
    int dsamples = 1;
};

namespace detail {

struct SeriesStats {
    std::vector<double> batch_means;
    double mean = 0.0, var = 0.0;
    long long n = 0;
};

inline SeriesStats batch_stats(const std::vector<double> &xs, int nbatch = 32) {
    SeriesStats s;
    s.n = static_cast<long long>(xs.size());
    if (xs.empty()) return s;
    double m = 0.0;
    for (double x : xs) m += x;
    m /= xs.size();
    double v = 0.0;
    for (double x : xs) v += (x - m) * (x - m);
    v /= std::max<size_t>(xs.size() - 1, 1);
    s.mean = m;
    s.var = v;
    size_t bs = std::max<size_t>(xs.size() / nbatch, 1);
    for (size_t b = 0; b + bs <= xs.size(); b += bs) {
        double bm = 0.0;
        for (size_t i = b; i < b + bs; ++i) bm += xs[i];
        s.batch_means.push_back(bm / bs);
    }
    return s;
}

inline Estimate combine_replicas(const std::vector<SeriesStats> &reps) {
    Estimate e;
    e.replicas = static_cast<int>(reps.size());
    double m = 0.0;
    long long n = 0;
    std::vector<double> bms;
    double var_sample = 0.0;
    for (const auto &r : reps) {
        m += r.mean * r.n;
        n += r.n;
        var_sample += r.var * r.n;
        for (double b : r.batch_means) bms.push_back(b);
    }
    if (n == 0) return e;
    e.mean = m / n;
    var_sample /= n;
    double bv = 0.0;
    for (double b : bms) bv += (b - e.mean) * (b - e.mean);
    bv /= std::max<size_t>(bms.size() - 1, 1);
    e.se = std::sqrt(bv / bms.size());
    double bs = static_cast<double>(n) / bms.size();
    double tau = var_sample > 0.0 ? std::max(1.0, bs * bv / var_sample) : 1.0;
    e.neff = n / tau;
    return e;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Angle chains: single-site Metropolis with wrapped-gaussian proposals.
// Deterministic under the seed; replicas use disjoint counter streams.
// ---------------------------------------------------------------------------

struct ResolvedAngleModel {
    int nv = 0;
    std::vector<std::array<int, 2>> ends;
    std::vector<EdgePotential> pots;
    std::vector<std::vector<std::pair<int, int>>> adj; // per vertex: (edge, other)

    explicit ResolvedAngleModel(const GibbsSpec &spec) {
        if (spec.family != ModelFamily::Angle)
            throw std::invalid_argument("angle chain needs an angle spec");
        nv = spec.graph.vertex_count();
        adj.resize(nv);
        for (const auto &e : spec.graph.edges) {
            EdgePotential pot = spec.effective_potential(e);
            if (pot.kind == EdgePotential::Kind::Frozen)
                throw std::invalid_argument("angle chain: frozen edges unsupported");
            if (detail::angle_decoupled(pot)) continue;
            int idx = static_cast<int>(ends.size());
            ends.push_back({e.u, e.v});
            pots.push_back(pot);
            adj[e.u].push_back({idx, e.v});
            adj[e.v].push_back({idx, e.u});
        }
    }

    double log_weight_at(int site, double theta, const std::vector<double> &state) const {
        double s = 0.0;
        for (auto &[eidx, other] : adj[site])
            s += std::log(pots[eidx].angle_weight(theta - state[other]));
        return s;
    }
};

inline std::vector<Estimate> run_angle_chain(const GibbsSpec &spec, const ChainConfig &cfg,
                                             const std::vector<TwoPoint> &observables) {
    cfg.validate();
    ResolvedAngleModel model(spec);
    size_t nobs = observables.size();
    std::vector<std::vector<detail::SeriesStats>> per_rep(cfg.replicas,
                                                          std::vector<detail::SeriesStats>(nobs));
    parallel_for(cfg.replicas, [&](int rep) {
        std::vector<double> theta(model.nv, 0.0);
        std::vector<std::vector<double>> series(nobs);
        for (long long sweep = 0; sweep < cfg.sweeps; ++sweep) {
            for (int site = 0; site < model.nv; ++site) {
                RngStream rng(cfg.seed, 0xa1c4ull + rep, static_cast<uint64_t>(sweep),
                              static_cast<uint64_t>(site));
                double cur = theta[site];
                double prop = cur + cfg.proposal * rng.normal();
                prop = prop - two_pi * std::floor(prop / two_pi);
                double dlw = model.log_weight_at(site, prop, theta) -
                             model.log_weight_at(site, cur, theta);
                if (dlw >= 0.0 || std::log(rng.uniform() + 1e-300) < dlw) theta[site] = prop;
            }
            if (sweep >= cfg.burnin && (sweep - cfg.burnin) % cfg.thin == 0)
                for (size_t o = 0; o < nobs; ++o)
                    series[o].push_back(
                        std::cos(observables[o].m * (theta[observables[o].a] - theta[observables[o].b])));
        }
        for (size_t o = 0; o < nobs; ++o) per_rep[rep][o] = detail::batch_stats(series[o]);
    });
    std::vector<Estimate> out(nobs);
    for (size_t o = 0; o < nobs; ++o) {
        std::vector<detail::SeriesStats> reps;
        for (int r = 0; r < cfg.replicas; ++r) reps.push_back(per_rep[r][o]);
        out[o] = detail::combine_replicas(reps);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Height chains on grid specs: single-cluster heat bath with an exact
// windowed conditional.  Sites joined by closed edges (J == 0) form one
// cluster and move as a block.
// ---------------------------------------------------------------------------

struct ResolvedHeightModel {
    int W = 0, H = 0;
    bool bessel = false;
    int nclusters = 0;
    std::vector<int> cluster_of;                 // site index x + W*y -> cluster or -1 (pinned)
    std::vector<std::vector<std::pair<int, double>>> cadj; // per cluster: (other cluster or -1, J)
    int origin_cluster = -1;
    int origin_site = 0;
    bool uniform_gaussian = false; // every interaction gaussian with one coupling
    double uniform_J = 0.0;

    explicit ResolvedHeightModel(const GridHeightSpec &spec) {
        W = spec.W;
        H = spec.H;
        bessel = spec.bessel;
        origin_site = spec.ox + W * spec.oy;
        int n = W * H;
        UnionFind uf(n + 1); // extra node = frozen exterior
        int frozen = n;
        auto sid = [&](int x, int y) { return x + W * y; };
        for (int y = 0; y < H; ++y)
            for (int x = 0; x <= W; ++x) {
                double J = spec.jh(x, y);
                if (J != 0.0) continue;
                int a = x == 0 ? frozen : sid(x - 1, y);
                int b = x == W ? frozen : sid(x, y);
                uf.merge(a, b);
            }
        for (int y = 0; y <= H; ++y)
            for (int x = 0; x < W; ++x) {
                double J = spec.jv(x, y);
                if (J != 0.0) continue;
                int a = y == 0 ? frozen : sid(x, y - 1);
                int b = y == H ? frozen : sid(x, y);
                uf.merge(a, b);
            }
        cluster_of.assign(n, -1);
        std::vector<int> label(n + 1, -1);
        int froot = uf.find(frozen);
        for (int s = 0; s < n; ++s) {
            int r = uf.find(s);
            if (r == froot) continue;
            if (label[r] < 0) label[r] = nclusters++;
            cluster_of[s] = label[r];
        }
        cadj.resize(nclusters);
        auto add_edge = [&](int a, int b, double J) {
            if (J <= 0.0) return; // closed handled by merging; absent (<0) carries no force
            int ca = a < 0 ? -1 : cluster_of[a];
            int cb = b < 0 ? -1 : cluster_of[b];
            if (ca == cb) return;
            if (ca >= 0) cadj[ca].push_back({cb, J});
            if (cb >= 0) cadj[cb].push_back({ca, J});
        };
        for (int y = 0; y < H; ++y)
            for (int x = 0; x <= W; ++x) {
                double J = spec.jh(x, y);
                if (J < 0.0) continue;
                add_edge(x == 0 ? -1 : sid(x - 1, y), x == W ? -1 : sid(x, y), J);
            }
        for (int y = 0; y <= H; ++y)
            for (int x = 0; x < W; ++x) {
                double J = spec.jv(x, y);
                if (J < 0.0) continue;
                add_edge(y == 0 ? -1 : sid(x, y - 1), y == H ? -1 : sid(x, y), J);
            }
        origin_cluster = cluster_of[origin_site];
        uniform_gaussian = !bessel;
        for (auto &lst : cadj)
            for (auto &[other, J] : lst) {
                if (uniform_J == 0.0) uniform_J = J;
                if (J != uniform_J) uniform_gaussian = false;
            }
        if (uniform_J == 0.0) uniform_gaussian = false;
    }
};

namespace detail {

// With one gaussian coupling J on every interaction, the heat-bath
// conditional of a cluster of degree d is the discretized gaussian
//   w(v) ~ exp(-d (v - mu)^2 / (2 J)),  mu = (sum of neighbour heights)/d,
// whose shape depends only on (d, sum mod d).  Tables of cumulative weights
// per residue make a cluster update a few lookups.
struct GaussianHeatBathTables {
    double J = 1.0;
    // per degree: window half-width and, per residue, cumulative weights
    std::map<int, std::pair<int, std::vector<std::vector<double>>>> cache;

    const std::pair<int, std::vector<std::vector<double>>> &get(int deg) {
        auto it = cache.find(deg);
        if (it != cache.end()) return it->second;
        double sigma = std::sqrt(J / deg);
        int W = static_cast<int>(std::ceil(6.0 * sigma + 2.0));
        std::vector<std::vector<double>> tables(deg);
        for (int r = 0; r < deg; ++r) {
            double frac = static_cast<double>(r) / deg;
            std::vector<double> cum(2 * W + 2, 0.0);
            for (int k = -W; k <= W; ++k) {
                double d = k - frac;
                cum[k + W + 1] = cum[k + W] + std::exp(-0.5 * deg * d * d / J);
            }
            tables[r] = std::move(cum);
        }
        it = cache.insert({deg, {W, std::move(tables)}}).first;
        return it->second;
    }

    long sample(long hsum, int deg, double u) {
        const auto &[W, tables] = get(deg);
        long q = hsum >= 0 ? hsum / deg : -((-hsum + deg - 1) / deg); // floor division
        int r = static_cast<int>(hsum - q * deg);
        const auto &cum = tables[r];
        double target = u * cum.back();
        int lo = 0, hi = 2 * W + 1;
        while (lo + 1 < hi) {
            int mid = (lo + hi) / 2;
            (cum[mid] <= target ? lo : hi) = mid;
        }
        return q + (lo - W);
    }
};

template <class Rng>
inline void heat_bath_step(const ResolvedHeightModel &model, GaussianHeatBathTables &tables,
                           std::vector<long> &h, int c, Rng &rng) {
    const auto &adj = model.cadj[c];
    if (adj.empty()) return; // free cluster: no conditional force
    if (model.uniform_gaussian) {
        long hsum = 0;
        for (auto &[other, J] : adj) hsum += other < 0 ? 0 : h[other];
        h[c] = tables.sample(hsum, static_cast<int>(adj.size()), rng.uniform());
        return;
    }
    double prec = 0.0, wm = 0.0;
    for (auto &[other, J] : adj) {
        long ho = other < 0 ? 0 : h[other];
        prec += 1.0 / J;
        wm += ho / J;
    }
    double mu = wm / prec;
    double sigma = std::sqrt(1.0 / prec);
    long lo = static_cast<long>(std::floor(mu - 6.0 * sigma - 2.0));
    long hi = static_cast<long>(std::ceil(mu + 6.0 * sigma + 2.0));
    static thread_local std::vector<double> weights;
    weights.assign(static_cast<size_t>(hi - lo + 1), 0.0);
    double wmax = 0.0;
    for (long v = lo; v <= hi; ++v) {
        double lw = 0.0;
        for (auto &[other, J] : adj) {
            long ho = other < 0 ? 0 : h[other];
            long d = std::labs(v - ho);
            lw += model.bessel ? std::log(bessel_i_scaled(static_cast<int>(d), J))
                               : -0.5 * static_cast<double>(d) * d / J;
        }
        weights[v - lo] = lw;
        wmax = v == lo ? lw : std::max(wmax, lw);
    }
    double tot = 0.0;
    for (auto &w : weights) {
        w = std::exp(w - wmax);
        tot += w;
    }
    double u = rng.uniform() * tot;
    long pick = hi;
    double acc = 0.0;
    for (long v = lo; v <= hi; ++v) {
        acc += weights[v - lo];
        if (u <= acc) {
            pick = v;
            break;
        }
    }
    h[c] = pick;
}

} // namespace detail

inline Estimate run_height_chain(const GridHeightSpec &spec, const ChainConfig &cfg) {
    cfg.validate();
    ResolvedHeightModel model(spec);
    if (model.origin_cluster < 0) { // origin pinned to the boundary: variance is exactly 0
        Estimate e;
        e.replicas = cfg.replicas;
        return e;
    }
    std::vector<detail::SeriesStats> reps(cfg.replicas);
    parallel_for(cfg.replicas, [&](int rep) {
        std::vector<long> h(model.nclusters, 0);
        std::vector<double> series;
        detail::GaussianHeatBathTables tables;
        tables.J = model.uniform_J;
        for (long long sweep = 0; sweep < cfg.sweeps; ++sweep) {
            for (int c = 0; c < model.nclusters; ++c) {
                RngStream rng(cfg.seed, 0x6e19ull + rep, static_cast<uint64_t>(sweep),
                              static_cast<uint64_t>(c));
                detail::heat_bath_step(model, tables, h, c, rng);
            }
            if (sweep >= cfg.burnin && (sweep - cfg.burnin) % cfg.thin == 0) {
                double v = static_cast<double>(h[model.origin_cluster]);
                series.push_back(v * v);
            }
        }
        reps[rep] = detail::batch_stats(series);
    });
    Estimate e = detail::combine_replicas(reps);
    return e;
}

// single-replica sweep drivers exposing the raw state (stationarity tests)
template <class Visitor>
inline void run_angle_sweeps(const GibbsSpec &spec, const ChainConfig &cfg, Visitor visit) {
    ResolvedAngleModel model(spec);
    std::vector<double> theta(model.nv, 0.0);
    for (long long sweep = 0; sweep < cfg.sweeps; ++sweep) {
        for (int site = 0; site < model.nv; ++site) {
            RngStream rng(cfg.seed, 0xa1c4ull, static_cast<uint64_t>(sweep),
                          static_cast<uint64_t>(site));
            double cur = theta[site];
            double prop = cur + cfg.proposal * rng.normal();
            prop = prop - two_pi * std::floor(prop / two_pi);
            double dlw =
                model.log_weight_at(site, prop, theta) - model.log_weight_at(site, cur, theta);
            if (dlw >= 0.0 || std::log(rng.uniform() + 1e-300) < dlw) theta[site] = prop;
        }
        if (sweep >= cfg.burnin && (sweep - cfg.burnin) % cfg.thin == 0) visit(theta);
    }
}

template <class Visitor>
inline void run_height_sweeps(const GridHeightSpec &spec, const ChainConfig &cfg, Visitor visit) {
    ResolvedHeightModel model(spec);
    std::vector<long> h(model.nclusters, 0);
    detail::GaussianHeatBathTables tables;
    tables.J = model.uniform_J;
    for (long long sweep = 0; sweep < cfg.sweeps; ++sweep) {
        for (int c = 0; c < model.nclusters; ++c) {
            RngStream rng(cfg.seed, 0x6e19ull, static_cast<uint64_t>(sweep),
                          static_cast<uint64_t>(c));
            detail::heat_bath_step(model, tables, h, c, rng);
        }
        if (sweep >= cfg.burnin && (sweep - cfg.burnin) % cfg.thin == 0)
            visit(h, model.cluster_of);
    }
}

// ---------------------------------------------------------------------------
// Small statistics helpers (chi-squared survival function via the
// regularized incomplete gamma)
// ---------------------------------------------------------------------------

namespace detail {

inline double gamma_p(double a, double x) { // regularized lower incomplete gamma
    if (x <= 0.0) return 0.0;
    if (x < a + 1.0) {
        double term = 1.0 / a, sum = term;
        for (int n = 1; n < 800; ++n) {
            term *= x / (a + n);
            sum += term;
            if (term < sum * 1e-16) break;
        }
        return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    // continued fraction for Q
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, f = d;
    for (int i = 1; i < 800; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::fabs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        double delta = d * c;
        f *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    double q = std::exp(-x + a * std::log(x) - std::lgamma(a)) * f;
    return 1.0 - q;
}

} // namespace detail

// p-value of a chi-squared statistic with df degrees of freedom
inline double chi2_pvalue(double stat, double df) {
    return 1.0 - detail::gamma_p(0.5 * df, 0.5 * stat);
}

// ---------------------------------------------------------------------------
// Disorder averages (two error levels) and the variance-vs-L scan
// ---------------------------------------------------------------------------

inline Estimate combine_disorder(const std::vector<Estimate> &per_sample) {
    Estimate e;
    if (per_sample.empty()) return e;
    int n = static_cast<int>(per_sample.size());
    double m = 0.0;
    for (const auto &s : per_sample) m += s.mean;
    m /= n;
    double between = 0.0, within = 0.0;
    for (const auto &s : per_sample) {
        between += (s.mean - m) * (s.mean - m);
        within += s.se * s.se;
    }
    between /= std::max(n - 1, 1);
    within /= n;
    e.mean = m;
    e.se = std::sqrt(between / n + within / n);
    e.neff = per_sample[0].neff * n;
    e.replicas = per_sample[0].replicas;
    e.dsamples = n;
    return e;
}

// grid with i.i.d. edge dilution: open edges carry J = beta, closed edges pin
inline GridHeightSpec diluted_grid(int W, int H, double beta, bool bessel, double p,
                                   uint64_t seed) {
    GridHeightSpec spec(W, H, beta, bessel);
    if (p >= 1.0) return spec;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x <= W; ++x) {
            RngStream s(seed, 0x17aaull, static_cast<uint64_t>(x), static_cast<uint64_t>(y));
            if (s.uniform() >= p) spec.jh(x, y) = 0.0;
        }
    for (int y = 0; y <= H; ++y)
        for (int x = 0; x < W; ++x) {
            RngStream s(seed, 0x17bbull, static_cast<uint64_t>(x), static_cast<uint64_t>(y));
            if (s.uniform() >= p) spec.jv(x, y) = 0.0;
        }
    return spec;
}

inline Estimate disorder_average_height(int L, double beta, bool bessel, double p, int samples,
                                        const ChainConfig &cfg) {
    std::vector<Estimate> per(samples);
    for (int s = 0; s < samples; ++s) {
        ChainConfig c = cfg;
        c.seed = RngStream::mix(cfg.seed ^ (0x9177ull + s));
        GridHeightSpec spec = diluted_grid(2 * L + 1, 2 * L + 1, beta, bessel, p, c.seed);
        per[s] = run_height_chain(spec, c);
    }
    if (p >= 1.0) return combine_disorder({per[0]});
    return combine_disorder(per);
}

struct ScanRow {
    std::string model;
    double beta = 0.0, p = 1.0;
    int L = 0;
    Estimate est;
};

struct SlopeFit {
    double slope = 0.0, se = 0.0, t = 0.0, intercept = 0.0;
};

// weighted least squares of y against x
inline SlopeFit fit_slope(const std::vector<double> &x, const std::vector<double> &y,
                          const std::vector<double> &se) {
    SlopeFit f;
    double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        double w = 1.0 / std::max(se[i] * se[i], 1e-300);
        sw += w;
        sx += w * x[i];
        sy += w * y[i];
        sxx += w * x[i] * x[i];
        sxy += w * x[i] * y[i];
    }
    double det = sw * sxx - sx * sx;
    f.slope = (sw * sxy - sx * sy) / det;
    f.intercept = (sxx * sy - sx * sxy) / det;
    f.se = std::sqrt(sw / det);
    f.t = f.slope / f.se;
    return f;
}

inline std::vector<ScanRow> variance_scan(const std::string &model, std::vector<double> betas,
                                          std::vector<double> ps, std::vector<int> Ls,
                                          int dsamples, const ChainConfig &cfg) {
    if (betas.empty() || ps.empty() || Ls.empty())
        throw std::invalid_argument("variance_scan: empty grid");
    bool bessel = model == "zxy";
    std::vector<ScanRow> rows;
    for (double beta : betas)
        for (double p : ps)
            for (int L : Ls) {
                ScanRow r;
                r.model = model;
                r.beta = beta;
                r.p = p;
                r.L = L;
                ChainConfig c = cfg;
                c.seed = RngStream::mix(cfg.seed ^ RngStream::mix(static_cast<uint64_t>(L) ^
                                                                  static_cast<uint64_t>(beta * 977) ^
                                                                  static_cast<uint64_t>(p * 3571)));
                r.est = disorder_average_height(L, beta, bessel, p, p >= 1.0 ? 1 : dsamples, c);
                rows.push_back(r);
            }
    return rows;
}

} // namespace quenchlab
