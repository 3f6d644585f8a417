#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "quenchlab/graph.hpp"
#include "quenchlab/percolation.hpp"
#include "quenchlab/potentials.hpp"
#include "quenchlab/transfer.hpp"

namespace quenchlab {

// ---------------------------------------------------------------------------
// Gibbs specifications
// ---------------------------------------------------------------------------

enum class ModelFamily : uint8_t { Angle, Height };

// How a site configuration r enters the couplings:
//   SiteProduct          J_e -> r_u r_v J_e
//   MultigraphEndpoints  on n parallel edges, copy 1 -> r_u J, copy n -> r_v J,
//                        middle copies untouched (n = 1 falls back to r_u r_v J)
//   EdgeFactor           J_e -> omega_e J_e
enum class DisorderRule : uint8_t { None, SiteProduct, MultigraphEndpoints, EdgeFactor };

struct GibbsSpec {
    LatticeGraph graph;
    ModelFamily family = ModelFamily::Angle;
    std::map<int, EdgePotential> slot_pot;
    EdgePotential default_pot = EdgePotential::free_edge();
    std::set<int> frozen;   // height models: vertices pinned to 0
    double lambda = 0.0;    // extra weight I_{phi}(lambda) on lambda_site (heights)
    int lambda_site = -1;   // defaults to the origin
    DisorderRule rule = DisorderRule::None;
    std::vector<uint8_t> site_r;
    std::vector<uint8_t> edge_w;
    int multi_n = 1;

    const EdgePotential &slot_potential(int slot) const {
        auto it = slot_pot.find(slot);
        return it == slot_pot.end() ? default_pot : it->second;
    }

    double site_bit(int v) const {
        if (v < 0 || v >= static_cast<int>(site_r.size())) return 1.0;
        return site_r[v] ? 1.0 : 0.0;
    }

    EdgePotential effective_potential(const Edge &e) const {
        EdgePotential pot = slot_potential(e.slot);
        double f = 1.0;
        switch (rule) {
        case DisorderRule::None:
            break;
        case DisorderRule::SiteProduct:
            f = site_bit(e.u) * site_bit(e.v);
            break;
        case DisorderRule::MultigraphEndpoints: {
            int lo = std::min(e.u, e.v), hi = std::max(e.u, e.v);
            bool lattice_pair = graph.vertices[lo].role == VertexRole::Lattice &&
                                graph.vertices[hi].role == VertexRole::Lattice;
            if (!lattice_pair) break;
            if (multi_n <= 1) {
                f = site_bit(lo) * site_bit(hi);
            } else if (e.k == 1) {
                f = site_bit(lo);
            } else if (e.k == multi_n) {
                f = site_bit(hi);
            }
            break;
        }
        case DisorderRule::EdgeFactor:
            if (e.id < static_cast<int>(edge_w.size()) && !edge_w[e.id]) f = 0.0;
            break;
        }
        if (f != 1.0 && pot.kind != EdgePotential::Kind::Frozen &&
            pot.kind != EdgePotential::Kind::Free)
            pot.beta *= f;
        return pot;
    }

    // sites carrying disorder bits: lattice-role vertices that are not frozen
    std::vector<int> disorder_sites() const {
        std::vector<int> s;
        for (const auto &v : graph.vertices)
            if (v.role == VertexRole::Lattice && !frozen.count(v.id)) s.push_back(v.id);
        return s;
    }

    void set_disorder_mask(const std::vector<int> &sites, uint32_t mask) {
        site_r.assign(graph.vertex_count(), 1);
        for (size_t i = 0; i < sites.size(); ++i)
            site_r[sites[i]] = (mask >> i) & 1u ? 1 : 0;
    }
};

struct ExactResult {
    double value = 0.0;      // the requested quantity
    double log_z = 0.0;      // log partition function of the full spec
    double err_bound = 0.0;  // truncation certificate (box-doubling residual + tail)
    int K = 0;               // flow truncation (angle engines)
    int M = 0;               // height truncation
    long long work = 0;      // leaf visits
    bool failed_tolerance = false;
    bool pinned = false;     // height target sat in a pinned cluster
};

struct TwoPoint {
    int a = 0, b = 0;
    int m = 1;
};

struct ExactOptions {
    double tol = 1e-13;
    int max_shell = 64;
    long long max_work = 6000000000ll;
};

namespace detail {

inline bool angle_decoupled(const EdgePotential &p) {
    if (p.kind == EdgePotential::Kind::Free) return true;
    if (p.kind == EdgePotential::Kind::Frozen) return false;
    return p.beta == 0.0;
}

struct CoeffTable {
    EdgePotential pot;
    double c0 = 1.0;
    std::vector<double> c; // c(k)/c(0) for k = 0..K

    void ensure(int K) {
        if (static_cast<int>(c.size()) > K) return;
        if (c.empty()) {
            c0 = pot.coeff(0);
            if (c0 <= 0.0) throw std::logic_error("coefficient c(0) must be positive");
            c.push_back(1.0);
        }
        for (int k = static_cast<int>(c.size()); k <= K; ++k) c.push_back(pot.coeff(k) / c0);
    }
    double at(int k) const {
        k = std::abs(k);
        return k < static_cast<int>(c.size()) ? c[k] : 0.0;
    }
};

// Divergence-free-flow sum on one connected component.
//
//   Z~ = sum over integer flows in the cycle lattice of prod_e c~_e(k_e)
//   N~ = same with the base flow added (unit sources for the observable)
//
// Enumeration runs over fundamental-cycle coefficients in growing boxes
// [-S, S]^C until both sums are stable to `tol`; the residual of the last
// doubling is the truncation certificate.
struct FlowComponent {
    int nv = 0;
    std::vector<std::array<int, 2>> ends; // canonical orientation u -> v
    std::vector<CoeffTable> tab;
    std::vector<std::vector<std::pair<int, int>>> cycles; // (edge, sign)
    std::vector<int> base;

    double zsum = 0.0, nsum = 0.0;
    double rel_resid = 0.0;
    long long work = 0;
    int final_shell = 0;

    void build_cycles() {
        int ne = static_cast<int>(ends.size());
        std::vector<std::vector<std::pair<int, int>>> inc(nv); // (edge, other)
        for (int e = 0; e < ne; ++e) {
            inc[ends[e][0]].push_back({e, ends[e][1]});
            inc[ends[e][1]].push_back({e, ends[e][0]});
        }
        std::vector<int> parent_edge(nv, -1), parent(nv, -1), order;
        std::vector<char> seen(nv, 0);
        std::deque<int> queue{0};
        seen[0] = 1;
        while (!queue.empty()) {
            int x = queue.front();
            queue.pop_front();
            order.push_back(x);
            for (auto &[e, y] : inc[x])
                if (!seen[y]) {
                    seen[y] = 1;
                    parent[y] = x;
                    parent_edge[y] = e;
                    queue.push_back(y);
                }
        }
        std::vector<char> in_tree(ne, 0);
        for (int v = 0; v < nv; ++v)
            if (parent_edge[v] >= 0) in_tree[parent_edge[v]] = 1;
        // path from x to root as (edge, sign toward root)
        auto path_to_root = [&](int x) {
            std::vector<std::pair<int, int>> p;
            while (parent[x] >= 0) {
                int e = parent_edge[x];
                int sign = ends[e][0] == x ? +1 : -1; // oriented x -> parent
                p.push_back({e, sign});
                x = parent[x];
            }
            return p;
        };
        auto chain = [&](int from, int to) {
            // signed edges carrying one unit of flow from `from` to `to`
            auto pa = path_to_root(from), pb = path_to_root(to);
            std::map<int, int> flow;
            for (auto &[e, s] : pa) flow[e] += s;
            for (auto &[e, s] : pb) flow[e] -= s;
            std::vector<std::pair<int, int>> out;
            for (auto &[e, s] : flow)
                if (s != 0) out.push_back({e, s});
            return out;
        };
        for (int e = 0; e < ne; ++e) {
            if (in_tree[e]) continue;
            auto cyc = chain(ends[e][1], ends[e][0]); // tree part closes u -> v
            cyc.push_back({e, +1});
            cycles.push_back(std::move(cyc));
        }
        (void)order;
    }

    void set_base_path(int a, int b, int m) {
        // m units of flow from a to b along any route: reuse chain through root
        int ne = static_cast<int>(ends.size());
        base.assign(ne, 0);
        if (a == b || m == 0) return;
        // recompute a tree walk (cheap, graphs are tiny)
        std::vector<std::vector<std::pair<int, int>>> inc(nv);
        for (int e = 0; e < ne; ++e) {
            inc[ends[e][0]].push_back({e, ends[e][1]});
            inc[ends[e][1]].push_back({e, ends[e][0]});
        }
        std::vector<int> pe(nv, -1), pv(nv, -1);
        std::vector<char> seen(nv, 0);
        std::deque<int> queue{a};
        seen[a] = 1;
        while (!queue.empty()) {
            int x = queue.front();
            queue.pop_front();
            for (auto &[e, y] : inc[x])
                if (!seen[y]) {
                    seen[y] = 1;
                    pv[y] = x;
                    pe[y] = e;
                    queue.push_back(y);
                }
        }
        if (!seen[b]) throw std::logic_error("set_base_path: disconnected component");
        int x = b;
        while (x != a) {
            int e = pe[x];
            // flow a -> b: edge oriented (pv[x] -> x) carries +m in canonical
            // direction when ends[e][0] == pv[x]
            base[e] += ends[e][0] == pv[x] ? m : -m;
            x = pv[x];
        }
    }

    // one full box [-S,S]^C; returns (zbox, nbox)
    std::pair<double, double> run_box(int S, long long max_work) {
        int ne = static_cast<int>(ends.size());
        // table depth needed: every edge can accumulate S per cycle using it
        std::vector<int> uses(ne, 0);
        for (auto &cyc : cycles)
            for (auto &[e, s] : cyc) uses[e] += std::abs(s);
        for (int e = 0; e < ne; ++e) tab[e].ensure(uses[e] * S + std::abs(base[e]) + 2);

        std::vector<int> flow(ne, 0);
        double z = 0.0, n = 0.0;
        // depth-first over cycles
        std::function<void(int, double, double)> rec = [&](int depth, double pz, double pn) {
            if (work > max_work) throw std::runtime_error("flow enumeration budget exceeded");
            if (depth == static_cast<int>(cycles.size())) {
                ++work;
                z += pz;
                n += pn;
                return;
            }
            const auto &cyc = cycles[depth];
            auto apply = [&](int mval, double &qz, double &qn) {
                qz = pz;
                qn = pn;
                for (auto &[e, s] : cyc) {
                    int k0 = flow[e], k1 = flow[e] + s * mval;
                    double d0z = tab[e].at(k0), d1z = tab[e].at(k1);
                    double d0n = tab[e].at(k0 + base[e]), d1n = tab[e].at(k1 + base[e]);
                    qz = d0z > 0.0 ? qz / d0z * d1z : 0.0;
                    qn = d0n > 0.0 ? qn / d0n * d1n : 0.0;
                }
            };
            auto descend = [&](int mval, double qz, double qn) {
                for (auto &[e, s] : cyc) flow[e] += s * mval;
                rec(depth + 1, qz, qn);
                for (auto &[e, s] : cyc) flow[e] -= s * mval;
            };
            // m = 0
            rec(depth + 1, pz, pn);
            double peak = std::max(std::fabs(pz), std::fabs(pn));
            double prev_pos = peak, prev_neg = peak;
            bool live_pos = true, live_neg = true;
            for (int t = 1; t <= S && (live_pos || live_neg); ++t) {
                if (live_pos) {
                    double qz, qn;
                    apply(t, qz, qn);
                    double mag = std::max(std::fabs(qz), std::fabs(qn));
                    if (mag > 0.0) descend(t, qz, qn);
                    if (mag < 1e-17 * peak && mag <= prev_pos) live_pos = false;
                    prev_pos = mag;
                    peak = std::max(peak, mag);
                }
                if (live_neg) {
                    double qz, qn;
                    apply(-t, qz, qn);
                    double mag = std::max(std::fabs(qz), std::fabs(qn));
                    if (mag > 0.0) descend(-t, qz, qn);
                    if (mag < 1e-17 * peak && mag <= prev_neg) live_neg = false;
                    prev_neg = mag;
                    peak = std::max(peak, mag);
                }
            }
        };
        double pz0 = 1.0, pn0 = 1.0;
        for (int e = 0; e < ne; ++e) pn0 *= tab[e].at(base[e]);
        rec(0, pz0, pn0);
        return {z, n};
    }

    void run(const ExactOptions &opt) {
        if (cycles.empty()) {
            auto [z, n] = run_box(0, opt.max_work);
            zsum = z;
            nsum = n;
            rel_resid = 0.0;
            final_shell = 0;
            return;
        }
        double pz = 0.0, pn = 0.0;
        for (int S = 2; S <= opt.max_shell; S += 2) {
            auto [z, n] = run_box(S, opt.max_work);
            final_shell = S;
            if (S > 2) {
                double dz = std::fabs(z - pz), dn = std::fabs(n - pn);
                zsum = z;
                nsum = n;
                if (dz <= opt.tol * std::fabs(z) && dn <= opt.tol * (std::fabs(n) + opt.tol)) {
                    rel_resid = (dz + dn) / std::max(std::fabs(z), 1e-300);
                    return;
                }
            }
            pz = z;
            pn = n;
        }
        zsum = pz;
        nsum = pn;
        rel_resid = 1.0; // did not converge inside the shell budget
    }
};

struct AngleProblem {
    int nv_quotient = 0;
    int total_vertices = 0;
    double log_const = 0.0; // sum of log c0 over all edges
    std::vector<std::array<int, 2>> ends;
    std::vector<EdgePotential> pots;
    std::vector<int> vmap; // original vertex -> quotient id (contracted frozen edges)
};

inline AngleProblem build_angle_problem(const GibbsSpec &spec) {
    if (spec.family != ModelFamily::Angle)
        throw std::invalid_argument("angle engine invoked on a height spec");
    const auto &g = spec.graph;
    AngleProblem prob;
    prob.total_vertices = g.vertex_count();
    UnionFind uf(g.vertex_count());
    std::vector<std::pair<const Edge *, EdgePotential>> kept;
    for (const auto &e : g.edges) {
        EdgePotential pot = spec.effective_potential(e);
        if (pot.pins_angle()) {
            uf.merge(e.u, e.v);
            continue;
        }
        if (angle_decoupled(pot)) continue; // weight 1, coefficient delta_{k0}
        kept.push_back({&e, pot});
    }
    prob.vmap.assign(g.vertex_count(), -1);
    int next = 0;
    for (int v = 0; v < g.vertex_count(); ++v) {
        int root = uf.find(v);
        if (prob.vmap[root] < 0) prob.vmap[root] = next++;
        prob.vmap[v] = prob.vmap[root];
    }
    prob.nv_quotient = next;
    for (auto &[e, pot] : kept) {
        int u = prob.vmap[e->u], v = prob.vmap[e->v];
        if (u == v) continue; // frozen self-loop after contraction: constant weight
        prob.ends.push_back({u, v});
        prob.log_const += std::log(pot.coeff(0));
        prob.pots.push_back(pot);
    }
    return prob;
}

} // namespace detail

// Exact angle-model expectation <cos m(theta_a - theta_b)> together with the
// log partition function, by the divergence-free-flow expansion.
inline ExactResult exact_angle(const GibbsSpec &spec, TwoPoint obs, ExactOptions opt = {}) {
    auto prob = detail::build_angle_problem(spec);
    int a = prob.vmap[obs.a], b = prob.vmap[obs.b];

    // split into connected components
    UnionFind comp(prob.nv_quotient);
    for (auto &e : prob.ends) comp.merge(e[0], e[1]);

    ExactResult res;
    res.log_z = prob.total_vertices * std::log(two_pi) + prob.log_const;
    res.value = (a == b) ? 1.0 : 0.0;

    std::map<int, detail::FlowComponent> comps;
    std::map<int, std::map<int, int>> vlocal;
    for (int e = 0; e < static_cast<int>(prob.ends.size()); ++e) {
        int root = comp.find(prob.ends[e][0]);
        auto &fc = comps[root];
        auto &lm = vlocal[root];
        for (int side = 0; side < 2; ++side) {
            int v = prob.ends[e][side];
            if (!lm.count(v)) {
                lm[v] = fc.nv++;
            }
        }
        fc.ends.push_back({lm[prob.ends[e][0]], lm[prob.ends[e][1]]});
        detail::CoeffTable t;
        t.pot = prob.pots[e];
        fc.tab.push_back(std::move(t));
    }

    // a, b correlated only when joined through kept edges (isolated quotient
    // vertices carry independent uniform angles)
    bool same_component = false;
    if (a != b) {
        int ra = comp.find(a), rb = comp.find(b);
        same_component = ra == rb && vlocal.count(ra) && vlocal[ra].count(a) && vlocal[ra].count(b);
    }

    for (auto &[root, fc] : comps) {
        fc.build_cycles();
        bool carries_obs = a != b && same_component && comp.find(a) == root;
        if (carries_obs) fc.set_base_path(vlocal[root][a], vlocal[root][b], obs.m);
        else fc.base.assign(fc.ends.size(), 0);
        fc.run(opt);
        if (fc.zsum <= 0.0) throw std::runtime_error("exact_angle: vanishing partition sum");
        res.log_z += std::log(fc.zsum);
        res.work += fc.work;
        res.K = std::max(res.K, fc.final_shell);
        res.err_bound += 4.0 * fc.rel_resid;
        if (fc.rel_resid >= 1.0) res.failed_tolerance = true;
        if (carries_obs) res.value = fc.nsum / fc.zsum;
    }
    if (a != b && !same_component) res.value = 0.0;
    res.err_bound += 1e-14;
    return res;
}

// Independent cross-check: gauge-fixed tensor quadrature over |V|-1 angles
// (composite trapezoid, spectrally accurate for these periodic integrands).
inline ExactResult exact_angle_quadrature(const GibbsSpec &spec, TwoPoint obs, int max_dim = 4) {
    auto prob = detail::build_angle_problem(spec);
    int dims = prob.nv_quotient - 1;
    if (dims > max_dim) throw std::runtime_error("exact_angle_quadrature: too many free angles");
    int a = prob.vmap[obs.a], b = prob.vmap[obs.b];
    // gauge: vertex `a` fixed to angle 0; relabel so a = vertex 0
    auto relabel = [&](int v) { return v == a ? 0 : (v < a ? v + 1 : v); };

    ExactResult res;
    double prev = 0.0;
    int nmax = dims <= 2 ? 512 : (dims == 3 ? 128 : 64);
    for (int N = 16; N <= nmax; N *= 2) {
        std::vector<std::vector<double>> wtab(prob.ends.size(), std::vector<double>(N));
        for (size_t e = 0; e < prob.ends.size(); ++e)
            for (int t = 0; t < N; ++t)
                wtab[e][t] = prob.pots[e].angle_weight(two_pi * t / N);
        std::vector<double> ctab(N);
        for (int t = 0; t < N; ++t) ctab[t] = std::cos(obs.m * two_pi * t / N);

        std::vector<int> idx(dims, 0);
        double z = 0.0, num = 0.0;
        while (true) {
            double w = 1.0;
            for (size_t e = 0; e < prob.ends.size(); ++e) {
                int u = relabel(prob.ends[e][0]), v = relabel(prob.ends[e][1]);
                int tu = u == 0 ? 0 : idx[u - 1];
                int tv = v == 0 ? 0 : idx[v - 1];
                w *= wtab[e][((tu - tv) % N + N) % N];
            }
            z += w;
            int rb = relabel(b);
            int tb = (a == b) ? 0 : (rb == 0 ? 0 : idx[rb - 1]);
            num += w * ctab[((0 - tb) % N + N) % N];
            int d = 0;
            while (d < dims && ++idx[d] == N) idx[d++] = 0;
            if (d == dims) break;
            res.work++;
        }
        double val = a == b ? 1.0 : num / z;
        res.value = val;
        res.log_z = prob.total_vertices * std::log(two_pi) +
                    std::log(z) - dims * std::log(static_cast<double>(N));
        res.K = N;
        if (N > 16 && std::fabs(val - prev) < 1e-10 * (1.0 + std::fabs(val))) {
            res.err_bound = std::fabs(val - prev) + 1e-14;
            return res;
        }
        prev = val;
    }
    res.err_bound = 1e-9;
    return res;
}

// ---------------------------------------------------------------------------
// Exact height sums.  Pinned increments (closed edges, zero conductances) are
// contracted through union-find; the remaining clusters are enumerated over
// growing boxes |phi|_inf <= M with the doubling residual as certificate.
// ---------------------------------------------------------------------------

inline ExactResult exact_height(const GibbsSpec &spec, int target_site, ExactOptions opt = {}) {
    if (spec.family != ModelFamily::Height)
        throw std::invalid_argument("height engine invoked on an angle spec");
    const auto &g = spec.graph;
    if (g.has_ghost())
        throw std::invalid_argument("height specs carry the lambda weight directly, not a ghost vertex");

    UnionFind uf(g.vertex_count());
    std::vector<std::pair<const Edge *, EdgePotential>> kept;
    for (const auto &e : g.edges) {
        EdgePotential pot = spec.effective_potential(e);
        if (pot.pins_height()) {
            uf.merge(e.u, e.v);
            continue;
        }
        if (pot.kind == EdgePotential::Kind::Free) continue;
        kept.push_back({&e, pot});
    }
    // frozen vertices all belong to one pinned super-cluster
    int frozen_rep = -1;
    for (int v : spec.frozen) {
        if (frozen_rep < 0) frozen_rep = v;
        uf.merge(frozen_rep, v);
    }

    std::vector<int> cluster(g.vertex_count(), -1);
    int nfree = 0;
    int pinned_root = frozen_rep >= 0 ? uf.find(frozen_rep) : -1;
    for (int v = 0; v < g.vertex_count(); ++v) {
        int root = uf.find(v);
        if (cluster[root] == -1) cluster[root] = root == pinned_root ? -2 : nfree++;
        cluster[v] = cluster[root];
    }
    if (frozen_rep < 0 && spec.lambda <= 0.0)
        throw std::invalid_argument("height spec needs a frozen set or a lambda weight to pin the heights");

    ExactResult res;
    struct CEdge {
        int cu, cv; // -1 for pinned
        std::vector<double> fac; // normalized factor table, index |d|
        double f0;
    };
    std::vector<CEdge> cedges;
    double log_const = 0.0;
    int Mcap = opt.max_shell;
    for (auto &[e, pot] : kept) {
        int cu = cluster[e->u], cv = cluster[e->v];
        if (cu == cv) { // both ends in one cluster: zero increment, constant factor
            log_const += std::log(pot.height_factor(0));
            continue;
        }
        int a = cu == -2 ? -1 : cu, b = cv == -2 ? -1 : cv;
        CEdge ce;
        ce.cu = a;
        ce.cv = b;
        ce.f0 = pot.height_factor(0);
        if (ce.f0 <= 0.0) throw std::logic_error("height factor at 0 must be positive");
        ce.fac.resize(2 * Mcap + 2);
        for (int d = 0; d <= 2 * Mcap + 1; ++d) ce.fac[d] = pot.height_factor(d) / ce.f0;
        log_const += std::log(ce.f0);
        cedges.push_back(std::move(ce));
    }
    // lambda weight
    int lam_cluster = -1;
    std::vector<double> lam_fac;
    if (spec.lambda > 0.0) {
        int site = spec.lambda_site >= 0 ? spec.lambda_site : g.origin();
        if (site < 0) throw std::invalid_argument("lambda weight needs an origin");
        lam_cluster = cluster[site] == -2 ? -1 : cluster[site];
        double i0 = bessel_i(0, spec.lambda);
        lam_fac.resize(Mcap + 2);
        for (int d = 0; d <= Mcap + 1; ++d) lam_fac[d] = bessel_i(d, spec.lambda) / i0;
        log_const += std::log(i0);
    }

    int tgt = cluster[target_site] == -2 ? -1 : cluster[target_site];
    res.pinned = tgt < 0;

    if (nfree == 0) {
        res.value = 0.0;
        res.log_z = log_const;
        return res;
    }

    std::vector<int> phi(nfree, 0);
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    long long work = 0;
    auto weight_all = [&]() {
        double w = 1.0;
        for (auto &ce : cedges) {
            int du = ce.cu >= 0 ? phi[ce.cu] : 0;
            int dv = ce.cv >= 0 ? phi[ce.cv] : 0;
            w *= ce.fac[std::abs(du - dv)];
            if (w == 0.0) return 0.0;
        }
        if (lam_cluster >= 0) w *= lam_fac[std::abs(phi[lam_cluster])];
        return w;
    };

    double prev0 = -1.0, prev2 = -1.0;
    int final_M = 0;
    for (int M = 2;; M += 2) {
        if (M > Mcap) {
            res.failed_tolerance = true;
            break;
        }
        s0 = s1 = s2 = 0.0;
        std::vector<int> st(nfree, -M);
        while (true) {
            for (int i = 0; i < nfree; ++i) phi[i] = st[i];
            double w = weight_all();
            ++work;
            if (w != 0.0) {
                s0 += w;
                if (tgt >= 0) {
                    s1 += w * phi[tgt];
                    s2 += w * static_cast<double>(phi[tgt]) * phi[tgt];
                }
            }
            int d = 0;
            while (d < nfree && ++st[d] > M) st[d++] = -M;
            if (d == nfree) break;
            if (work > opt.max_work) throw std::runtime_error("height enumeration budget exceeded");
        }
        final_M = M;
        if (prev0 > 0.0) {
            double d0 = std::fabs(s0 - prev0) / s0;
            double d2 = std::fabs(s2 - prev2) / std::max(s2, 1e-300);
            if (d0 < opt.tol && (tgt < 0 || d2 < std::max(opt.tol, 1e-12))) {
                res.err_bound = 4.0 * (d0 + (tgt >= 0 ? d2 : 0.0)) + 1e-14;
                break;
            }
        }
        prev0 = s0;
        prev2 = s2;
    }
    res.M = final_M;
    res.work = work;
    res.log_z = log_const + std::log(s0);
    if (tgt >= 0) {
        double mean = s1 / s0;
        res.value = s2 / s0 - mean * mean;
    } else {
        res.value = 0.0;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Wells machinery: the disorder nu(r) ~ Z_r, its table, and the inequality
// checks against the clean system at reduced coupling.
// ---------------------------------------------------------------------------

struct MeasureTable {
    std::vector<int> sites;
    std::vector<double> prob;  // 2^s entries
    std::vector<double> log_z; // per configuration
    std::vector<double> obs;   // per configuration observable (optional)
};

inline MeasureTable wells_table(GibbsSpec spec, std::optional<TwoPoint> angle_obs,
                                std::optional<int> height_site, ExactOptions opt = {}) {
    MeasureTable t;
    t.sites = spec.disorder_sites();
    if (t.sites.size() > 20) throw std::invalid_argument("wells_table: too many disorder sites");
    size_t n = size_t{1} << t.sites.size();
    t.prob.resize(n);
    t.log_z.resize(n);
    t.obs.assign(n, 0.0);
    for (size_t mask = 0; mask < n; ++mask) {
        spec.set_disorder_mask(t.sites, static_cast<uint32_t>(mask));
        if (spec.family == ModelFamily::Angle) {
            auto r = exact_angle(spec, *angle_obs, opt);
            t.log_z[mask] = r.log_z;
            t.obs[mask] = r.value;
        } else {
            auto r = exact_height(spec, *height_site, opt);
            t.log_z[mask] = r.log_z;
            t.obs[mask] = r.value;
        }
    }
    double mx = t.log_z[0];
    for (double lz : t.log_z) mx = std::max(mx, lz);
    double tot = 0.0;
    for (size_t i = 0; i < n; ++i) {
        t.prob[i] = std::exp(t.log_z[i] - mx);
        tot += t.prob[i];
    }
    for (auto &p : t.prob) p /= tot;
    return t;
}

inline double expectation(const MeasureTable &t) {
    double s = 0.0;
    for (size_t i = 0; i < t.prob.size(); ++i) s += t.prob[i] * t.obs[i];
    return s;
}

struct WellsCheck {
    double lhs = 0.0;    // clean system at reduced coupling
    double rhs = 0.0;    // disorder average under the Wells measure
    double margin = 0.0; // rhs - lhs
    MeasureTable table;
};

// scale all potential couplings by `factor` (XY/Villain/Gaussian/Bessel/mixture)
inline GibbsSpec scaled_spec(GibbsSpec spec, double factor) {
    for (auto &[slot, pot] : spec.slot_pot)
        if (pot.kind != EdgePotential::Kind::Frozen && pot.kind != EdgePotential::Kind::Free)
            pot.beta *= factor;
    if (spec.default_pot.kind != EdgePotential::Kind::Frozen &&
        spec.default_pot.kind != EdgePotential::Kind::Free)
        spec.default_pot.beta *= factor;
    return spec;
}

inline WellsCheck wells_inequality_angle(const GibbsSpec &spec, TwoPoint obs, double reduction,
                                         ExactOptions opt = {}) {
    WellsCheck out;
    out.table = wells_table(spec, obs, std::nullopt, opt);
    out.rhs = expectation(out.table);
    GibbsSpec clean = scaled_spec(spec, reduction);
    clean.rule = DisorderRule::None;
    clean.site_r.clear();
    out.lhs = exact_angle(clean, obs, opt).value;
    out.margin = out.rhs - out.lhs;
    return out;
}

inline WellsCheck wells_inequality_height(const GibbsSpec &spec, int site,
                                          const GibbsSpec &reduced_clean, ExactOptions opt = {}) {
    WellsCheck out;
    out.table = wells_table(spec, std::nullopt, site, opt);
    out.rhs = expectation(out.table);
    out.lhs = exact_height(reduced_clean, site, opt).value;
    out.margin = out.rhs - out.lhs;
    return out;
}

// ---------------------------------------------------------------------------
// Small graph builders used across the lab
// ---------------------------------------------------------------------------

// nx x ny rectangle of vertices (x + nx * y), nearest-neighbour edges
inline LatticeGraph build_rect(int nx, int ny) {
    if (nx < 1 || ny < 1) throw std::invalid_argument("build_rect: empty");
    LatticeGraph g;
    g.dim = 2;
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
            Vertex v;
            v.id = x + nx * y;
            v.coord = {static_cast<double>(x), static_cast<double>(y)};
            if (x == 0 || y == 0 || x == nx - 1 || y == ny - 1) g.boundary.insert(v.id);
            g.vertices.push_back(v);
        }
    int eid = 0;
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
            if (x + 1 < nx) {
                Edge e;
                e.id = eid;
                e.u = x + nx * y;
                e.v = x + 1 + nx * y;
                e.k = 1;
                e.slot = eid;
                g.edges.push_back(e);
                ++eid;
            }
            if (y + 1 < ny) {
                Edge e;
                e.id = eid;
                e.u = x + nx * y;
                e.v = x + nx * (y + 1);
                e.k = 1;
                e.slot = eid;
                g.edges.push_back(e);
                ++eid;
            }
        }
    return g;
}

// explicit edge-list graph (tests and the monotonicity suite)
inline LatticeGraph build_from_edges(int nv, const std::vector<std::pair<int, int>> &edge_list) {
    LatticeGraph g;
    g.dim = 1;
    for (int v = 0; v < nv; ++v) {
        Vertex w;
        w.id = v;
        w.coord = {static_cast<double>(v)};
        g.vertices.push_back(w);
    }
    std::map<std::pair<int, int>, int> kcount;
    int eid = 0;
    for (auto [u, v] : edge_list) {
        Edge e;
        e.id = eid;
        e.u = std::min(u, v);
        e.v = std::max(u, v);
        e.k = ++kcount[{e.u, e.v}];
        e.slot = eid;
        g.edges.push_back(e);
        ++eid;
    }
    g.check_invariants();
    return g;
}

// height spec on a rectangle: interior sites free, ring frozen
inline GibbsSpec rect_height_spec(int free_w, int free_h, EdgePotential pot) {
    GibbsSpec s;
    s.graph = build_rect(free_w + 2, free_h + 2);
    s.family = ModelFamily::Height;
    s.default_pot = pot;
    for (int b : s.graph.boundary) s.frozen.insert(b);
    return s;
}

// ---------------------------------------------------------------------------
// Metric-graph limit: the n-fold subdivided chain at coupling n*beta against
// the single heat-kernel edge at beta.
// ---------------------------------------------------------------------------

struct MetricLimitRow {
    int n;
    double chain_value;
    double villain_value;
    double error;
};

// ---------------------------------------------------------------------------
// Monotone graph surgeries, each verified by the exact engines.  Returns the
// observable before and after the operation; the stated direction is that the
// operation never increases it (margin = before - after).
// ---------------------------------------------------------------------------

struct SurgeryReport {
    std::string kind;
    double before = 0.0, after = 0.0;
    double margin = 0.0; // before - after; nonnegative when the claim holds
};

inline SurgeryReport surgery_monotonicity_check(const std::string &kind, double J = 2.0,
                                                int k = 2) {
    SurgeryReport rep;
    rep.kind = kind;
    if (kind == "split-villain") {
        // one heat-kernel edge of coupling J against k parallel copies of J/k
        auto g1 = build_from_edges(2, {{0, 1}});
        GibbsSpec before;
        before.graph = g1;
        before.family = ModelFamily::Angle;
        before.default_pot = EdgePotential::villain(J);
        rep.before = exact_angle(before, {0, 1, 1}).value;
        std::vector<std::pair<int, int>> el(k, {0, 1});
        GibbsSpec after;
        after.graph = build_from_edges(2, el);
        after.family = ModelFamily::Angle;
        after.default_pot = EdgePotential::villain(J / k);
        rep.after = exact_angle(after, {0, 1, 1}).value;
    } else if (kind == "identify") {
        GibbsSpec base = rect_height_spec(2, 2, EdgePotential::gaussian_height(J));
        rep.before = exact_height(base, 5).value;
        GibbsSpec merged = base;
        merged.graph = identify_vertices(base.graph, 6, 9);
        merged.frozen.clear();
        for (int b : base.frozen) merged.frozen.insert(b > 9 ? b - 1 : b);
        rep.after = exact_height(merged, 5).value;
    } else if (kind == "add-vertices") {
        auto chain = build_from_edges(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
        GibbsSpec cspec;
        cspec.graph = chain;
        cspec.family = ModelFamily::Height;
        cspec.default_pot = EdgePotential::gaussian_height(J);
        cspec.frozen = {0, 4};
        rep.before = exact_height(cspec, 2).value;
        std::vector<std::pair<int, int>> el{{0, 1}, {2, 3}, {3, 4}};
        int prev = 1;
        for (int j = 0; j < k; ++j) {
            el.push_back({prev, 5 + j});
            prev = 5 + j;
        }
        el.push_back({prev, 2});
        GibbsSpec s2;
        s2.graph = build_from_edges(5 + k, el);
        s2.family = ModelFamily::Height;
        s2.default_pot = EdgePotential::gaussian_height(J);
        s2.frozen = {0, 4};
        for (const auto &e : s2.graph.edges)
            if (e.u >= 5 || e.v >= 5)
                s2.slot_pot[e.slot] = EdgePotential::gaussian_height(J / (k + 1));
        rep.after = exact_height(s2, 2).value;
    } else if (kind == "conductance-raise") {
        // raising one conductance raises the variance: report (raised, base)
        GibbsSpec base = rect_height_spec(2, 2, EdgePotential::gaussian_height(1.0));
        GibbsSpec up = base;
        up.slot_pot[0] = EdgePotential::gaussian_height(J);
        rep.before = exact_height(up, 5).value;
        rep.after = exact_height(base, 5).value;
    } else if (kind == "percolation-raise") {
        // opening one site raises the variance: report (open, closed)
        GibbsSpec spec = rect_height_spec(2, 2, EdgePotential::bessel_height(J));
        spec.rule = DisorderRule::SiteProduct;
        auto sites = spec.disorder_sites();
        spec.set_disorder_mask(sites, 0x7);
        rep.after = exact_height(spec, 5).value;
        spec.set_disorder_mask(sites, 0xf);
        rep.before = exact_height(spec, 5).value;
    } else if (kind == "domain-grow") {
        // growing the box raises the variance: report (5x5, 3x3)
        rep.before = grid_height_var_fixed(GridHeightSpec(5, 5, J, false), 6).var;
        rep.after = grid_height_var_fixed(GridHeightSpec(3, 3, J, false), 6).var;
    } else {
        throw std::invalid_argument("surgery_monotonicity_check: unknown kind " + kind);
    }
    rep.margin = rep.before - rep.after;
    return rep;
}

inline std::vector<MetricLimitRow> metric_limit_check(double beta, const std::vector<int> &ns,
                                                      int base_edges = 1) {
    std::vector<std::pair<int, int>> el;
    for (int i = 0; i < base_edges; ++i) el.push_back({i, i + 1});
    LatticeGraph base = build_from_edges(base_edges + 1, el);
    GibbsSpec vspec;
    vspec.graph = base;
    vspec.family = ModelFamily::Angle;
    vspec.default_pot = EdgePotential::villain(beta);
    double vil = exact_angle(vspec, {0, base_edges, 1}).value;

    std::vector<MetricLimitRow> rows;
    for (int n : ns) {
        LatticeGraph sub = subdivide_edges(base, n);
        GibbsSpec xspec;
        xspec.graph = sub;
        xspec.family = ModelFamily::Angle;
        xspec.default_pot = EdgePotential::xy(n * beta);
        double chain = exact_angle(xspec, {0, base_edges, 1}).value;
        rows.push_back({n, chain, vil, std::fabs(chain - vil)});
    }
    return rows;
}

} // namespace quenchlab
