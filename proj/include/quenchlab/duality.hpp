#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "quenchlab/exact.hpp"
#include "quenchlab/graph.hpp"
#include "quenchlab/potentials.hpp"
#include "quenchlab/rng.hpp"

namespace quenchlab {

// ---------------------------------------------------------------------------
// Angle configurations on oriented edges with vanishing divergence (mod 2pi)
// at every vertex including the ghost.  A spanning tree parametrizes the
// space: the free (non-tree) edge angles are independent, every edge angle
// is an integer linear combination of them.
// ---------------------------------------------------------------------------

struct DivS1Space {
    LatticeGraph graph;
    std::vector<int> tree;       // edge ids
    std::vector<int> free_edges; // edge ids outside the tree
    // ext[e][f]: integer coefficient of free angle f in the canonical angle of edge e
    std::vector<std::vector<long>> ext;

    int free_count() const { return static_cast<int>(free_edges.size()); }
};

inline DivS1Space build_divS1(const LatticeGraph &g,
                              std::optional<std::vector<int>> tree_choice = std::nullopt) {
    if (!g.has_ghost()) throw std::invalid_argument("build_divS1: graph must carry a ghost vertex");
    DivS1Space sp;
    sp.graph = g;
    sp.tree = tree_choice ? *tree_choice : spanning_tree(g);
    std::vector<char> in_tree(g.edge_count(), 0);
    for (int e : sp.tree) in_tree[e] = 1;
    for (const auto &e : g.edges)
        if (!in_tree[e.id]) sp.free_edges.push_back(e.id);

    int F = sp.free_count();
    sp.ext.assign(g.edge_count(), {});
    for (int f = 0; f < F; ++f) {
        sp.ext[sp.free_edges[f]].assign(F, 0);
        sp.ext[sp.free_edges[f]][f] = 1;
    }

    // BFS order on the tree from the ghost
    auto inc = g.incidence();
    int root = g.ghost_id;
    std::vector<int> parent(g.vertex_count(), -1), parent_edge(g.vertex_count(), -1), order;
    std::vector<char> seen(g.vertex_count(), 0);
    std::deque<int> queue{root};
    seen[root] = 1;
    while (!queue.empty()) {
        int x = queue.front();
        queue.pop_front();
        order.push_back(x);
        for (int eid : inc[x]) {
            if (!in_tree[eid]) continue;
            const auto &e = g.edges[eid];
            int y = e.u == x ? e.v : e.u;
            if (seen[y]) continue;
            seen[y] = 1;
            parent[y] = x;
            parent_edge[y] = eid;
            queue.push_back(y);
        }
    }
    for (char s : seen)
        if (!s) throw std::runtime_error("build_divS1: tree does not span the graph");

    // resolve tree edges from the leaves inward: the divergence constraint at
    // x determines the edge toward the parent
    for (int i = static_cast<int>(order.size()) - 1; i >= 1; --i) {
        int x = order[i];
        int ep = parent_edge[x];
        int sp_sign = g.edges[ep].u == x ? +1 : -1; // canonical angle oriented out of x
        std::vector<long> acc(F, 0);
        for (int eid : inc[x]) {
            if (eid == ep) continue;
            int s = g.edges[eid].u == x ? +1 : -1;
            if (sp.ext[eid].empty())
                throw std::logic_error("build_divS1: child edge unresolved");
            for (int f = 0; f < F; ++f) acc[f] += s * sp.ext[eid][f];
        }
        sp.ext[ep].assign(F, 0);
        for (int f = 0; f < F; ++f) sp.ext[ep][f] = -sp_sign * acc[f];
    }
    // the root constraint is implied; verify the integer identity
    {
        std::vector<long> acc(F, 0);
        for (int eid : inc[root]) {
            int s = g.edges[eid].u == root ? +1 : -1;
            for (int f = 0; f < F; ++f) acc[f] += s * sp.ext[eid][f];
        }
        for (long a : acc)
            if (a != 0) throw std::logic_error("build_divS1: root divergence not implied");
    }
    return sp;
}

// angles on all edges (canonical orientation) from i.i.d. uniform free angles
inline std::vector<double> haar_sample(const DivS1Space &sp, uint64_t seed) {
    int F = sp.free_count();
    std::vector<double> u(F);
    RngStream rng(seed, 0xd1f5ull);
    for (int f = 0; f < F; ++f) u[f] = rng.uniform(0.0, two_pi);
    std::vector<double> theta(sp.graph.edge_count(), 0.0);
    for (int e = 0; e < sp.graph.edge_count(); ++e) {
        double t = 0.0;
        for (int f = 0; f < F; ++f)
            if (sp.ext[e][f] != 0) t += sp.ext[e][f] * u[f];
        theta[e] = std::remainder(t, two_pi);
        if (theta[e] < 0.0) theta[e] += two_pi;
    }
    return theta;
}

// max divergence residual (mod 2pi) over vertices; should sit at rounding level
inline double divergence_residual(const DivS1Space &sp, const std::vector<double> &theta) {
    auto inc = sp.graph.incidence();
    double worst = 0.0;
    for (int x = 0; x < sp.graph.vertex_count(); ++x) {
        double s = 0.0;
        for (int eid : inc[x]) {
            int sign = sp.graph.edges[eid].u == x ? +1 : -1;
            s += sign * theta[eid];
        }
        worst = std::max(worst, std::fabs(std::remainder(s, two_pi)));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Generalized angle model on the divergence-free space: Haar measure times
//   exp(lambda cos theta_{0g}) prod_e exp-type edge weights.
// Exact evaluation by tensor quadrature over the free angles (<= 6).
// ---------------------------------------------------------------------------

struct GeneralizedXY {
    GibbsSpec spec; // angle family over a ghost-augmented graph; lambda edge slot carries XY(lambda)
    DivS1Space space;
};

// spin system over the ghost-augmented multigraph of a box: parallel copy 1
// carries beta1 gated by the smaller endpoint's site bit, copy n carries
// beta1 gated by the larger endpoint's, middle copies carry n*beta2; the
// ghost edges are weightless and the distinguished ghost edge carries lambda.
inline GibbsSpec generalized_xy_spec(int L, int n, double beta1, double beta2, double lambda,
                                     const std::vector<uint8_t> &site_r = {}) {
    LatticeGraph box = build_lattice_box(2, L);
    LatticeGraph multi = parallelize_edges(box, n);
    LatticeGraph g = ghost_augment(multi);
    GibbsSpec spec;
    spec.family = ModelFamily::Angle;
    spec.rule = DisorderRule::MultigraphEndpoints;
    spec.multi_n = n;
    spec.site_r = site_r;
    for (const auto &e : g.edges) {
        bool ghost_edge = e.u == g.ghost_id || e.v == g.ghost_id;
        if (e.id == g.lambda_edge)
            spec.slot_pot[e.slot] = EdgePotential::xy(lambda);
        else if (ghost_edge)
            spec.slot_pot[e.slot] = EdgePotential::free_edge();
        else if (n == 1 || e.k == 1 || e.k == n)
            spec.slot_pot[e.slot] = EdgePotential::xy(beta1);
        else
            spec.slot_pot[e.slot] = EdgePotential::xy(n * beta2);
    }
    spec.graph = std::move(g);
    return spec;
}

// matching height model: same couplings as Bessel increment factors, heights
// free strictly inside the box, zero on the box boundary, lambda weight at 0
inline GibbsSpec dual_height_spec(int L, int n, double beta1, double beta2, double lambda,
                                  const std::vector<uint8_t> &site_r = {}) {
    LatticeGraph box = build_lattice_box(2, L);
    GibbsSpec spec;
    spec.family = ModelFamily::Height;
    spec.rule = DisorderRule::MultigraphEndpoints;
    spec.multi_n = n;
    spec.site_r = site_r;
    spec.lambda = lambda;
    LatticeGraph multi = parallelize_edges(box, n);
    for (const auto &e : multi.edges) {
        if (n == 1 || e.k == 1 || e.k == n)
            spec.slot_pot[e.slot] = EdgePotential::bessel_height(beta1);
        else
            spec.slot_pot[e.slot] = EdgePotential::bessel_height(n * beta2);
    }
    for (int b : box.boundary) spec.frozen.insert(b);
    spec.lambda_site = multi.origin();
    spec.graph = std::move(multi);
    return spec;
}

struct GeneralizedResult {
    double value = 0.0; // <cos(m theta_{0g})>
    double log_z = 0.0;
    double err_bound = 0.0;
    int grid = 0;
};

inline GeneralizedResult exact_generalized_xy(const GibbsSpec &spec, int m,
                                              std::optional<std::vector<int>> tree = std::nullopt,
                                              int max_free = 6) {
    const LatticeGraph &g = spec.graph;
    if (!g.has_ghost() || g.lambda_edge < 0)
        throw std::invalid_argument("exact_generalized_xy: needs a ghost-augmented graph");
    DivS1Space sp = build_divS1(g, std::move(tree));
    if (sp.free_count() > max_free)
        throw std::runtime_error("exact_generalized_xy: too many free angles for tensor quadrature");
    int F = sp.free_count();

    // weighted edges (the free-potential edges integrate out trivially)
    std::vector<int> weighted;
    std::vector<EdgePotential> pots;
    for (const auto &e : g.edges) {
        EdgePotential pot = spec.effective_potential(e);
        if (pot.kind == EdgePotential::Kind::Frozen)
            throw std::invalid_argument("exact_generalized_xy: frozen edges unsupported here");
        if (detail::angle_decoupled(pot)) continue;
        weighted.push_back(e.id);
        pots.push_back(pot);
    }

    GeneralizedResult res;
    double prev = 0.0, prev_lz = 0.0;
    for (int N = 16; N <= 256; N *= 2) {
        std::vector<std::vector<double>> wtab(weighted.size(), std::vector<double>(N));
        for (size_t i = 0; i < weighted.size(); ++i)
            for (int t = 0; t < N; ++t) wtab[i][t] = pots[i].angle_weight(two_pi * t / N);
        std::vector<double> ctab(N);
        for (int t = 0; t < N; ++t) ctab[t] = std::cos(m * two_pi * t / N);

        std::vector<int> idx(F, 0);
        double z = 0.0, num = 0.0;
        while (true) {
            // edge angle grid indices from the integer extension
            double w = 1.0;
            for (size_t i = 0; i < weighted.size() && w != 0.0; ++i) {
                long t = 0;
                const auto &row = sp.ext[weighted[i]];
                for (int f = 0; f < F; ++f) t += row[f] * idx[f];
                w *= wtab[i][((t % N) + N) % N];
            }
            z += w;
            {
                long t = 0;
                const auto &row = sp.ext[g.lambda_edge];
                for (int f = 0; f < F; ++f) t += row[f] * idx[f];
                num += w * ctab[((t % N) + N) % N];
            }
            int d = 0;
            while (d < F && ++idx[d] == N) idx[d++] = 0;
            if (d == F) break;
        }
        res.value = F == 0 ? (m == 0 ? 1.0 : 0.0) : num / z;
        if (F == 0) { // single configuration: theta == 0 everywhere
            res.value = 1.0;
            res.log_z = 0.0;
            for (size_t i = 0; i < weighted.size(); ++i) res.log_z += std::log(wtab[i][0]);
            res.grid = N;
            return res;
        }
        res.log_z = std::log(z) - F * std::log(static_cast<double>(N));
        res.grid = N;
        if (N > 16 && std::fabs(res.value - prev) < 1e-11 * (1.0 + std::fabs(res.value)) &&
            std::fabs(res.log_z - prev_lz) < 1e-11 * (1.0 + std::fabs(res.log_z))) {
            res.err_bound = std::fabs(res.value - prev) + 1e-14;
            return res;
        }
        prev = res.value;
        prev_lz = res.log_z;
    }
    res.err_bound = 1e-9;
    return res;
}

// ---------------------------------------------------------------------------
// Star reduction.  When every lattice vertex other than the origin carries a
// ghost edge (boxes with L <= 1), the weightless ghost edges can be solved
// out of the divergence constraints: all multigraph edge angles become free,
// and theta_{0g} = -(sum of the star angles at the origin).  Expectations of
// functions of theta_{0g} then reduce to one circular convolution of the
// star edge weights; everything else contributes scalar factors to Z.
// ---------------------------------------------------------------------------

struct StarReduced {
    int N = 256;
    std::vector<double> rho;  // law of the star angle sum under the edge weights
    double log_nonstar = 0.0; // sum of log mean weights over edges off the star
    double lambda = 0.0;
};

namespace detail {

inline std::vector<double> circ_conv(const std::vector<double> &a, const std::vector<double> &b) {
    int N = static_cast<int>(a.size());
    std::vector<double> out(N, 0.0);
    for (int i = 0; i < N; ++i) {
        double acc = 0.0;
        for (int j = 0; j < N; ++j) acc += a[j] * b[(i - j + N) % N];
        out[i] = acc / N;
    }
    return out;
}

} // namespace detail

inline StarReduced star_reduce(const GibbsSpec &spec, double lambda, int N = 256) {
    const LatticeGraph &g = spec.graph;
    if (!g.has_ghost() || g.lambda_edge < 0)
        throw std::invalid_argument("star_reduce: needs a ghost-augmented graph");
    int centre = g.origin();
    for (const auto &v : g.vertices) {
        if (v.role != VertexRole::Lattice || v.id == centre) continue;
        if (!g.boundary.count(v.id))
            throw std::invalid_argument("star_reduce: every non-origin vertex must touch the ghost");
    }
    StarReduced sr;
    sr.N = N;
    sr.lambda = lambda;
    sr.rho.assign(N, 0.0);
    sr.rho[0] = static_cast<double>(N); // identity of the normalized circular convolution
    for (const auto &e : g.edges) {
        if (e.id == g.lambda_edge) continue;
        bool ghost_edge = e.u == g.ghost_id || e.v == g.ghost_id;
        bool at_centre = e.u == centre || e.v == centre;
        EdgePotential pot = spec.effective_potential(e);
        if (ghost_edge) {
            if (!detail::angle_decoupled(pot))
                throw std::invalid_argument("star_reduce: ghost edges must be weightless");
            // a weightless ghost edge at the origin shares the origin
            // constraint with the distinguished edge: it enters the star sum
            // as a uniform angle; ghost edges elsewhere solve the boundary
            // constraints and drop out
            if (!at_centre) continue;
        }
        if (at_centre) {
            std::vector<double> w(N);
            for (int t = 0; t < N; ++t) w[t] = pot.angle_weight(two_pi * t / N);
            sr.rho = detail::circ_conv(sr.rho, w);
        } else {
            std::vector<double> w(N);
            for (int t = 0; t < N; ++t) w[t] = pot.angle_weight(two_pi * t / N);
            double mean = 0.0;
            for (double x : w) mean += x;
            sr.log_nonstar += std::log(mean / N);
        }
    }
    return sr;
}

struct StarMoments {
    double cos1 = 0.0, cos2 = 0.0, cos_sq = 0.0;
    double log_z = 0.0;
};

inline StarMoments star_moments(const StarReduced &sr) {
    int N = sr.N;
    double z = 0.0, c1 = 0.0, c2 = 0.0, cq = 0.0;
    for (int t = 0; t < N; ++t) {
        double th = two_pi * t / N;
        double w = std::exp(sr.lambda * std::cos(th)) * sr.rho[t];
        z += w;
        c1 += w * std::cos(th);
        c2 += w * std::cos(2.0 * th);
        cq += w * std::cos(th) * std::cos(th);
    }
    StarMoments m;
    m.cos1 = c1 / z;
    m.cos2 = c2 / z;
    m.cos_sq = cq / z;
    m.log_z = sr.log_nonstar + std::log(z / N);
    return m;
}

// ---------------------------------------------------------------------------
// Duality check: the height variance against the ghost-spin observable
//   Var[phi(0)] = < lambda cos t + (lambda^2/2) cos 2t - lambda^2/2 >,
// plus the partition identity, both sides by independent engines.
// ---------------------------------------------------------------------------

struct DualityReport {
    double height_var = 0.0;
    double spin_value = 0.0;       // cos-2t form
    double spin_value_sq = 0.0;    // cos^2 form
    double diff = 0.0;
    double log_z_height = 0.0;
    double log_z_spin = 0.0;
    double partition_rel_err = 0.0;
    double engine_err = 0.0;
};

inline DualityReport duality_check(int L, int n, double beta1, double beta2, double lambda,
                                   const std::vector<uint8_t> &site_r = {}) {
    DualityReport rep;
    GibbsSpec hspec = dual_height_spec(L, n, beta1, beta2, lambda, site_r);
    ExactOptions opt;
    auto h = exact_height(hspec, hspec.lambda_site, opt);
    rep.height_var = h.value;
    rep.log_z_height = h.log_z;

    GibbsSpec sspec = generalized_xy_spec(L, n, beta1, beta2, lambda, site_r);
    auto srA = star_reduce(sspec, lambda, 256);
    auto srB = star_reduce(sspec, lambda, 512);
    auto mA = star_moments(srA);
    auto mB = star_moments(srB);
    rep.spin_value = lambda * mB.cos1 + 0.5 * lambda * lambda * mB.cos2 - 0.5 * lambda * lambda;
    rep.spin_value_sq = lambda * mB.cos1 + lambda * lambda * mB.cos_sq - lambda * lambda;
    rep.log_z_spin = mB.log_z;
    rep.engine_err = std::fabs(mA.cos1 - mB.cos1) + std::fabs(mA.cos2 - mB.cos2) + h.err_bound;
    rep.diff = std::fabs(rep.height_var - rep.spin_value);
    rep.partition_rel_err = std::fabs(std::expm1(rep.log_z_height - rep.log_z_spin));
    return rep;
}

// Wells inequality for the ghost-spin observable cos(m theta_{0g}): the
// disorder average under nu(r) ~ Z_r dominates the clean system at beta1/2.
struct GeneralizedWells {
    double lhs = 0.0, rhs = 0.0, margin = 0.0;
    double max_conditional = 0.0; // of the Wells disorder
};

inline GeneralizedWells wells_generalized_check(int L, int n, double beta1, double beta2,
                                                double lambda, int m, int N = 256) {
    GibbsSpec base = generalized_xy_spec(L, n, beta1, beta2, lambda);
    std::vector<int> sites;
    for (const auto &v : base.graph.vertices)
        if (v.role == VertexRole::Lattice) sites.push_back(v.id);
    if (sites.size() > 20) throw std::invalid_argument("wells_generalized_check: too many sites");
    size_t cfgs = size_t{1} << sites.size();
    std::vector<double> logz(cfgs), obs(cfgs);
    for (size_t mask = 0; mask < cfgs; ++mask) {
        base.site_r.assign(base.graph.vertex_count(), 1);
        for (size_t i = 0; i < sites.size(); ++i)
            base.site_r[sites[i]] = (mask >> i) & 1u ? 1 : 0;
        auto sr = star_reduce(base, lambda, N);
        auto mm = star_moments(sr);
        logz[mask] = mm.log_z;
        obs[mask] = m == 1 ? mm.cos1 : mm.cos2;
    }
    double mx = logz[0];
    for (double l : logz) mx = std::max(mx, l);
    double tot = 0.0, acc = 0.0;
    std::vector<double> prob(cfgs);
    for (size_t i = 0; i < cfgs; ++i) {
        prob[i] = std::exp(logz[i] - mx);
        tot += prob[i];
        acc += prob[i] * obs[i];
    }
    GeneralizedWells out;
    out.rhs = acc / tot;
    for (auto &p : prob) p /= tot;
    out.max_conditional =
        check_conditional_domination(prob, static_cast<int>(sites.size()), 1.0).max_conditional;

    GibbsSpec clean = generalized_xy_spec(L, n, beta1 / 2.0, beta2, lambda);
    auto sr = star_reduce(clean, lambda, N);
    auto mm = star_moments(sr);
    out.lhs = m == 1 ? mm.cos1 : mm.cos2;
    out.margin = out.rhs - out.lhs;
    return out;
}

} // namespace quenchlab
