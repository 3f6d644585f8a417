#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "quenchlab/graph.hpp"
#include "quenchlab/rng.hpp"

namespace quenchlab {

// ---------------------------------------------------------------------------
// Union-find with path compression and union by size.
// ---------------------------------------------------------------------------

class UnionFind {
    std::vector<int> id, sz;

public:
    explicit UnionFind(int n) : id(n), sz(n, 1) {
        for (int i = 0; i < n; ++i) id[i] = i;
    }
    int find(int p) {
        int root = p;
        while (root != id[root]) root = id[root];
        while (p != root) {
            int next = id[p];
            id[p] = root;
            p = next;
        }
        return root;
    }
    void merge(int a, int b) {
        int i = find(a), j = find(b);
        if (i == j) return;
        if (sz[i] < sz[j]) std::swap(i, j);
        id[j] = i;
        sz[i] += sz[j];
    }
    bool connected(int a, int b) { return find(a) == find(b); }
};

// ---------------------------------------------------------------------------
// Disorder configurations on a LatticeGraph (site or edge bits).
// Site configurations force r = 1 on subdivision and ghost vertices.
// ---------------------------------------------------------------------------

enum class DisorderKind : uint8_t { Site, Edge };

struct DisorderConfig {
    DisorderKind kind = DisorderKind::Site;
    std::vector<uint8_t> bits;
    uint64_t seed = 0;
    double p = 1.0;

    static DisorderConfig all(DisorderKind kind, size_t n, uint8_t value) {
        DisorderConfig c;
        c.kind = kind;
        c.bits.assign(n, value);
        return c;
    }
};

inline DisorderConfig sample_bernoulli(const LatticeGraph &g, DisorderKind kind, double p,
                                       uint64_t seed) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("sample_bernoulli: p outside [0,1]");
    DisorderConfig c;
    c.kind = kind;
    c.seed = seed;
    c.p = p;
    if (kind == DisorderKind::Site) {
        c.bits.resize(g.vertex_count());
        for (const auto &v : g.vertices) {
            if (v.role != VertexRole::Lattice) {
                c.bits[v.id] = 1; // extension convention off the base lattice
            } else {
                RngStream s(seed, 0x5174ull, static_cast<uint64_t>(v.id));
                c.bits[v.id] = s.uniform() < p ? 1 : 0;
            }
        }
    } else {
        c.bits.resize(g.edge_count());
        for (const auto &e : g.edges) {
            RngStream s(seed, 0xed63ull, static_cast<uint64_t>(e.id));
            c.bits[e.id] = s.uniform() < p ? 1 : 0;
        }
    }
    return c;
}

// run-length encoded text form: header "kind nbits seed p", then runs "bit*count"
inline void save_disorder(const DisorderConfig &c, std::ostream &out) {
    out << (c.kind == DisorderKind::Site ? "site" : "edge") << ' ' << c.bits.size() << ' '
        << c.seed << ' ' << c.p << '\n';
    size_t i = 0;
    while (i < c.bits.size()) {
        size_t j = i;
        while (j < c.bits.size() && c.bits[j] == c.bits[i]) ++j;
        out << static_cast<int>(c.bits[i]) << '*' << (j - i) << ' ';
        i = j;
    }
    out << '\n';
}

inline DisorderConfig load_disorder(std::istream &in) {
    DisorderConfig c;
    std::string kind;
    size_t n;
    if (!(in >> kind >> n >> c.seed >> c.p)) throw std::runtime_error("load_disorder: bad header");
    c.kind = kind == "site" ? DisorderKind::Site : DisorderKind::Edge;
    c.bits.reserve(n);
    while (c.bits.size() < n) {
        std::string run;
        if (!(in >> run)) throw std::runtime_error("load_disorder: truncated runs");
        auto star = run.find('*');
        int bit = std::stoi(run.substr(0, star));
        size_t len = std::stoull(run.substr(star + 1));
        c.bits.insert(c.bits.end(), len, static_cast<uint8_t>(bit));
    }
    return c;
}

// ---------------------------------------------------------------------------
// Bond configurations on rectangular windows of Z^2 (and of the shifted dual
// lattice).  Vertices are (x, y) with x in [x0, x0+nx-1], y in [y0, y0+ny-1];
// offset=1 means the vertex (x, y) sits at the shifted point (x+1/2, y+1/2).
// h(x,y) is the bond to (x+1, y), v(x,y) the bond to (x, y+1).
// ---------------------------------------------------------------------------

struct BondGrid {
    int x0 = 0, y0 = 0, nx = 0, ny = 0;
    int offset = 0;
    std::vector<uint8_t> hbits, vbits;

    BondGrid() = default;
    BondGrid(int x0_, int y0_, int nx_, int ny_, int offset_ = 0)
        : x0(x0_), y0(y0_), nx(nx_), ny(ny_), offset(offset_),
          hbits(static_cast<size_t>(std::max(nx_ - 1, 0)) * ny_, 0),
          vbits(static_cast<size_t>(nx_) * std::max(ny_ - 1, 0), 0) {}

    bool h_in_range(int x, int y) const {
        return x >= x0 && x <= x0 + nx - 2 && y >= y0 && y <= y0 + ny - 1;
    }
    bool v_in_range(int x, int y) const {
        return x >= x0 && x <= x0 + nx - 1 && y >= y0 && y <= y0 + ny - 2;
    }
    bool vertex_in_range(int x, int y) const {
        return x >= x0 && x <= x0 + nx - 1 && y >= y0 && y <= y0 + ny - 1;
    }
    size_t hindex(int x, int y) const { return static_cast<size_t>(y - y0) * (nx - 1) + (x - x0); }
    size_t vindex(int x, int y) const { return static_cast<size_t>(y - y0) * nx + (x - x0); }
    uint8_t h(int x, int y) const {
        if (!h_in_range(x, y)) throw std::out_of_range("BondGrid::h");
        return hbits[hindex(x, y)];
    }
    uint8_t v(int x, int y) const {
        if (!v_in_range(x, y)) throw std::out_of_range("BondGrid::v");
        return vbits[vindex(x, y)];
    }
    void set_h(int x, int y, uint8_t b) { hbits[hindex(x, y)] = b; }
    void set_v(int x, int y, uint8_t b) { vbits[vindex(x, y)] = b; }
    size_t vertex_index(int x, int y) const {
        return static_cast<size_t>(y - y0) * nx + (x - x0);
    }
};

// i.i.d. bond configuration; each bond's bit is a pure function of
// (seed, orientation, x, y) so overlapping windows agree.
inline BondGrid sample_bernoulli_grid(int x0, int y0, int nx, int ny, double p, uint64_t seed) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("sample_bernoulli_grid: p outside [0,1]");
    BondGrid g(x0, y0, nx, ny, 0);
    for (int y = y0; y <= y0 + ny - 1; ++y)
        for (int x = x0; x <= x0 + nx - 2; ++x) {
            RngStream s(seed, 0x68ull, static_cast<uint64_t>(static_cast<int64_t>(x) + (1ll << 31)),
                        static_cast<uint64_t>(static_cast<int64_t>(y) + (1ll << 31)));
            g.set_h(x, y, s.uniform() < p ? 1 : 0);
        }
    for (int y = y0; y <= y0 + ny - 2; ++y)
        for (int x = x0; x <= x0 + nx - 1; ++x) {
            RngStream s(seed, 0x76ull, static_cast<uint64_t>(static_cast<int64_t>(x) + (1ll << 31)),
                        static_cast<uint64_t>(static_cast<int64_t>(y) + (1ll << 31)));
            g.set_v(x, y, s.uniform() < p ? 1 : 0);
        }
    return g;
}

// Dual configuration: omega*_{e*} = 1 - omega_e on the crossing pair.
// From an offset-0 grid: dual vertex (i,j) sits at (i+1/2, j+1/2);
//   dual h(i,j) crosses primal v(i+1, j), dual v(i,j) crosses primal h(i, j+1).
// From an offset-1 grid the shifts go the other way, so dual(dual(g))
// reproduces g bit-exactly on the common window.
inline BondGrid dual_config(const BondGrid &g) {
    if (g.nx < 3 || g.ny < 3) throw std::invalid_argument("dual_config: window too small");
    if (g.offset == 0) {
        BondGrid d(g.x0, g.y0, g.nx - 1, g.ny - 1, 1);
        for (int j = g.y0; j <= g.y0 + d.ny - 1; ++j)
            for (int i = g.x0; i <= g.x0 + d.nx - 2; ++i)
                d.set_h(i, j, 1 - g.v(i + 1, j));
        for (int j = g.y0; j <= g.y0 + d.ny - 2; ++j)
            for (int i = g.x0; i <= g.x0 + d.nx - 1; ++i)
                d.set_v(i, j, 1 - g.h(i, j + 1));
        return d;
    }
    BondGrid d(g.x0 + 1, g.y0 + 1, g.nx - 1, g.ny - 1, 0);
    for (int j = d.y0; j <= d.y0 + d.ny - 1; ++j)
        for (int i = d.x0; i <= d.x0 + d.nx - 2; ++i)
            d.set_h(i, j, 1 - g.v(i, j - 1));
    for (int j = d.y0; j <= d.y0 + d.ny - 2; ++j)
        for (int i = d.x0; i <= d.x0 + d.nx - 1; ++i)
            d.set_v(i, j, 1 - g.h(i - 1, j));
    return d;
}

// ---------------------------------------------------------------------------
// Good boxes.  A cell centred at dual vertex z is good when every rectangle
// of the prescribed dimensions inside z + Lambda_W is crossed in the long
// direction by a cluster of closed dual edges.
// ---------------------------------------------------------------------------

struct GoodBoxDims {
    int short_side = 1;
    int long_side = 2;
    int window_radius = 2;

    // dimensions as used asymptotically: short L/100, long 22L/10, window 11L/10
    static GoodBoxDims standard(int L) {
        if (L < 10) throw std::invalid_argument("GoodBoxDims::standard: needs L >= 10");
        return {(L + 99) / 100, (22 * L + 9) / 10, (11 * L + 9) / 10};
    }
    // small-scale surrogate: the width grows with L so the supercritical
    // regime is visible at simulable sizes
    static GoodBoxDims scaled(int L) {
        if (L < 10) throw std::invalid_argument("GoodBoxDims::scaled: needs L >= 10");
        return {std::max(1, (L + 9) / 10), (22 * L + 9) / 10, (11 * L + 9) / 10};
    }
    // micro mode for L0 < 10: rectangles 1 x 2 L0
    static GoodBoxDims micro(int L0) { return {1, 2 * L0, std::max((11 * L0 + 9) / 10, L0 + 1)}; }
    // trend surrogate: near-square rectangles make the supercritical
    // sharpness visible at p close to 1/2 and small L
    static GoodBoxDims squarish(int L) {
        if (L < 10) throw std::invalid_argument("GoodBoxDims::squarish: needs L >= 10");
        return {(4 * L + 4) / 5, (22 * L + 9) / 10, (11 * L + 9) / 10};
    }
};

struct GoodBoxReport {
    int cx = 0, cy = 0;
    GoodBoxDims dims;
    bool verdict = false;
    int rectangles = 0;
    int failed_x = 0, failed_y = 0, failed_horizontal = 0; // first failing rectangle
};

namespace detail {

// crossing of one rectangle (vertex set [ax..ax+len_x] x [ay..ay+len_y] in
// dual coordinates) in the given direction by closed dual edges.  The dual
// bits are read through the primal grid.
struct DualClosedView {
    const BondGrid *primal;
    bool closed_h(int i, int j) const { return primal->v(i + 1, j) == 1; }
    bool closed_v(int i, int j) const { return primal->h(i, j + 1) == 1; }
    bool h_ok(int i, int j) const { return primal->v_in_range(i + 1, j); }
    bool v_ok(int i, int j) const { return primal->h_in_range(i, j + 1); }
};

inline bool rectangle_crossed(const DualClosedView &dual, int ax, int ay, int len_x, int len_y,
                              bool long_is_x) {
    int w = len_x + 1, h = len_y + 1;
    UnionFind uf(w * h);
    auto idx = [&](int i, int j) { return (j - ay) * w + (i - ax); };
    for (int j = ay; j <= ay + len_y; ++j)
        for (int i = ax; i <= ax + len_x; ++i) {
            if (i < ax + len_x) {
                if (!dual.h_ok(i, j)) throw std::out_of_range("rectangle outside sampled window");
                if (dual.closed_h(i, j)) uf.merge(idx(i, j), idx(i + 1, j));
            }
            if (j < ay + len_y) {
                if (!dual.v_ok(i, j)) throw std::out_of_range("rectangle outside sampled window");
                if (dual.closed_v(i, j)) uf.merge(idx(i, j), idx(i, j + 1));
            }
        }
    if (long_is_x) {
        for (int j1 = ay; j1 <= ay + len_y; ++j1)
            for (int j2 = ay; j2 <= ay + len_y; ++j2)
                if (uf.connected(idx(ax, j1), idx(ax + len_x, j2))) return true;
    } else {
        for (int i1 = ax; i1 <= ax + len_x; ++i1)
            for (int i2 = ax; i2 <= ax + len_x; ++i2)
                if (uf.connected(idx(i1, ay), idx(i2, ay + len_y))) return true;
    }
    return false;
}

} // namespace detail

// primal: offset-0 bond grid covering at least the dual window
// [cx - W - 1, cx + W + 2] x [cy - W - 1, cy + W + 2]
inline GoodBoxReport good_box(const BondGrid &primal, int cx, int cy, const GoodBoxDims &dims) {
    GoodBoxReport rep;
    rep.cx = cx;
    rep.cy = cy;
    rep.dims = dims;
    detail::DualClosedView dual{&primal};
    int W = dims.window_radius;
    int s = dims.short_side, l = dims.long_side;
    if (l > 2 * W) throw std::invalid_argument("good_box: rectangle does not fit in window");
    rep.verdict = true;
    for (int horiz = 0; horiz <= 1; ++horiz) {
        int len_x = horiz ? l : s;
        int len_y = horiz ? s : l;
        for (int ax = cx - W; ax + len_x <= cx + W; ++ax)
            for (int ay = cy - W; ay + len_y <= cy + W; ++ay) {
                ++rep.rectangles;
                if (!detail::rectangle_crossed(dual, ax, ay, len_x, len_y, horiz != 0)) {
                    if (rep.verdict) {
                        rep.failed_x = ax;
                        rep.failed_y = ay;
                        rep.failed_horizontal = horiz;
                    }
                    rep.verdict = false;
                }
            }
    }
    if (rep.rectangles == 0) throw std::invalid_argument("good_box: no rectangle fits");
    return rep;
}

// ---------------------------------------------------------------------------
// Renormalized site field.  Coarse site (a, b) maps to the cell of dual
// vertices (2 L0 + 1)(a, b) + Lambda_{L0}; it is open iff the cell is good.
// ---------------------------------------------------------------------------

struct SiteGrid {
    int x0 = 0, y0 = 0, nx = 0, ny = 0;
    std::vector<uint8_t> bits;

    SiteGrid() = default;
    SiteGrid(int x0_, int y0_, int nx_, int ny_)
        : x0(x0_), y0(y0_), nx(nx_), ny(ny_), bits(static_cast<size_t>(nx_) * ny_, 0) {}
    bool in_range(int x, int y) const {
        return x >= x0 && x <= x0 + nx - 1 && y >= y0 && y <= y0 + ny - 1;
    }
    uint8_t at(int x, int y) const {
        if (!in_range(x, y)) throw std::out_of_range("SiteGrid::at");
        return bits[static_cast<size_t>(y - y0) * nx + (x - x0)];
    }
    void set(int x, int y, uint8_t b) { bits[static_cast<size_t>(y - y0) * nx + (x - x0)] = b; }
};

inline SiteGrid renormalized_sites(const BondGrid &primal, int L0, const GoodBoxDims &dims,
                                   int ax0, int ay0, int anx, int any) {
    SiteGrid r(ax0, ay0, anx, any);
    int pitch = 2 * L0 + 1;
    for (int b = ay0; b <= ay0 + any - 1; ++b)
        for (int a = ax0; a <= ax0 + anx - 1; ++a) {
            auto rep = good_box(primal, pitch * a, pitch * b, dims);
            r.set(a, b, rep.verdict ? 1 : 0);
        }
    return r;
}

// ---------------------------------------------------------------------------
// Crossing-path extraction.  For every coarse nearest-neighbour pair of open
// renormalized sites, one crossing path of closed dual edges is selected in
// the bridging rectangle (shortest, then lexicographically smallest).  The
// output C* is the set of selected dual edges; C is the set of primal edges
// dual to them.  Validation: every component of (window, E \ C) must contain
// a coarse cell centre (2 L0 + 1) Z^2.
// ---------------------------------------------------------------------------

struct CrossingPaths {
    // dual edges as ((i, j), horizontal?) and the primal counterparts
    std::vector<std::tuple<int, int, bool>> dual_edges;
    std::vector<std::tuple<int, int, bool>> primal_edges; // ((x, y), horizontal?)
    bool validation_passed = true;
    int bad_component_x = 0, bad_component_y = 0;
    int bridges_requested = 0, bridges_found = 0;
};

namespace detail {

// shortest lexicographically-minimal path between the two short sides of a
// rectangle, through closed dual edges; returns edge list or empty
inline std::vector<std::tuple<int, int, bool>> crossing_path(const DualClosedView &dual, int ax,
                                                             int ay, int len_x, int len_y,
                                                             bool long_is_x) {
    int w = len_x + 1, h = len_y + 1;
    auto idx = [&](int i, int j) { return (j - ay) * w + (i - ax); };
    std::vector<int> dist(w * h, -1), parent(w * h, -1);
    std::deque<int> queue;
    // sources: the short side with smaller coordinate
    if (long_is_x) {
        for (int j = ay; j <= ay + len_y; ++j) {
            dist[idx(ax, j)] = 0;
            queue.push_back(idx(ax, j));
        }
    } else {
        for (int i = ax; i <= ax + len_x; ++i) {
            dist[idx(i, ay)] = 0;
            queue.push_back(idx(i, ay));
        }
    }
    auto neighbours = [&](int node, auto &&visit) {
        int i = ax + node % w, j = ay + node / w;
        // explored in fixed order for deterministic lexicographic tie-breaks
        if (i > ax && dual.closed_h(i - 1, j)) visit(idx(i - 1, j));
        if (j > ay && dual.closed_v(i, j - 1)) visit(idx(i, j - 1));
        if (j < ay + len_y && dual.closed_v(i, j)) visit(idx(i, j + 1));
        if (i < ax + len_x && dual.closed_h(i, j)) visit(idx(i + 1, j));
    };
    while (!queue.empty()) {
        int node = queue.front();
        queue.pop_front();
        neighbours(node, [&](int nb) {
            if (dist[nb] < 0) {
                dist[nb] = dist[node] + 1;
                parent[nb] = node;
                queue.push_back(nb);
            }
        });
    }
    // smallest reached target on the far short side
    int target = -1;
    int best = INT32_MAX;
    auto consider = [&](int node) {
        if (dist[node] >= 0 && (dist[node] < best || (dist[node] == best && node < target))) {
            best = dist[node];
            target = node;
        }
    };
    if (long_is_x)
        for (int j = ay; j <= ay + len_y; ++j) consider(idx(ax + len_x, j));
    else
        for (int i = ax; i <= ax + len_x; ++i) consider(idx(i, ay + len_y));
    if (target < 0) return {};
    // walk back via lexicographically smallest same-distance predecessor
    std::vector<std::tuple<int, int, bool>> edges;
    int node = target;
    while (dist[node] > 0) {
        int pick = -1;
        neighbours(node, [&](int nb) {
            if (dist[nb] == dist[node] - 1 && (pick < 0 || nb < pick)) pick = nb;
        });
        int i1 = ax + node % w, j1 = ay + node / w;
        int i2 = ax + pick % w, j2 = ay + pick / w;
        if (j1 == j2)
            edges.push_back({std::min(i1, i2), j1, true});
        else
            edges.push_back({i1, std::min(j1, j2), false});
        node = pick;
    }
    return edges;
}

} // namespace detail

inline CrossingPaths extract_crossing_paths(const BondGrid &primal, const SiteGrid &coarse, int L0,
                                            const GoodBoxDims &dims, int win_x0, int win_y0,
                                            int win_nx, int win_ny) {
    CrossingPaths out;
    detail::DualClosedView dual{&primal};
    int pitch = 2 * L0 + 1;
    int s = dims.short_side, l = dims.long_side;
    std::set<std::tuple<int, int, bool>> dual_set;
    for (int b = coarse.y0; b <= coarse.y0 + coarse.ny - 1; ++b)
        for (int a = coarse.x0; a <= coarse.x0 + coarse.nx - 1; ++a) {
            if (!coarse.at(a, b)) continue;
            // east bridge
            if (coarse.in_range(a + 1, b) && coarse.at(a + 1, b)) {
                ++out.bridges_requested;
                int ax = pitch * a + L0 + 1 - (s + 1) / 2;
                int ay = pitch * b - l / 2;
                auto path = detail::crossing_path(dual, ax, ay, s, l, false);
                if (path.empty()) continue;
                ++out.bridges_found;
                for (auto &e : path) dual_set.insert(e);
            }
            // north bridge
            if (coarse.in_range(a, b + 1) && coarse.at(a, b + 1)) {
                ++out.bridges_requested;
                int ax = pitch * a - l / 2;
                int ay = pitch * b + L0 + 1 - (s + 1) / 2;
                auto path = detail::crossing_path(dual, ax, ay, l, s, true);
                if (path.empty()) continue;
                ++out.bridges_found;
                for (auto &e : path) dual_set.insert(e);
            }
        }
    out.dual_edges.assign(dual_set.begin(), dual_set.end());
    for (auto &[i, j, horiz] : out.dual_edges) {
        // dual h(i,j) crosses primal v(i+1, j); dual v(i,j) crosses primal h(i, j+1)
        if (horiz)
            out.primal_edges.push_back({i + 1, j, false});
        else
            out.primal_edges.push_back({i, j + 1, true});
    }
    // all selected primal edges must be open
    for (auto &[x, y, horiz] : out.primal_edges) {
        uint8_t bit = horiz ? primal.h(x, y) : primal.v(x, y);
        if (bit != 1) throw std::logic_error("extract_crossing_paths: selected edge closed in omega");
    }
    // component validation inside the window
    std::set<std::pair<int, int>> in_c_h, in_c_v;
    for (auto &[x, y, horiz] : out.primal_edges)
        (horiz ? in_c_h : in_c_v).insert({x, y});
    UnionFind uf(win_nx * win_ny);
    auto vidx = [&](int x, int y) { return (y - win_y0) * win_nx + (x - win_x0); };
    for (int y = win_y0; y <= win_y0 + win_ny - 1; ++y)
        for (int x = win_x0; x <= win_x0 + win_nx - 1; ++x) {
            if (x + 1 <= win_x0 + win_nx - 1 && !in_c_h.count({x, y}))
                uf.merge(vidx(x, y), vidx(x + 1, y));
            if (y + 1 <= win_y0 + win_ny - 1 && !in_c_v.count({x, y}))
                uf.merge(vidx(x, y), vidx(x, y + 1));
        }
    std::set<int> with_centre;
    for (int y = win_y0; y <= win_y0 + win_ny - 1; ++y)
        for (int x = win_x0; x <= win_x0 + win_nx - 1; ++x)
            if (x % pitch == 0 && y % pitch == 0) with_centre.insert(uf.find(vidx(x, y)));
    for (int y = win_y0; y <= win_y0 + win_ny - 1 && out.validation_passed; ++y)
        for (int x = win_x0; x <= win_x0 + win_nx - 1; ++x)
            if (!with_centre.count(uf.find(vidx(x, y)))) {
                out.validation_passed = false;
                out.bad_component_x = x;
                out.bad_component_y = y;
                break;
            }
    return out;
}

// ---------------------------------------------------------------------------
// Conditional-probability criterion for stochastic domination by an i.i.d.
// Bernoulli(p) product measure: a strictly positive measure nu on {0,1}^s is
// dominated as soon as every conditional probability nu(r_x = 1 | rest) is
// at most p.  Returns the maximum conditional and where it is attained.
// ---------------------------------------------------------------------------

struct DominationReport {
    double max_conditional = 0.0;
    int site = -1;
    uint32_t conditioning = 0;
    bool dominated = false;
};

inline DominationReport check_conditional_domination(const std::vector<double> &prob, int sites,
                                                     double p) {
    if (sites < 1 || sites > 25) throw std::invalid_argument("check_conditional_domination: site count");
    if (prob.size() != (size_t{1} << sites))
        throw std::invalid_argument("check_conditional_domination: table size mismatch");
    for (double q : prob)
        if (q <= 0.0) throw std::invalid_argument("check_conditional_domination: measure not strictly positive");
    DominationReport rep;
    for (int x = 0; x < sites; ++x) {
        uint32_t bit = 1u << x;
        for (uint32_t r = 0; r < prob.size(); ++r) {
            if (r & bit) continue;
            double p0 = prob[r], p1 = prob[r | bit];
            double cond = p1 / (p0 + p1);
            if (cond > rep.max_conditional) {
                rep.max_conditional = cond;
                rep.site = x;
                rep.conditioning = r;
            }
        }
    }
    rep.dominated = rep.max_conditional <= p;
    return rep;
}

} // namespace quenchlab
