#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <tuple>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace quenchlab {

enum class VertexRole : uint8_t { Lattice, Subdivision, Ghost };

struct Vertex {
    int id = -1;
    std::vector<double> coord; // d components (2 for embedded planar graphs)
    VertexRole role = VertexRole::Lattice;
};

struct Edge {
    int id = -1;
    int u = -1, v = -1;
    int k = 1;    // parallel index, unique per unordered endpoint pair
    int slot = -1; // potential slot
};

// Finite weighted multigraph with geometric embedding.  Immutable after
// construction; the surgeries below return new graphs.
struct LatticeGraph {
    int dim = 0;
    int box_L = -1;     // sidelength when built from a box, else -1
    int subdiv_n = 1;   // subdivision / parallel multiplicity bookkeeping
    std::vector<Vertex> vertices;
    std::vector<Edge> edges;
    std::set<int> boundary; // inner boundary vertex ids
    int ghost_id = -1;
    int lambda_edge = -1; // the distinguished ghost-to-origin edge, if any

    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int edge_count() const { return static_cast<int>(edges.size()); }
    bool has_ghost() const { return ghost_id >= 0; }

    int origin() const {
        for (const auto &v : vertices) {
            if (v.role != VertexRole::Lattice) continue;
            bool zero = true;
            for (double c : v.coord)
                if (c != 0.0) { zero = false; break; }
            if (zero) return v.id;
        }
        return -1;
    }

    int find_vertex(const std::vector<double> &coord) const {
        for (const auto &v : vertices) {
            if (v.coord.size() != coord.size()) continue;
            bool eq = true;
            for (size_t i = 0; i < coord.size(); ++i)
                if (std::abs(v.coord[i] - coord[i]) > 1e-9) { eq = false; break; }
            if (eq) return v.id;
        }
        return -1;
    }

    std::vector<std::vector<int>> incidence() const {
        std::vector<std::vector<int>> inc(vertices.size());
        for (const auto &e : edges) {
            inc[e.u].push_back(e.id);
            inc[e.v].push_back(e.id);
        }
        return inc;
    }

    void check_invariants() const {
        std::set<std::tuple<int, int, int>> seen;
        for (const auto &e : edges) {
            if (e.u < 0 || e.u >= vertex_count() || e.v < 0 || e.v >= vertex_count())
                throw std::logic_error("edge endpoint out of range");
            auto key = std::make_tuple(std::min(e.u, e.v), std::max(e.u, e.v), e.k);
            if (!seen.insert(key).second)
                throw std::logic_error("duplicate parallel index on endpoint pair");
        }
        int ghosts = 0;
        for (const auto &v : vertices)
            if (v.role == VertexRole::Ghost) ++ghosts;
        if (ghosts > 1) throw std::logic_error("more than one ghost vertex");
    }
};

// ---------------------------------------------------------------------------
// Boxes in Z^d
// ---------------------------------------------------------------------------

inline LatticeGraph build_lattice_box(int d, int L, int64_t vertex_limit = 100000000) {
    if (d < 1) throw std::invalid_argument("build_lattice_box: d must be >= 1");
    if (L < 0) throw std::invalid_argument("build_lattice_box: L must be >= 0");
    int side = 2 * L + 1;
    int64_t count = 1;
    for (int i = 0; i < d; ++i) {
        count *= side;
        if (count > vertex_limit) throw std::length_error("build_lattice_box: vertex count over limit");
    }
    LatticeGraph g;
    g.dim = d;
    g.box_L = L;
    g.vertices.resize(count);
    // row-major ids over coordinates (-L..L)^d, first coordinate slowest
    std::vector<int64_t> stride(d, 1);
    for (int i = d - 2; i >= 0; --i) stride[i] = stride[i + 1] * side;
    for (int64_t id = 0; id < count; ++id) {
        Vertex v;
        v.id = static_cast<int>(id);
        v.coord.resize(d);
        int64_t rem = id;
        bool on_boundary = false;
        for (int i = 0; i < d; ++i) {
            int c = static_cast<int>(rem / stride[i]) - L;
            rem %= stride[i];
            v.coord[i] = c;
            if (std::abs(c) == L) on_boundary = true;
        }
        if (on_boundary || L == 0) g.boundary.insert(v.id);
        g.vertices[static_cast<size_t>(id)] = std::move(v);
    }
    int eid = 0;
    for (int64_t id = 0; id < count; ++id) {
        for (int i = 0; i < d; ++i) {
            if (static_cast<int>(g.vertices[id].coord[i]) == L) continue;
            int64_t nb = id + stride[i];
            Edge e;
            e.id = eid;
            e.u = static_cast<int>(id);
            e.v = static_cast<int>(nb);
            e.k = 1;
            e.slot = eid;
            g.edges.push_back(e);
            ++eid;
        }
    }
    g.check_invariants();
    return g;
}

// ---------------------------------------------------------------------------
// Subdivision: each edge becomes a path of n segments through n-1 new
// vertices; every segment gets a fresh slot.
// ---------------------------------------------------------------------------

inline LatticeGraph subdivide_edges(const LatticeGraph &g, int n) {
    if (n < 1) throw std::invalid_argument("subdivide_edges: n must be >= 1");
    if (n == 1) return g;
    LatticeGraph out;
    out.dim = g.dim;
    out.box_L = g.box_L;
    out.subdiv_n = n;
    out.vertices = g.vertices;
    out.boundary = g.boundary;
    out.ghost_id = g.ghost_id;
    int vid = g.vertex_count();
    int eid = 0;
    for (const auto &e : g.edges) {
        const auto &cu = g.vertices[e.u].coord;
        const auto &cv = g.vertices[e.v].coord;
        int prev = e.u;
        for (int s = 1; s <= n; ++s) {
            int next;
            if (s == n) {
                next = e.v;
            } else {
                Vertex w;
                w.id = vid++;
                w.role = VertexRole::Subdivision;
                w.coord.resize(cu.size());
                for (size_t i = 0; i < cu.size(); ++i)
                    w.coord[i] = cu[i] + (cv[i] - cu[i]) * s / n;
                out.vertices.push_back(w);
                next = w.id;
            }
            Edge seg;
            seg.id = eid;
            seg.u = prev;
            seg.v = next;
            seg.k = 1;
            seg.slot = eid;
            out.edges.push_back(seg);
            ++eid;
            prev = next;
        }
    }
    out.check_invariants();
    return out;
}

// ---------------------------------------------------------------------------
// Parallelization: each edge is replaced by n parallel copies indexed 1..n,
// each with its own slot.
// ---------------------------------------------------------------------------

inline LatticeGraph parallelize_edges(const LatticeGraph &g, int n) {
    if (n < 1) throw std::invalid_argument("parallelize_edges: n must be >= 1");
    if (n == 1) return g;
    LatticeGraph out;
    out.dim = g.dim;
    out.box_L = g.box_L;
    out.subdiv_n = n;
    out.vertices = g.vertices;
    out.boundary = g.boundary;
    out.ghost_id = g.ghost_id;
    int eid = 0;
    for (const auto &e : g.edges) {
        for (int k = 1; k <= n; ++k) {
            Edge c;
            c.id = eid;
            c.u = e.u;
            c.v = e.v;
            c.k = k;
            c.slot = eid;
            out.edges.push_back(c);
            ++eid;
        }
    }
    out.check_invariants();
    return out;
}

// ---------------------------------------------------------------------------
// Ghost augmentation: one ghost vertex joined to every boundary vertex,
// plus one extra edge to the origin (the lambda slot).
// ---------------------------------------------------------------------------

inline LatticeGraph ghost_augment(const LatticeGraph &g) {
    if (g.has_ghost()) throw std::logic_error("ghost_augment: graph already has a ghost");
    int origin = g.origin();
    if (origin < 0) throw std::invalid_argument("ghost_augment: graph has no origin vertex");
    LatticeGraph out = g;
    Vertex ghost;
    ghost.id = out.vertex_count();
    ghost.role = VertexRole::Ghost;
    ghost.coord.assign(g.vertices[0].coord.size(), 0.0);
    out.vertices.push_back(ghost);
    out.ghost_id = ghost.id;
    int eid = out.edge_count();
    for (int b : g.boundary) {
        Edge e;
        e.id = eid++;
        e.u = b;
        e.v = ghost.id;
        e.k = 1;
        e.slot = e.id;
        out.edges.push_back(e);
    }
    Edge lam;
    lam.id = eid++;
    lam.u = origin;
    lam.v = ghost.id;
    lam.k = g.boundary.count(origin) ? 2 : 1;
    lam.slot = lam.id;
    out.edges.push_back(lam);
    out.lambda_edge = lam.id;
    out.check_invariants();
    return out;
}

// ---------------------------------------------------------------------------
// Vertex identification.  The merged vertex keeps the smaller id; self-loops
// are dropped (their Gibbs factor is the constant at zero increment).
// ---------------------------------------------------------------------------

inline LatticeGraph identify_vertices(const LatticeGraph &g, int a, int b) {
    if (a == b) throw std::invalid_argument("identify_vertices: identical ids");
    if (a < 0 || b < 0 || a >= g.vertex_count() || b >= g.vertex_count())
        throw std::invalid_argument("identify_vertices: unknown vertex id");
    int keep = std::min(a, b), drop = std::max(a, b);
    LatticeGraph out;
    out.dim = g.dim;
    out.box_L = g.box_L;
    out.subdiv_n = g.subdiv_n;
    std::vector<int> remap(g.vertex_count());
    int vid = 0;
    for (const auto &v : g.vertices) {
        if (v.id == drop) { remap[v.id] = -1; continue; }
        remap[v.id] = vid;
        Vertex w = v;
        w.id = vid++;
        out.vertices.push_back(w);
    }
    remap[drop] = remap[keep];
    for (int bid : g.boundary)
        out.boundary.insert(remap[bid]);
    if (g.ghost_id >= 0) out.ghost_id = remap[g.ghost_id];
    std::map<std::pair<int, int>, int> kcount;
    int eid = 0;
    for (const auto &e : g.edges) {
        int u = remap[e.u], v = remap[e.v];
        if (u == v) continue; // self-loop dropped
        Edge c;
        c.id = eid;
        c.u = std::min(u, v);
        c.v = std::max(u, v);
        c.k = ++kcount[{c.u, c.v}];
        c.slot = e.slot;
        if (e.id == g.lambda_edge) out.lambda_edge = eid;
        out.edges.push_back(c);
        ++eid;
    }
    out.check_invariants();
    return out;
}

// ---------------------------------------------------------------------------
// Deterministic spanning tree: breadth-first from the ghost when present,
// else from the origin (falling back to vertex 0), edges explored in id
// order so ties always break the same way.
// ---------------------------------------------------------------------------

inline std::vector<int> spanning_tree(const LatticeGraph &g) {
    if (g.vertex_count() == 0) return {};
    int root = g.has_ghost() ? g.ghost_id : g.origin();
    if (root < 0) root = 0;
    auto inc = g.incidence();
    for (auto &lst : inc) std::sort(lst.begin(), lst.end());
    std::vector<int> tree;
    std::vector<char> seen(g.vertex_count(), 0);
    std::deque<int> queue{root};
    seen[root] = 1;
    while (!queue.empty()) {
        int x = queue.front();
        queue.pop_front();
        for (int eid : inc[x]) {
            const auto &e = g.edges[eid];
            int y = e.u == x ? e.v : e.u;
            if (seen[y]) continue;
            seen[y] = 1;
            tree.push_back(eid);
            queue.push_back(y);
        }
    }
    for (char s : seen)
        if (!s) throw std::runtime_error("spanning_tree: graph is disconnected");
    std::sort(tree.begin(), tree.end());
    return tree;
}

// ---------------------------------------------------------------------------
// Two-dimensional shift-invariant graphs.  Cell vertices are embedded points,
// cell edges join vertex i of the cell at lattice offset (0,0) to vertex j of
// the cell at offset (da,db).  Everything outside [-L,L]^2 collapses into one
// frozen exterior vertex, which implements the zero boundary condition.
// ---------------------------------------------------------------------------

struct ShiftInvariantSpec {
    std::vector<std::array<double, 2>> cell_vertices;
    struct CellEdge { int i, j, da, db; };
    std::vector<CellEdge> cell_edges;
    std::array<double, 2> v1{1.0, 0.0}, v2{0.0, 1.0};
    int coarse_radius = 1; // R_G

    void validate() const {
        double det = v1[0] * v2[1] - v1[1] * v2[0];
        if (std::abs(det) < 1e-12)
            throw std::invalid_argument("shift-invariant spec: lattice vectors not full rank");
        bool has_zero = false;
        for (auto &p : cell_vertices)
            if (p[0] == 0.0 && p[1] == 0.0) has_zero = true;
        if (!has_zero) throw std::invalid_argument("shift-invariant spec: 0 must be a vertex");
        for (auto &e : cell_edges)
            if (e.i < 0 || e.j < 0 || e.i >= static_cast<int>(cell_vertices.size()) ||
                e.j >= static_cast<int>(cell_vertices.size()))
                throw std::invalid_argument("shift-invariant spec: edge endpoint out of range");
    }

    static ShiftInvariantSpec square_lattice() {
        ShiftInvariantSpec s;
        s.cell_vertices = {{0.0, 0.0}};
        s.cell_edges = {{0, 0, 1, 0}, {0, 0, 0, 1}};
        return s;
    }

    static ShiftInvariantSpec triangular_lattice() {
        ShiftInvariantSpec s;
        s.cell_vertices = {{0.0, 0.0}};
        s.cell_edges = {{0, 0, 1, 0}, {0, 0, 0, 1}, {0, 0, 1, 1}};
        s.v1 = {1.0, 0.0};
        s.v2 = {0.5, 0.8660254037844386};
        return s;
    }
};

inline LatticeGraph build_shift_invariant(const ShiftInvariantSpec &spec, int L) {
    spec.validate();
    if (L < 0) throw std::invalid_argument("build_shift_invariant: L must be >= 0");
    LatticeGraph g;
    g.dim = 2;
    g.box_L = L;
    double reach = 0.0;
    for (auto &p : spec.cell_vertices) reach = std::max(reach, std::abs(p[0]) + std::abs(p[1]));
    for (auto &e : spec.cell_edges) reach = std::max(reach, static_cast<double>(std::abs(e.da) + std::abs(e.db)));
    double det = spec.v1[0] * spec.v2[1] - spec.v1[1] * spec.v2[0];
    double scale = std::min({std::hypot(spec.v1[0], spec.v1[1]), std::hypot(spec.v2[0], spec.v2[1]),
                             std::abs(det)});
    int R = static_cast<int>((L + reach + 2.0) / std::max(scale, 1e-6)) + 2;

    auto inside = [L](double x, double y) {
        return x >= -L - 1e-9 && x <= L + 1e-9 && y >= -L - 1e-9 && y <= L + 1e-9;
    };
    auto position = [&spec](int a, int b, int i) {
        return std::array<double, 2>{spec.cell_vertices[i][0] + a * spec.v1[0] + b * spec.v2[0],
                                     spec.cell_vertices[i][1] + a * spec.v1[1] + b * spec.v2[1]};
    };

    std::map<std::tuple<int, int, int>, int> vid_of;
    for (int a = -R; a <= R; ++a)
        for (int b = -R; b <= R; ++b)
            for (int i = 0; i < static_cast<int>(spec.cell_vertices.size()); ++i) {
                auto p = position(a, b, i);
                if (!inside(p[0], p[1])) continue;
                Vertex v;
                v.id = g.vertex_count();
                v.coord = {p[0], p[1]};
                vid_of[{a, b, i}] = v.id;
                g.vertices.push_back(v);
            }
    // one frozen exterior vertex
    Vertex ext;
    ext.id = g.vertex_count();
    ext.coord = {static_cast<double>(L + 1), static_cast<double>(L + 1)};
    g.vertices.push_back(ext);
    g.boundary.insert(ext.id);
    int exterior = ext.id;

    std::map<std::pair<int, int>, int> kcount;
    std::set<std::tuple<int, int, int, int, int>> placed; // dedupe cell-edge instances
    int eid = 0;
    for (int a = -R - 2; a <= R + 2; ++a)
        for (int b = -R - 2; b <= R + 2; ++b)
            for (int c = 0; c < static_cast<int>(spec.cell_edges.size()); ++c) {
                const auto &ce = spec.cell_edges[c];
                auto pu = position(a, b, ce.i);
                auto pv = position(a + ce.da, b + ce.db, ce.j);
                bool iu = inside(pu[0], pu[1]), iv = inside(pv[0], pv[1]);
                if (!iu && !iv) continue;
                if (!placed.insert({a, b, c, 0, 0}).second) continue;
                int u = iu ? vid_of.at({a, b, ce.i}) : exterior;
                int v = iv ? vid_of.at({a + ce.da, b + ce.db, ce.j}) : exterior;
                if (u == v) continue;
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
    spanning_tree(g); // throws if the clipped graph is disconnected
    return g;
}

// ---------------------------------------------------------------------------
// Text serialization: header "d L n", vertex lines "V id x y [z] role",
// edge lines "E id u v k slot".
// ---------------------------------------------------------------------------

inline void save_graph(const LatticeGraph &g, std::ostream &out) {
    out << g.dim << ' ' << g.box_L << ' ' << g.subdiv_n << '\n';
    for (const auto &v : g.vertices) {
        out << "V " << v.id;
        for (double c : v.coord) out << ' ' << c;
        const char *role = v.role == VertexRole::Lattice ? "lattice"
                          : v.role == VertexRole::Subdivision ? "subdivision" : "ghost";
        out << ' ' << role << '\n';
    }
    for (const auto &e : g.edges)
        out << "E " << e.id << ' ' << e.u << ' ' << e.v << ' ' << e.k << ' ' << e.slot << '\n';
    out << "B";
    for (int b : g.boundary) out << ' ' << b;
    out << "\nG " << g.ghost_id << ' ' << g.lambda_edge << '\n';
}

inline LatticeGraph load_graph(std::istream &in) {
    LatticeGraph g;
    if (!(in >> g.dim >> g.box_L >> g.subdiv_n))
        throw std::runtime_error("load_graph: bad header");
    std::string tag;
    while (in >> tag) {
        if (tag == "V") {
            Vertex v;
            in >> v.id;
            int ncoord = g.dim;
            v.coord.resize(ncoord);
            for (int i = 0; i < ncoord; ++i) in >> v.coord[i];
            std::string role;
            in >> role;
            v.role = role == "ghost" ? VertexRole::Ghost
                   : role == "subdivision" ? VertexRole::Subdivision : VertexRole::Lattice;
            if (v.id != static_cast<int>(g.vertices.size()))
                throw std::runtime_error("load_graph: vertex ids must be dense and ordered");
            g.vertices.push_back(v);
        } else if (tag == "E") {
            Edge e;
            in >> e.id >> e.u >> e.v >> e.k >> e.slot;
            g.edges.push_back(e);
        } else if (tag == "B") {
            std::string line;
            std::getline(in, line);
            std::istringstream ls(line);
            int b;
            while (ls >> b) g.boundary.insert(b);
        } else if (tag == "G") {
            in >> g.ghost_id >> g.lambda_edge;
        } else {
            throw std::runtime_error("load_graph: unknown tag " + tag);
        }
    }
    g.check_invariants();
    return g;
}

inline void save_graph_file(const LatticeGraph &g, const std::string &path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    save_graph(g, out);
}

inline LatticeGraph load_graph_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return load_graph(in);
}

} // namespace quenchlab
