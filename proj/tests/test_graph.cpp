#include <doctest.h>

#include <set>
#include <sstream>

#include "quenchlab/graph.hpp"

using namespace quenchlab;

namespace {

// brute-force count of nearest-neighbour pairs in {-L..L}^d
int brute_edge_count(int d, int L) {
    int side = 2 * L + 1;
    int64_t n = 1;
    for (int i = 0; i < d; ++i) n *= side;
    auto coord = [&](int64_t id, int i) {
        for (int j = d - 1; j > i; --j) id /= side;
        return static_cast<int>(id % side) - L;
    };
    int count = 0;
    for (int64_t a = 0; a < n; ++a)
        for (int64_t b = a + 1; b < n; ++b) {
            int dist = 0;
            for (int i = 0; i < d; ++i) dist += std::abs(coord(a, i) - coord(b, i));
            if (dist == 1) ++count;
        }
    return count;
}

} // namespace

TEST_CASE("lattice boxes") {
    auto g = build_lattice_box(2, 1);
    CHECK(g.vertex_count() == 9);
    CHECK(g.edge_count() == 12);
    CHECK(g.boundary.size() == 8);

    auto g1 = build_lattice_box(1, 0);
    CHECK(g1.vertex_count() == 1);
    CHECK(g1.edge_count() == 0);
    CHECK(g1.boundary.count(0) == 1);

    auto g3 = build_lattice_box(3, 1);
    CHECK(g3.vertex_count() == 27);
    CHECK(g3.edge_count() == 54);
    CHECK(g3.edge_count() == brute_edge_count(3, 1));

    CHECK_THROWS_AS(build_lattice_box(0, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_lattice_box(2, -1), std::invalid_argument);
    CHECK_THROWS_AS(build_lattice_box(6, 30), std::length_error);
}

TEST_CASE("subdivision") {
    auto g = build_lattice_box(2, 1);
    auto s = subdivide_edges(g, 4);
    CHECK(s.vertex_count() == 9 + 12 * 3);
    CHECK(s.edge_count() == 12 * 4);
    auto same = subdivide_edges(g, 1);
    CHECK(same.vertex_count() == g.vertex_count());
    CHECK(same.edge_count() == g.edge_count());
    CHECK_THROWS_AS(subdivide_edges(g, 0), std::invalid_argument);

    LatticeGraph single;
    single.dim = 1;
    single.vertices = {{0, {0.0}, VertexRole::Lattice}, {1, {1.0}, VertexRole::Lattice}};
    single.edges = {{0, 0, 1, 1, 0}};
    auto path = subdivide_edges(single, 3);
    CHECK(path.vertex_count() == 4);
    CHECK(path.edge_count() == 3);
    int subdivision_count = 0;
    for (auto &v : path.vertices)
        if (v.role == VertexRole::Subdivision) ++subdivision_count;
    CHECK(subdivision_count == 2);
}

TEST_CASE("subdivision round trip: contracting the added vertices restores the graph") {
    auto g = build_lattice_box(2, 1);
    auto s = subdivide_edges(g, 3);
    // contract each subdivision vertex into a lattice endpoint
    LatticeGraph cur = s;
    while (true) {
        int sub = -1;
        for (auto &v : cur.vertices)
            if (v.role == VertexRole::Subdivision) {
                sub = v.id;
                break;
            }
        if (sub < 0) break;
        int partner = -1;
        for (auto &e : cur.edges)
            if (e.u == sub || e.v == sub) {
                partner = e.u == sub ? e.v : e.u;
                break;
            }
        cur = identify_vertices(cur, sub, partner);
    }
    CHECK(cur.vertex_count() == g.vertex_count());
    // multiplicity between lattice vertices is restored
    std::multiset<std::pair<int, int>> orig, back;
    for (auto &e : g.edges) orig.insert({std::min(e.u, e.v), std::max(e.u, e.v)});
    for (auto &e : cur.edges) back.insert({std::min(e.u, e.v), std::max(e.u, e.v)});
    CHECK(orig == back);
}

TEST_CASE("parallel edges") {
    auto g = build_lattice_box(2, 1);
    auto m = parallelize_edges(g, 3);
    CHECK(m.edge_count() == 36);
    CHECK(m.vertex_count() == 9);
    std::set<int> ks;
    for (auto &e : m.edges)
        if (std::min(e.u, e.v) == 0 && std::max(e.u, e.v) == 1) ks.insert(e.k);
    CHECK(ks == std::set<int>{1, 2, 3});
    CHECK_THROWS_AS(parallelize_edges(g, 0), std::invalid_argument);

    LatticeGraph two;
    two.dim = 1;
    two.vertices = {{0, {0.0}, VertexRole::Lattice}, {1, {1.0}, VertexRole::Lattice}};
    two.edges = {{0, 0, 1, 1, 0}};
    auto p = parallelize_edges(two, 2);
    CHECK(p.edge_count() == 2);
    CHECK(p.edges[0].k != p.edges[1].k);
}

TEST_CASE("ghost augmentation") {
    auto g = ghost_augment(parallelize_edges(build_lattice_box(2, 1), 2));
    CHECK(g.has_ghost());
    int deg = 0;
    for (auto &e : g.edges)
        if (e.u == g.ghost_id || e.v == g.ghost_id) ++deg;
    CHECK(deg == 9); // 8 boundary edges plus the distinguished edge to 0
    CHECK(g.lambda_edge >= 0);
    CHECK_THROWS_AS(ghost_augment(g), std::logic_error);

    auto g0 = ghost_augment(build_lattice_box(2, 0));
    int deg0 = 0;
    for (auto &e : g0.edges)
        if (e.u == g0.ghost_id || e.v == g0.ghost_id) ++deg0;
    CHECK(deg0 == 2);
}

TEST_CASE("vertex identification") {
    LatticeGraph path;
    path.dim = 1;
    path.vertices = {{0, {0.0}, VertexRole::Lattice},
                     {1, {1.0}, VertexRole::Lattice},
                     {2, {2.0}, VertexRole::Lattice}};
    path.edges = {{0, 0, 1, 1, 0}, {1, 1, 2, 1, 1}};
    auto merged = identify_vertices(path, 0, 2);
    CHECK(merged.vertex_count() == 2);
    CHECK(merged.edge_count() == 2);
    CHECK(merged.edges[0].k != merged.edges[1].k);

    LatticeGraph single;
    single.dim = 1;
    single.vertices = {{0, {0.0}, VertexRole::Lattice}, {1, {1.0}, VertexRole::Lattice}};
    single.edges = {{0, 0, 1, 1, 0}};
    auto loop = identify_vertices(single, 0, 1);
    CHECK(loop.vertex_count() == 1);
    CHECK(loop.edge_count() == 0);

    auto box = build_lattice_box(2, 1);
    auto corners = identify_vertices(box, 0, 8);
    CHECK(corners.vertex_count() == 8);
    CHECK(corners.edge_count() == 12);

    CHECK_THROWS_AS(identify_vertices(box, 3, 3), std::invalid_argument);
    CHECK_THROWS_AS(identify_vertices(box, 0, 99), std::invalid_argument);
}

TEST_CASE("identification never raises the vertex count and keeps non-loop multiplicity") {
    auto box = build_lattice_box(2, 1);
    auto merged = identify_vertices(box, 1, 7);
    CHECK(merged.vertex_count() == 8);
    // edges between distinct classes preserved: none of the 12 edges joined 1 and 7
    CHECK(merged.edge_count() == 12);
}

TEST_CASE("spanning tree determinism and size") {
    auto g = build_lattice_box(2, 1);
    auto t1 = spanning_tree(g);
    auto t2 = spanning_tree(g);
    CHECK(t1 == t2);
    CHECK(static_cast<int>(t1.size()) == g.vertex_count() - 1);

    LatticeGraph two;
    two.dim = 1;
    two.vertices = {{0, {0.0}, VertexRole::Lattice}, {1, {1.0}, VertexRole::Lattice}};
    two.edges = {{0, 0, 1, 1, 0}, {1, 0, 1, 2, 1}};
    auto t = spanning_tree(two);
    CHECK(t == std::vector<int>{0}); // tie broken toward the smaller edge id

    LatticeGraph disconnected;
    disconnected.dim = 1;
    disconnected.vertices = {{0, {0.0}, VertexRole::Lattice}, {1, {1.0}, VertexRole::Lattice}};
    CHECK_THROWS_AS(spanning_tree(disconnected), std::runtime_error);
}

TEST_CASE("spanning tree is acyclic and spanning") {
    auto g = ghost_augment(parallelize_edges(build_lattice_box(2, 1), 2));
    auto tree = spanning_tree(g);
    CHECK(static_cast<int>(tree.size()) == g.vertex_count() - 1);
    // acyclicity: union-find never joins two already-joined vertices
    std::vector<int> parent(g.vertex_count());
    for (int i = 0; i < g.vertex_count(); ++i) parent[i] = i;
    std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    for (int eid : tree) {
        int a = find(g.edges[eid].u), b = find(g.edges[eid].v);
        CHECK(a != b);
        parent[a] = b;
    }
}

TEST_CASE("shift-invariant graphs") {
    auto sq = build_shift_invariant(ShiftInvariantSpec::square_lattice(), 1);
    CHECK(sq.vertex_count() == 10); // 3x3 interior plus the frozen exterior vertex
    int exterior_edges = 0, interior_edges = 0;
    for (auto &e : sq.edges) {
        bool ext = sq.boundary.count(e.u) || sq.boundary.count(e.v);
        (ext ? exterior_edges : interior_edges)++;
    }
    CHECK(interior_edges == 12);
    CHECK(exterior_edges == 12);

    auto tri = build_shift_invariant(ShiftInvariantSpec::triangular_lattice(), 2);
    // interior vertices away from the clip have degree 6
    auto inc = tri.incidence();
    int origin = tri.origin();
    CHECK(origin >= 0);
    CHECK(inc[origin].size() == 6);

    // a long diagonal edge creates graph-distance-2 couplings
    ShiftInvariantSpec longspec = ShiftInvariantSpec::square_lattice();
    longspec.cell_edges.push_back({0, 0, 2, 1});
    auto lg = build_shift_invariant(longspec, 2);
    bool found = false;
    for (auto &e : lg.edges) {
        auto &cu = lg.vertices[e.u].coord, &cv = lg.vertices[e.v].coord;
        if (lg.boundary.count(e.u) || lg.boundary.count(e.v)) continue;
        if (std::abs(cu[0] - cv[0]) + std::abs(cu[1] - cv[1]) == 3.0) found = true;
    }
    CHECK(found);

    ShiftInvariantSpec bad = ShiftInvariantSpec::square_lattice();
    bad.v2 = {2.0, 0.0}; // parallel vectors
    CHECK_THROWS_AS(build_shift_invariant(bad, 1), std::invalid_argument);
}

TEST_CASE("graph text round trip") {
    auto g = ghost_augment(build_lattice_box(2, 1));
    std::stringstream ss;
    save_graph(g, ss);
    auto h = load_graph(ss);
    CHECK(h.vertex_count() == g.vertex_count());
    CHECK(h.edge_count() == g.edge_count());
    CHECK(h.ghost_id == g.ghost_id);
    CHECK(h.lambda_edge == g.lambda_edge);
    CHECK(h.boundary == g.boundary);
    for (int i = 0; i < g.edge_count(); ++i) {
        CHECK(h.edges[i].u == g.edges[i].u);
        CHECK(h.edges[i].v == g.edges[i].v);
        CHECK(h.edges[i].k == g.edges[i].k);
    }
}
