#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "quenchlab/lab.hpp"

using namespace quenchlab;

TEST_CASE("experiment config parsing") {
    std::istringstream in(
        "scenario = duality-suite\n"
        "seed = 9\n"
        "beta = [0.5, 1, 2]  # grid\n"
        "L = [0, 1]\n"
        "out = /tmp\n"
        "sweeps = 500\n");
    auto cfg = parse_experiment_config(in);
    CHECK(cfg.scenario == "duality-suite");
    CHECK(cfg.seed == 9);
    CHECK(cfg.arrays["beta"].size() == 3);
    CHECK(cfg.arrays["beta"][2] == 2.0);
    CHECK(cfg.int_array("L", {})[1] == 1);
    CHECK(cfg.out_dir == "/tmp");
    CHECK(cfg.scalar_or("sweeps", 0) == 500);
}

TEST_CASE("empty grids are rejected") {
    ExperimentConfig cfg;
    cfg.scenario = "deloc-gff";
    cfg.arrays["L"] = {};
    std::ostringstream log;
    CHECK_THROWS_AS(run_experiment(cfg, log), std::invalid_argument);
    ExperimentConfig bad;
    bad.scenario = "no-such-scenario";
    CHECK_THROWS_AS(run_experiment(bad, log), std::invalid_argument);
}

TEST_CASE("experiment reruns are byte-identical") {
    ExperimentConfig cfg;
    cfg.scenario = "duality-suite";
    cfg.out_dir = "/tmp";
    cfg.arrays["lambda"] = {2.0};
    cfg.arrays["L"] = {0.0, 1.0};
    cfg.arrays["n"] = {1.0};
    std::ostringstream log;
    run_experiment(cfg, log);
    std::ifstream f1("/tmp/duality-suite.csv");
    std::stringstream s1;
    s1 << f1.rdbuf();
    run_experiment(cfg, log);
    std::ifstream f2("/tmp/duality-suite.csv");
    std::stringstream s2;
    s2 << f2.rdbuf();
    CHECK(s1.str() == s2.str());
    CHECK(s1.str().find("height_var") != std::string::npos);
}

TEST_CASE("gibbs spec round trip through the text format") {
    auto g = build_lattice_box(2, 1);
    save_graph_file(g, "/tmp/qlgraph.txt");
    {
        std::ofstream out("/tmp/qlspec.txt");
        out << "family = angle\n"
            << "graph = /tmp/qlgraph.txt\n"
            << "default = xy 2.0\n"
            << "slot 3 = villain 0.5\n"
            << "disorder_rule = site_product\n";
    }
    auto spec = load_gibbs_spec("/tmp/qlspec.txt");
    CHECK(spec.family == ModelFamily::Angle);
    CHECK(spec.graph.vertex_count() == 9);
    CHECK(spec.default_pot.kind == EdgePotential::Kind::XY);
    CHECK(spec.slot_potential(3).kind == EdgePotential::Kind::Villain);
    CHECK(spec.rule == DisorderRule::SiteProduct);
    auto r = exact_angle(spec, {4, 8, 1});
    CHECK(r.value > 0.0);
}

TEST_CASE("mixing measure table file") {
    {
        std::ofstream out("/tmp/qlmix.txt");
        out << "# J w\n1.0 0.25\n2.0 0.75\n";
    }
    auto m = MixingMeasure::load("/tmp/qlmix.txt");
    CHECK(m.atoms.size() == 2);
    CHECK(m.atoms[1].second == doctest::Approx(0.75));
}

TEST_CASE("csv numbers are stable") {
    CHECK(csv_num(0.1) == csv_num(0.1));
    CHECK(csv_num(1.0) == "1");
}

#include "quenchlab/acceptance.hpp"

TEST_CASE("acceptance rows carry anchors and write a report") {
    std::ostringstream log;
    auto rows = run_acceptance(log, "c7", "/tmp/qlreport.csv");
    CHECK(!rows.empty());
    for (const auto &r : rows) {
        CHECK(!r.anchor.empty());
        CHECK(!r.id.empty());
        CHECK(r.pass);
    }
    std::ifstream in("/tmp/qlreport.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header.find("verdict") != std::string::npos);
    // a tampered margin fails the verdict logic
    AcceptanceContext ctx;
    std::ostringstream sink;
    ctx.log = &sink;
    ctx.check_ge("tampered", "forced failure fixture", 1.0, 0.5, 1e-9);
    CHECK_FALSE(ctx.rows.back().pass);
}

TEST_CASE("experiment budget marker appears when the budget is exhausted") {
    ExperimentConfig cfg;
    cfg.scenario = "deloc-gff";
    cfg.out_dir = "/tmp";
    cfg.arrays["beta"] = {1.0};
    cfg.arrays["p"] = {1.0};
    cfg.arrays["L"] = {2.0, 3.0, 4.0};
    cfg.scalars["sweeps"] = 4000;
    cfg.scalars["burnin"] = 400;
    cfg.scalars["budget_seconds"] = 1e-9;
    std::ostringstream log;
    run_experiment(cfg, log);
    std::ifstream in("/tmp/deloc-gff.csv");
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str().find("budget-exceeded") != std::string::npos);
}

TEST_CASE("csv cells with commas are quoted") {
    CsvTable t;
    t.header = {"a", "b"};
    t.add_row({"plain", "with, comma and \"quote\""});
    std::ostringstream out;
    t.write(out);
    CHECK(out.str() == "a,b\nplain,\"with, comma and \"\"quote\"\"\"\n");
}
