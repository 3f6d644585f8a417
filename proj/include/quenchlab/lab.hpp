#pragma once

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "quenchlab/duality.hpp"
#include "quenchlab/exact.hpp"
#include "quenchlab/mcmc.hpp"
#include "quenchlab/renorm.hpp"

namespace quenchlab {

// ---------------------------------------------------------------------------
// CSV output, formatted for byte-stable re-runs
// ---------------------------------------------------------------------------

inline std::string csv_num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    static std::string quote(const std::string &cell) {
        if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
        std::string out = "\"";
        for (char c : cell) {
            if (c == '"') out += '"';
            out += c;
        }
        out += '"';
        return out;
    }
    void add_row(std::vector<std::string> cells) { rows.push_back(std::move(cells)); }
    void write(std::ostream &out) const {
        for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << quote(header[i]);
        out << '\n';
        for (const auto &r : rows) {
            for (size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << quote(r[i]);
            out << '\n';
        }
    }
    void write_file(const std::string &path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot open " + path);
        write(out);
    }
};

// ---------------------------------------------------------------------------
// Declarative experiment configuration: `key = value`, arrays in brackets
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    std::string scenario;
    uint64_t seed = 1;
    std::string out_dir = ".";
    std::map<std::string, std::vector<double>> arrays;
    std::map<std::string, double> scalars;
    std::map<std::string, std::string> strings;

    std::vector<double> array_or(const std::string &key, std::vector<double> dflt) const {
        auto it = arrays.find(key);
        return it == arrays.end() ? dflt : it->second;
    }
    double scalar_or(const std::string &key, double dflt) const {
        auto it = scalars.find(key);
        return it == scalars.end() ? dflt : it->second;
    }
    std::vector<int> int_array(const std::string &key, std::vector<int> dflt) const {
        auto it = arrays.find(key);
        if (it == arrays.end()) return dflt;
        std::vector<int> out;
        for (double x : it->second) out.push_back(static_cast<int>(x));
        return out;
    }
};

inline ExperimentConfig parse_experiment_config(std::istream &in) {
    ExperimentConfig cfg;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            size_t a = s.find_first_not_of(" \t");
            size_t b = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty()) continue;
        if (val.front() == '[') {
            if (val.back() != ']') throw std::runtime_error("config: unterminated array for " + key);
            std::string body = val.substr(1, val.size() - 2);
            for (auto &c : body)
                if (c == ',') c = ' ';
            std::istringstream bs(body);
            std::vector<double> xs;
            double x;
            while (bs >> x) xs.push_back(x);
            cfg.arrays[key] = std::move(xs);
        } else {
            std::istringstream vs(val);
            double x;
            if (vs >> x && vs.eof()) {
                cfg.scalars[key] = x;
            } else {
                cfg.strings[key] = val;
            }
        }
    }
    if (cfg.strings.count("scenario")) cfg.scenario = cfg.strings["scenario"];
    if (cfg.scalars.count("seed")) cfg.seed = static_cast<uint64_t>(cfg.scalars["seed"]);
    if (cfg.strings.count("out")) cfg.out_dir = cfg.strings["out"];
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return parse_experiment_config(in);
}

// ---------------------------------------------------------------------------
// Gibbs specifications from a declarative text config
// ---------------------------------------------------------------------------

inline EdgePotential parse_potential(const std::string &text) {
    std::istringstream in(text);
    std::string kind;
    in >> kind;
    double beta = 0.0;
    in >> beta;
    if (kind == "xy") return EdgePotential::xy(beta);
    if (kind == "villain") return EdgePotential::villain(beta);
    if (kind == "gaussian") return EdgePotential::gaussian_height(beta);
    if (kind == "bessel") return EdgePotential::bessel_height(beta);
    if (kind == "free") return EdgePotential::free_edge();
    if (kind == "frozen") return EdgePotential::frozen();
    throw std::runtime_error("unknown potential kind: " + kind);
}

inline GibbsSpec load_gibbs_spec(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    GibbsSpec spec;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        if (key == "family") {
            std::string eq, fam;
            ls >> eq >> fam;
            spec.family = fam == "height" ? ModelFamily::Height : ModelFamily::Angle;
        } else if (key == "graph") {
            std::string eq, p;
            ls >> eq >> p;
            spec.graph = load_graph_file(p);
        } else if (key == "default") {
            std::string eq, rest;
            ls >> eq;
            std::getline(ls, rest);
            spec.default_pot = parse_potential(rest);
        } else if (key == "slot") {
            int id;
            std::string eq, rest;
            ls >> id >> eq;
            std::getline(ls, rest);
            spec.slot_pot[id] = parse_potential(rest);
        } else if (key == "frozen") {
            std::string eq;
            ls >> eq;
            int v;
            while (ls >> v) spec.frozen.insert(v);
        } else if (key == "lambda") {
            std::string eq;
            ls >> eq >> spec.lambda;
        } else if (key == "lambda_site") {
            std::string eq;
            ls >> eq >> spec.lambda_site;
        } else if (key == "multi_n") {
            std::string eq;
            ls >> eq >> spec.multi_n;
        } else if (key == "disorder_rule") {
            std::string eq, rule;
            ls >> eq >> rule;
            spec.rule = rule == "site_product" ? DisorderRule::SiteProduct
                      : rule == "multigraph"   ? DisorderRule::MultigraphEndpoints
                      : rule == "edge"         ? DisorderRule::EdgeFactor
                                               : DisorderRule::None;
        } else if (key == "disorder") {
            std::string eq, p;
            ls >> eq >> p;
            std::ifstream din(p);
            if (!din) throw std::runtime_error("cannot open " + p);
            auto cfg = load_disorder(din);
            if (cfg.kind == DisorderKind::Site)
                spec.site_r = cfg.bits;
            else
                spec.edge_w = cfg.bits;
        }
    }
    return spec;
}

// ---------------------------------------------------------------------------
// Experiment scenarios
// ---------------------------------------------------------------------------

inline void run_experiment(const ExperimentConfig &cfg, std::ostream &log) {
    if (cfg.scenario.empty()) throw std::invalid_argument("experiment: no scenario given");
    auto outfile = [&](const std::string &name) { return cfg.out_dir + "/" + name; };

    if (cfg.scenario == "deloc-gff" || cfg.scenario == "deloc-zxy") {
        auto betas = cfg.array_or("beta", {10.0});
        auto ps = cfg.array_or("p", {1.0});
        auto Ls = cfg.int_array("L", {8, 16, 32});
        if (betas.empty() || ps.empty() || Ls.empty())
            throw std::invalid_argument("experiment: empty grid");
        ChainConfig cc;
        cc.sweeps = static_cast<long long>(cfg.scalar_or("sweeps", 20000));
        cc.burnin = static_cast<long long>(cfg.scalar_or("burnin", cc.sweeps / 10));
        cc.replicas = static_cast<int>(cfg.scalar_or("replicas", 4));
        cc.seed = cfg.seed;
        int samples = static_cast<int>(cfg.scalar_or("dsamples", 6));
        double budget = cfg.scalar_or("budget_seconds", 0.0);
        if (budget < 0.0) throw std::invalid_argument("experiment: budget must be positive");
        std::string model = cfg.scenario == "deloc-gff" ? "zgff" : "zxy";
        CsvTable t;
        t.header = {"model", "beta", "p", "L", "mean", "stderr", "neff", "replicas", "dsamples"};
        std::vector<ScanRow> rows;
        auto start = std::chrono::steady_clock::now();
        bool truncated = false;
        for (double beta : betas) {
            for (double p : ps)
                for (int L : Ls) {
                    if (budget > 0.0 &&
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                                .count() > budget) {
                        truncated = true;
                        break;
                    }
                    auto part = variance_scan(model, {beta}, {p}, {L}, samples, cc);
                    rows.push_back(part[0]);
                }
            if (truncated) break;
        }
        for (auto &r : rows)
            t.add_row({r.model, csv_num(r.beta), csv_num(r.p), std::to_string(r.L),
                       csv_num(r.est.mean), csv_num(r.est.se), csv_num(r.est.neff),
                       std::to_string(r.est.replicas), std::to_string(r.est.dsamples)});
        if (truncated)
            t.add_row({"budget-exceeded", "0", "0", "0", "0", "0", "0", "0", "0"});
        // per (beta, p): variance against log L
        for (double beta : betas)
            for (double p : ps) {
                std::vector<double> x, y, se;
                for (auto &r : rows)
                    if (r.beta == beta && r.p == p) {
                        x.push_back(std::log(static_cast<double>(r.L)));
                        y.push_back(r.est.mean);
                        se.push_back(std::max(r.est.se, 1e-12));
                    }
                auto f = fit_slope(x, y, se);
                t.add_row({"fit", csv_num(beta), csv_num(p), "0", csv_num(f.slope), csv_num(f.se),
                           csv_num(f.t), "0", "0"});
            }
        t.write_file(outfile(cfg.scenario + ".csv"));
        log << "wrote " << outfile(cfg.scenario + ".csv") << "\n";
        return;
    }

    if (cfg.scenario == "bkt-villain") {
        double beta = cfg.scalar_or("beta", 5.0);
        double p = cfg.scalar_or("p", 0.9);
        bool use_xy = cfg.strings.count("potential") && cfg.strings.at("potential") == "xy";
        int L = static_cast<int>(cfg.scalar_or("L", 12));
        auto xs = cfg.int_array("x", {2, 4, 8});
        int samples = static_cast<int>(cfg.scalar_or("dsamples", 8));
        ChainConfig cc;
        cc.sweeps = static_cast<long long>(cfg.scalar_or("sweeps", 20000));
        cc.burnin = static_cast<long long>(cfg.scalar_or("burnin", cc.sweeps / 10));
        cc.replicas = static_cast<int>(cfg.scalar_or("replicas", 2));
        cc.seed = cfg.seed;

        LatticeGraph box = build_lattice_box(2, L);
        int side = 2 * L + 1;
        auto vid = [&](int x, int y) { return (x + L) * side + (y + L); };
        std::vector<TwoPoint> obs;
        for (int x : xs) obs.push_back({vid(0, 0), vid(x, 0), 1});

        std::vector<std::vector<Estimate>> per(samples);
        for (int s = 0; s < samples; ++s) {
            GibbsSpec spec;
            spec.graph = box;
            spec.family = ModelFamily::Angle;
            spec.default_pot = use_xy ? EdgePotential::xy(beta) : EdgePotential::villain(beta);
            if (p < 1.0) {
                spec.rule = DisorderRule::EdgeFactor;
                auto dis = sample_bernoulli(box, DisorderKind::Edge, p,
                                            RngStream::mix(cfg.seed ^ (0xbdd + s)));
                spec.edge_w = dis.bits;
            }
            ChainConfig c = cc;
            c.seed = RngStream::mix(cfg.seed ^ (0xcafe + s));
            per[s] = run_angle_chain(spec, c, obs);
        }
        CsvTable t;
        t.header = {"beta", "p", "L", "x", "mean", "stderr", "neff", "replicas", "dsamples"};
        for (size_t o = 0; o < obs.size(); ++o) {
            std::vector<Estimate> col(samples);
            for (int s = 0; s < samples; ++s) col[s] = per[s][o];
            auto est = combine_disorder(col);
            t.add_row({csv_num(beta), csv_num(p), std::to_string(L), std::to_string(xs[o]),
                       csv_num(est.mean), csv_num(est.se), csv_num(est.neff),
                       std::to_string(est.replicas), std::to_string(est.dsamples)});
        }
        t.write_file(outfile("bkt-villain.csv"));
        log << "wrote " << outfile("bkt-villain.csv") << "\n";
        return;
    }

    if (cfg.scenario == "duality-suite") {
        CsvTable t;
        t.header = {"L", "n", "lambda", "beta1", "beta2", "height_var", "spin_value",
                    "diff", "partition_rel_err"};
        for (int L : cfg.int_array("L", {0, 1}))
            for (int n : cfg.int_array("n", {1, 2}))
                for (double lam : cfg.array_or("lambda", {2.0, 4.0})) {
                    double b1 = cfg.scalar_or("beta1", 1.0);
                    double b2 = cfg.scalar_or("beta2", 0.75);
                    auto rep = duality_check(L, n, b1, b2, lam);
                    t.add_row({std::to_string(L), std::to_string(n), csv_num(lam), csv_num(b1),
                               csv_num(b2), csv_num(rep.height_var), csv_num(rep.spin_value),
                               csv_num(rep.diff), csv_num(rep.partition_rel_err)});
                }
        t.write_file(outfile("duality-suite.csv"));
        log << "wrote " << outfile("duality-suite.csv") << "\n";
        return;
    }

    if (cfg.scenario == "wells-suite") {
        CsvTable t;
        t.header = {"instance", "beta", "lhs", "rhs", "margin"};
        for (double beta : cfg.array_or("beta", {0.5, 1.0, 2.0})) {
            GibbsSpec spec;
            spec.graph = build_lattice_box(2, 1);
            spec.family = ModelFamily::Angle;
            spec.default_pot = EdgePotential::xy(beta);
            spec.rule = DisorderRule::SiteProduct;
            auto chk = wells_inequality_angle(spec, {4, 8, 1}, 0.25);
            t.add_row({"box1", csv_num(beta), csv_num(chk.lhs), csv_num(chk.rhs),
                       csv_num(chk.margin)});
        }
        t.write_file(outfile("wells-suite.csv"));
        log << "wrote " << outfile("wells-suite.csv") << "\n";
        return;
    }

    if (cfg.scenario == "annealed-villain") {
        MixingMeasure kappa = MixingMeasure::point_masses({{1.0, 0.5}, {2.0, 0.5}});
        double beta = cfg.scalar_or("beta", 1.0);
        auto g = build_from_edges(3, {{0, 1}, {1, 2}});
        GibbsSpec ann;
        ann.graph = g;
        ann.family = ModelFamily::Angle;
        ann.default_pot = EdgePotential::annealed(kappa, beta);
        auto full = exact_angle(ann, {0, 2, 1});
        CsvTable t;
        t.header = {"quantity", "value", "err_bound", "K", "M", "work"};
        t.add_row({"annealed_two_point", csv_num(full.value), csv_num(full.err_bound),
                   std::to_string(full.K), std::to_string(full.M), std::to_string(full.work)});
        t.write_file(outfile("annealed-villain.csv"));
        log << "wrote " << outfile("annealed-villain.csv") << "\n";
        return;
    }

    if (cfg.scenario == "annealed-potential") {
        CsvTable t;
        t.header = {"potential", "max_error"};
        std::vector<double> grid = cfg.array_or("x", {0.0, 0.5, 1.0, 2.0, 4.0});
        t.add_row({"quadratic", csv_num(mixture_identity_check("quadratic", grid))});
        t.add_row({"abs", csv_num(mixture_identity_check("abs", grid))});
        t.write_file(outfile("annealed-potential.csv"));
        log << "wrote " << outfile("annealed-potential.csv") << "\n";
        return;
    }

    if (cfg.scenario == "renorm-suite") {
        double p = cfg.scalar_or("p", 0.85);
        int L0 = static_cast<int>(cfg.scalar_or("L0", 1));
        double beta = cfg.scalar_or("beta", 0.25);
        int window = static_cast<int>(cfg.scalar_or("window", 1));
        int seeds = static_cast<int>(cfg.scalar_or("seeds", 10));
        CsvTable t;
        t.header = {"seed", "var_omega", "var_omega_c", "var_floor", "monotone", "validated",
                    "m_max"};
        for (int s = 0; s < seeds; ++s) {
            auto bc = bound_chain(RngStream::mix(cfg.seed ^ (0x4e50 + s)), p, L0, beta, window,
                                  GoodBoxDims::micro(L0), 2);
            t.add_row({std::to_string(s), csv_num(bc.var_omega), csv_num(bc.var_omega_c),
                       csv_num(bc.var_floor), std::to_string(bc.monotone ? 1 : 0),
                       std::to_string(bc.validation_passed ? 1 : 0), std::to_string(bc.m_max)});
        }
        t.write_file(outfile("renorm-suite.csv"));
        log << "wrote " << outfile("renorm-suite.csv") << "\n";
        return;
    }

    throw std::invalid_argument("experiment: unknown scenario " + cfg.scenario);
}

} // namespace quenchlab
