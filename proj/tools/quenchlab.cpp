// quenchlab: simulation and verification laboratory for disordered circle-spin
// models and integer-valued height functions
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "quenchlab/acceptance.hpp"
#include "quenchlab/lab.hpp"

using namespace quenchlab;

int main(int argc, char **argv) {
    CLI::App app{"quenchlab: disordered spin and height-function laboratory"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags usable after the subcommand name
    int threads = 0;
    uint64_t seed = 1;
    std::string out_dir = ".";
    app.add_option("--threads", threads, "worker count (also via QUENCHLAB_THREADS)");
    app.add_option("--seed", seed, "base random seed");
    app.add_option("--out", out_dir, "output directory");

    // perc
    auto perc = app.add_subcommand("perc", "percolation sampling and analysis");
    std::string perc_mode = "sample";
    double p = 0.85;
    int L = 20, L0 = 1;
    int d = 2, seeds = 100;
    std::string dims_rule = "standard";
    perc->add_option("mode", perc_mode, "sample|dual|goodbox|renorm")->required();
    perc->add_option("--p", p, "open probability");
    perc->add_option("--L", L, "box scale");
    perc->add_option("--L0", L0, "cell scale");
    perc->add_option("--d", d, "dimension (graph sampling)");
    perc->add_option("--seeds", seeds, "number of seeds (goodbox)");
    perc->add_option("--dims", dims_rule, "standard|scaled|squarish|micro");

    // exact
    auto exact = app.add_subcommand("exact", "exact computation from a model config");
    std::string spec_path, target = "twopoint";
    int obs_a = 0, obs_b = 0, obs_m = 1, site = 0;
    exact->add_option("--config", spec_path, "model config path")->required();
    exact->add_option("--target", target, "twopoint|variance|logz");
    exact->add_option("--a", obs_a, "first observable vertex");
    exact->add_option("--b", obs_b, "second observable vertex");
    exact->add_option("--m", obs_m, "harmonic order");
    exact->add_option("--site", site, "height observable site");

    // mcmc
    auto mcmc = app.add_subcommand("mcmc", "sampling estimates");
    std::string model = "zgff";
    double beta = 1.0, mp = 1.0;
    int mL = 8;
    long long sweeps = 20000;
    int dsamples = 4, replicas = 4;
    std::string mcmc_out = "mcmc.csv";
    mcmc->add_option("--model", model, "zgff|zxy|xy|villain");
    mcmc->add_option("--beta", beta, "coupling");
    mcmc->add_option("--p", mp, "open probability");
    mcmc->add_option("--L", mL, "box scale");
    mcmc->add_option("--sweeps", sweeps, "sweeps per replica");
    mcmc->add_option("--dsamples", dsamples, "disorder samples");
    mcmc->add_option("--replicas", replicas, "replicas");
    mcmc->add_option("--csv", mcmc_out, "output CSV");

    // duality
    auto dual = app.add_subcommand("duality", "height-spin duality checks");
    std::string dual_mode = "check";
    int dL = 1, dn = 1;
    double lambda = 2.0, beta1 = 1.0, beta2 = 0.75;
    std::string disorder_path;
    dual->add_option("mode", dual_mode, "check");
    dual->add_option("--L", dL, "box scale (0 or 1)");
    dual->add_option("--n", dn, "parallel multiplicity");
    dual->add_option("--lambda", lambda, "origin weight");
    dual->add_option("--beta1", beta1, "gated coupling");
    dual->add_option("--beta2", beta2, "middle coupling");
    dual->add_option("--disorder", disorder_path, "site configuration file");

    // renorm
    auto ren = app.add_subcommand("renorm", "coarse-graining bound chain");
    double rp = 0.85, rbeta = 0.25;
    int rL0 = 1, window = 1, rseeds = 10;
    bool micro = true;
    ren->add_option("--p", rp, "open probability");
    ren->add_option("--L0", rL0, "cell scale");
    ren->add_option("--beta", rbeta, "coupling");
    ren->add_option("--window", window, "coarse window radius");
    ren->add_option("--seeds", rseeds, "number of seeds");
    ren->add_flag("--micro", micro, "micro-scale rectangle rule");

    // mixture
    auto mix = app.add_subcommand("mixture", "annealed-interaction tools");
    std::string mix_name = "abs", mix_table;
    std::vector<double> mix_grid{0.0, 0.5, 1.0, 2.0, 4.0};
    double mix_beta = 1.0, mix_theta = 0.0;
    mix->add_option("--name", mix_name, "registered potential: abs|quadratic");
    mix->add_option("--table", mix_table, "point-mass table file (J w per line)");
    mix->add_option("--x", mix_grid, "evaluation grid");
    mix->add_option("--beta", mix_beta, "coupling for --table evaluation");
    mix->add_option("--theta", mix_theta, "angle for --table evaluation");

    // surgery
    auto surg = app.add_subcommand("surgery", "monotone graph surgeries");
    std::string surgery_kind = "split-villain";
    double surgery_J = 2.0;
    int surgery_k = 2;
    surg->add_option("kind", surgery_kind,
                     "split-villain|identify|add-vertices|conductance-raise|"
                     "percolation-raise|domain-grow");
    surg->add_option("--J", surgery_J, "coupling");
    surg->add_option("--k", surgery_k, "multiplicity");

    // scan
    auto scan = app.add_subcommand("scan", "run a configured experiment");
    std::string cfg_path;
    scan->add_option("--config", cfg_path, "experiment config path")->required();

    // accept
    auto acc = app.add_subcommand("accept", "run the acceptance suite");
    std::string filter, report = "acceptance_report.csv";
    acc->add_option("--filter", filter, "run a single criterion (c1..c11)");
    acc->add_option("--report", report, "report CSV path");

    CLI11_PARSE(app, argc, argv);
    if (threads > 0) setenv("QUENCHLAB_THREADS", std::to_string(threads).c_str(), 1);

    try {
        if (*perc) {
            if (perc_mode == "sample") {
                auto g = build_lattice_box(d, L);
                auto c = sample_bernoulli(g, DisorderKind::Edge, p, seed);
                save_disorder(c, std::cout);
            } else if (perc_mode == "dual") {
                auto g = sample_bernoulli_grid(-L, -L, 2 * L + 1, 2 * L + 1, p, seed);
                auto dl = dual_config(g);
                long closed = 0;
                for (auto b : dl.hbits) closed += b == 0;
                for (auto b : dl.vbits) closed += b == 0;
                std::cout << "dual window " << dl.nx << "x" << dl.ny << " closed_edges=" << closed
                          << "\n";
            } else if (perc_mode == "goodbox") {
                GoodBoxDims gd = dims_rule == "scaled"     ? GoodBoxDims::scaled(L)
                                 : dims_rule == "squarish" ? GoodBoxDims::squarish(L)
                                 : dims_rule == "micro"    ? GoodBoxDims::micro(L0)
                                                           : GoodBoxDims::standard(L);
                double prob = goodbox_probability(p, gd, seeds, seed);
                std::cout << "p_good=" << csv_num(prob) << " (" << seeds << " seeds)\n";
            } else if (perc_mode == "renorm") {
                int margin = GoodBoxDims::micro(L0).window_radius + 4;
                int S = window * (2 * L0 + 1) + L0 + margin;
                auto omega = sample_bernoulli_grid(-S, -S, 2 * S + 1, 2 * S + 1, p, seed);
                auto r = renormalized_sites(omega, L0, GoodBoxDims::micro(L0), -window, -window,
                                            2 * window + 1, 2 * window + 1);
                for (int y = r.y0 + r.ny - 1; y >= r.y0; --y) {
                    for (int x = r.x0; x <= r.x0 + r.nx - 1; ++x)
                        std::cout << (r.at(x, y) ? '1' : '0');
                    std::cout << "\n";
                }
            } else {
                std::cerr << "unknown perc mode\n";
                return 2;
            }
            return 0;
        }
        if (*exact) {
            GibbsSpec spec = load_gibbs_spec(spec_path);
            CsvTable t;
            t.header = {"quantity", "value", "err_bound", "K", "M", "work"};
            if (spec.family == ModelFamily::Angle && target == "twopoint") {
                auto r = exact_angle(spec, {obs_a, obs_b, obs_m});
                t.add_row({"twopoint", csv_num(r.value), csv_num(r.err_bound), std::to_string(r.K),
                           std::to_string(r.M), std::to_string(r.work)});
            } else if (spec.family == ModelFamily::Angle) {
                auto r = exact_angle(spec, {obs_a, obs_b, obs_m});
                t.add_row({"logz", csv_num(r.log_z), csv_num(r.err_bound), std::to_string(r.K),
                           std::to_string(r.M), std::to_string(r.work)});
            } else {
                auto r = exact_height(spec, site);
                t.add_row({target == "logz" ? "logz" : "variance",
                           csv_num(target == "logz" ? r.log_z : r.value), csv_num(r.err_bound),
                           std::to_string(r.K), std::to_string(r.M), std::to_string(r.work)});
            }
            t.write(std::cout);
            return 0;
        }
        if (*mcmc) {
            ExperimentConfig cfg;
            cfg.scenario = model == "zgff" ? "deloc-gff" : model == "zxy" ? "deloc-zxy"
                                                                          : "bkt-villain";
            if (model == "xy") cfg.strings["potential"] = "xy";
            cfg.seed = seed;
            cfg.out_dir = out_dir;
            cfg.arrays["beta"] = {beta};
            cfg.arrays["p"] = {mp};
            cfg.arrays["L"] = {static_cast<double>(mL)};
            cfg.scalars["beta"] = beta;
            cfg.scalars["p"] = mp;
            cfg.scalars["L"] = mL;
            cfg.scalars["sweeps"] = static_cast<double>(sweeps);
            cfg.scalars["dsamples"] = dsamples;
            cfg.scalars["replicas"] = replicas;
            run_experiment(cfg, std::cout);
            return 0;
        }
        if (*dual) {
            std::vector<uint8_t> r;
            if (!disorder_path.empty()) {
                std::ifstream in(disorder_path);
                if (!in) throw std::runtime_error("cannot open " + disorder_path);
                r = load_disorder(in).bits;
            }
            auto rep = duality_check(dL, dn, beta1, beta2, lambda, r);
            CsvTable t;
            t.header = {"L", "n", "lambda", "height_var", "spin_value", "diff",
                        "partition_rel_err"};
            t.add_row({std::to_string(dL), std::to_string(dn), csv_num(lambda),
                       csv_num(rep.height_var), csv_num(rep.spin_value), csv_num(rep.diff),
                       csv_num(rep.partition_rel_err)});
            t.write(std::cout);
            return 0;
        }
        if (*ren) {
            ExperimentConfig cfg;
            cfg.scenario = "renorm-suite";
            cfg.seed = seed;
            cfg.out_dir = out_dir;
            cfg.scalars["p"] = rp;
            cfg.scalars["L0"] = rL0;
            cfg.scalars["beta"] = rbeta;
            cfg.scalars["window"] = window;
            cfg.scalars["seeds"] = rseeds;
            run_experiment(cfg, std::cout);
            return 0;
        }
        if (*mix) {
            if (!mix_table.empty()) {
                auto m = MixingMeasure::load(mix_table);
                std::cout << "F(theta)=" << csv_num(annealed_villain_eval(m, mix_beta, mix_theta))
                          << "\n";
            } else {
                double err = mixture_identity_check(mix_name, mix_grid);
                std::cout << "max_error=" << csv_num(err) << "\n";
            }
            return 0;
        }
        if (*surg) {
            auto rep = surgery_monotonicity_check(surgery_kind, surgery_J, surgery_k);
            CsvTable t;
            t.header = {"kind", "before", "after", "margin"};
            t.add_row({rep.kind, csv_num(rep.before), csv_num(rep.after), csv_num(rep.margin)});
            t.write(std::cout);
            return 0;
        }
        if (*scan) {
            auto cfg = load_experiment_config(cfg_path);
            if (seed != 1) cfg.seed = seed;
            if (out_dir != ".") cfg.out_dir = out_dir;
            run_experiment(cfg, std::cout);
            return 0;
        }
        if (*acc) {
            auto rows = run_acceptance(std::cout, filter, report);
            for (const auto &r : rows)
                if (!r.pass) return 1;
            return rows.empty() ? 1 : 0;
        }
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
