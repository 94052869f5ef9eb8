// SPDX-License-Identifier: MIT
//
// svdnf command-line interface.
//
//   svdnf simulate   --variant sv --steps 504 > path.csv
//   svdnf likelihood --variant sv --data spx.csv --engine dnf
//   svdnf filter     --variant svcj --data spx.csv --out results/
//   svdnf estimate   --variant sv --data spx.csv --config grid.toml
//   svdnf bench ape|sweep|bias ...
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.

#include "svdnf/svdnf.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using json = nlohmann::json;
using namespace svdnf;

namespace {

constexpr int kSchemaVersion = 1;

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::string out;
    bool json_errors = false;
};

/// Options shared by the model-facing commands.
struct ModelOpts {
    std::optional<std::string> variant;
    std::vector<std::string> params;  // name=value
    std::optional<std::string> data;
    std::optional<std::string> mode;
    std::optional<std::string> column;
    std::optional<std::size_t> N, M, K, R;
    std::optional<double> h;
};

void add_model_opts(CLI::App* app, ModelOpts& o, bool with_data) {
    app->add_option("--variant", o.variant, "sv | svyj | svcj | svcjsi");
    app->add_option("--param", o.params, "parameter override name=value (repeatable)");
    app->add_option("--N", o.N, "variance nodes");
    app->add_option("--M", o.M, "intensity nodes");
    app->add_option("--K", o.K, "variance-jump nodes");
    app->add_option("--R", o.R, "Poisson truncation");
    app->add_option("--dt", o.h, "time step in years");
    if (with_data) {
        app->add_option("--data", o.data, "CSV file with a header row");
        app->add_option("--mode", o.mode, "prices | returns");
        app->add_option("--column", o.column, "value column (default: last)");
    }
}

/// Config file overlaid with command-line values.
RunConfig effective_config(const Globals& g, const ModelOpts& o) {
    RunConfig c;
    if (!g.config.empty()) c = read_config(g.config);
    if (g.seed) c.seed = *g.seed;
    if (!g.out.empty()) c.out = g.out;
    if (o.variant) {
        const ModelVariant v = parse_variant(*o.variant);
        if (v != c.variant) {
            const GridSpec d = GridSpec::for_variant(v, c.grid.N);
            c.grid.M = d.M;
            c.grid.K = d.K;
            c.grid.R = d.R;
        }
        c.variant = v;
    }
    if (o.N) {
        const GridSpec d = GridSpec::for_variant(c.variant, *o.N);
        c.grid.N = d.N;
        if (!o.M) c.grid.M = d.M;
        if (!o.K) c.grid.K = d.K;
    }
    if (o.M) c.grid.M = *o.M;
    if (o.K) c.grid.K = *o.K;
    if (o.R) c.grid.R = *o.R;
    if (o.h) c.h = *o.h;
    if (o.data) c.data = *o.data;
    if (o.mode) c.data_mode = *o.mode;
    if (o.column) c.column = *o.column;
    for (const std::string& kv : o.params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw DomainError("--param expects name=value, got '" + kv + "'");
        const Param p = parse_param(kv.substr(0, eq));
        const auto x = detail::parse_double(kv.substr(eq + 1));
        if (!x) throw DomainError("--param " + kv + ": not a number");
        c.params[static_cast<std::size_t>(p)] = *x;
    }
    return c;
}

ReturnSeries load_data(const RunConfig& c) {
    if (c.data.empty()) throw DomainError("no data file given (--data or data = ... in the config)");
    return load_returns(c.data, parse_series_mode(c.data_mode), c.column, c.date_column);
}

json params_json(const ParamValues& p, ModelVariant v) {
    json j = json::object();
    for (Param q : active_params(v)) j[std::string(param_name(q))] = p[q];
    j["h"] = p.h;
    return j;
}

json grid_json(const GridSpec& g) {
    return {{"N", g.N}, {"M", g.M}, {"K", g.K}, {"R", g.R}, {"floor_eps", g.floor_eps}};
}

json header_json(const RunConfig& c, const std::string& kind) {
    return {{"schema_version", kSchemaVersion},
            {"kind", kind},
            {"tool", "svdnf " + std::string(kVersion)},
            {"seed", c.seed},
            {"config_hash", hex64(fnv1a(write_config(c)))}};
}

/// Writes `text` to <out>/<name> when an output directory is set, else stdout.
void emit(const RunConfig& c, bool to_dir, const std::string& name, const std::string& text) {
    if (!to_dir) {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::filesystem::create_directories(c.out);
    const auto path = std::filesystem::path(c.out) / name;
    std::ofstream f(path);
    if (!f) throw DataError("cannot write '" + path.string() + "'");
    f << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

double json_number(double x) { return std::isfinite(x) ? x : std::numeric_limits<double>::quiet_NaN(); }

// ---------------------------------------------------------------------------

int cmd_simulate(const Globals& g, const ModelOpts& o, std::size_t steps, const std::string& init) {
    RunConfig c = effective_config(g, o);
    c.options["simulate.steps"] = std::to_string(steps);
    c.options["simulate.init"] = init;
    const ModelParams p(c.variant, c.param_values(default_start(c.variant, c.h)));
    InitialState is = InitialState::long_run_mean();
    if (init == "stationary") is = InitialState::stationary();
    else if (init != "long-run") throw DomainError("--init must be long-run or stationary");
    const SimulatedPath path = simulate(p, steps, c.seed, is);
    std::ostringstream os;
    write_path_csv(os, path, stamp_line(c.seed, write_config(c)));
    emit(c, !g.out.empty(), "path.csv", os.str());
    return kOk;
}

int cmd_likelihood(const Globals& g, const ModelOpts& o, const std::string& engine,
                   std::optional<std::size_t> particles) {
    RunConfig c = effective_config(g, o);
    if (particles) c.particles = *particles;
    c.options["likelihood.engine"] = engine;
    const ReturnSeries y = load_data(c);
    const ModelParams p(c.variant, c.param_values(default_start(c.variant, c.h)));

    json j = header_json(c, "likelihood");
    j["variant"] = std::string(to_string(c.variant));
    j["engine"] = engine;
    j["T"] = y.size();
    j["params"] = params_json(p.values(), c.variant);
    std::vector<double> contribs;
    if (engine == "dnf") {
        const DnfFilter f(p, c.grid);
        contribs = f.log_contributions(y.y);
        j["grid"] = grid_json(c.grid);
    } else if (engine == "sir") {
        const SirResult r = sir_likelihood(p, y.y, c.particle_count(), c.seed);
        contribs = r.loglik_contribs;
        j["particles"] = r.particles;
    } else {
        throw DomainError("--engine must be dnf or sir");
    }
    j["loglik"] = pairwise_sum(contribs);
    emit(c, !g.out.empty(), "likelihood.json", dump(j));
    if (!g.out.empty()) {
        std::ostringstream os;
        os << stamp_line(c.seed, write_config(c)) << "\nt,loglik_contrib\n";
        for (std::size_t t = 0; t < contribs.size(); ++t)
            os << (t + 1) << ',' << format_double(contribs[t]) << "\n";
        emit(c, true, "contributions.csv", os.str());
    }
    return kOk;
}

int cmd_filter(const Globals& g, const ModelOpts& o) {
    const RunConfig c = effective_config(g, o);
    const ReturnSeries y = load_data(c);
    const ModelParams p(c.variant, c.param_values(default_start(c.variant, c.h)));
    const FilterOutput f = run_filter(p, c.grid, y.y);
    std::ostringstream os;
    write_filter_csv(os, f, y, c.h, stamp_line(c.seed, write_config(c)));
    emit(c, !g.out.empty(), "filter.csv", os.str());
    return kOk;
}

int cmd_estimate(const Globals& g, const ModelOpts& o, bool moments, std::size_t max_iter) {
    RunConfig c = effective_config(g, o);
    c.options["estimate.start"] = moments ? "moments" : "default";
    const ReturnSeries y = load_data(c);
    ParamValues start = moments ? moment_start(c.variant, y.y, c.h) : default_start(c.variant, c.h);
    start = c.param_values(start);
    EstimateOptions opt;
    opt.max_iterations = max_iter;
    const EstimationResult r = estimate(c.variant, y.y, c.grid, start, opt);

    json j = header_json(c, "estimate");
    j["variant"] = std::string(to_string(c.variant));
    j["T"] = y.size();
    j["params_hat"] = params_json(r.params_hat.values(), c.variant);
    j["loglik"] = r.loglik;
    json se = json::object();
    for (Param q : active_params(c.variant)) {
        const auto i = static_cast<std::size_t>(q);
        se[std::string(param_name(q))] = r.se_computable[i] ? json(r.std_errors[i]) : json(nullptr);
    }
    j["std_errors"] = se;
    j["convergence"] = {{"converged", r.convergence.converged},
                        {"iterations", r.convergence.iterations},
                        {"evaluations", r.convergence.evaluations},
                        {"restarts", r.convergence.restarts},
                        {"simplex_size", r.convergence.simplex_size},
                        {"start_loglik", r.convergence.start_loglik}};
    j["grid"] = grid_json(r.spec);
    emit(c, !g.out.empty(), "estimate.json", dump(j));
    return kOk;
}

int cmd_bench_ape(const Globals& g, const ModelOpts& o, std::size_t trials, std::size_t len,
                  std::optional<std::size_t> particles) {
    RunConfig c = effective_config(g, o);
    if (particles) c.particles = *particles;
    c.options["bench.trials"] = std::to_string(trials);
    c.options["bench.len"] = std::to_string(len);
    ApeStudyConfig cfg;
    cfg.grid = c.grid;
    cfg.particles = c.particle_count();
    const ApeReport r = run_ape_study(c.variant, trials, len, cfg, c.seed);
    const std::string stamp = stamp_line(c.seed, write_config(c));
    std::ostringstream os;
    write_ape_csv(os, r, stamp);
    json j = header_json(c, "bench-ape");
    j["variant"] = std::string(to_string(c.variant));
    j["trials"] = r.trials.size();
    j["excluded"] = r.excluded;
    j["errors"] = r.errors;
    json q = json::object();
    for (std::size_t i = 0; i < kApeLevels.size(); ++i) q[format_double(kApeLevels[i])] = r.quantiles[i];
    j["quantiles"] = q;
    if (g.out.empty()) {
        std::cout << dump(j);
    } else {
        emit(c, true, "ape.csv", os.str());
        emit(c, true, "ape.json", dump(j));
    }
    return kOk;
}

int cmd_bench_sweep(const Globals& g, const ModelOpts& o, std::vector<std::size_t> n_list,
                    std::size_t ref_n, std::size_t draws, std::size_t len,
                    std::vector<std::size_t> budgets, std::size_t sir_reps, std::size_t sir_draws) {
    RunConfig c = effective_config(g, o);
    c.options["bench.len"] = std::to_string(len);
    c.options["bench.draws"] = std::to_string(draws);
    std::vector<double> y;
    if (!c.data.empty()) {
        y = load_data(c).y;
    } else {
        const ModelParams p(c.variant, c.param_values(default_start(c.variant, c.h)));
        y = simulate(p, len, derive_seed(c.seed, 0xDA7A)).returns;
    }
    SweepConfig cfg;
    cfg.N_list = std::move(n_list);
    cfg.reference_N = ref_n;
    cfg.n_draws = draws;
    cfg.sir_budgets = std::move(budgets);
    cfg.sir_reps = sir_reps;
    cfg.sir_draws = sir_draws;
    const SweepReport r = run_tradeoff_sweep(c.variant, y, cfg, c.seed, c.h);
    const std::string stamp = stamp_line(c.seed, write_config(c));
    std::ostringstream os;
    write_sweep_csv(os, r, stamp);
    json j = header_json(c, "bench-sweep");
    j["variant"] = std::string(to_string(c.variant));
    j["reference_N"] = r.reference_N;
    j["draws"] = r.draws.size();
    j["excluded"] = r.excluded;
    j["fit"] = {{"a", json_number(r.fit.a)}, {"b", json_number(r.fit.b)}, {"residuals", r.fit.residuals}};
    if (g.out.empty()) {
        std::cout << os.str();
    } else {
        emit(c, true, "sweep.csv", os.str());
        emit(c, true, "sweep.json", dump(j));
        if (!r.sir.empty()) {
            std::ostringstream bs;
            write_sir_box_csv(bs, r, stamp);
            emit(c, true, "sir_box.csv", bs.str());
        }
    }
    return kOk;
}

int cmd_bench_bias(const Globals& g, const ModelOpts& o, std::size_t reps, std::size_t T) {
    RunConfig c = effective_config(g, o);
    c.options["bench.reps"] = std::to_string(reps);
    c.options["bench.T"] = std::to_string(T);
    ParamValues truth = default_start(c.variant, c.h);
    if (c.variant == ModelVariant::SV) {
        truth.mu = 0.06;
        truth.kappa = 3.0;
        truth.theta = 0.03;
        truth.sigma = 0.3;
        truth.rho_v = -0.6;
    }
    const ModelParams p(c.variant, c.param_values(truth));
    BiasConfig cfg;
    cfg.grid = c.grid;
    const BiasReport r = run_bias_study(c.variant, reps, T, p, c.seed, cfg);
    const std::string stamp = stamp_line(c.seed, write_config(c));
    std::ostringstream os;
    write_bias_csv(os, r, stamp);
    json j = header_json(c, "bench-bias");
    j["variant"] = std::string(to_string(c.variant));
    j["replications"] = reps;
    j["converged"] = r.estimates.size();
    j["non_converged"] = r.non_converged;
    j["errors"] = r.errors;
    if (g.out.empty()) {
        std::cout << os.str();
    } else {
        emit(c, true, "bias.csv", os.str());
        emit(c, true, "bias.json", dump(j));
    }
    return kOk;
}

int report_error(const Globals& g, int code, const std::string& kind, const std::string& msg) {
    std::cerr << "svdnf: error: " << msg << "\n";
    if (g.json_errors) {
        const json j = {{"schema_version", kSchemaVersion},
                        {"error", {{"kind", kind}, {"message", msg}, {"exit_code", code}}}};
        std::cerr << j.dump() << "\n";
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grid and particle filters for stochastic-volatility jump-diffusion models"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config, "flat key = value config file");
    app.add_option("--seed", g.seed, "random seed");
    app.add_option("--threads", g.threads, "worker threads (0: runtime default)");
    app.add_option("--out", g.out, "output directory (default: stdout)");
    app.add_flag("--json-errors", g.json_errors, "also print errors as a JSON object");

    ModelOpts sim_o, lik_o, fil_o, est_o, ape_o, swp_o, bias_o;

    auto* sim = app.add_subcommand("simulate", "simulate a path to CSV");
    add_model_opts(sim, sim_o, false);
    std::size_t steps = 252;
    std::string init = "long-run";
    sim->add_option("--steps", steps, "number of returns")->check(CLI::PositiveNumber);
    sim->add_option("--init", init, "long-run | stationary");

    auto* lik = app.add_subcommand("likelihood", "log-likelihood of a return series");
    add_model_opts(lik, lik_o, true);
    std::string engine = "dnf";
    std::optional<std::size_t> lik_particles;
    lik->add_option("--engine", engine, "dnf | sir");
    lik->add_option("--particles", lik_particles, "particle count for --engine sir");

    auto* fil = app.add_subcommand("filter", "filtered states to CSV");
    add_model_opts(fil, fil_o, true);

    auto* est = app.add_subcommand("estimate", "maximum likelihood estimation");
    add_model_opts(est, est_o, true);
    bool moments = false;
    std::size_t max_iter = 3000;
    est->add_flag("--moment-start", moments, "start theta and mu at sample moments");
    est->add_option("--max-iterations", max_iter, "simplex iterations per run");

    auto* bench = app.add_subcommand("bench", "accuracy and speed studies");
    bench->require_subcommand(1);
    bench->fallthrough();
    auto* ape_c = bench->add_subcommand("ape", "APE distribution, grid filter vs particle filter");
    add_model_opts(ape_c, ape_o, false);
    std::size_t trials = 100, ape_len = 252;
    std::optional<std::size_t> ape_particles;
    ape_c->add_option("--trials", trials);
    ape_c->add_option("--len", ape_len, "series length");
    ape_c->add_option("--particles", ape_particles);

    auto* swp = bench->add_subcommand("sweep", "MAPE and wall time against grid size");
    add_model_opts(swp, swp_o, true);
    std::vector<std::size_t> n_list = {25, 50, 75, 100, 125, 150, 175, 200};
    std::vector<std::size_t> budgets;
    std::size_t ref_n = 800, draws = 30, swp_len = 1260, sir_reps = 0, sir_draws = 1;
    swp->add_option("--N-list", n_list)->delimiter(',');
    swp->add_option("--reference-N", ref_n);
    swp->add_option("--draws", draws);
    swp->add_option("--len", swp_len, "simulated series length when no --data");
    swp->add_option("--sir-budgets", budgets)->delimiter(',');
    swp->add_option("--sir-reps", sir_reps);
    swp->add_option("--sir-draws", sir_draws, "parameter draws that get particle-filter runs");

    auto* bias = bench->add_subcommand("bias", "simulate-and-estimate bias study");
    add_model_opts(bias, bias_o, false);
    std::size_t reps = 20, bias_T = 504;
    bias->add_option("--reps", reps);
    bias->add_option("--T", bias_T);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error(g, kUsage, "usage", e.what());
    }

    try {
        set_thread_count(g.threads);
        if (sim->parsed()) return cmd_simulate(g, sim_o, steps, init);
        if (lik->parsed()) return cmd_likelihood(g, lik_o, engine, lik_particles);
        if (fil->parsed()) return cmd_filter(g, fil_o);
        if (est->parsed()) return cmd_estimate(g, est_o, moments, max_iter);
        if (ape_c->parsed()) return cmd_bench_ape(g, ape_o, trials, ape_len, ape_particles);
        if (swp->parsed())
            return cmd_bench_sweep(g, swp_o, n_list, ref_n, draws, swp_len, budgets, sir_reps, sir_draws);
        if (bias->parsed()) return cmd_bench_bias(g, bias_o, reps, bias_T);
    } catch (const DataError& e) {
        return report_error(g, kData, "data", e.what());
    } catch (const DomainError& e) {
        return report_error(g, kUsage, "usage", e.what());
    } catch (const NumericalError& e) {
        return report_error(g, kNumerical, "numerical", e.what());
    } catch (const std::exception& e) {
        return report_error(g, kNumerical, "internal", e.what());
    }
    return kUsage;
}
