#include "ibstress/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <tuple>

#include <CLI11.hpp>
#include <json.hpp>

#include "ibstress/csv.hpp"
#include "ibstress/ensemble.hpp"
#include "ibstress/errors.hpp"
#include "ibstress/io.hpp"
#include "ibstress/parallel.hpp"
#include "ibstress/rng.hpp"
#include "ibstress/version.hpp"

namespace fs = std::filesystem;

namespace ibstress {

namespace {

// ---------------------------------------------------------------------------
// JSON config files: every long flag of a subcommand can be supplied as a
// top-level key of a JSON object passed via --config. The file is expanded
// into argv tokens before parsing; flags given explicitly win.
// ---------------------------------------------------------------------------

std::string config_scalar_to_string(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_float()) return format_double(v.get<double>());
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    throw ValidationError("config values must be scalars or arrays of scalars");
}

std::vector<std::string> expand_config_args(const std::vector<std::string>& args) {
    std::vector<std::string> out;
    std::vector<std::string> config_files;
    for (std::size_t k = 0; k < args.size(); ++k) {
        const auto& token = args[k];
        if (token == "--config") {
            if (k + 1 >= args.size()) throw UsageError("--config expects a file path");
            config_files.push_back(args[++k]);
        } else if (token.rfind("--config=", 0) == 0) {
            config_files.push_back(token.substr(9));
        } else {
            out.push_back(token);
        }
    }
    if (config_files.empty()) return out;

    auto given_on_command_line = [&](const std::string& name) {
        const std::string flag = "--" + name;
        const std::string prefixed = flag + "=";
        for (const auto& token : out)
            if (token == flag || token.rfind(prefixed, 0) == 0) return true;
        return false;
    };
    for (const auto& path : config_files) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open config: " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw IoError(path + ": " + e.what());
        }
        if (!j.is_object()) throw ValidationError(path + ": config must be a JSON object");
        for (const auto& [key, value] : j.items()) {
            if (key == "config" || given_on_command_line(key)) continue;
            if (value.is_boolean()) {
                if (value.get<bool>()) out.push_back("--" + key);
                continue;
            }
            auto push = [&](const nlohmann::json& v) {
                out.push_back("--" + key);
                out.push_back(config_scalar_to_string(v));
            };
            if (value.is_array())
                for (const auto& v : value) push(v);
            else
                push(value);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Shared option bundles
// ---------------------------------------------------------------------------

struct CommonOptions {
    std::string outdir = ".";
    int threads = 0;  // 0 -> hardware concurrency
    std::string config_placeholder;
};

void add_common(CLI::App* cmd, CommonOptions& common) {
    cmd->add_option("--outdir", common.outdir, "Directory for output files")
        ->envname("IBSTRESS_OUTDIR")
        ->capture_default_str();
    cmd->add_option("--threads", common.threads,
                    "Worker threads for parallel stages (0 = all cores)")
        ->envname("IBSTRESS_THREADS")
        ->capture_default_str();
    // consumed before parsing (see expand_config_args); registered for --help
    cmd->add_option("--config", common.config_placeholder,
                    "JSON file mirroring this command's flags; explicit flags win");
}

struct IngestFlags {
    std::string edges;
    std::string balance;
    std::string calibration;
    double impute_slope = 0.0;
    double impute_intercept = 0.0;
    bool has_slope = false;
};

void add_ingest(CLI::App* cmd, IngestFlags& flags) {
    cmd->add_option("--edges", flags.edges, "Edge-list CSV (lender,borrower,amount)")
        ->required();
    cmd->add_option("--balance", flags.balance, "Balance-sheet CSV (bank,equity)");
    auto* cal = cmd->add_option("--calibration", flags.calibration,
                                "Calibration CSV (position,equity) for equity imputation");
    auto* slope = cmd->add_option("--impute-slope", flags.impute_slope,
                                  "Equity imputation slope in log space");
    cmd->add_option("--impute-intercept", flags.impute_intercept,
                    "Equity imputation intercept in log space (natural logs)")
        ->needs(slope);
    cal->excludes(slope);
    slope->excludes(cal);
}

Snapshot ingest_from_flags(const IngestFlags& flags, std::vector<std::string>& inputs) {
    IngestOptions opts;
    opts.edges_path = flags.edges;
    opts.balance_path = flags.balance;
    if (!flags.calibration.empty()) {
        opts.imputation = read_calibration_csv(flags.calibration);
        inputs.push_back(flags.calibration);
    } else if (flags.has_slope) {
        RegressionFit fit;
        fit.slope = flags.impute_slope;
        fit.intercept = flags.impute_intercept;
        opts.imputation = fit;
    }
    auto snap = ingest(opts);
    inputs.insert(inputs.end(), snap.input_paths.begin(), snap.input_paths.end());
    return snap;
}

void record_ingest_config(nlohmann::ordered_json& config, const IngestFlags& flags) {
    config["edges"] = flags.edges;
    if (!flags.balance.empty()) config["balance"] = flags.balance;
    if (!flags.calibration.empty()) config["calibration"] = flags.calibration;
    if (flags.has_slope) {
        config["impute-slope"] = flags.impute_slope;
        config["impute-intercept"] = flags.impute_intercept;
    }
}

struct ValuationFlags {
    std::string valuation = "dr";
    double recovery = 0.4;
    double alpha = 2.0;
    std::string nldr_exponent = "value";
};

void add_valuation_base(CLI::App* cmd, ValuationFlags& flags) {
    cmd->add_option("--valuation", flags.valuation, "Valuation function: furfine|dr|nldr")
        ->check(CLI::IsMember({"furfine", "dr", "nldr"}))
        ->capture_default_str();
    cmd->add_option("--recovery", flags.recovery, "Recovery rate R in [0,1) (furfine)")
        ->capture_default_str();
    cmd->add_option("--nldr-exponent", flags.nldr_exponent,
                    "Non-linear damping exponent variant: value|loss (loss is for "
                    "comparison only and can leave [0,1])")
        ->check(CLI::IsMember({"value", "loss"}))
        ->capture_default_str();
}

void add_valuation(CLI::App* cmd, ValuationFlags& flags) {
    add_valuation_base(cmd, flags);
    cmd->add_option("--alpha", flags.alpha, "Non-linearity parameter (nldr)")
        ->capture_default_str();
}

ValuationSpec valuation_from_flags(const ValuationFlags& flags) {
    ValuationSpec spec;
    spec.kind = valuation_kind_from_label(flags.valuation);
    spec.recovery = flags.recovery;
    spec.alpha = flags.alpha;
    spec.exponent = flags.nldr_exponent == "loss" ? NldrExponent::by_loss : NldrExponent::by_value;
    spec.check();
    return spec;
}

void record_valuation_config(nlohmann::ordered_json& config, const ValuationFlags& flags,
                             bool include_alpha = true) {
    config["valuation"] = flags.valuation;
    if (flags.valuation == "furfine") config["recovery"] = flags.recovery;
    if (flags.valuation == "nldr") {
        if (include_alpha) config["alpha"] = flags.alpha;
        config["nldr-exponent"] = flags.nldr_exponent;
    }
}

struct RunFlags {
    double tolerance = 1e-10;
    int max_rounds = 5000;
    std::vector<int> record_steps{3, 5, 10};
};

void add_run_config(CLI::App* cmd, RunFlags& flags) {
    cmd->add_option("--tolerance", flags.tolerance, "Convergence tolerance (relative)")
        ->capture_default_str();
    cmd->add_option("--max-rounds", flags.max_rounds, "Cap on revaluation rounds")
        ->capture_default_str();
    cmd->add_option("--record-steps", flags.record_steps,
                    "Rounds at which to snapshot the loss metric")
        ->delimiter(',')
        ->capture_default_str();
}

RunConfig run_config_from_flags(const RunFlags& flags) {
    RunConfig cfg;
    cfg.tolerance = flags.tolerance;
    cfg.max_rounds = flags.max_rounds;
    cfg.record_steps = flags.record_steps;
    return cfg;
}

void record_run_config(nlohmann::ordered_json& config, const RunFlags& flags) {
    config["tolerance"] = flags.tolerance;
    config["max-rounds"] = flags.max_rounds;
    config["record-steps"] = flags.record_steps;
}

// ---------------------------------------------------------------------------
// Manifest helpers
// ---------------------------------------------------------------------------

std::string join_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void write_manifest(const std::string& command, const CommonOptions& common,
                    nlohmann::ordered_json config, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs) {
    config["outdir"] = common.outdir;
    config["threads"] = common.threads;
    Manifest m;
    m.command = command;
    m.config = std::move(config);
    m.created_utc = utc_timestamp_now();
    for (const auto& p : inputs) m.inputs.emplace_back(p, file_digest_hex(p));
    for (const auto& p : outputs) m.outputs.emplace_back(p, file_digest_hex(p));
    m.write(join_path(common.outdir, command + ".manifest.json"));
}

void ensure_outdir(const std::string& outdir) {
    std::error_code ec;
    fs::create_directories(outdir, ec);
    if (ec) throw IoError("cannot create output directory " + outdir + ": " + ec.message());
}

std::string opt_str(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

// ---------------------------------------------------------------------------
// Command implementations
// ---------------------------------------------------------------------------

int cmd_synth(const SyntheticSpec& spec, const CommonOptions& common) {
    ensure_outdir(common.outdir);
    const std::string edges_path = join_path(common.outdir, "edges.csv");
    const std::string balance_path = join_path(common.outdir, "balance.csv");
    const auto result = synth_to_files(spec, edges_path, balance_path);

    nlohmann::ordered_json config;
    config["n"] = spec.n;
    config["strength-median"] = spec.strength_median;
    config["strength-sigma"] = spec.strength_sigma;
    config["coupling"] = spec.coupling;
    config["density"] = spec.density;
    config["equity-slope"] = spec.equity_slope;
    config["equity-intercept"] = spec.equity_intercept;
    config["equity-noise"] = spec.equity_noise_sigma;
    config["seed"] = spec.seed;
    write_manifest("synth", common, std::move(config), {}, {edges_path, balance_path});
    std::cout << "synth: " << result.net.n() << " banks, " << result.net.edge_count()
              << " exposures -> " << edges_path << ", " << balance_path << "\n";
    return static_cast<int>(ExitCode::ok);
}

int cmd_fit_null(const IngestFlags& ingest_flags, double fit_tolerance, long fit_iterations,
                 const std::string& params_name, const CommonOptions& common) {
    ensure_outdir(common.outdir);
    std::vector<std::string> inputs;
    const auto snap = ingest_from_flags(ingest_flags, inputs);
    const auto targets = FitTargets::from_network(snap.net);
    FitOptions opts;
    opts.tolerance = fit_tolerance;
    opts.max_iterations = fit_iterations;
    const auto params = fit_sdecm(targets, opts);

    const std::string params_path = join_path(common.outdir, params_name);
    {
        std::ofstream out(params_path, std::ios::binary);
        if (!out) throw IoError("cannot open for writing: " + params_path);
        out << params.to_json().dump(2) << "\n";
    }

    nlohmann::ordered_json config;
    record_ingest_config(config, ingest_flags);
    config["fit-tolerance"] = fit_tolerance;
    config["fit-iterations"] = fit_iterations;
    config["params-out"] = params_name;
    write_manifest("fit-null", common, std::move(config), inputs, {params_path});
    std::cout << "fit-null: n=" << params.n() << " degree residual "
              << format_double(params.binary_fit.residual) << " ("
              << params.binary_fit.iterations << " iters), strength residual "
              << format_double(params.weight_fit.residual) << " ("
              << params.weight_fit.iterations << " iters) -> " << params_path << "\n";
    return static_cast<int>(ExitCode::ok);
}

SdecmParams load_params(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
    return SdecmParams::from_json(j);
}

int cmd_sample(const std::string& params_path, int count, std::uint64_t seed,
               const CommonOptions& common) {
    if (count < 1) throw UsageError("--count must be >= 1");
    ensure_outdir(common.outdir);
    const auto params = load_params(params_path);
    std::vector<std::string> outputs(static_cast<std::size_t>(count));
    parallel_for(count, common.threads, [&](int k) {
        const auto net = sample_network(params, derive_stream_seed(seed, static_cast<std::uint64_t>(k)));
        char name[32];
        std::snprintf(name, sizeof(name), "sample_%04d.csv", k);
        const std::string path = join_path(common.outdir, name);
        write_edge_csv(path, net);
        outputs[static_cast<std::size_t>(k)] = path;
    });

    nlohmann::ordered_json config;
    config["params"] = params_path;
    config["count"] = count;
    config["seed"] = seed;
    write_manifest("sample", common, std::move(config), {params_path}, outputs);
    std::cout << "sample: wrote " << count << " networks to " << common.outdir << "\n";
    return static_cast<int>(ExitCode::ok);
}

int cmd_stress(const IngestFlags& ingest_flags, const ValuationFlags& val_flags,
               std::vector<double> lambdas, std::vector<double> alphas,
               const std::vector<std::string>& default_banks, const RunFlags& run_flags,
               const CommonOptions& common) {
    ensure_outdir(common.outdir);
    std::vector<std::string> inputs;
    const auto snap = ingest_from_flags(ingest_flags, inputs);
    const auto cfg = run_config_from_flags(run_flags);
    ValuationSpec val = valuation_from_flags(val_flags);

    if (val.kind != ValuationKind::nonlinear_dr || alphas.empty()) alphas = {val.alpha};
    const bool has_defaults = !default_banks.empty();

    const std::string csv_path = join_path(common.outdir, "stress.csv");
    const std::string equity_path = join_path(common.outdir, "stress_equity.csv");
    CsvWriter out(csv_path);
    out.row({"shock", "bank", "lambda", "valuation", "alpha", "recovery", "round", "H",
             "converged"});
    CsvWriter equity_out(equity_path);
    equity_out.row({"shock", "bank", "lambda", "valuation", "alpha", "recovery", "subject",
                    "equity0", "equity_terminal"});

    bool all_converged = true;
    auto emit_rows = [&](const EquityTrajectory& traj, const std::string& shock,
                         const std::string& bank, const std::string& lambda,
                         const ValuationSpec& v) {
        const std::string alpha_str =
            v.kind == ValuationKind::nonlinear_dr ? format_double(v.alpha) : std::string();
        const std::string recovery_str =
            v.kind == ValuationKind::furfine ? format_double(v.recovery) : std::string();
        const std::string conv = traj.converged ? "true" : "false";
        for (const int step : cfg.record_steps)
            out.row({shock, bank, lambda, v.label(), alpha_str, recovery_str,
                     format_int(step), format_double(aggregate_loss_h_at(traj, step)), conv});
        out.row({shock, bank, lambda, v.label(), alpha_str, recovery_str, "terminal",
                 format_double(aggregate_loss_h(traj)), conv});
        for (int b = 0; b < snap.net.n(); ++b)
            equity_out.row({shock, bank, lambda, v.label(), alpha_str, recovery_str,
                            snap.net.bank(b),
                            format_double(traj.initial()[static_cast<std::size_t>(b)]),
                            format_double(traj.terminal()[static_cast<std::size_t>(b)])});
        all_converged = all_converged && traj.converged;
    };

    for (const double alpha : alphas) {
        ValuationSpec v = val;
        v.alpha = alpha;
        for (const double lambda : lambdas) {
            const auto traj = run_shocked(snap.net, snap.sheets, ShockSpec::proportional(lambda),
                                          v, cfg);
            emit_rows(traj, "proportional", "", format_double(lambda), v);
        }
        for (const auto& bank : default_banks) {
            const auto idx = snap.net.bank_index(bank);
            if (!idx) throw ValidationError("unknown bank in --default-bank: " + bank);
            const auto traj = run_shocked(snap.net, snap.sheets, ShockSpec::default_of(*idx), v,
                                          cfg);
            emit_rows(traj, "default_one", bank, "", v);
        }
    }
    out.close();
    equity_out.close();

    nlohmann::ordered_json config;
    record_ingest_config(config, ingest_flags);
    record_valuation_config(config, val_flags, false);
    if (val.kind == ValuationKind::nonlinear_dr) config["alpha"] = alphas;
    if (!lambdas.empty()) config["lambda"] = lambdas;
    if (has_defaults) config["default-bank"] = default_banks;
    record_run_config(config, run_flags);
    write_manifest("stress", common, std::move(config), inputs, {csv_path, equity_path});
    std::cout << "stress: wrote " << csv_path << "\n";
    if (!all_converged) {
        std::cerr << "warning: at least one run hit the round cap before converging\n";
        return static_cast<int>(ExitCode::convergence);
    }
    return static_cast<int>(ExitCode::ok);
}

int cmd_relevance(const IngestFlags& ingest_flags, const ValuationFlags& val_flags,
                  const RunFlags& run_flags, const CommonOptions& common) {
    ensure_outdir(common.outdir);
    std::vector<std::string> inputs;
    const auto snap = ingest_from_flags(ingest_flags, inputs);
    const auto cfg = run_config_from_flags(run_flags);
    const auto val = valuation_from_flags(val_flags);

    const auto study = single_default_study(snap.net, snap.sheets, val, cfg, common.threads);
    const auto impacts = impacts_from(study, snap.sheets);
    const auto vulns = vulnerabilities_from(study, snap.sheets);

    const std::string csv_path = join_path(common.outdir, "relevance.csv");
    CsvWriter out(csv_path);
    out.row({"bank", "equity0", "impact", "vulnerability"});
    for (int i = 0; i < snap.net.n(); ++i)
        out.row({snap.net.bank(i), format_double(snap.sheets[static_cast<std::size_t>(i)].equity0),
                 format_double(impacts[static_cast<std::size_t>(i)]),
                 format_double(vulns[static_cast<std::size_t>(i)])});
    out.close();

    nlohmann::ordered_json config;
    record_ingest_config(config, ingest_flags);
    record_valuation_config(config, val_flags);
    record_run_config(config, run_flags);
    write_manifest("relevance", common, std::move(config), inputs, {csv_path});
    std::cout << "relevance: wrote " << csv_path << "\n";
    if (!study.all_converged()) {
        std::cerr << "warning: at least one default scenario hit the round cap\n";
        return static_cast<int>(ExitCode::convergence);
    }
    return static_cast<int>(ExitCode::ok);
}

std::vector<std::string> stats_header() {
    return {"metric", "bank_or_aggregate", "round", "observed", "mean", "std",
            "z",      "rel_dev",           "M",     "seed"};
}

void stats_row(CsvWriter& out, const EnsembleStats& s, std::uint64_t seed) {
    out.row({s.metric, s.subject, s.round, format_double(s.observed), format_double(s.mean),
             format_double(s.stddev), opt_str(s.z), opt_str(s.rel_dev),
             format_int(s.sample_count), std::to_string(seed)});
}

int cmd_ensemble(const IngestFlags& ingest_flags, const std::string& params_path,
                 const std::string& scenario_name, double lambda,
                 const ValuationFlags& val_flags, const RunFlags& run_flags, int samples,
                 std::uint64_t seed, const CommonOptions& common) {
    ensure_outdir(common.outdir);
    std::vector<std::string> inputs{params_path};
    const auto snap = ingest_from_flags(ingest_flags, inputs);
    const auto params = load_params(params_path);
    const auto cfg = run_config_from_flags(run_flags);
    const auto val = valuation_from_flags(val_flags);

    // Empirical equity aligned with the fitted model's bank order.
    std::vector<double> equity(static_cast<std::size_t>(params.n()));
    if (params.n() != snap.net.n())
        throw ValidationError("parameter file and network disagree on the bank count");
    for (int i = 0; i < params.n(); ++i) {
        const auto idx = snap.net.bank_index(params.banks[static_cast<std::size_t>(i)]);
        if (!idx)
            throw ValidationError("bank " + params.banks[static_cast<std::size_t>(i)] +
                                  " from the parameter file is missing from the network");
        equity[static_cast<std::size_t>(i)] =
            snap.sheets[static_cast<std::size_t>(*idx)].equity0;
    }

    const bool proportional = scenario_name == "shock";
    const auto scenario = proportional ? EnsembleScenario::proportional(lambda)
                                       : EnsembleScenario::single_defaults();
    const auto result =
        run_ensemble(params, equity, scenario, val, cfg, samples, seed, common.threads);

    const std::string stats_path = join_path(common.outdir, "ensemble_stats.csv");
    CsvWriter out(stats_path);
    out.row(stats_header());
    std::vector<std::string> outputs{stats_path};
    bool observed_converged = true;

    if (proportional) {
        const auto traj =
            run_shocked(snap.net, snap.sheets, ShockSpec::proportional(lambda), val, cfg);
        observed_converged = traj.converged;
        for (std::size_t r = 0; r < result.recorded_rounds.size(); ++r) {
            const int step = result.recorded_rounds[r];
            stats_row(out,
                      compare("H", "aggregate", format_int(step),
                              aggregate_loss_h_at(traj, step), result.h_at_round[r]),
                      seed);
        }
        stats_row(out, compare("H", "aggregate", "terminal", aggregate_loss_h(traj),
                               result.h_terminal),
                  seed);
        out.close();
    } else {
        const auto study = single_default_study(snap.net, snap.sheets, val, cfg, common.threads);
        observed_converged = study.all_converged();
        const auto obs_impact = impacts_from(study, snap.sheets);
        const auto obs_vuln = vulnerabilities_from(study, snap.sheets);
        std::vector<double> exp_impact(static_cast<std::size_t>(params.n()));
        std::vector<double> exp_vuln(static_cast<std::size_t>(params.n()));
        // Bank metrics are matched by id: reorder observed values (network
        // order) onto the parameter file's bank order.
        std::vector<double> obs_impact_aligned(static_cast<std::size_t>(params.n()));
        std::vector<double> obs_vuln_aligned(static_cast<std::size_t>(params.n()));
        for (int b = 0; b < params.n(); ++b) {
            const auto bidx = static_cast<std::size_t>(b);
            const int net_idx = *snap.net.bank_index(params.banks[bidx]);
            obs_impact_aligned[bidx] = obs_impact[static_cast<std::size_t>(net_idx)];
            obs_vuln_aligned[bidx] = obs_vuln[static_cast<std::size_t>(net_idx)];
            const auto impact_stats = compare("impact", params.banks[bidx], "",
                                              obs_impact_aligned[bidx], result.impact_samples[bidx]);
            exp_impact[bidx] = impact_stats.mean;
            stats_row(out, impact_stats, seed);
        }
        for (int b = 0; b < params.n(); ++b) {
            const auto bidx = static_cast<std::size_t>(b);
            const auto vuln_stats = compare("vulnerability", params.banks[bidx], "",
                                            obs_vuln_aligned[bidx],
                                            result.vulnerability_samples[bidx]);
            exp_vuln[bidx] = vuln_stats.mean;
            stats_row(out, vuln_stats, seed);
        }
        out.close();

        const std::string decile_path = join_path(common.outdir, "ensemble_deciles.csv");
        CsvWriter dec(decile_path);
        dec.row({"metric", "decile", "observed_mean", "expected_mean", "group_size"});
        const auto impact_profile = decile_aggregate(obs_impact_aligned, exp_impact, equity);
        const auto vuln_profile = decile_aggregate(obs_vuln_aligned, exp_vuln, equity);
        for (std::size_t g = 0; g < impact_profile.observed.size(); ++g)
            dec.row({"impact", format_int(static_cast<long long>(g) + 1),
                     format_double(impact_profile.observed[g]),
                     format_double(impact_profile.expected[g]),
                     format_int(impact_profile.group_size[g])});
        for (std::size_t g = 0; g < vuln_profile.observed.size(); ++g)
            dec.row({"vulnerability", format_int(static_cast<long long>(g) + 1),
                     format_double(vuln_profile.observed[g]),
                     format_double(vuln_profile.expected[g]),
                     format_int(vuln_profile.group_size[g])});
        dec.close();
        outputs.push_back(decile_path);
    }

    nlohmann::ordered_json config;
    record_ingest_config(config, ingest_flags);
    config["params"] = params_path;
    config["scenario"] = scenario_name;
    if (proportional) config["lambda"] = lambda;
    record_valuation_config(config, val_flags);
    record_run_config(config, run_flags);
    config["samples"] = samples;
    config["seed"] = seed;
    write_manifest("ensemble", common, std::move(config), inputs, outputs);
    std::cout << "ensemble: " << samples << " samples -> " << stats_path << "\n";
    if (result.nonconverged_runs > 0 || !observed_converged) {
        std::cerr << "warning: " << result.nonconverged_runs
                  << " ensemble runs hit the round cap\n";
        return static_cast<int>(ExitCode::convergence);
    }
    return static_cast<int>(ExitCode::ok);
}

int cmd_report(const std::vector<std::string>& stats_paths, const CommonOptions& common) {
    ensure_outdir(common.outdir);
    const auto expected = stats_header();
    struct Row {
        std::string source;
        std::vector<std::string> fields;
    };
    std::vector<Row> rows;
    for (const auto& path : stats_paths) {
        const auto table = read_csv(path);
        if (table.header != expected)
            throw ValidationError(path + ": not an ensemble stats table");
        const std::string source = fs::path(path).filename().string();
        for (const auto& r : table.rows) rows.push_back({source, r});
    }
    // Deterministic plot-ready order: metric, subject, round, then source.
    auto round_key = [](const std::string& r) {
        if (r.empty()) return std::make_pair(0, 0);
        if (r == "terminal") return std::make_pair(2, 0);
        return std::make_pair(1, std::stoi(r));
    };
    std::stable_sort(rows.begin(), rows.end(), [&](const Row& a, const Row& b) {
        const auto ka = std::make_tuple(a.fields[0], a.fields[1], round_key(a.fields[2]), a.source);
        const auto kb = std::make_tuple(b.fields[0], b.fields[1], round_key(b.fields[2]), b.source);
        return ka < kb;
    });

    const std::string out_path = join_path(common.outdir, "report.csv");
    CsvWriter out(out_path);
    std::vector<std::string> header{"source"};
    header.insert(header.end(), expected.begin(), expected.end());
    out.row(header);
    for (const auto& r : rows) {
        std::vector<std::string> fields{r.source};
        fields.insert(fields.end(), r.fields.begin(), r.fields.end());
        out.row(fields);
    }
    out.close();

    nlohmann::ordered_json config;
    config["stats"] = stats_paths;
    write_manifest("report", common, std::move(config), stats_paths, {out_path});
    std::cout << "report: wrote " << out_path << "\n";
    return static_cast<int>(ExitCode::ok);
}

// Rebuilds the argv of a recorded command from its manifest config.
std::vector<std::string> replay_args(const Manifest& m, const std::string& outdir_override) {
    std::vector<std::string> args{m.command};
    for (const auto& [key, value] : m.config.items()) {
        if (key == "outdir" && !outdir_override.empty()) continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) args.push_back("--" + key);
            continue;
        }
        auto push_scalar = [&](const nlohmann::json& v) {
            args.push_back("--" + key);
            if (v.is_string())
                args.push_back(v.get<std::string>());
            else if (v.is_number_float())
                args.push_back(format_double(v.get<double>()));
            else if (v.is_number_unsigned())
                args.push_back(std::to_string(v.get<std::uint64_t>()));
            else
                args.push_back(std::to_string(v.get<std::int64_t>()));
        };
        if (value.is_array())
            for (const auto& v : value) push_scalar(v);
        else
            push_scalar(value);
    }
    if (!outdir_override.empty()) {
        args.push_back("--outdir");
        args.push_back(outdir_override);
    }
    return args;
}

int cmd_rerun(const std::string& manifest_path, const std::string& outdir_override) {
    const auto manifest = Manifest::load(manifest_path);
    return run_command(replay_args(manifest, outdir_override));
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
    CLI::App app{std::string(kToolName) +
                 ": interbank stress testing with a maximum-entropy null model"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    int exit_code = static_cast<int>(ExitCode::ok);

    // synth ------------------------------------------------------------
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic snapshot");
    SyntheticSpec synth_spec;
    CommonOptions synth_common;
    synth_cmd->add_option("--n", synth_spec.n, "Number of banks")->capture_default_str();
    synth_cmd->add_option("--strength-median", synth_spec.strength_median,
                          "Median strength propensity")
        ->capture_default_str();
    synth_cmd->add_option("--strength-sigma", synth_spec.strength_sigma,
                          "Log-sigma of the strength distribution")
        ->capture_default_str();
    synth_cmd->add_option("--coupling", synth_spec.coupling, "Degree-strength coupling exponent")
        ->capture_default_str();
    synth_cmd->add_option("--density", synth_spec.density, "Target link density")
        ->capture_default_str();
    synth_cmd->add_option("--equity-slope", synth_spec.equity_slope, "Equity power-law slope")
        ->capture_default_str();
    synth_cmd->add_option("--equity-intercept", synth_spec.equity_intercept,
                          "Equity power-law intercept (natural log)")
        ->capture_default_str();
    synth_cmd->add_option("--equity-noise", synth_spec.equity_noise_sigma,
                          "Log-noise sigma on imputed equity")
        ->capture_default_str();
    synth_cmd->add_option("--seed", synth_spec.seed, "Generator seed")->capture_default_str();
    add_common(synth_cmd, synth_common);
    synth_cmd->callback([&] { exit_code = cmd_synth(synth_spec, synth_common); });

    // fit-null ----------------------------------------------------------
    auto* fit_cmd = app.add_subcommand("fit-null", "Fit the null-model multipliers");
    IngestFlags fit_ingest;
    CommonOptions fit_common;
    double fit_tolerance = 1e-8;
    long fit_iterations = 100000;
    std::string params_name = "params.json";
    add_ingest(fit_cmd, fit_ingest);
    fit_cmd->add_option("--fit-tolerance", fit_tolerance, "Residual tolerance for the fit")
        ->capture_default_str();
    fit_cmd->add_option("--fit-iterations", fit_iterations, "Iteration cap for the fit")
        ->capture_default_str();
    fit_cmd->add_option("--params-out", params_name, "Parameter file name")
        ->capture_default_str();
    add_common(fit_cmd, fit_common);
    fit_cmd->callback([&] {
        fit_ingest.has_slope = fit_cmd->count("--impute-slope") > 0;
        exit_code = cmd_fit_null(fit_ingest, fit_tolerance, fit_iterations, params_name,
                                 fit_common);
    });

    // sample --------------------------------------------------------------
    auto* sample_cmd = app.add_subcommand("sample", "Draw networks from fitted parameters");
    std::string sample_params;
    int sample_count = 1;
    std::uint64_t sample_seed = 1;
    CommonOptions sample_common;
    sample_cmd->add_option("--params", sample_params, "Fitted parameter JSON")->required();
    sample_cmd->add_option("--count", sample_count, "Number of networks")->capture_default_str();
    sample_cmd->add_option("--seed", sample_seed, "Master seed")->capture_default_str();
    add_common(sample_cmd, sample_common);
    sample_cmd->callback(
        [&] { exit_code = cmd_sample(sample_params, sample_count, sample_seed, sample_common); });

    // stress -------------------------------------------------------------
    auto* stress_cmd = app.add_subcommand("stress", "Run the system-wide shock scenario");
    IngestFlags stress_ingest;
    ValuationFlags stress_val;
    RunFlags stress_run;
    CommonOptions stress_common;
    std::vector<double> stress_lambdas{0.005, 0.01, 0.05};
    std::vector<double> stress_alphas;
    std::vector<std::string> stress_defaults;
    add_ingest(stress_cmd, stress_ingest);
    add_valuation_base(stress_cmd, stress_val);
    stress_cmd->add_option("--alpha", stress_alphas,
                           "Non-linearity parameter(s) to sweep (nldr only)")
        ->delimiter(',');
    stress_cmd->add_option("--lambda", stress_lambdas, "Shock fractions to sweep")
        ->delimiter(',')
        ->capture_default_str();
    stress_cmd->add_option("--default-bank", stress_defaults,
                           "Also run the outright default of these banks")
        ->delimiter(',');
    add_run_config(stress_cmd, stress_run);
    add_common(stress_cmd, stress_common);
    stress_cmd->callback([&] {
        stress_ingest.has_slope = stress_cmd->count("--impute-slope") > 0;
        std::vector<double> lambdas =
            stress_cmd->count("--lambda") == 0 && !stress_defaults.empty()
                ? std::vector<double>{}
                : stress_lambdas;
        // default non-linearity sweep spans linear through near-default-only
        if (stress_val.valuation == "nldr" && stress_alphas.empty())
            stress_alphas = {0.0, 1.0, 2.0, 5.0, 10.0};
        exit_code = cmd_stress(stress_ingest, stress_val, lambdas, stress_alphas, stress_defaults,
                               stress_run, stress_common);
    });

    // relevance ------------------------------------------------------------
    auto* rel_cmd = app.add_subcommand("relevance", "Per-bank impact and vulnerability");
    IngestFlags rel_ingest;
    ValuationFlags rel_val;
    RunFlags rel_run;
    CommonOptions rel_common;
    add_ingest(rel_cmd, rel_ingest);
    add_valuation(rel_cmd, rel_val);
    add_run_config(rel_cmd, rel_run);
    add_common(rel_cmd, rel_common);
    rel_cmd->callback([&] {
        rel_ingest.has_slope = rel_cmd->count("--impute-slope") > 0;
        exit_code = cmd_relevance(rel_ingest, rel_val, rel_run, rel_common);
    });

    // ensemble ----------------------------------------------------------
    auto* ens_cmd = app.add_subcommand("ensemble", "Observed vs expected over the null ensemble");
    IngestFlags ens_ingest;
    ValuationFlags ens_val;
    RunFlags ens_run;
    CommonOptions ens_common;
    std::string ens_params;
    std::string ens_scenario = "shock";
    double ens_lambda = 0.01;
    int ens_samples = 1000;
    std::uint64_t ens_seed = 1;
    add_ingest(ens_cmd, ens_ingest);
    ens_cmd->add_option("--params", ens_params, "Fitted parameter JSON")->required();
    ens_cmd->add_option("--scenario", ens_scenario, "shock = proportional, defaults = all "
                                                    "single-bank defaults")
        ->check(CLI::IsMember({"shock", "defaults"}))
        ->capture_default_str();
    ens_cmd->add_option("--lambda", ens_lambda, "Shock fraction (shock scenario)")
        ->capture_default_str();
    add_valuation(ens_cmd, ens_val);
    add_run_config(ens_cmd, ens_run);
    ens_cmd->add_option("--samples", ens_samples, "Ensemble size M")->capture_default_str();
    ens_cmd->add_option("--seed", ens_seed, "Master seed")->capture_default_str();
    add_common(ens_cmd, ens_common);
    ens_cmd->callback([&] {
        ens_ingest.has_slope = ens_cmd->count("--impute-slope") > 0;
        exit_code = cmd_ensemble(ens_ingest, ens_params, ens_scenario, ens_lambda, ens_val,
                                 ens_run, ens_samples, ens_seed, ens_common);
    });

    // report -------------------------------------------------------------
    auto* report_cmd = app.add_subcommand("report", "Merge stats tables into one tidy table");
    std::vector<std::string> report_stats;
    CommonOptions report_common;
    report_cmd->add_option("--stats", report_stats, "Ensemble stats CSVs")->required();
    add_common(report_cmd, report_common);
    report_cmd->callback([&] { exit_code = cmd_report(report_stats, report_common); });

    // rerun --------------------------------------------------------------
    auto* rerun_cmd = app.add_subcommand("rerun", "Re-execute a command from its manifest");
    std::string rerun_manifest;
    std::string rerun_outdir;
    rerun_cmd->add_option("manifest", rerun_manifest, "Manifest JSON path")->required();
    rerun_cmd->add_option("--outdir", rerun_outdir, "Redirect outputs to this directory");
    rerun_cmd->callback([&] { exit_code = cmd_rerun(rerun_manifest, rerun_outdir); });

    try {
        const auto expanded = expand_config_args(args);
        std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? static_cast<int>(ExitCode::ok)
                                : static_cast<int>(ExitCode::usage);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::usage);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::io);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::validation);
    } catch (const ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::convergence);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::failure);
    }
    return exit_code;
}

}  // namespace ibstress
