#include "twinbeam/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "twinbeam/config.hpp"
#include "twinbeam/forward_model.hpp"
#include "twinbeam/io.hpp"
#include "twinbeam/quasi.hpp"
#include "twinbeam/reconstruction.hpp"
#include "twinbeam/statistics.hpp"
#include "twinbeam/synthetic.hpp"

namespace twinbeam {

namespace {

using io::format_value;

struct Streams
{
    std::istream& in;
    std::ostream& out;
    std::ostream& err;
};

/// Options shared by every subcommand plus the per-command settings flags.
struct CommandLine
{
    std::string in_path;
    std::string out_path;
    std::string config_path;
    std::string frames_out;
    std::string kl_out;
    std::string intensity_out;
    std::string report_out;
    bool scan = false;
    std::map<std::string, std::string> settings;
    std::vector<std::pair<std::string, CLI::Option*>> setting_options;
};

bool to_stdout(std::string const& path)
{
    return path.empty() || path == "-";
}

JointDistribution load_matrix(std::string const& path, std::istream& in)
{
    if (to_stdout(path))
        return io::read_matrix(in);
    try
    {
        return io::read_matrix(std::filesystem::path(path));
    }
    catch (io::ParseError const& e)
    {
        throw Error(path + ": " + e.what());
    }
}

/// Source distribution: --in matrix, `source` setting, or the ideal pair source.
JointDistribution load_source(CommandLine const& cl, PipelineConfig const& cfg, std::istream& in)
{
    if (!cl.in_path.empty())
        return load_matrix(cl.in_path, in);
    if (cfg.source_path)
        return load_matrix(cfg.source_path->string(), in);
    return ideal_pair_distribution(cfg.mu, cfg.policy.photon_cutoff, cfg.policy.tail_epsilon);
}

void require_valid(JointDistribution const& d, std::string const& what)
{
    auto const report = validate(d);
    if (report.ok())
        return;
    std::string msg = what + " violates the distribution invariants:";
    for (auto const& v : report.violations)
        msg += " " + v + ";";
    throw Error(msg);
}

void emit_matrix(JointDistribution const& d, std::string const& path, Streams const& s)
{
    if (to_stdout(path))
        io::write_matrix(d, s.out);
    else
        io::write_matrix(d, std::filesystem::path(path));
}

void emit_grid(io::PlotGrid const& g, std::string const& path, Streams const& s)
{
    if (to_stdout(path))
        io::write_grid(g, s.out);
    else
        io::write_grid(g, std::filesystem::path(path));
}

std::ostream& summary_stream(std::string const& data_path, Streams const& s)
{
    return to_stdout(data_path) ? s.err : s.out;
}

std::string opt_value(std::optional<double> const& v)
{
    return v ? format_value(*v) : std::string("null");
}

int run_simulate(CommandLine const& cl, PipelineConfig const& cfg, Streams const& s)
{
    auto const source = load_source(cl, cfg, s.in);
    require_valid(source, "source distribution");
    SamplingOptions options;
    options.threads = cfg.threads;
    options.keep_frames = !cl.frames_out.empty();
    auto const result = sample_frames(source, cfg.signal_channel(), cfg.idler_channel(), cfg.frames,
                                      cfg.seed, options);
    emit_matrix(result.histogram, cl.out_path, s);
    if (!cl.frames_out.empty())
    {
        std::ofstream frames(cl.frames_out);
        if (!frames)
            throw Error("cannot open '" + cl.frames_out + "' for writing");
        io::write_frames(result.frames, frames);
    }
    auto& sum = summary_stream(cl.out_path, s);
    sum << "frames = " << cfg.frames << '\n'
        << "seed = " << cfg.seed << '\n'
        << "mean_c_s = " << format_value(result.mean_c_s) << '\n'
        << "mean_c_i = " << format_value(result.mean_c_i) << '\n';
    return 0;
}

int run_forward(CommandLine const& cl, PipelineConfig const& cfg, Streams const& s)
{
    auto const source = load_source(cl, cfg, s.in);
    require_valid(source, "source distribution");
    TruncationPolicy signal_policy = cfg.policy, idler_policy = cfg.policy;
    signal_policy.photon_cutoff = std::max(cfg.policy.photon_cutoff, source.n_s_max());
    idler_policy.photon_cutoff = std::max(cfg.policy.photon_cutoff, source.n_i_max());
    auto const ks = build_kernel(cfg.signal_channel(), signal_policy);
    auto const ki = build_kernel(cfg.idler_channel(), idler_policy);
    auto const result = forward(source, ks, ki);
    emit_matrix(result.measured, cl.out_path, s);
    summary_stream(cl.out_path, s) << "discarded_mass = " << format_value(result.discarded_mass)
                                   << '\n';
    return 0;
}

int run_stats(CommandLine const& cl, PipelineConfig const&, Streams const& s)
{
    auto const d = load_matrix(cl.in_path, s.in);
    require_valid(d, "input");
    auto const report = compute_statistics(d);
    auto const map = nonclassicality_map(d);
    io::write_report(report, s.out);
    s.out << "violations = " << map.violation_count() << '\n'
          << "max_violation_offset = " << map.max_diagonal_offset() << '\n';
    if (!cl.out_path.empty())
        emit_grid(io::to_plot_grid(map), cl.out_path, s);
    if (!cl.report_out.empty())
    {
        std::ofstream file(cl.report_out);
        if (!file)
            throw Error("cannot open '" + cl.report_out + "' for writing");
        io::write_report(report, file);
    }
    return 0;
}

int run_reconstruct(CommandLine const& cl, PipelineConfig const& cfg, Streams const& s)
{
    auto const f = load_matrix(cl.in_path, s.in);
    require_valid(f, "measured histogram");
    auto const state = reconstruct(f, cfg.signal_channel(), cfg.idler_channel(), cfg.em, cfg.policy);
    emit_matrix(state.current, cl.out_path, s);
    if (!cl.kl_out.empty())
    {
        std::ofstream file(cl.kl_out);
        if (!file)
            throw Error("cannot open '" + cl.kl_out + "' for writing");
        io::write_kl_history(state.kl_history, file);
    }
    auto const report = compute_statistics(state.current);
    summary_stream(cl.out_path, s) << "iterations = " << state.iteration << '\n'
                                   << "converged = " << (state.converged ? "true" : "false") << '\n'
                                   << "stop_reason = " << to_string(state.stop_reason) << '\n'
                                   << "final_kl = " << format_value(state.kl_history.back()) << '\n'
                                   << "covariance_cp = " << opt_value(report.covariance_cp) << '\n';
    return 0;
}

int run_quasi(CommandLine const& cl, PipelineConfig const& cfg, Streams const& s)
{
    auto const rho = load_source(cl, cfg, s.in);
    require_valid(rho, "photon-number distribution");
    auto const axis = cfg.grid.axis();
    auto const grid = quasi_distribution(rho, cfg.ordering, axis, axis, cfg.weight);
    emit_grid(io::to_plot_grid(grid), cl.out_path, s);

    auto const other_weight =
        cfg.weight == GammaWeight::single ? GammaWeight::squared : GammaWeight::single;
    auto const other = quasi_distribution(rho, cfg.ordering, axis, axis, other_weight);
    double const norm = integrated_mass(grid);
    double const other_norm = integrated_mass(other);
    bool const single = cfg.weight == GammaWeight::single;

    if (!cl.intensity_out.empty())
    {
        std::vector<double> w(axis.size());
        std::transform(axis.begin(), axis.end(), w.begin(), [](double a) { return a * a; });
        io::write_grid(io::to_plot_grid(intensity_distribution(rho, cfg.ordering, w, w, cfg.weight)),
                       std::filesystem::path(cl.intensity_out));
    }

    auto& sum = summary_stream(cl.out_path, s);
    sum << "s = " << format_value(cfg.ordering.s) << '\n'
        << "modes = " << cfg.ordering.m_modes << '\n'
        << "variant = " << (single ? "single" : "squared") << '\n'
        << "min_value = " << format_value(grid.min_value) << '\n'
        << "negative_fraction = " << format_value(grid.negative_fraction) << '\n'
        << "negative = " << (has_negativity(grid) ? "true" : "false") << '\n'
        << "normalization_single = " << format_value(single ? norm : other_norm) << '\n'
        << "normalization_squared = " << format_value(single ? other_norm : norm) << '\n';
    if (cl.scan)
    {
        try
        {
            auto const scan = negativity_threshold_scan(rho, cfg.ordering.m_modes, axis, axis, cfg.weight);
            sum << "s0 = " << format_value(scan.s0) << '\n';
        }
        catch (Error const&)
        {
            sum << "s0 = null\n";
        }
    }
    return 0;
}

void add_settings(CLI::App* sub, CommandLine& cl, std::vector<std::string> const& keys)
{
    for (auto const& key : keys)
        cl.setting_options.emplace_back(key, sub->add_option("--" + key, cl.settings[key]));
}

} // namespace

int run_command(std::vector<std::string> const& args, std::istream& in, std::ostream& out,
                std::ostream& err)
{
    Streams streams{in, out, err};
    CommandLine cl;
    CLI::App app{"Twin-beam photon-number statistics: detection model, EM reconstruction, "
                 "nonclassicality criteria and s-ordered quasi-distributions",
                 "twinbeam"};
    app.require_subcommand(1);

    std::vector<std::string> const channel_keys{"signal-eff", "idler-eff", "noise-mean",
                                                "signal-noise", "idler-noise"};
    auto concat = [](std::vector<std::string> a, std::vector<std::string> const& b) {
        a.insert(a.end(), b.begin(), b.end());
        return a;
    };

    using Runner = std::function<int(CommandLine const&, PipelineConfig const&, Streams const&)>;
    std::vector<std::pair<CLI::App*, Runner>> commands;
    auto add = [&](std::string const& name, std::string const& description,
                   std::vector<std::string> const& keys, Runner runner) {
        auto* sub = app.add_subcommand(name, description);
        sub->add_option("--in", cl.in_path, "input matrix file ('-' = stdin)");
        sub->add_option("--out", cl.out_path, "output file ('-' or omitted = stdout)");
        sub->add_option("--config", cl.config_path, "key = value settings file ($TWINBEAM_CONFIG)");
        add_settings(sub, cl, keys);
        commands.emplace_back(sub, std::move(runner));
        return sub;
    };

    auto* simulate = add("simulate", "Monte Carlo count histogram from a source distribution",
                         concat(channel_keys, {"mu", "source", "photon-cutoff", "tail-epsilon",
                                               "frames", "seed", "threads"}),
                         run_simulate);
    simulate->add_option("--frames-out", cl.frames_out, "raw 'c_S c_I' frame stream file");

    add("forward", "analytic measured-count distribution of a source",
        concat(channel_keys, {"mu", "source", "photon-cutoff", "count-cutoff", "tail-epsilon"}),
        run_forward);

    auto* stats = add("stats", "covariance, K coefficients and classicality-bound map", {}, run_stats);
    stats->add_option("--report", cl.report_out, "write the statistics report to a file");

    auto* recon = add("reconstruct", "EM reconstruction of the photon-number distribution",
                      concat(channel_keys, {"photon-cutoff", "count-cutoff", "tail-epsilon",
                                            "max-iter", "kl-tol", "initial"}),
                      run_reconstruct);
    recon->add_option("--kl-out", cl.kl_out, "write the KL history (iteration, KL)");

    auto* quasi = add("quasi", "s-ordered quasi-distribution on an amplitude grid",
                      {"mu", "source", "photon-cutoff", "tail-epsilon", "s", "modes", "variant",
                       "alpha-min", "alpha-max", "grid-points"},
                      run_quasi);
    quasi->add_option("--intensity-out", cl.intensity_out, "write P(W_S, W_I) grid file");
    quasi->add_flag("--scan", cl.scan, "estimate the negativity threshold s0");

    try
    {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    }
    catch (CLI::ParseError const& e)
    {
        return app.exit(e, out, err);
    }

    try
    {
        PipelineConfig cfg;
        std::string config_path = cl.config_path;
        if (config_path.empty())
            if (char const* env = std::getenv("TWINBEAM_CONFIG"))
                config_path = env;
        if (!config_path.empty())
        {
            auto const file_settings = read_config(std::filesystem::path(config_path));
            for (auto const key : config_keys())
                for (auto const& [k, v] : file_settings)
                    if (k == key)
                        cfg.apply(k, v);
            for (auto const& [k, v] : file_settings)
                if (std::find(config_keys().begin(), config_keys().end(), k) == config_keys().end())
                    throw Error(config_path + ": unknown setting '" + k + "'");
        }
        for (auto const key : config_keys())
            for (auto const& [k, option] : cl.setting_options)
                if (k == key && option->count() > 0)
                    cfg.apply(key, cl.settings[k]);
        cfg.check();

        for (auto const& [sub, runner] : commands)
            if (sub->parsed())
                return runner(cl, cfg, streams);
    }
    catch (std::exception const& e)
    {
        err << "twinbeam: error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

} // namespace twinbeam
