// Command line front end: simulate, fit, bench, sweep, lb-demo.

#include <chrono>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nlsysid/bench.hpp"
#include "nlsysid/diag.hpp"
#include "nlsysid/numfmt.hpp"
#include "nlsysid/offline.hpp"
#include "nlsysid/sim.hpp"
#include "nlsysid/stream.hpp"

using namespace nlsysid;

namespace {

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open config '" + path + "'");
    return ExperimentConfig::parse(in);
}

// Writes rows to the configured output file (or stdout) as they arrive.
class CsvOutput {
public:
    CsvOutput(const std::string& path, bool with_axis) : with_axis_(with_axis) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw InvalidArgument("cannot write '" + path + "'");
        }
        write_csv_header(out(), with_axis_);
    }
    void operator()(const ResultRow& row) { write_csv_row(out(), row, with_axis_); }
    std::ostream& out() { return file_ ? *file_ : std::cout; }
    bool to_file() const { return static_cast<bool>(file_); }

private:
    bool with_axis_;
    std::unique_ptr<std::ofstream> file_;
};

int finish(const ExperimentResult& result, CsvOutput& csv) {
    std::ostream& log = csv.to_file() ? std::cout : std::cerr;
    for (const auto& c : result.cells)
        if (c.failed) std::cerr << "cell " << c.algo << " seed " << c.seed << ": " << c.status << '\n';
    const auto summary = summarize(result.rows);
    write_summary(log, summary);
    return result.all_completed() ? 0 : 1;
}

std::vector<std::string> split_values(const std::string& text) {
    std::vector<std::string> out;
    for (auto part : split(text, ','))
        if (!trim(part).empty()) out.emplace_back(trim(part));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Identification of non-linear dynamical systems X_{t+1} = phi(A X_t) + eta_t"};
    app.require_subcommand(1);

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Simulate one trajectory and write it as a trajectory file");
    std::string sim_config, sim_out;
    std::uint64_t sim_seed = 1;
    sim_cmd->add_option("--config", sim_config, "Experiment config describing the system")->required();
    sim_cmd->add_option("--seed", sim_seed, "Noise seed");
    sim_cmd->add_option("--output,-o", sim_out, "Output file (default stdout)");

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "Fit one estimator to a trajectory file");
    std::string algo, input, generate, fit_out, estimate_out;
    double gamma = std::numeric_limits<double>::quiet_NaN();
    Index iters = 100, buffer = 240, gap = 10, segments = 5, stride = 1000;
    std::string trunc = "inf", tail_start = "half";
    double radius = std::numeric_limits<double>::infinity();
    std::string nu_text = "0";
    std::uint64_t fit_seed = 1;
    fit_cmd->add_option("--algo", algo, "quasi-newton|glmtron|mom|sgd-rer|sgd|sgd-er|sgd-dd|glm-proj")->required();
    fit_cmd->add_option("--input", input, "Trajectory file");
    fit_cmd->add_option("--generate", generate, "Experiment config to simulate the trajectory from instead");
    fit_cmd->add_option("--seed", fit_seed, "Seed for --generate and for sgd-er shuffling");
    fit_cmd->add_option("--gamma", gamma, "Step size");
    fit_cmd->add_option("--iters", iters, "Offline iterations");
    fit_cmd->add_option("--segments", segments, "Median-of-means segments");
    fit_cmd->add_option("--buffer", buffer, "Buffer size B");
    fit_cmd->add_option("--gap", gap, "Buffer gap u (also the sgd-dd and mom gap)");
    fit_cmd->add_option("--trunc", trunc, "Truncation bound R (number or inf)");
    fit_cmd->add_option("--tail-start", tail_start, "Tail-average start buffer t0 (number or half)");
    fit_cmd->add_option("--radius", radius, "Projection radius (sgd-dd, glm-proj)");
    fit_cmd->add_option("--nu", nu_text, "Offsets for glm-proj: one value or d comma-separated");
    fit_cmd->add_option("--record-stride", stride, "Updates between trace rows");
    fit_cmd->add_option("--output,-o", fit_out, "CSV report (default stdout)");
    fit_cmd->add_option("--estimate", estimate_out, "Write the estimate matrix here");
    fit_cmd->require_option(1, 0);

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "Run an experiment config and emit its CSV");
    std::string bench_config;
    Index workers = 0;
    bench_cmd->add_option("--config", bench_config, "Experiment config")->required();
    bench_cmd->add_option("--workers", workers, "Concurrent cells (overrides the config)");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "Run an experiment config across values of one key");
    std::string sweep_config, axis, values;
    sweep_cmd->add_option("--config", sweep_config, "Experiment config")->required();
    sweep_cmd->add_option("--axis", axis, "Config key to vary, e.g. algo.sgd-rer.buffer")->required();
    sweep_cmd->add_option("--values", values, "Comma-separated values")->required();
    sweep_cmd->add_option("--workers", workers, "Concurrent cells (overrides the config)");

    // lb-demo
    auto* lb_cmd = app.add_subcommand("lb-demo", "ReLU hardness demo: sign fraction of the last row vs d");
    std::string dims = "4,8,16,32", seeds_text = "1..10";
    double epsilon = 0.1;
    Index lb_horizon = 100000;
    lb_cmd->add_option("--dims", dims, "Dimensions to sweep");
    lb_cmd->add_option("--epsilon", epsilon, "Perturbation epsilon");
    lb_cmd->add_option("--horizon", lb_horizon, "Trajectory length T");
    lb_cmd->add_option("--seeds", seeds_text, "Seeds, e.g. 1..10 or 1,2,3");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim_cmd) {
            const ExperimentConfig cfg = load_config(sim_config);
            const SystemSpec spec = cfg.system();
            const Trajectory traj =
                cfg.system_kind == "bernoulli"
                    ? bernoulli_ar_simulate(spec.offset(), spec.a_star(), cfg.horizon, sim_seed)
                    : simulate(spec, cfg.horizon, sim_seed,
                               cfg.burn_in >= 0 ? cfg.burn_in : default_burn_in(spec.rho(), cfg.horizon));
            if (sim_out.empty()) {
                write_trajectory(std::cout, traj);
            } else {
                std::ofstream out(sim_out);
                write_trajectory(out, traj);
            }
            return 0;
        }

        if (*fit_cmd) {
            std::optional<Trajectory> traj;
            FitOptions options;
            options.record_stride = stride;
            if (!generate.empty()) {
                const ExperimentConfig cfg = load_config(generate);
                const SystemSpec spec = cfg.system();
                traj = cfg.system_kind == "bernoulli"
                           ? bernoulli_ar_simulate(spec.offset(), spec.a_star(), cfg.horizon, fit_seed)
                           : simulate(spec, cfg.horizon, fit_seed,
                                      cfg.burn_in >= 0 ? cfg.burn_in : default_burn_in(spec.rho(), cfg.horizon));
                options.a_star = spec.a_star();
            } else {
                std::ifstream in(input);
                if (!in) throw InvalidArgument("cannot open trajectory '" + input + "'");
                traj = read_trajectory(in);
            }
            const Index horizon = traj->horizon();
            const Link& link = traj->spec().link();
            const double step = std::isnan(gamma) ? -1.0 : gamma;
            auto stream_gamma = [&] { return step > 0 ? step : default_stream_gamma(horizon); };

            FitReport report;
            MatrixStream stream(*traj);
            if (algo == "quasi-newton") {
                report = quasi_newton(*traj, {step > 0 ? step : 0.25, iters, {}}, options);
            } else if (algo == "glmtron") {
                report = glmtron(*traj, {step > 0 ? step : 0.017, iters, {}}, options);
            } else if (algo == "mom") {
                const auto start = std::chrono::steady_clock::now();
                report.a_hat = median_of_means_fit(*traj, {segments, gap, {step > 0 ? step : 0.25, iters, {}}, false});
                report.updates = segments * iters;
                report.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                                     std::chrono::steady_clock::now() - start)
                                     .count();
                report.trace.push_back({horizon, report.updates, report.wall_ns,
                                        options.a_star.size() ? (report.a_hat - options.a_star).squaredNorm()
                                                              : std::numeric_limits<double>::quiet_NaN()});
            } else if (algo == "sgd-rer" || algo == "sgd-er") {
                const BufferLayout layout(buffer, gap, horizon);
                StreamConfig cfg;
                cfg.gamma = stream_gamma();
                cfg.r_trunc = parse_double(trunc);
                cfg.t0 = tail_start == "half" ? layout.n_buffers() / 2 : static_cast<Index>(parse_double(tail_start));
                report = algo == "sgd-rer" ? sgd_rer(stream, layout, cfg, link, options)
                                           : sgd_er(stream, layout, cfg, link, fit_seed, options);
            } else if (algo == "sgd") {
                report = forward_sgd(stream, stream_gamma(), link, options);
            } else if (algo == "sgd-dd") {
                report = sgd_dd(stream, gap, stream_gamma(), radius, link, options);
            } else if (algo == "glm-proj") {
                GlmProjParams params;
                const auto parts = split_values(nu_text);
                params.nu = Vec::Zero(traj->dim());
                if (parts.size() == 1) params.nu.setConstant(parse_double(parts[0]));
                else if (static_cast<Index>(parts.size()) == traj->dim())
                    for (Index i = 0; i < traj->dim(); ++i) params.nu(i) = parse_double(parts[static_cast<std::size_t>(i)]);
                else throw InvalidArgument("--nu needs one or d values");
                params.radius = std::isinf(radius) ? 1.0 : radius;
                params.zeta = params.c0 = bernoulli_ar_constant(params.nu.cwiseAbs().maxCoeff(), params.radius);
                report = projected_sgd_glm(stream, params, options);
            } else {
                throw InvalidArgument("unknown algorithm '" + algo + "'");
            }

            CsvOutput csv(fit_out, false);
            for (const auto& p : report.trace)
                csv({algo, traj->seed(), p.t, p.updates, p.wall_ns, p.frob_sq_err, {}, {}});
            std::cerr << "status: " << to_string(report.status) << '\n';
            if (!estimate_out.empty()) {
                std::ofstream out(estimate_out);
                for (Index i = 0; i < report.a_hat.rows(); ++i) {
                    for (Index j = 0; j < report.a_hat.cols(); ++j)
                        out << (j ? "," : "") << format_double(report.a_hat(i, j));
                    out << '\n';
                }
            }
            return 0;
        }

        if (*bench_cmd) {
            ExperimentConfig cfg = load_config(bench_config);
            if (workers > 0) cfg.workers = workers;
            CsvOutput csv(cfg.output_path, false);
            const auto result = run_experiment(cfg, [&](const ResultRow& r) { csv(r); });
            return finish(result, csv);
        }

        if (*sweep_cmd) {
            ExperimentConfig cfg = load_config(sweep_config);
            if (workers > 0) cfg = cfg.with("workers", std::to_string(workers));
            CsvOutput csv(cfg.output_path, true);
            const auto result = sweep(cfg, axis, split_values(values), [&](const ResultRow& r) { csv(r); });
            return finish(result, csv);
        }

        if (*lb_cmd) {
            const auto seeds = ExperimentConfig::from_entries(
                                   {{"seeds", seeds_text}, {"algorithms", "sgd"}, {"system.kind", "relu_lb"},
                                    {"system.d", "2"}, {"system.burn_in", "0"}, {"horizon", "2"}})
                                   .seeds;
            std::cout << "d,epsilon,fraction,seed\n";
            for (const auto& d_text : split_values(dims)) {
                const Index d = static_cast<Index>(parse_double(d_text));
                for (const auto seed : seeds) {
                    const DiagReport r = relu_sign_fraction(d, epsilon, lb_horizon, seed);
                    std::cout << d << ',' << format_double(epsilon) << ',' << format_double(r.observed[0]) << ','
                              << seed << '\n';
                }
            }
            return 0;
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 2;
    }
    return 0;
}
