#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nlsysid/fit_report.hpp"
#include "nlsysid/sim.hpp"
#include "nlsysid/system.hpp"
#include "nlsysid/types.hpp"

namespace nlsysid {

// Typed hyperparameters per algorithm, resolved against the system and horizon.
struct QuasiNewtonCell { double gamma; Index iters; };
struct GlmtronCell { double gamma; Index iters; };
struct MedianOfMeansCell { double gamma; Index iters; Index segments; Index gap; };
struct ReplayCell { Index buffer; Index gap; double gamma; double trunc; Index tail_start; bool random_order; };
struct ForwardCell { double gamma; };
struct DataDropCell { Index gap; double gamma; double radius; };
struct GlmProjCell { double radius; };

using AlgoParams =
    std::variant<QuasiNewtonCell, GlmtronCell, MedianOfMeansCell, ReplayCell, ForwardCell, DataDropCell, GlmProjCell>;

struct AlgoSpec {
    std::string name;  // quasi-newton | glmtron | mom | sgd-rer | sgd-er | sgd | sgd-dd | glm-proj
    AlgoParams params;
};

/// Experiment description, parsed from flat "dotted.key = value" text:
///
///   system.kind = rand_bimod        # rand_bimod | relu_lb | explicit | bernoulli
///   system.d = 5
///   system.rho = 0.98
///   system.link = leaky_relu:0.5
///   system.noise = gaussian         # none | gaussian | student_t:<dof>
///   system.sigma_sq = 1
///   horizon = 100000
///   seeds = 1..5
///   algorithms = quasi-newton, sgd-rer
///   algo.sgd-rer.buffer = 240
///
/// Every key not given falls back to a documented default; unknown keys are
/// rejected. "auto" requests the formula-based default where one exists.
struct ExperimentConfig {
    std::map<std::string, std::string> entries;

    // system
    std::string system_kind = "rand_bimod";
    Index d = 5;
    double rho = 0.98;
    double epsilon = 0.1;
    std::uint64_t matrix_seed = 2022;
    Mat explicit_matrix;
    Vec nu;
    Link link = Link::leaky_relu(0.5);
    NoiseModel noise = NoiseModel::gaussian(1.0);
    Index burn_in = -1;  // -1: default_burn_in(rho, T)

    Index horizon = 100000;
    std::vector<std::uint64_t> seeds;
    std::vector<AlgoSpec> algorithms;
    std::string output_path;
    Index record_stride = 1000;
    Index workers = 1;

    static ExperimentConfig parse(std::istream& in);
    static ExperimentConfig from_entries(std::map<std::string, std::string> entries);

    /// Copy with one key overridden and everything re-validated.
    ExperimentConfig with(const std::string& key, const std::string& value) const;

    SystemSpec system() const;
};

struct ResultRow {
    std::string algo;
    std::uint64_t seed = 0;
    Index t = 0;
    Index updates = 0;
    std::int64_t wall_ns = 0;
    double frob_sq_err = 0.0;
    std::optional<std::string> axis;
    std::optional<std::string> axis_value;

    friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct CellOutcome {
    std::string algo;
    std::uint64_t seed = 0;
    std::string status;  // FitStatus name, or "error: <message>"
    bool failed = false;
};

struct ExperimentResult {
    std::vector<ResultRow> rows;
    std::vector<CellOutcome> cells;
    bool all_completed() const;
};

using RowSink = std::function<void(const ResultRow&)>;

/// Simulates one trajectory per seed, runs every algorithm on it and emits
/// trace rows in (seed, algorithm) order. Cell failures become outcomes with
/// failed = true and a single row with t = -1 and NaN error.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const RowSink& sink = {});

/// run_experiment over cfg.with(axis, v) for each v, rows tagged with (axis, v).
ExperimentResult sweep(const ExperimentConfig& cfg, const std::string& axis, const std::vector<std::string>& values,
                       const RowSink& sink = {});

/// Runs a single configured algorithm on a trajectory.
FitReport run_algorithm(const AlgoSpec& algo, const Trajectory& traj, std::uint64_t seed, const FitOptions& options);

struct SummaryRow {
    std::string algo;
    Index n_seeds = 0;
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
    Index total_updates = 0;
    std::int64_t total_wall_ns = 0;
};

/// Final error (last row) per (algo, seed), summarized per algorithm
/// (per algorithm@axis_value for sweeps) in first-appearance order.
std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

/// Linear-interpolation quantile, q in [0, 1].
double quantile(std::vector<double> values, double q);

inline constexpr const char* kCsvHeader = "algo,seed,t,updates,wall_ns,frob_sq_err";

void write_csv_header(std::ostream& out, bool with_axis);
void write_csv_row(std::ostream& out, const ResultRow& row, bool with_axis);
std::vector<ResultRow> read_csv(std::istream& in);
void write_summary(std::ostream& out, const std::vector<SummaryRow>& summary);

}  // namespace nlsysid
