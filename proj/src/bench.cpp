#include "nlsysid/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <set>
#include <thread>

#include "nlsysid/diag.hpp"
#include "nlsysid/numfmt.hpp"
#include "nlsysid/offline.hpp"
#include "nlsysid/stream.hpp"

namespace nlsysid {

namespace {

const std::set<std::string> kAlgorithms = {"quasi-newton", "glmtron", "mom",    "sgd-rer",
                                           "sgd-er",       "sgd",     "sgd-dd", "glm-proj"};

const std::map<std::string, std::set<std::string>> kAlgoKeys = {
    {"quasi-newton", {"gamma", "iters"}},
    {"glmtron", {"gamma", "iters"}},
    {"mom", {"gamma", "iters", "segments", "gap"}},
    {"sgd-rer", {"buffer", "gap", "gamma", "trunc", "tail_start", "alpha"}},
    {"sgd-er", {"buffer", "gap", "gamma", "trunc", "tail_start", "alpha"}},
    {"sgd", {"gamma"}},
    {"sgd-dd", {"gap", "gamma", "radius"}},
    {"glm-proj", {"radius"}},
};

const std::set<std::string> kTopKeys = {"system.kind",  "system.d",        "system.rho",   "system.epsilon",
                                        "system.matrix_seed", "system.matrix", "system.nu", "system.row_l1",
                                        "system.link",  "system.noise",    "system.sigma_sq", "system.burn_in",
                                        "horizon",      "seeds",           "algorithms",   "output",
                                        "record_stride", "workers"};

Index parse_index(std::string_view text) {
    const double v = parse_double(text);
    if (v != std::floor(v) || std::abs(v) > 9e15) throw ParseError("expected an integer, got '" + std::string(text) + "'");
    return static_cast<Index>(v);
}

std::uint64_t parse_u64(std::string_view text) {
    text = trim(text);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw ParseError("expected an unsigned integer, got '" + std::string(text) + "'");
    return v;
}

std::vector<std::uint64_t> parse_seeds(std::string_view text) {
    std::vector<std::uint64_t> seeds;
    for (auto part : split(text, ',')) {
        part = trim(part);
        if (part.empty()) continue;
        const auto dots = part.find("..");
        if (dots == std::string_view::npos) {
            seeds.push_back(parse_u64(part));
            continue;
        }
        const auto lo = parse_u64(part.substr(0, dots));
        const auto hi = parse_u64(part.substr(dots + 2));
        if (hi < lo) throw ParseError("empty seed range '" + std::string(part) + "'");
        for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    }
    return seeds;
}

Mat parse_matrix(std::string_view text) {
    const auto rows = split(text, ';');
    const Index n = static_cast<Index>(rows.size());
    Mat m(n, n);
    for (Index i = 0; i < n; ++i) {
        const auto cells = split(rows[static_cast<std::size_t>(i)], ',');
        if (static_cast<Index>(cells.size()) != n) throw ParseError("system.matrix must be square");
        for (Index j = 0; j < n; ++j) m(i, j) = parse_double(cells[static_cast<std::size_t>(j)]);
    }
    return m;
}

class Entries {
public:
    explicit Entries(const std::map<std::string, std::string>& e) : e_(e) {}

    bool has(const std::string& key) const {
        const auto it = e_.find(key);
        return it != e_.end() && trim(it->second) != "auto";
    }
    std::string_view get(const std::string& key) const { return trim(e_.at(key)); }
    std::string str(const std::string& key, std::string fallback) const {
        return has(key) ? std::string(get(key)) : fallback;
    }
    double num(const std::string& key, double fallback) const { return has(key) ? parse_double(get(key)) : fallback; }
    Index integer(const std::string& key, Index fallback) const { return has(key) ? parse_index(get(key)) : fallback; }

private:
    const std::map<std::string, std::string>& e_;
};

Mat bernoulli_matrix(Index d, double row_l1, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    Mat a(d, d);
    for (Index j = 0; j < d; ++j)
        for (Index i = 0; i < d; ++i) a(i, j) = uniform(rng);
    for (Index i = 0; i < d; ++i) a.row(i) *= row_l1 / a.row(i).lpNorm<1>();
    return a;
}

AlgoSpec resolve_algo(const std::string& name, const Entries& e, const ExperimentConfig& cfg, const SystemSpec& spec) {
    const std::string p = "algo." + name + ".";
    const Index horizon = cfg.horizon;
    auto need = [&](bool ok, const std::string& what) {
        if (!ok) throw InvalidArgument(name + ": " + what);
    };
    if (name == "quasi-newton" || name == "mom") {
        spec.link().require_expansive(name);
        const double gamma = e.num(p + "gamma", 0.25);
        const Index iters = e.integer(p + "iters", 100);
        need(gamma > 0 && gamma <= 0.5, "gamma must lie in (0, 1/2]");
        need(iters >= 1, "iters must be >= 1");
        if (name == "quasi-newton") return {name, QuasiNewtonCell{gamma, iters}};
        const Index segments = e.integer(p + "segments", 5);
        Index gap = 0;
        if (e.has(p + "gap")) {
            gap = e.integer(p + "gap", 0);
        } else if (spec.rho() < 1.0 && spec.rho() > 0.0) {
            gap = static_cast<Index>(std::ceil(mixing_proxy(spec.rho(), 1.0) * std::log(static_cast<double>(horizon))));
        }
        need(segments >= 1, "segments must be >= 1");
        need(gap >= 0, "gap must be >= 0");
        need((horizon - (segments - 1) * gap) / segments >= 1, "horizon too short for segments and gap");
        return {name, MedianOfMeansCell{gamma, iters, segments, gap}};
    }
    if (name == "glmtron") {
        const double gamma = e.num(p + "gamma", 0.017);
        const Index iters = e.integer(p + "iters", 1000);
        need(gamma > 0, "gamma must be > 0");
        need(iters >= 1, "iters must be >= 1");
        return {name, GlmtronCell{gamma, iters}};
    }
    if (name == "sgd-rer" || name == "sgd-er") {
        if (name == "sgd-rer") spec.link().require_expansive(name);
        const Index buffer = e.integer(p + "buffer", 240);
        const Index gap = e.integer(p + "gap", 10);
        const double gamma = e.num(p + "gamma", default_stream_gamma(horizon));
        const double alpha = e.num(p + "alpha", 100.0);
        double trunc = std::numeric_limits<double>::infinity();
        const std::string trunc_key = p + "trunc";
        if (cfg.entries.count(trunc_key) && trim(cfg.entries.at(trunc_key)) == "auto")
            trunc = default_trunc(alpha, spec.dim(), spec.noise().c_eta(), spec.noise().sigma_sq, horizon, spec.rho());
        else
            trunc = e.num(trunc_key, trunc);
        need(buffer >= 1, "buffer must be >= 1");
        need(gap >= 0, "gap must be >= 0");
        need(gamma > 0, "gamma must be > 0");
        need(trunc > 0, "trunc must be > 0");
        const Index n = horizon / (buffer + gap);
        need(n >= 1, "horizon shorter than one buffer block");
        Index t0 = n / 2;
        if (e.has(p + "tail_start")) {
            t0 = e.get(p + "tail_start") == "half" ? n / 2 : e.integer(p + "tail_start", 0);
        }
        need(t0 >= 0 && t0 < n, "tail_start must satisfy 0 <= t0 < N");
        return {name, ReplayCell{buffer, gap, gamma, trunc, t0, name == "sgd-er"}};
    }
    if (name == "sgd") {
        const double gamma = e.num(p + "gamma", default_stream_gamma(horizon));
        need(gamma > 0, "gamma must be > 0");
        return {name, ForwardCell{gamma}};
    }
    if (name == "sgd-dd") {
        const Index gap = e.integer(p + "gap", 10);
        const double gamma = e.num(p + "gamma", default_stream_gamma(horizon));
        const double radius = e.num(p + "radius", spec.known() ? 10.0 * spec.a_star().norm()
                                                               : std::numeric_limits<double>::infinity());
        need(gap >= 1, "gap must be >= 1");
        need(gamma > 0, "gamma must be > 0");
        need(radius > 0, "radius must be > 0");
        need(horizon / gap >= 1, "horizon shorter than the gap");
        return {name, DataDropCell{gap, gamma, radius}};
    }
    if (name == "glm-proj") {
        need(cfg.system_kind == "bernoulli", "needs system.kind = bernoulli");
        const double radius = e.num(p + "radius", 1.0);
        need(radius > 0, "radius must be > 0");
        if (spec.known()) {
            const double max_row = spec.a_star().rowwise().lpNorm<1>().maxCoeff();
            need(radius > max_row, "radius must exceed the largest row l1 norm of the system matrix");
        }
        return {name, GlmProjCell{radius}};
    }
    throw InvalidArgument("unknown algorithm '" + name + "'");
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(std::istream& in) {
    std::map<std::string, std::string> entries;
    std::string line;
    Index line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = trim(view);
        if (view.empty()) continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) throw ParseError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key(trim(view.substr(0, eq)));
        if (key.empty()) throw ParseError("config line " + std::to_string(line_no) + ": empty key");
        entries[key] = std::string(trim(view.substr(eq + 1)));
    }
    return from_entries(std::move(entries));
}

ExperimentConfig ExperimentConfig::from_entries(std::map<std::string, std::string> entries) {
    ExperimentConfig cfg;
    cfg.entries = std::move(entries);
    const Entries e(cfg.entries);

    std::vector<std::string> algo_names;
    if (e.has("algorithms"))
        for (auto part : split(e.get("algorithms"), ','))
            if (!trim(part).empty()) algo_names.emplace_back(trim(part));

    for (const auto& [key, value] : cfg.entries) {
        if (kTopKeys.count(key)) continue;
        if (key.starts_with("algo.")) {
            const auto rest = key.substr(5);
            const auto dot = rest.rfind('.');
            const std::string algo = rest.substr(0, dot);
            const std::string param = dot == std::string::npos ? "" : rest.substr(dot + 1);
            if (!kAlgoKeys.count(algo)) throw ParseError("unknown algorithm in key '" + key + "'");
            if (!kAlgoKeys.at(algo).count(param)) throw ParseError("unknown parameter in key '" + key + "'");
            continue;
        }
        throw ParseError("unknown config key '" + key + "'");
    }

    cfg.system_kind = e.str("system.kind", "rand_bimod");
    cfg.d = e.integer("system.d", 5);
    cfg.rho = e.num("system.rho", 0.98);
    cfg.epsilon = e.num("system.epsilon", 0.1);
    cfg.matrix_seed = e.has("system.matrix_seed") ? parse_u64(e.get("system.matrix_seed")) : 2022;
    if (e.has("system.matrix")) {
        cfg.explicit_matrix = parse_matrix(e.get("system.matrix"));
        cfg.d = cfg.explicit_matrix.rows();
    }
    cfg.link = cfg.system_kind == "relu_lb" ? Link::relu() : Link::leaky_relu(0.5);
    if (e.has("system.link")) cfg.link = Link::parse(e.get("system.link"));
    const double sigma_sq = e.num("system.sigma_sq", 1.0);
    cfg.noise = e.has("system.noise") ? NoiseModel::parse(e.get("system.noise"), sigma_sq) : NoiseModel::gaussian(sigma_sq);
    cfg.burn_in = e.integer("system.burn_in", -1);
    cfg.horizon = e.integer("horizon", 100000);
    cfg.seeds = e.has("seeds") ? parse_seeds(e.get("seeds")) : std::vector<std::uint64_t>{};
    cfg.output_path = e.str("output", "");
    cfg.record_stride = e.integer("record_stride", 1000);
    cfg.workers = e.integer("workers", 1);

    if (cfg.system_kind == "bernoulli") {
        cfg.link = Link::logistic();
        cfg.noise = NoiseModel::bernoulli();
        if (cfg.explicit_matrix.size() == 0)
            cfg.explicit_matrix = bernoulli_matrix(cfg.d, e.num("system.row_l1", 0.5), cfg.matrix_seed);
        cfg.nu = Vec::Zero(cfg.d);
        if (e.has("system.nu")) {
            const auto parts = split(e.get("system.nu"), ',');
            if (parts.size() == 1) cfg.nu.setConstant(parse_double(parts[0]));
            else if (static_cast<Index>(parts.size()) == cfg.d)
                for (Index i = 0; i < cfg.d; ++i) cfg.nu(i) = parse_double(parts[static_cast<std::size_t>(i)]);
            else throw ParseError("system.nu must have one or d entries");
        }
    } else if (cfg.system_kind == "explicit") {
        if (cfg.explicit_matrix.size() == 0) throw InvalidArgument("system.kind = explicit needs system.matrix");
    } else if (cfg.system_kind != "rand_bimod" && cfg.system_kind != "relu_lb") {
        throw InvalidArgument("unknown system.kind '" + cfg.system_kind + "'");
    }

    if (cfg.d < 1) throw InvalidArgument("system.d must be >= 1");
    if (cfg.horizon < 2) throw InvalidArgument("horizon must be >= 2");
    if (cfg.seeds.empty()) throw InvalidArgument("at least one seed is required");
    if (algo_names.empty()) throw InvalidArgument("at least one algorithm is required");
    if (cfg.record_stride < 0) throw InvalidArgument("record_stride must be >= 0");
    if (cfg.workers < 1) throw InvalidArgument("workers must be >= 1");
    if (cfg.burn_in < -1) throw InvalidArgument("system.burn_in must be >= 0 or auto");

    const SystemSpec spec = cfg.system();
    if (cfg.burn_in == -1 && cfg.system_kind != "bernoulli") spec.require_stable("automatic burn-in");
    for (const auto& name : algo_names) {
        if (!kAlgorithms.count(name)) throw InvalidArgument("unknown algorithm '" + name + "'");
        cfg.algorithms.push_back(resolve_algo(name, e, cfg, spec));
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::with(const std::string& key, const std::string& value) const {
    auto copy = entries;
    copy[key] = value;
    return from_entries(std::move(copy));
}

SystemSpec ExperimentConfig::system() const {
    if (system_kind == "rand_bimod") return SystemSpec(rand_bimod(d, rho, matrix_seed), link, noise);
    if (system_kind == "relu_lb") return SystemSpec(relu_lb_matrix(d, epsilon), link, noise);
    if (system_kind == "bernoulli") return SystemSpec(explicit_matrix, Link::logistic(), NoiseModel::bernoulli(), nu);
    return SystemSpec(explicit_matrix, link, noise);
}

bool ExperimentResult::all_completed() const {
    return std::none_of(cells.begin(), cells.end(), [](const CellOutcome& c) { return c.failed; });
}

FitReport run_algorithm(const AlgoSpec& algo, const Trajectory& traj, std::uint64_t seed, const FitOptions& options) {
    const Link& link = traj.spec().link();
    return std::visit(
        [&](const auto& p) -> FitReport {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, QuasiNewtonCell>) {
                return quasi_newton(traj, {p.gamma, p.iters, {}}, options);
            } else if constexpr (std::is_same_v<P, GlmtronCell>) {
                return glmtron(traj, {p.gamma, p.iters, {}}, options);
            } else if constexpr (std::is_same_v<P, MedianOfMeansCell>) {
                TraceRecorder recorder(options);
                recorder.resume();
                FitReport report;
                report.a_hat = median_of_means_fit(traj, {p.segments, p.gap, {p.gamma, p.iters, {}}, false});
                report.updates = p.segments * p.iters;
                recorder.record(report.updates, report.updates, report.a_hat);
                recorder.pause();
                report.wall_ns = recorder.elapsed_ns();
                report.trace = recorder.take();
                return report;
            } else if constexpr (std::is_same_v<P, ReplayCell>) {
                MatrixStream stream(traj);
                const BufferLayout layout(p.buffer, p.gap, traj.horizon());
                StreamConfig cfg;
                cfg.gamma = p.gamma;
                cfg.r_trunc = p.trunc;
                cfg.t0 = p.tail_start;
                if (p.random_order) return sgd_er(stream, layout, cfg, link, seed ^ 0x9e3779b97f4a7c15ULL, options);
                return sgd_rer(stream, layout, cfg, link, options);
            } else if constexpr (std::is_same_v<P, ForwardCell>) {
                MatrixStream stream(traj);
                return forward_sgd(stream, p.gamma, link, options);
            } else if constexpr (std::is_same_v<P, DataDropCell>) {
                MatrixStream stream(traj);
                return sgd_dd(stream, p.gap, p.gamma, p.radius, link, options);
            } else {
                MatrixStream stream(traj);
                const Vec& nu = traj.spec().offset();
                const double nu_max = nu.size() ? nu.cwiseAbs().maxCoeff() : 0.0;
                const double c = bernoulli_ar_constant(nu_max, p.radius);
                GlmProjParams params;
                params.nu = nu.size() ? nu : Vec::Zero(traj.dim());
                params.radius = p.radius;
                params.zeta = c;
                params.c0 = c;
                return projected_sgd_glm(stream, params, options);
            }
        },
        algo.params);
}

namespace {

template <typename Fn>
void parallel_for(Index count, Index workers, Fn&& fn) {
    if (workers <= 1 || count <= 1) {
        for (Index i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<Index> next{0};
    std::vector<std::thread> pool;
    for (Index w = 0; w < std::min(workers, count); ++w)
        pool.emplace_back([&] {
            for (Index i = next++; i < count; i = next++) fn(i);
        });
    for (auto& t : pool) t.join();
}

struct CellResult {
    std::vector<ResultRow> rows;
    CellOutcome outcome;
};

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RowSink& sink) {
    const SystemSpec spec = cfg.system();
    const Index n_seeds = static_cast<Index>(cfg.seeds.size());
    const Index n_algos = static_cast<Index>(cfg.algorithms.size());

    std::vector<std::optional<Trajectory>> trajectories(static_cast<std::size_t>(n_seeds));
    std::vector<std::string> sim_errors(static_cast<std::size_t>(n_seeds));
    parallel_for(n_seeds, cfg.workers, [&](Index s) {
        const auto seed = cfg.seeds[static_cast<std::size_t>(s)];
        try {
            if (cfg.system_kind == "bernoulli") {
                trajectories[static_cast<std::size_t>(s)] =
                    bernoulli_ar_simulate(spec.offset(), spec.a_star(), cfg.horizon, seed);
            } else {
                const Index burn = cfg.burn_in >= 0 ? cfg.burn_in : default_burn_in(spec.rho(), cfg.horizon);
                trajectories[static_cast<std::size_t>(s)] = simulate(spec, cfg.horizon, seed, burn);
            }
        } catch (const std::exception& ex) {
            sim_errors[static_cast<std::size_t>(s)] = ex.what();
        }
    });

    FitOptions options;
    options.a_star = spec.a_star();
    options.record_stride = cfg.record_stride;

    std::vector<CellResult> cells(static_cast<std::size_t>(n_seeds * n_algos));
    parallel_for(n_seeds * n_algos, cfg.workers, [&](Index c) {
        const auto s = static_cast<std::size_t>(c / n_algos);
        const auto& algo = cfg.algorithms[static_cast<std::size_t>(c % n_algos)];
        const auto seed = cfg.seeds[s];
        CellResult& out = cells[static_cast<std::size_t>(c)];
        out.outcome.algo = algo.name;
        out.outcome.seed = seed;
        auto fail = [&](const std::string& msg) {
            out.outcome.status = "error: " + msg;
            out.outcome.failed = true;
            out.rows = {{algo.name, seed, -1, 0, 0, std::numeric_limits<double>::quiet_NaN(), {}, {}}};
        };
        if (!trajectories[s]) {
            fail(sim_errors[s]);
            return;
        }
        try {
            const FitReport report = run_algorithm(algo, *trajectories[s], seed, options);
            out.outcome.status = to_string(report.status);
            for (const auto& p : report.trace)
                out.rows.push_back({algo.name, seed, p.t, p.updates, p.wall_ns, p.frob_sq_err, {}, {}});
        } catch (const std::exception& ex) {
            fail(ex.what());
        }
    });

    ExperimentResult result;
    for (auto& cell : cells) {
        for (auto& row : cell.rows) {
            if (sink) sink(row);
            result.rows.push_back(std::move(row));
        }
        result.cells.push_back(std::move(cell.outcome));
    }
    return result;
}

ExperimentResult sweep(const ExperimentConfig& cfg, const std::string& axis, const std::vector<std::string>& values,
                       const RowSink& sink) {
    if (values.empty()) throw InvalidArgument("sweep needs at least one value");
    // Validate every point before running any of them.
    std::vector<ExperimentConfig> points;
    for (const auto& v : values) points.push_back(cfg.with(axis, v));
    ExperimentResult result;
    for (std::size_t k = 0; k < points.size(); ++k) {
        auto tagged = [&](const ResultRow& row) {
            ResultRow copy = row;
            copy.axis = axis;
            copy.axis_value = values[k];
            if (sink) sink(copy);
            result.rows.push_back(std::move(copy));
        };
        auto part = run_experiment(points[k], tagged);
        for (auto& c : part.cells) result.cells.push_back(std::move(c));
    }
    return result;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw InvalidArgument("quantile of an empty set");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
    if (rows.empty()) throw InvalidArgument("summarize needs at least one row");
    struct Final {
        double err;
        Index updates;
        std::int64_t wall;
    };
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::uint64_t>> seed_order;
    std::map<std::string, std::map<std::uint64_t, Final>> finals;
    for (const auto& r : rows) {
        const std::string key = r.axis_value ? r.algo + "@" + *r.axis_value : r.algo;
        if (!finals.count(key)) order.push_back(key);
        auto& per_seed = finals[key];
        if (!per_seed.count(r.seed)) seed_order[key].push_back(r.seed);
        per_seed[r.seed] = {r.frob_sq_err, r.updates, r.wall_ns};
    }
    std::vector<SummaryRow> out;
    for (const auto& key : order) {
        SummaryRow s;
        s.algo = key;
        std::vector<double> errs;
        for (const auto seed : seed_order[key]) {
            const Final& f = finals[key][seed];
            errs.push_back(f.err);
            s.total_updates += f.updates;
            s.total_wall_ns += f.wall;
        }
        s.n_seeds = static_cast<Index>(errs.size());
        s.median = quantile(errs, 0.5);
        s.q25 = quantile(errs, 0.25);
        s.q75 = quantile(errs, 0.75);
        out.push_back(s);
    }
    return out;
}

void write_csv_header(std::ostream& out, bool with_axis) {
    out << kCsvHeader;
    if (with_axis) out << ",axis,axis_value";
    out << '\n';
}

void write_csv_row(std::ostream& out, const ResultRow& row, bool with_axis) {
    out << row.algo << ',' << row.seed << ',' << row.t << ',' << row.updates << ',' << row.wall_ns << ','
        << format_double(row.frob_sq_err);
    if (with_axis) out << ',' << row.axis.value_or("") << ',' << row.axis_value.value_or("");
    out << '\n';
}

std::vector<ResultRow> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty CSV");
    const std::string_view header = trim(line);
    bool with_axis = false;
    if (header == std::string(kCsvHeader) + ",axis,axis_value") with_axis = true;
    else if (header != kCsvHeader) throw ParseError("unexpected CSV header '" + std::string(header) + "'");
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto cells = split(trim(line), ',');
        if (cells.size() != (with_axis ? 8u : 6u)) throw ParseError("CSV row has the wrong number of columns");
        ResultRow r;
        r.algo = std::string(cells[0]);
        r.seed = parse_u64(cells[1]);
        r.t = parse_index(cells[2]);
        r.updates = parse_index(cells[3]);
        r.wall_ns = static_cast<std::int64_t>(parse_index(cells[4]));
        r.frob_sq_err = parse_double(cells[5]);
        if (with_axis) {
            r.axis = std::string(cells[6]);
            r.axis_value = std::string(cells[7]);
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_summary(std::ostream& out, const std::vector<SummaryRow>& summary) {
    out << "algo,n_seeds,median,q25,q75,total_updates,total_wall_ns\n";
    for (const auto& s : summary)
        out << s.algo << ',' << s.n_seeds << ',' << format_double(s.median) << ',' << format_double(s.q25) << ','
            << format_double(s.q75) << ',' << s.total_updates << ',' << s.total_wall_ns << '\n';
}

}  // namespace nlsysid
