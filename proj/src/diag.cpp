#include "nlsysid/diag.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nlsysid/loss.hpp"
#include "nlsysid/offline.hpp"

namespace nlsysid {

void to_json(nlohmann::json& j, const DiagReport& r) {
    j = nlohmann::json{{"name", r.name},   {"observed", r.observed},   {"bound", r.bound},
                       {"pass", r.pass},   {"n_samples", r.n_samples}, {"note", r.note}};
}

void from_json(const nlohmann::json& j, DiagReport& r) {
    j.at("name").get_to(r.name);
    j.at("observed").get_to(r.observed);
    j.at("bound").get_to(r.bound);
    j.at("pass").get_to(r.pass);
    j.at("n_samples").get_to(r.n_samples);
    j.at("note").get_to(r.note);
}

DiagReport check_gram_floor(const Trajectory& traj, double sigma_sq) {
    const auto gram = empirical_gram(traj);
    DiagReport r;
    r.name = "gram_floor";
    r.observed = {gram.lambda_min};
    r.bound = {sigma_sq / 2.0};
    r.pass = sigma_sq > 0 && gram.lambda_min >= sigma_sq / 2.0;
    r.n_samples = gram.t_used;
    r.note = "lambda_min(G_hat) >= sigma^2/2";
    return r;
}

DiagReport check_coupling(const Trajectory& traj, const BufferLayout& layout, std::uint64_t seed) {
    const Trajectory coupled = coupled_trajectory(traj, layout, seed);
    const double rho = traj.spec().rho();
    constexpr double kRoundoff = 1e-12;
    double worst = -std::numeric_limits<double>::infinity();
    bool pass = true;
    Index checked = 0;
    for (Index t = 0; t < layout.n_buffers(); ++t) {
        const Index base = layout.index(t, 0);
        const double start = (traj.state(base) - coupled.state(base)).norm();
        double factor = 1.0;
        for (Index i = 0; i < layout.block(); ++i, factor *= rho) {
            const double dist = (traj.state(base + i) - coupled.state(base + i)).norm();
            const double excess = dist - factor * start;
            const double allowance = kRoundoff * (1.0 + traj.state(base + i).norm());
            worst = std::max(worst, excess);
            pass = pass && excess <= allowance;
            ++checked;
        }
    }
    DiagReport r;
    r.name = "coupling";
    r.observed = {worst};
    r.bound = {kRoundoff};
    r.pass = pass;
    r.n_samples = checked;
    r.note = "||X^t_i - Xc^t_i|| <= rho^i ||X^t_0 - Xc^t_0|| up to 1e-12 (1 + ||X^t_i||) roundoff";
    return r;
}

DiagReport relu_sign_fraction(Index d, double epsilon, Index horizon, std::uint64_t seed) {
    if (horizon < 2) throw InvalidArgument("relu_sign_fraction needs T >= 2");
    const SystemSpec spec(relu_lb_matrix(d, epsilon), Link::relu(), NoiseModel::gaussian(1.0));
    const Trajectory traj = simulate(spec, horizon, seed);
    const Vec last_row = spec.a_star().row(d - 1).transpose();
    Index positive = 0;
    for (Index t = 2; t <= horizon; ++t)
        if (last_row.dot(traj.state(t)) > 0) ++positive;
    DiagReport r;
    r.name = "relu_sign_fraction";
    r.n_samples = horizon - 1;
    r.observed = {static_cast<double>(positive) / static_cast<double>(r.n_samples)};
    r.bound = {};
    r.pass = epsilon > 0 || positive == 0;
    r.note = "fraction of t in [2,T] with <a_d(eps), X_t> > 0; must be 0 at eps = 0";
    return r;
}

DiagReport check_norm_concentration(const Trajectory& traj) {
    const SystemSpec& spec = traj.spec();
    spec.require_stable("check_norm_concentration");
    const double c_eta = spec.noise().c_eta();
    const double bound =
        8.0 * static_cast<double>(spec.dim()) * c_eta * spec.noise().sigma_sq / (1.0 - spec.rho());
    const double mean = traj.states().colwise().squaredNorm().mean();
    DiagReport r;
    r.name = "norm_concentration";
    r.observed = {mean};
    r.bound = {bound};
    r.pass = mean <= bound;
    r.n_samples = traj.states().cols();
    r.note = "mean ||X_t||^2 <= 8 d C_eta sigma^2 / (1 - rho)";
    return r;
}

double mixing_proxy(double rho, double c_rho) {
    if (!(rho > 0 && rho < 1)) throw InvalidArgument("mixing_proxy needs 0 < rho < 1");
    if (!(c_rho >= 1)) throw InvalidArgument("mixing_proxy needs C_rho >= 1");
    return (1.0 + std::log(c_rho)) / std::log(1.0 / rho);
}

DiagReport check_contraction(const Trajectory& traj, double gamma, Index iters, const Mat& a0, double slack) {
    const SystemSpec& spec = traj.spec();
    const Mat& a_star = spec.a_star();
    const Mat& noise = traj.noise();
    const double zeta = spec.link().zeta();
    const auto gram = empirical_gram(traj);
    const Eigen::LDLT<Mat> factor(gram.g_hat);
    const double horizon = static_cast<double>(traj.horizon());
    // column i is N_i
    const Mat n_hat = traj.inputs() * noise.transpose() / horizon;
    const Mat g_inv_n = factor.solve(n_hat);
    const Index d = traj.dim();
    Vec noise_term(d);
    for (Index i = 0; i < d; ++i) noise_term(i) = 2.0 * gamma * std::sqrt(std::max(0.0, n_hat.col(i).dot(g_inv_n.col(i))));
    const double contraction = 1.0 - 2.0 * gamma * zeta;

    auto g_norms = [&](const Mat& a) {
        const Mat diff = (a - a_star).transpose();  // column i is a_i - a*_i
        return (diff.cwiseProduct(gram.g_hat * diff)).colwise().sum().cwiseMax(0.0).cwiseSqrt().eval();
    };

    Eigen::RowVectorXd prev;
    double worst = -std::numeric_limits<double>::infinity();
    Index checked = 0;
    QuasiNewtonParams params{gamma, iters, a0};
    const FitReport fit = quasi_newton(traj, params, {Mat{}, 0}, [&](Index l, const Mat& a) {
        Eigen::RowVectorXd cur = g_norms(a);
        if (l > 0) {
            for (Index i = 0; i < d; ++i) {
                worst = std::max(worst, cur(i) - (contraction * prev(i) + noise_term(i)));
                ++checked;
            }
        }
        prev = std::move(cur);
    });

    DiagReport r;
    r.name = "contraction";
    r.observed = {worst};
    r.bound = {slack};
    r.pass = fit.ok() && worst <= slack;
    r.n_samples = checked;
    r.note = "row-wise G-norm contraction of quasi-newton iterates with noise term from stored noise";
    return r;
}

namespace {

std::pair<double, double> mean_and_se(const std::vector<double>& values) {
    const double n = static_cast<double>(values.size());
    double mean = 0;
    for (double v : values) mean += v;
    mean /= n;
    double var = 0;
    for (double v : values) var += (v - mean) * (v - mean);
    var = values.size() > 1 ? var / (n - 1.0) : 0.0;
    return {mean, std::sqrt(var / n)};
}

}  // namespace

SeedSweep norm_concentration_sweep(const SystemSpec& spec, Index horizon, const std::vector<std::uint64_t>& seeds) {
    if (seeds.empty()) throw InvalidArgument("need at least one seed");
    SeedSweep out;
    std::vector<double> means;
    const Index burn = default_burn_in(spec.rho(), horizon);
    for (const auto seed : seeds) {
        out.per_seed.push_back(check_norm_concentration(simulate(spec, horizon, seed, burn)));
        means.push_back(out.per_seed.back().observed[0]);
    }
    const auto [mean, se] = mean_and_se(means);
    out.pooled = out.per_seed.front();
    out.pooled.name = "norm_concentration_pooled";
    out.pooled.observed = {mean, se};
    out.pooled.pass = mean - 3.0 * se <= out.pooled.bound[0];
    out.pooled.n_samples = static_cast<Index>(seeds.size());
    out.pooled.note = "seed mean - 3 s.e. of mean ||X_t||^2 <= 8 d C_eta sigma^2 / (1 - rho)";
    return out;
}

SeedSweep relu_fraction_sweep(Index d, double epsilon, Index horizon, const std::vector<std::uint64_t>& seeds) {
    if (seeds.empty()) throw InvalidArgument("need at least one seed");
    SeedSweep out;
    std::vector<double> fractions;
    for (const auto seed : seeds) {
        out.per_seed.push_back(relu_sign_fraction(d, epsilon, horizon, seed));
        fractions.push_back(out.per_seed.back().observed[0]);
    }
    const auto [mean, se] = mean_and_se(fractions);
    out.pooled = out.per_seed.front();
    out.pooled.name = "relu_sign_fraction_pooled";
    out.pooled.observed = {mean, se};
    out.pooled.pass = std::all_of(out.per_seed.begin(), out.per_seed.end(), [](const auto& r) { return r.pass; });
    out.pooled.n_samples = static_cast<Index>(seeds.size());
    return out;
}

}  // namespace nlsysid
