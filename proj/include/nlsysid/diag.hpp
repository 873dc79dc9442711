#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlsysid/layout.hpp"
#include "nlsysid/sim.hpp"
#include "nlsysid/types.hpp"

namespace nlsysid {

/// Outcome of one empirical check: pass <=> observed satisfies the relation
/// against bound described by note.
struct DiagReport {
    std::string name;
    std::vector<double> observed;
    std::vector<double> bound;
    bool pass = false;
    Index n_samples = 0;
    std::string note;

    friend bool operator==(const DiagReport&, const DiagReport&) = default;
};

void to_json(nlohmann::json& j, const DiagReport& r);
void from_json(const nlohmann::json& j, DiagReport& r);

/// lambda_min(G_hat) >= sigma^2 / 2 over X_0..X_{T-1}.
DiagReport check_gram_floor(const Trajectory& traj, double sigma_sq);

/// Per block t and offset i: ||X^t_i - Xc^t_i|| <= rho^i ||X^t_0 - Xc^t_0||
/// against coupled_trajectory(traj, layout, seed). observed holds the largest
/// excess over the bound, bound the roundoff allowance it must stay under.
DiagReport check_coupling(const Trajectory& traj, const BufferLayout& layout, std::uint64_t seed);

/// Simulates the ReLU two-point instance A(epsilon) with N(0, I) noise from
/// X_0 = 0 and reports the fraction of t in [2, T] with <a_d, X_t> > 0.
DiagReport relu_sign_fraction(Index d, double epsilon, Index horizon, std::uint64_t seed);

/// mean_t ||X_t||^2 <= 8 d C_eta sigma^2 / (1 - rho).
DiagReport check_norm_concentration(const Trajectory& traj);

/// (1 + log C_rho) / log(1/rho)
double mixing_proxy(double rho, double c_rho);

/// Runs quasi_newton for m iterations and checks, for every row i and
/// iteration l,
///   ||G^{1/2}(a_i(l+1) - a*_i)|| <= (1 - 2 gamma zeta) ||G^{1/2}(a_i(l) - a*_i)||
///                                   + 2 gamma ||G^{-1/2} N_i||,
/// N_i = (1/T) sum_t eta_{t,i} X_t from the stored noise. observed holds the
/// largest excess, bound the slack.
DiagReport check_contraction(const Trajectory& traj, double gamma, Index iters, const Mat& a0 = {},
                             double slack = 1e-8);

/// Per-seed reports plus a pooled verdict.
struct SeedSweep {
    std::vector<DiagReport> per_seed;
    DiagReport pooled;
};

/// Norm concentration over several seeds: pooled passes when the seed mean
/// minus three standard errors stays under the bound.
SeedSweep norm_concentration_sweep(const SystemSpec& spec, Index horizon, const std::vector<std::uint64_t>& seeds);

/// relu_sign_fraction over several seeds; pooled observed = {mean, standard error}.
SeedSweep relu_fraction_sweep(Index d, double epsilon, Index horizon, const std::vector<std::uint64_t>& seeds);

}  // namespace nlsysid
