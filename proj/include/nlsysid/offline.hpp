#pragma once

#include <functional>
#include <vector>

#include "nlsysid/fit_report.hpp"
#include "nlsysid/sim.hpp"
#include "nlsysid/types.hpp"

namespace nlsysid {

struct QuasiNewtonParams {
    double gamma = 0.25;
    Index iters = 1;
    Mat a0;  // empty: start from zero
};

struct GlmtronParams {
    double gamma = 0.017;
    Index iters = 1;
    Mat a0;
};

// Called with (iteration l, A_l) for l = 0..m, before the first update and after each one.
using IterateObserver = std::function<void(Index, const Mat&)>;

/// A_{l+1} = A_l - 2 gamma grad L_prox(A_l) G^{-1}, with G the empirical
/// Gram of X_0..X_{T-1} factorized once. Returns the zero matrix with status
/// gram_singular_returned_zero when G is numerically singular.
FitReport quasi_newton(const Trajectory& traj, const QuasiNewtonParams& params, const FitOptions& options = {},
                       const IterateObserver& observer = {});

/// Full-batch gradient descent on the proxy loss: A <- A - gamma grad L_prox(A).
FitReport glmtron(const Trajectory& traj, const GlmtronParams& params, const FitOptions& options = {},
                  const IterateObserver& observer = {});

struct MedianOfMeansParams {
    Index segments = 1;
    Index gap = 0;
    QuasiNewtonParams inner;
    bool parallel = false;
};

/// Index of the estimate whose median Frobenius distance to the others is
/// smallest (lower median for even counts; ties go to the lower index).
std::size_t median_of_estimates(const std::vector<Mat>& estimates);

/// Splits the horizon into `segments` contiguous pieces separated by `gap`
/// transitions, runs quasi_newton on each, drops non-ok fits and returns the
/// metric median of the remaining estimates.
Mat median_of_means_fit(const Trajectory& traj, const MedianOfMeansParams& params);

/// ceil((10/zeta) log(||a0 - A*||_F^2 T R / (sigma^2 d^2))) with
/// R = d sigma^2 (sum_{t=1}^{T-1} rho^t)^2 log(4Td/delta), at least 1.
Index default_newton_iterations(double zeta, const Mat& a0, const Mat& a_star, Index horizon, double sigma_sq,
                                double rho, double delta = 0.1);

}  // namespace nlsysid
