#include "nlsysid/offline.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

#include "nlsysid/loss.hpp"

namespace nlsysid {

namespace {

// Iterates this large are treated like non-finite ones; they can only keep growing.
constexpr double kBlowUp = 1e150;

Mat initial_iterate(const Mat& a0, Index d) {
    if (a0.size() == 0) return Mat::Zero(d, d);
    if (a0.rows() != d || a0.cols() != d) throw InvalidArgument("initial iterate has the wrong shape");
    return a0;
}

bool blown_up(const Mat& a) { return !a.allFinite() || a.norm() > kBlowUp; }

template <typename Step>
FitReport run_full_batch(const Trajectory& traj, Index iters, const Mat& a0, const FitOptions& options,
                         const IterateObserver& observer, Step&& step) {
    const Link& link = traj.spec().link();
    const auto x = traj.inputs();
    const auto y = traj.targets();

    FitReport report;
    TraceRecorder recorder(options);
    recorder.resume();
    Mat a = initial_iterate(a0, traj.dim());
    recorder.record(0, 0, a);
    if (observer) observer(0, a);
    // residual workspace reused across iterations; same value as proxy_grad
    Mat z(traj.dim(), traj.horizon());
    Mat grad(traj.dim(), traj.dim());
    const double inv_t = 1.0 / static_cast<double>(traj.horizon());
    for (Index l = 1; l <= iters; ++l) {
        z.noalias() = a * x;
        link.apply_in_place(z);
        z -= y;
        grad.noalias() = z * x.transpose();
        grad *= inv_t;
        Mat next = a - step(grad);
        if (blown_up(next)) {
            report.status = FitStatus::diverged;
            report.updates = l;
            recorder.pause();
            report.trace = recorder.take();
            report.trace.push_back({l, l, recorder.elapsed_ns(), std::numeric_limits<double>::infinity()});
            report.wall_ns = recorder.elapsed_ns();
            report.a_hat = std::move(a);
            return report;
        }
        a = std::move(next);
        if (observer) observer(l, a);
        if (recorder.due(l) || l == iters) recorder.record(l, l, a);
    }
    recorder.pause();
    report.updates = iters;
    report.wall_ns = recorder.elapsed_ns();
    report.trace = recorder.take();
    report.a_hat = std::move(a);
    return report;
}

}  // namespace

FitReport quasi_newton(const Trajectory& traj, const QuasiNewtonParams& params, const FitOptions& options,
                       const IterateObserver& observer) {
    if (!(params.gamma > 0 && params.gamma <= 0.5)) throw InvalidArgument("quasi_newton needs gamma in (0, 1/2]");
    if (params.iters < 1) throw InvalidArgument("quasi_newton needs at least one iteration");
    traj.spec().link().require_expansive("quasi_newton");

    const auto gram = empirical_gram(traj);
    if (gram.singular) {
        FitReport report;
        report.status = FitStatus::gram_singular_returned_zero;
        report.a_hat = Mat::Zero(traj.dim(), traj.dim());
        TraceRecorder recorder(options);
        recorder.record(0, 0, report.a_hat);
        report.trace = recorder.take();
        return report;
    }
    const Eigen::LDLT<Mat> factor(gram.g_hat);
    const double scale = 2.0 * params.gamma;
    return run_full_batch(traj, params.iters, params.a0, options, observer, [&](const Mat& grad) -> Mat {
        // grad * G^{-1} == (G^{-1} grad^T)^T for symmetric G
        return scale * factor.solve(grad.transpose()).transpose();
    });
}

FitReport glmtron(const Trajectory& traj, const GlmtronParams& params, const FitOptions& options,
                  const IterateObserver& observer) {
    if (!(params.gamma > 0)) throw InvalidArgument("glmtron needs gamma > 0");
    if (params.iters < 1) throw InvalidArgument("glmtron needs at least one iteration");
    const double gamma = params.gamma;
    return run_full_batch(traj, params.iters, params.a0, options, observer,
                          [gamma](const Mat& grad) -> Mat { return gamma * grad; });
}

std::size_t median_of_estimates(const std::vector<Mat>& estimates) {
    if (estimates.empty()) throw InvalidArgument("median_of_estimates: no estimates");
    const std::size_t k = estimates.size();
    if (k == 1) return 0;
    std::size_t best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    std::vector<double> dist;
    for (std::size_t i = 0; i < k; ++i) {
        dist.clear();
        for (std::size_t j = 0; j < k; ++j)
            if (j != i) dist.push_back((estimates[i] - estimates[j]).norm());
        const auto mid = dist.begin() + static_cast<std::ptrdiff_t>((dist.size() - 1) / 2);
        std::nth_element(dist.begin(), mid, dist.end());
        if (*mid < best_score) {
            best_score = *mid;
            best = i;
        }
    }
    return best;
}

Mat median_of_means_fit(const Trajectory& traj, const MedianOfMeansParams& params) {
    if (params.segments < 1) throw InvalidArgument("median_of_means_fit needs at least one segment");
    if (params.gap < 0) throw InvalidArgument("median_of_means_fit gap must be >= 0");
    const Index k = params.segments;
    const Index length = (traj.horizon() - (k - 1) * params.gap) / k;
    if (length < 1) throw InvalidArgument("horizon too short for the requested segments and gap");

    auto fit_segment = [&](Index s) { return quasi_newton(traj.slice(s * (length + params.gap), length), params.inner); };
    std::vector<FitReport> fits;
    if (params.parallel && k > 1) {
        std::vector<std::future<FitReport>> pending;
        for (Index s = 0; s < k; ++s) pending.push_back(std::async(std::launch::async, fit_segment, s));
        for (auto& f : pending) fits.push_back(f.get());
    } else {
        for (Index s = 0; s < k; ++s) fits.push_back(fit_segment(s));
    }

    std::vector<Mat> estimates;
    for (auto& f : fits)
        if (f.ok()) estimates.push_back(std::move(f.a_hat));
    if (estimates.empty()) throw Error("median_of_means_fit: every segment fit failed");
    return estimates[median_of_estimates(estimates)];
}

Index default_newton_iterations(double zeta, const Mat& a0, const Mat& a_star, Index horizon, double sigma_sq,
                                double rho, double delta) {
    if (!(zeta > 0)) throw NonExpansiveLink("default iteration count needs zeta > 0");
    if (!(sigma_sq > 0)) throw InvalidArgument("default iteration count needs sigma_sq > 0");
    const double d = static_cast<double>(a_star.rows());
    const double t = static_cast<double>(horizon);
    double geometric;
    if (rho == 1.0)
        geometric = t - 1.0;
    else
        geometric = rho * (1.0 - std::pow(rho, t - 1.0)) / (1.0 - rho);
    const double r_star = d * sigma_sq * geometric * geometric * std::log(4.0 * t * d / delta);
    const Mat start = a0.size() ? a0 : Mat::Zero(a_star.rows(), a_star.cols());
    const double arg = (start - a_star).squaredNorm() * t * r_star / (sigma_sq * d * d);
    if (!(arg > 1.0)) return 1;
    return std::max<Index>(1, static_cast<Index>(std::ceil(10.0 / zeta * std::log(arg))));
}

}  // namespace nlsysid
