#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <numeric>
#include <vector>

#include "nlsysid/fit_report.hpp"
#include "nlsysid/layout.hpp"
#include "nlsysid/link.hpp"
#include "nlsysid/sim.hpp"
#include "nlsysid/types.hpp"

namespace nlsysid {

/// Forward-only source of samples X_0, X_1, ..., X_T. horizon() is T, which
/// the streaming algorithms need up front (buffer count, tail start).
class SampleStream {
public:
    virtual ~SampleStream() = default;
    virtual Index dim() const = 0;
    virtual Index horizon() const = 0;
    // Copies the next sample into out; false once the stream is exhausted.
    virtual bool next(Eigen::Ref<Vec> out) = 0;
};

/// Streams the columns of a d x (T+1) matrix and counts how many were read.
class MatrixStream : public SampleStream {
public:
    explicit MatrixStream(const Mat& states) : states_(states) {
        if (states.cols() < 2) throw InvalidArgument("a stream needs at least two samples");
    }
    explicit MatrixStream(const Trajectory& traj) : MatrixStream(traj.states()) {}

    Index dim() const override { return states_.rows(); }
    Index horizon() const override { return states_.cols() - 1; }
    bool next(Eigen::Ref<Vec> out) override {
        if (pos_ >= states_.cols()) return false;
        out = states_.col(pos_++);
        return true;
    }
    Index samples_read() const noexcept { return pos_; }

private:
    const Mat& states_;
    Index pos_ = 0;
};

/// Called as (input index, target index) for every processed pair, in order.
using PairObserver = std::function<void(Index, Index)>;

struct StreamConfig {
    double gamma = 0.0;
    double r_trunc = std::numeric_limits<double>::infinity();
    // Tail average over buffer-end iterates of buffers t0+1 .. N (1-based).
    // Unset means floor(N/2); 0 averages every buffer.
    std::optional<Index> t0;
    Mat a0;  // empty: start from zero
};

/// SGD with reverse experience replay. Blocks are read in stream order; in
/// block t the pairs (X_{tS+j}, X_{tS+j+1}) are replayed for j = S-1 down
/// to u with A <- A - 2 gamma (phi(A x) - y) x^T. The output is the running
/// mean of buffer-end iterates after buffer t0. A block holding a sample with
/// ||x||^2 > r_trunc stops the run with a zero estimate.
FitReport sgd_rer(SampleStream& stream, const BufferLayout& layout, const StreamConfig& cfg, const Link& link,
                  const FitOptions& options = {}, const PairObserver& observer = {});

/// Same blocks as sgd_rer, but each block's B pairs are replayed in a fresh
/// uniformly random order drawn from seed.
FitReport sgd_er(SampleStream& stream, const BufferLayout& layout, const StreamConfig& cfg, const Link& link,
                 std::uint64_t seed, const FitOptions& options = {}, const PairObserver& observer = {});

/// Plain one-pass SGD on (X_t, X_{t+1}) in arrival order, averaging the
/// iterates of the second half of the updates.
FitReport forward_sgd(SampleStream& stream, double gamma, const Link& link, const FitOptions& options = {},
                      const PairObserver& observer = {});

/// forward_sgd with gamma and the starting iterate taken from cfg (r_trunc and t0 are ignored).
FitReport forward_sgd(SampleStream& stream, const StreamConfig& cfg, const Link& link, const FitOptions& options = {},
                      const PairObserver& observer = {});

/// Data-dropping SGD: only (X_{tu}, X_{tu+1}) for t = 0..floor(T/u)-1 are
/// used; after each update every row is projected onto the Euclidean ball of
/// radius proj_radius. Second-half iterate averaging as in forward_sgd.
FitReport sgd_dd(SampleStream& stream, Index gap_u, double gamma, double proj_radius, const Link& link,
                 const FitOptions& options = {}, const PairObserver& observer = {});

struct GlmProjParams {
    Vec nu;
    double radius = 1.0;  // l1 radius per row
    double zeta = 0.0;
    double c0 = 0.0;
    Mat a0;
};

/// 1/4 exp(-nu_max - radius): expansivity and conditioning floor of the
/// logistic Bernoulli chain on its restricted domain.
double bernoulli_ar_constant(double nu_max, double radius);

/// Row-wise projected SGD for X_{t+1} = sigmoid(nu + A X_t) + eta_t on the
/// pairs (X_{2t}, X_{2t+1}), step 1 / (2 c0 zeta (t+1)), each row projected
/// onto the l1 ball of the given radius. Returns the last iterate.
FitReport projected_sgd_glm(SampleStream& stream, const GlmProjParams& params, const FitOptions& options = {},
                            const PairObserver& observer = {});

/// ceil(2 alpha log T / log(1/rho)), at least 1.
Index default_gap(double rho, double alpha, Index horizon);

/// 16 (alpha + 2) d C_eta sigma^2 log T / (1 - rho)
double default_trunc(double alpha, Index d, double c_eta, double sigma_sq, Index horizon, double rho);

/// 5 log T / T
double default_stream_gamma(Index horizon);

/// Euclidean projection onto { x : ||x||_1 <= radius } (sort and soft-threshold).
template <typename Derived>
VectorX<typename Derived::Scalar> l1_project(const Eigen::MatrixBase<Derived>& v, typename Derived::Scalar radius) {
    using Scalar = typename Derived::Scalar;
    if (!(radius >= 0)) throw InvalidArgument("l1_project needs radius >= 0");
    VectorX<Scalar> out = v;
    const Scalar norm1 = v.template lpNorm<1>();
    if (norm1 <= radius) return out;
    if (radius == 0) return VectorX<Scalar>::Zero(v.size());

    std::vector<Scalar> mag(static_cast<std::size_t>(v.size()));
    for (Index i = 0; i < v.size(); ++i) mag[static_cast<std::size_t>(i)] = std::abs(v(i));
    std::sort(mag.begin(), mag.end(), std::greater<>());
    Scalar cumulative = 0;
    Scalar theta = 0;
    for (std::size_t j = 0; j < mag.size(); ++j) {
        cumulative += mag[j];
        const Scalar candidate = (cumulative - radius) / static_cast<Scalar>(j + 1);
        if (mag[j] - candidate > 0) theta = candidate;
        else break;
    }
    for (Index i = 0; i < v.size(); ++i) {
        const Scalar shrunk = std::abs(v(i)) - theta;
        out(i) = shrunk > 0 ? std::copysign(shrunk, v(i)) : Scalar(0);
    }
    return out;
}

}  // namespace nlsysid
