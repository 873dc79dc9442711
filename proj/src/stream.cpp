#include "nlsysid/stream.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "nlsysid/link.hpp"

namespace nlsysid {

namespace {

constexpr double kBlowUp = 1e150;

Mat initial_iterate(const Mat& a0, Index d) {
    if (a0.size() == 0) return Mat::Zero(d, d);
    if (a0.rows() != d || a0.cols() != d) throw InvalidArgument("initial iterate has the wrong shape");
    return a0;
}

// One SGD step on the pair (x, y): A <- A - step (phi(offset + A x) - y) x^T.
class PairUpdate {
public:
    PairUpdate(const Link& link, Index d) : link_(link), z_(d), r_(d) {}

    void operator()(Mat& a, const Vec& x, const Vec& y, double step, const Vec& offset = {}) {
        z_.noalias() = a * x;
        if (offset.size()) z_ += offset;
        for (Index i = 0; i < z_.size(); ++i) r_(i) = link_.eval(z_(i)) - y(i);
        a.noalias() -= step * r_ * x.transpose();
    }

private:
    const Link& link_;
    Vec z_;
    Vec r_;
};

bool blown_up(const Mat& a) { return !a.allFinite() || a.norm() > kBlowUp; }

void read_or_throw(SampleStream& stream, Eigen::Ref<Vec> out, Index& read) {
    if (!stream.next(out)) throw InvalidArgument("stream ended before the declared horizon");
    ++read;
}

void finish_diverged(FitReport& report, TraceRecorder& recorder, Index t, Index updates, Mat last) {
    recorder.pause();
    report.status = FitStatus::diverged;
    report.updates = updates;
    report.trace = recorder.take();
    report.trace.push_back({t, updates, recorder.elapsed_ns(), std::numeric_limits<double>::infinity()});
    report.wall_ns = recorder.elapsed_ns();
    report.a_hat = std::move(last);
}

using OrderFn = std::function<void(std::vector<Index>&)>;

// Shared driver of sgd_rer / sgd_er; order lists the replay offsets i (pair
// (X^t_{S-1-i}, X^t_{S-i})) for one block, rewritten per block by reorder.
FitReport replay_blocks(SampleStream& stream, const BufferLayout& layout, const StreamConfig& cfg,
                        const Link& link, const FitOptions& options, const PairObserver& observer,
                        const OrderFn& reorder) {
    if (!(cfg.gamma > 0)) throw InvalidArgument("stream step size must be > 0");
    if (layout.last_index() > stream.horizon()) throw InvalidArgument("buffer layout does not fit the stream");
    const Index n = layout.n_buffers();
    const Index t0 = cfg.t0.value_or(n / 2);
    if (t0 < 0 || t0 >= n) throw InvalidArgument("tail start must satisfy 0 <= t0 < N");
    const Index d = stream.dim();
    const Index s = layout.block();
    const Index b = layout.buffer_size();
    const double step = 2.0 * cfg.gamma;

    FitReport report;
    TraceRecorder recorder(options);
    Mat buf(d, s + 1);
    report.peak_buffered = s + 1;
    Index read = 0;
    read_or_throw(stream, buf.col(0), read);

    Mat a = initial_iterate(cfg.a0, d);
    Mat tail_sum = Mat::Zero(d, d);
    Index tail_count = 0;
    Index updates = 0;
    Index last_recorded = 0;
    std::vector<Index> order(static_cast<std::size_t>(b));
    std::iota(order.begin(), order.end(), Index{0});
    PairUpdate update(link, d);
    Vec x(d), y(d);

    recorder.resume();
    recorder.record(0, 0, a);
    for (Index t = 0; t < n; ++t) {
        for (Index j = 1; j <= s; ++j) read_or_throw(stream, buf.col(j), read);
        bool truncate = false;
        for (Index j = 0; j < s; ++j) truncate = truncate || buf.col(j).squaredNorm() > cfg.r_trunc;
        if (truncate) {
            recorder.pause();
            report.status = FitStatus::truncated_returned_zero;
            report.a_hat = Mat::Zero(d, d);
            report.updates = updates;
            report.samples_read = read;
            report.trace = recorder.take();
            report.trace.push_back({layout.index(t, 0), updates, recorder.elapsed_ns(),
                                    options.a_star.size() ? options.a_star.squaredNorm()
                                                          : std::numeric_limits<double>::quiet_NaN()});
            report.wall_ns = recorder.elapsed_ns();
            return report;
        }
        if (reorder) reorder(order);
        for (const Index i : order) {
            x = buf.col(s - 1 - i);
            y = buf.col(s - i);
            update(a, x, y, step);
            ++updates;
            if (observer) observer(layout.index(t, s - 1 - i), layout.index(t, s - i));
        }
        if (blown_up(a)) {
            report.samples_read = read;
            finish_diverged(report, recorder, layout.index(t + 1, 0), updates, std::move(a));
            return report;
        }
        if (t >= t0) {
            tail_sum += a;
            ++tail_count;
        }
        if (options.record_stride > 0 && (updates - last_recorded >= options.record_stride || t + 1 == n)) {
            if (tail_count) recorder.record(layout.index(t + 1, 0), updates, tail_sum / static_cast<double>(tail_count));
            else recorder.record(layout.index(t + 1, 0), updates, a);
            last_recorded = updates;
        }
        buf.col(0) = buf.col(s);
    }
    recorder.pause();
    report.a_hat = tail_sum / static_cast<double>(tail_count);
    report.updates = updates;
    report.samples_read = read;
    report.wall_ns = recorder.elapsed_ns();
    report.trace = recorder.take();
    return report;
}

// Sequential single-pair SGD over a subsampled stream: pairs (X_{ku}, X_{ku+1}).
FitReport pairwise_sgd(SampleStream& stream, Index gap_u, double gamma, double proj_radius, const Mat& a0,
                       const Link& link, const FitOptions& options, const PairObserver& observer) {
    if (!(gamma > 0)) throw InvalidArgument("stream step size must be > 0");
    if (gap_u < 1) throw InvalidArgument("data-dropping gap must be >= 1");
    if (!(proj_radius > 0)) throw InvalidArgument("projection radius must be > 0");
    const Index d = stream.dim();
    const Index n = stream.horizon() / gap_u;
    if (n < 1) throw InvalidArgument("stream too short for the requested gap");
    const Index tail_from = n / 2;  // average the iterates after updates tail_from+1 .. n
    const double step = 2.0 * gamma;

    FitReport report;
    report.peak_buffered = 2;
    TraceRecorder recorder(options);
    Mat a = initial_iterate(a0, d);
    Mat tail_sum = Mat::Zero(d, d);
    Index tail_count = 0;
    Index read = 0;
    PairUpdate update(link, d);
    Vec x(d), y(d), skip(d);

    recorder.resume();
    recorder.record(0, 0, a);
    read_or_throw(stream, x, read);
    for (Index k = 0; k < n; ++k) {
        // x holds X_{ku}
        read_or_throw(stream, y, read);
        update(a, x, y, step);
        if (std::isfinite(proj_radius)) {
            for (Index i = 0; i < d; ++i) {
                const double norm = a.row(i).norm();
                if (norm > proj_radius) a.row(i) *= proj_radius / norm;
            }
        }
        if (observer) observer(k * gap_u, k * gap_u + 1);
        if (blown_up(a)) {
            report.samples_read = read;
            finish_diverged(report, recorder, k * gap_u + 1, k + 1, std::move(a));
            return report;
        }
        if (k + 1 > tail_from) {
            tail_sum += a;
            ++tail_count;
        }
        if (recorder.due(k + 1) || k + 1 == n) {
            if (tail_count) recorder.record(k * gap_u + 1, k + 1, tail_sum / static_cast<double>(tail_count));
            else recorder.record(k * gap_u + 1, k + 1, a);
        }
        if (k + 1 == n) break;
        // advance to X_{(k+1)u}
        if (gap_u == 1) {
            x = y;
        } else {
            for (Index j = 2; j < gap_u; ++j) read_or_throw(stream, skip, read);
            read_or_throw(stream, x, read);
        }
    }
    recorder.pause();
    report.a_hat = tail_sum / static_cast<double>(tail_count);
    report.updates = n;
    report.samples_read = read;
    report.wall_ns = recorder.elapsed_ns();
    report.trace = recorder.take();
    return report;
}

}  // namespace

FitReport sgd_rer(SampleStream& stream, const BufferLayout& layout, const StreamConfig& cfg, const Link& link,
                  const FitOptions& options, const PairObserver& observer) {
    link.require_expansive("sgd_rer");
    return replay_blocks(stream, layout, cfg, link, options, observer, {});
}

FitReport sgd_er(SampleStream& stream, const BufferLayout& layout, const StreamConfig& cfg, const Link& link,
                 std::uint64_t seed, const FitOptions& options, const PairObserver& observer) {
    std::mt19937_64 rng(seed);
    return replay_blocks(stream, layout, cfg, link, options, observer,
                         [&rng](std::vector<Index>& order) { std::shuffle(order.begin(), order.end(), rng); });
}

FitReport forward_sgd(SampleStream& stream, double gamma, const Link& link, const FitOptions& options,
                      const PairObserver& observer) {
    return pairwise_sgd(stream, 1, gamma, std::numeric_limits<double>::infinity(), Mat(), link, options, observer);
}

FitReport forward_sgd(SampleStream& stream, const StreamConfig& cfg, const Link& link, const FitOptions& options,
                      const PairObserver& observer) {
    return pairwise_sgd(stream, 1, cfg.gamma, std::numeric_limits<double>::infinity(), cfg.a0, link, options,
                        observer);
}

FitReport sgd_dd(SampleStream& stream, Index gap_u, double gamma, double proj_radius, const Link& link,
                 const FitOptions& options, const PairObserver& observer) {
    return pairwise_sgd(stream, gap_u, gamma, proj_radius, Mat(), link, options, observer);
}

double bernoulli_ar_constant(double nu_max, double radius) { return 0.25 * std::exp(-nu_max - radius); }

FitReport projected_sgd_glm(SampleStream& stream, const GlmProjParams& params, const FitOptions& options,
                            const PairObserver& observer) {
    const Index d = stream.dim();
    if (params.nu.size() != d) throw InvalidArgument("offset dimension mismatch");
    if (!(params.radius > 0)) throw InvalidArgument("l1 radius must be > 0");
    if (!(params.zeta > 0 && params.c0 > 0)) throw InvalidArgument("zeta and c0 must be > 0");
    const Index n = (stream.horizon() + 1) / 2;  // pairs (X_{2t}, X_{2t+1}) with 2t+1 <= T
    const Link link = Link::logistic();

    FitReport report;
    report.peak_buffered = 2;
    TraceRecorder recorder(options);
    Mat a = initial_iterate(params.a0, d);
    Index read = 0;
    PairUpdate update(link, d);
    Vec x(d), y(d);

    recorder.resume();
    recorder.record(0, 0, a);
    for (Index t = 0; t < n; ++t) {
        read_or_throw(stream, x, read);
        read_or_throw(stream, y, read);
        const double alpha = 1.0 / (2.0 * params.c0 * params.zeta * static_cast<double>(t + 1));
        update(a, x, y, alpha, params.nu);
        for (Index i = 0; i < d; ++i) a.row(i) = l1_project(a.row(i).transpose(), params.radius).transpose();
        if (observer) observer(2 * t, 2 * t + 1);
        if (!a.allFinite()) {
            report.samples_read = read;
            finish_diverged(report, recorder, 2 * t + 1, t + 1, std::move(a));
            return report;
        }
        if (recorder.due(t + 1) || t + 1 == n) recorder.record(2 * t + 1, t + 1, a);
    }
    recorder.pause();
    report.a_hat = std::move(a);
    report.updates = n;
    report.samples_read = read;
    report.wall_ns = recorder.elapsed_ns();
    report.trace = recorder.take();
    return report;
}

Index default_gap(double rho, double alpha, Index horizon) {
    if (!(rho < 1.0)) throw InvalidArgument("default_gap needs rho < 1 (no finite mixing gap otherwise)");
    if (!(alpha > 0)) throw InvalidArgument("default_gap needs alpha > 0");
    if (horizon < 2) throw InvalidArgument("default_gap needs T >= 2");
    if (rho <= 0.0) return 1;
    const double u = std::ceil(2.0 * alpha * std::log(static_cast<double>(horizon)) / std::log(1.0 / rho));
    return std::max<Index>(1, static_cast<Index>(u));
}

double default_trunc(double alpha, Index d, double c_eta, double sigma_sq, Index horizon, double rho) {
    if (!(rho < 1.0)) throw InvalidArgument("default_trunc needs rho < 1");
    return 16.0 * (alpha + 2.0) * static_cast<double>(d) * c_eta * sigma_sq *
           std::log(static_cast<double>(horizon)) / (1.0 - rho);
}

double default_stream_gamma(Index horizon) {
    if (horizon < 2) throw InvalidArgument("default step size needs T >= 2");
    const double t = static_cast<double>(horizon);
    return 5.0 * std::log(t) / t;
}

}  // namespace nlsysid
