#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "nlsysid/types.hpp"

namespace nlsysid {

enum class FitStatus { ok, gram_singular_returned_zero, truncated_returned_zero, diverged };

std::string to_string(FitStatus status);

struct TracePoint {
    Index t = 0;        // stream index (streaming) or iteration (offline)
    Index updates = 0;  // cumulative parameter updates
    std::int64_t wall_ns = 0;
    double frob_sq_err = 0.0;  // NaN when A* is unknown
};

/// Output of every estimator. trace holds the error and wall-time traces
/// (the error column is only meaningful when the harness knows A*).
struct FitReport {
    Mat a_hat;
    std::vector<TracePoint> trace;
    FitStatus status = FitStatus::ok;
    Index updates = 0;
    std::int64_t wall_ns = 0;
    // Streaming bookkeeping: samples pulled from the stream and the most held at once.
    Index samples_read = 0;
    Index peak_buffered = 0;

    bool ok() const noexcept { return status == FitStatus::ok; }
};

/// Options shared by all estimators.
struct FitOptions {
    // Known truth for error traces; empty means unknown.
    Mat a_star;
    // Updates between trace samples (offline: iterations). 0 disables the trace.
    Index record_stride = 1;
};

// Records trace points and wall time; the clock only runs inside update loops.
class TraceRecorder {
public:
    explicit TraceRecorder(const FitOptions& options) : options_(options) {}

    void resume() { started_ = Clock::now(); }
    void pause() { elapsed_ += Clock::now() - started_; }

    bool due(Index updates) const {
        return options_.record_stride > 0 && updates % options_.record_stride == 0;
    }

    template <typename Derived>
    void record(Index t, Index updates, const Eigen::MatrixBase<Derived>& estimate) {
        pause();
        TracePoint p;
        p.t = t;
        p.updates = updates;
        p.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(elapsed_).count();
        p.frob_sq_err = options_.a_star.size() ? (estimate - options_.a_star).squaredNorm()
                                               : std::numeric_limits<double>::quiet_NaN();
        trace_.push_back(p);
        resume();
    }

    std::int64_t elapsed_ns() const {
        return std::chrono::duration_cast<std::chrono::nanoseconds>(elapsed_).count();
    }

    std::vector<TracePoint> take() { return std::move(trace_); }

private:
    using Clock = std::chrono::steady_clock;
    const FitOptions& options_;
    Clock::time_point started_ = Clock::now();
    Clock::duration elapsed_{0};
    std::vector<TracePoint> trace_;
};

}  // namespace nlsysid
