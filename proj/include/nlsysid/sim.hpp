#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>

#include "nlsysid/layout.hpp"
#include "nlsysid/system.hpp"
#include "nlsysid/types.hpp"

namespace nlsysid {

/// Immutable single trajectory X_0..X_T, stored column-wise (d x (T+1)).
/// When requested at simulation time it also carries the noise column
/// eta_t (d x T) with X_{t+1} = phi(A* X_t) + eta_t. Copies share storage.
class Trajectory {
public:
    Trajectory(Mat states, SystemSpec spec, std::uint64_t seed, Index burn_in,
               std::optional<Mat> noise = std::nullopt);

    Index dim() const noexcept { return data_->states.rows(); }
    // T: number of transitions.
    Index horizon() const noexcept { return data_->states.cols() - 1; }

    const Mat& states() const noexcept { return data_->states; }
    auto state(Index t) const { return data_->states.col(t); }
    // X_0 .. X_{T-1} and X_1 .. X_T as d x T blocks.
    auto inputs() const { return data_->states.leftCols(horizon()); }
    auto targets() const { return data_->states.rightCols(horizon()); }

    const SystemSpec& spec() const noexcept { return data_->spec; }
    std::uint64_t seed() const noexcept { return data_->seed; }
    Index burn_in() const noexcept { return data_->burn_in; }

    bool has_noise() const noexcept { return data_->noise.has_value(); }
    const Mat& noise() const;

    /// States first .. first+length (length transitions), noise sliced alike.
    Trajectory slice(Index first, Index length) const;

private:
    struct Data {
        Mat states;
        SystemSpec spec;
        std::uint64_t seed;
        Index burn_in;
        std::optional<Mat> noise;
    };
    std::shared_ptr<const Data> data_;
};

struct SimulateOptions {
    bool store_noise = false;
};

/// ceil(10 log T / log(1/rho)); 0 when rho == 0.
Index default_burn_in(double rho, Index horizon);

/// Runs burn_in warm-up steps from x0, discards them, then T steps.
/// Deterministic in seed: noise is drawn time-major, coordinate-minor from
/// one mt19937_64 stream, burn-in draws first.
Trajectory simulate(const SystemSpec& spec, Index horizon, std::uint64_t seed, const Vec& x0,
                    Index burn_in = 0, SimulateOptions options = {});

/// Same as simulate starting at the zero state.
Trajectory simulate(const SystemSpec& spec, Index horizon, std::uint64_t seed, Index burn_in = 0,
                    SimulateOptions options = {});

/// Noise sequence eta_0..eta_{T-1} re-derived from the trajectory's seed.
Mat regenerate_noise(const Trajectory& traj);

/// U diag(rho,..,rho, rho/3,..) U^T with Haar-random orthogonal U and
/// ceil(d/2) eigenvalues equal to rho.
Mat rand_bimod(Index d, double rho, std::uint64_t seed);

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix, sign corrected).
Mat haar_orthogonal(Index d, std::uint64_t seed);

/// Two-point ReLU instance: 1/4 on the first d-1 diagonal entries, last row
/// -epsilon/sqrt(d-1) off the diagonal, zero elsewhere.
Mat relu_lb_matrix(Index d, double epsilon);

/// Re-runs the recursion of traj with its stored noise, restarting every
/// buffer block from an independent approximately stationary state (a fresh
/// burn-in chain from zero). Buffers of the result are mutually independent.
Trajectory coupled_trajectory(const Trajectory& traj, const BufferLayout& layout, std::uint64_t seed);

/// Bernoulli autoregressive chain over {0,1}^d:
/// X_{t+1}(i) ~ Ber(sigmoid(nu_i + <a*_i, X_t>)), starting from x0 (zero when empty).
Trajectory bernoulli_ar_simulate(const Vec& nu, const Mat& a_star, Index horizon, std::uint64_t seed,
                                 const Vec& x0 = {});

/// Trajectory file: one header line with the values of d,T,seed,link,rho,sigma_sq,
/// then T+1 rows of d comma-separated reals in shortest round-trip form.
void write_trajectory(std::ostream& out, const Trajectory& traj);
Trajectory read_trajectory(std::istream& in);

}  // namespace nlsysid
