#include "nlsysid/sim.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <string>

#include "nlsysid/numfmt.hpp"

namespace nlsysid {

Trajectory::Trajectory(Mat states, SystemSpec spec, std::uint64_t seed, Index burn_in, std::optional<Mat> noise) {
    if (states.cols() < 2) throw InvalidArgument("a trajectory needs at least two states");
    if (states.rows() != spec.dim()) throw InvalidArgument("trajectory dimension does not match its system");
    if (noise && (noise->rows() != states.rows() || noise->cols() != states.cols() - 1))
        throw InvalidArgument("noise block must be d x T");
    data_ = std::make_shared<const Data>(Data{std::move(states), std::move(spec), seed, burn_in, std::move(noise)});
}

const Mat& Trajectory::noise() const {
    if (!data_->noise) throw InvalidArgument("trajectory was simulated without stored noise");
    return *data_->noise;
}

Trajectory Trajectory::slice(Index first, Index length) const {
    if (first < 0 || length < 1 || first + length > horizon())
        throw InvalidArgument("trajectory slice out of range");
    std::optional<Mat> noise;
    if (data_->noise) noise = data_->noise->middleCols(first, length);
    return Trajectory(data_->states.middleCols(first, length + 1), data_->spec, data_->seed, data_->burn_in + first,
                      std::move(noise));
}

namespace {

class NoiseSampler {
public:
    explicit NoiseSampler(const NoiseModel& model) : model_(model) {
        if (model.kind == NoiseKind::student_t) {
            student_ = std::student_t_distribution<double>(model.dof);
            scale_ = std::sqrt((model.dof - 2.0) / model.dof * model.sigma_sq);
        } else {
            scale_ = std::sqrt(model.sigma_sq);
        }
    }

    template <typename Derived>
    void draw(std::mt19937_64& rng, Eigen::MatrixBase<Derived>& out) {
        for (Index i = 0; i < out.size(); ++i) out(i) = draw_one(rng);
    }

private:
    double draw_one(std::mt19937_64& rng) {
        switch (model_.kind) {
            case NoiseKind::none: return 0.0;
            case NoiseKind::gaussian: return scale_ * normal_(rng);
            case NoiseKind::student_t: return scale_ * student_(rng);
            case NoiseKind::bernoulli: break;
        }
        throw InvalidArgument("bernoulli noise is state dependent; use bernoulli_ar_simulate");
    }

    NoiseModel model_;
    std::normal_distribution<double> normal_;
    std::student_t_distribution<double> student_;
    double scale_ = 1.0;
};

Vec step(const SystemSpec& spec, const Vec& x) {
    Vec z = spec.a_star() * x;
    if (spec.offset().size()) z += spec.offset();
    return spec.link().apply(z);
}

}  // namespace

Index default_burn_in(double rho, Index horizon) {
    if (!(rho < 1.0)) throw InvalidArgument("burn-in needs rho < 1");
    if (rho <= 0.0 || horizon < 2) return 0;
    return static_cast<Index>(std::ceil(10.0 * std::log(static_cast<double>(horizon)) / std::log(1.0 / rho)));
}

Trajectory simulate(const SystemSpec& spec, Index horizon, std::uint64_t seed, const Vec& x0, Index burn_in,
                    SimulateOptions options) {
    if (horizon < 1) throw InvalidArgument("horizon must be >= 1");
    if (burn_in < 0) throw InvalidArgument("burn-in must be >= 0");
    const Index d = spec.dim();
    if (x0.size() != d) throw InvalidArgument("initial state dimension mismatch");
    if (!x0.allFinite()) throw InvalidArgument("initial state must be finite");

    std::mt19937_64 rng(seed);
    NoiseSampler sampler(spec.noise());
    Vec x = x0;
    Vec eta(d);
    for (Index t = 0; t < burn_in; ++t) {
        sampler.draw(rng, eta);
        x = step(spec, x) + eta;
        if (!x.allFinite()) throw DivergenceError("non-finite state during burn-in", t + 1 - burn_in);
    }

    Mat states(d, horizon + 1);
    std::optional<Mat> noise;
    if (options.store_noise) noise.emplace(d, horizon);
    states.col(0) = x;
    for (Index t = 0; t < horizon; ++t) {
        sampler.draw(rng, eta);
        states.col(t + 1) = step(spec, states.col(t)) + eta;
        if (!states.col(t + 1).allFinite()) throw DivergenceError("non-finite state", t + 1);
        if (noise) noise->col(t) = eta;
    }
    return Trajectory(std::move(states), spec, seed, burn_in, std::move(noise));
}

Trajectory simulate(const SystemSpec& spec, Index horizon, std::uint64_t seed, Index burn_in,
                    SimulateOptions options) {
    return simulate(spec, horizon, seed, Vec::Zero(spec.dim()), burn_in, options);
}

Mat regenerate_noise(const Trajectory& traj) {
    const SystemSpec& spec = traj.spec();
    std::mt19937_64 rng(traj.seed());
    NoiseSampler sampler(spec.noise());
    Vec eta(spec.dim());
    for (Index t = 0; t < traj.burn_in(); ++t) sampler.draw(rng, eta);
    Mat noise(spec.dim(), traj.horizon());
    for (Index t = 0; t < traj.horizon(); ++t) {
        sampler.draw(rng, eta);
        noise.col(t) = eta;
    }
    return noise;
}

Mat haar_orthogonal(Index d, std::uint64_t seed) {
    if (d < 1) throw InvalidArgument("dimension must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Mat g(d, d);
    for (Index j = 0; j < d; ++j)
        for (Index i = 0; i < d; ++i) g(i, j) = normal(rng);
    Eigen::HouseholderQR<Mat> qr(g);
    Mat q = qr.householderQ();
    const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index j = 0; j < d; ++j)
        if (r(j, j) < 0) q.col(j) = -q.col(j);
    return q;
}

Mat rand_bimod(Index d, double rho, std::uint64_t seed) {
    if (d < 1) throw InvalidArgument("dimension must be >= 1");
    if (!(rho > 0 && rho < 1)) throw InvalidArgument("RandBiMod needs 0 < rho < 1");
    const Mat u = haar_orthogonal(d, seed);
    Vec spectrum = Vec::Constant(d, rho / 3.0);
    spectrum.head((d + 1) / 2).setConstant(rho);
    Mat a = u * spectrum.asDiagonal() * u.transpose();
    return 0.5 * (a + a.transpose());
}

Mat relu_lb_matrix(Index d, double epsilon) {
    if (d < 2) throw InvalidArgument("the ReLU construction needs d >= 2");
    if (!(epsilon >= 0)) throw InvalidArgument("epsilon must be >= 0");
    Mat a = Mat::Zero(d, d);
    a.topLeftCorner(d - 1, d - 1).diagonal().setConstant(0.25);
    a.row(d - 1).head(d - 1).setConstant(-epsilon / std::sqrt(static_cast<double>(d - 1)));
    return a;
}

Trajectory coupled_trajectory(const Trajectory& traj, const BufferLayout& layout, std::uint64_t seed) {
    const Index horizon = traj.horizon();
    if (layout.last_index() > horizon) throw InvalidArgument("buffer layout does not fit the trajectory");
    const SystemSpec& spec = traj.spec();
    spec.require_stable("coupled_trajectory");
    const Mat& noise = traj.noise();
    const Index d = traj.dim();
    const Index s = layout.block();
    const Index warmup = default_burn_in(spec.rho(), horizon);

    Mat coupled(d, horizon + 1);
    Vec eta(d);
    for (Index t = 0; t < layout.n_buffers(); ++t) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(t >> 32)};
        std::mt19937_64 rng(seq);
        NoiseSampler sampler(spec.noise());
        Vec x = Vec::Zero(d);
        for (Index k = 0; k < warmup; ++k) {
            sampler.draw(rng, eta);
            x = step(spec, x) + eta;
        }
        const Index base = layout.index(t, 0);
        coupled.col(base) = x;
        for (Index i = 0; i + 1 < s; ++i)
            coupled.col(base + i + 1) = step(spec, coupled.col(base + i)) + noise.col(base + i);
    }
    // Lookahead target of the final buffer and the unused tail continue the last block.
    for (Index k = layout.last_index(); k <= horizon; ++k)
        coupled.col(k) = step(spec, coupled.col(k - 1)) + noise.col(k - 1);

    return Trajectory(std::move(coupled), spec, seed, traj.burn_in(), noise);
}

Trajectory bernoulli_ar_simulate(const Vec& nu, const Mat& a_star, Index horizon, std::uint64_t seed, const Vec& x0) {
    if (horizon < 1) throw InvalidArgument("horizon must be >= 1");
    const Index d = nu.size();
    if (a_star.rows() != d || a_star.cols() != d) throw InvalidArgument("offset and matrix dimensions differ");
    SystemSpec spec(a_star, Link::logistic(), NoiseModel::bernoulli(), nu);
    Vec start = x0.size() ? x0 : Vec::Zero(d);
    if (start.size() != d) throw InvalidArgument("initial state dimension mismatch");
    if (((start.array() != 0.0) && (start.array() != 1.0)).any())
        throw InvalidArgument("Bernoulli chain states must lie in {0,1}");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Mat states(d, horizon + 1);
    Mat noise(d, horizon);
    states.col(0) = start;
    for (Index t = 0; t < horizon; ++t) {
        const Vec p = step(spec, states.col(t));
        for (Index i = 0; i < d; ++i) states(i, t + 1) = uniform(rng) < p(i) ? 1.0 : 0.0;
        noise.col(t) = states.col(t + 1) - p;
    }
    return Trajectory(std::move(states), std::move(spec), seed, 0, std::move(noise));
}

void write_trajectory(std::ostream& out, const Trajectory& traj) {
    const SystemSpec& spec = traj.spec();
    out << traj.dim() << ',' << traj.horizon() << ',' << traj.seed() << ',' << spec.link().name() << ','
        << format_double(spec.rho()) << ',' << format_double(spec.noise().sigma_sq) << '\n';
    const Mat& x = traj.states();
    for (Index t = 0; t < x.cols(); ++t) {
        for (Index i = 0; i < x.rows(); ++i) {
            if (i) out << ',';
            out << format_double(x(i, t));
        }
        out << '\n';
    }
}

Trajectory read_trajectory(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty trajectory file");
    const auto header = split(trim(line), ',');
    if (header.size() != 6) throw ParseError("trajectory header must read d,T,seed,link,rho,sigma_sq");
    const auto d = static_cast<Index>(parse_double(header[0]));
    const auto horizon = static_cast<Index>(parse_double(header[1]));
    const std::uint64_t seed = std::stoull(std::string(header[2]));
    const Link link = Link::parse(trim(header[3]));
    const double rho = parse_double(header[4]);
    const double sigma_sq = parse_double(header[5]);
    if (d < 1 || horizon < 1) throw ParseError("trajectory header has invalid d or T");

    Mat states(d, horizon + 1);
    for (Index t = 0; t <= horizon; ++t) {
        if (!std::getline(in, line)) throw ParseError("trajectory file ends at row " + std::to_string(t));
        const auto cells = split(trim(line), ',');
        if (static_cast<Index>(cells.size()) != d)
            throw ParseError("row " + std::to_string(t) + " has " + std::to_string(cells.size()) + " columns");
        for (Index i = 0; i < d; ++i) states(i, t) = parse_double(cells[i]);
    }
    const NoiseModel noise = sigma_sq > 0 ? NoiseModel::gaussian(sigma_sq) : NoiseModel::none();
    return Trajectory(std::move(states), SystemSpec::unknown(d, link, noise, rho), seed, 0);
}

}  // namespace nlsysid
