#include <doctest.h>

#include <cmath>

#include "nlsysid/diag.hpp"
#include "nlsysid/layout.hpp"
#include "nlsysid/loss.hpp"
#include "nlsysid/sim.hpp"

using namespace nlsysid;

TEST_CASE("gram floor") {
    const SystemSpec spec(rand_bimod(5, 0.98, 2022), Link::leaky_relu(0.5), NoiseModel::gaussian(1.0));
    const auto traj = simulate(spec, 100000, 3, default_burn_in(0.98, 100000));
    const auto r = check_gram_floor(traj, 1.0);
    CHECK(r.pass);
    CHECK(r.observed.at(0) >= 0.5);
    CHECK(r.bound.at(0) == 0.5);
    CHECK(r.n_samples == 100000);

    const auto short_traj = simulate(spec, 3, 3, 10);
    CHECK_FALSE(check_gram_floor(short_traj, 1.0).pass);  // rank at most 3 < 5

    const SystemSpec quiet(rand_bimod(2, 0.5, 1), Link::identity(), NoiseModel::none());
    const auto zero = check_gram_floor(simulate(quiet, 100, 1), 1.0);
    CHECK_FALSE(zero.pass);
    CHECK(zero.observed.at(0) == 0.0);
}

TEST_CASE("coupling check passes on stable specs") {
    for (std::uint64_t s = 1; s <= 4; ++s) {
        const SystemSpec spec(rand_bimod(4, 0.95, s), Link::leaky_relu(0.5), NoiseModel::gaussian(1.0));
        const auto traj = simulate(spec, 3000, s, 100, {.store_noise = true});
        const auto r = check_coupling(traj, BufferLayout(50, 10, 3000), s + 10);
        CHECK(r.pass);
        CHECK(r.observed.at(0) <= r.bound.at(0));
    }
}

TEST_CASE("coupling of a zero system collapses after one step") {
    const SystemSpec spec(Mat::Zero(3, 3), Link::identity(), NoiseModel::gaussian(1.0));
    const auto traj = simulate(spec, 200, 2, 0, {.store_noise = true});
    const BufferLayout layout(10, 5, 200);
    const auto coupled = coupled_trajectory(traj, layout, 1);
    for (Index t = 0; t < layout.n_buffers(); ++t)
        for (Index i = 1; i < layout.block(); ++i)
            CHECK(traj.state(layout.index(t, i)) == coupled.state(layout.index(t, i)));
    CHECK(check_coupling(traj, layout, 1).pass);
}

TEST_CASE("coupling needs stored noise") {
    const SystemSpec spec(rand_bimod(2, 0.5, 1), Link::identity(), NoiseModel::gaussian(1.0));
    CHECK_THROWS_AS(check_coupling(simulate(spec, 100, 1), BufferLayout(5, 1, 100), 1), InvalidArgument);
}

TEST_CASE("relu sign fraction") {
    for (std::uint64_t s = 1; s <= 5; ++s) {
        const auto r = relu_sign_fraction(6, 0.0, 2000, s);
        CHECK(r.observed.at(0) == 0.0);
        CHECK(r.pass);
    }
    const auto r = relu_sign_fraction(4, 0.1, 5000, 1);
    CHECK(r.observed.at(0) > 0.0);
    CHECK(r.observed.at(0) < 1.0);
    CHECK(r.n_samples == 4999);
    CHECK_THROWS_AS(relu_sign_fraction(1, 0.1, 100, 1), InvalidArgument);
}

TEST_CASE("relu sign fraction against an independent simulation") {
    // Hand-rolled chain: the first d-1 coordinates follow relu(X_i/4) + noise,
    // the last is pure noise, and the statistic is <a_d, X_t> > 0.
    const Index d = 5, T = 3000;
    const double eps = 0.3;
    const Mat a = relu_lb_matrix(d, eps);
    const auto r = relu_sign_fraction(d, eps, T, 7);
    const SystemSpec spec(a, Link::relu(), NoiseModel::gaussian(1.0));
    const auto traj = simulate(spec, T, 7, Vec::Zero(d), 0);
    Index count = 0;
    for (Index t = 2; t <= T; ++t) count += a.row(d - 1).dot(traj.state(t)) > 0;
    CHECK(r.observed.at(0) == doctest::Approx(double(count) / double(T - 1)).epsilon(1e-15));
}

TEST_CASE("fraction decreases from d=4 to d=32") {
    const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    const auto small = relu_fraction_sweep(4, 0.1, 20000, seeds);
    const auto large = relu_fraction_sweep(32, 0.1, 20000, seeds);
    CHECK(large.pooled.observed.at(0) <= small.pooled.observed.at(0));
    CHECK(small.per_seed.size() == 5);
}

TEST_CASE("norm concentration") {
    const SystemSpec zero(Mat::Zero(4, 4), Link::identity(), NoiseModel::gaussian(1.0));
    const auto r0 = check_norm_concentration(simulate(zero, 20000, 1));
    CHECK(r0.pass);
    CHECK(r0.observed.at(0) == doctest::Approx(4.0).epsilon(0.05));
    CHECK(r0.bound.at(0) == doctest::Approx(32.0));

    for (double rho : {0.5, 0.9, 0.99}) {
        const SystemSpec spec(rand_bimod(5, rho, 3), Link::leaky_relu(0.5), NoiseModel::gaussian(1.0));
        const auto sweep = norm_concentration_sweep(spec, 20000, {1, 2, 3, 4, 5});
        CHECK(sweep.pooled.pass);
        CHECK(sweep.pooled.bound.at(0) == doctest::Approx(40.0 / (1 - rho)));
        for (const auto& r : sweep.per_seed) CHECK(r.pass);
    }
}

TEST_CASE("mixing proxy") {
    CHECK(mixing_proxy(std::exp(-1.0), 1.0) == doctest::Approx(1.0));
    CHECK(mixing_proxy(0.98, 1.0) == doctest::Approx(49.498).epsilon(1e-4));
    CHECK(mixing_proxy(0.5, std::exp(1.0)) == doctest::Approx(2.885).epsilon(1e-3));
    CHECK_THROWS_AS(mixing_proxy(1.0, 1.0), InvalidArgument);
}

TEST_CASE("contraction certificate holds on quasi newton runs") {
    for (std::uint64_t s = 1; s <= 3; ++s) {
        const SystemSpec spec(rand_bimod(3, 0.9, s), Link::leaky_relu(0.5), NoiseModel::gaussian(1.0));
        const auto traj = simulate(spec, 5000, s, 100, {.store_noise = true});
        const auto r = check_contraction(traj, 0.25, 30);
        CHECK(r.pass);
        CHECK(r.n_samples == 3 * 30);
        CHECK_THROWS_AS(check_contraction(simulate(spec, 100, s), 0.25, 3), InvalidArgument);
    }
}

TEST_CASE("diag reports round trip through json") {
    DiagReport r{"gram_floor", {0.61, 1e-300, -2.5}, {0.5}, true, 12345, "lambda_min >= sigma^2/2"};
    const nlohmann::json j = r;
    const auto back = j.get<DiagReport>();
    CHECK(back == r);
    const auto reparsed = nlohmann::json::parse(j.dump()).get<DiagReport>();
    CHECK(reparsed == r);
}
