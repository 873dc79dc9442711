#include <doctest.h>

#include <random>
#include <utility>

#include "nlsysid/layout.hpp"
#include "nlsysid/loss.hpp"
#include "nlsysid/sim.hpp"
#include "nlsysid/stream.hpp"

using namespace nlsysid;

namespace {

using Pairs = std::vector<std::pair<Index, Index>>;

PairObserver collect(Pairs& out) {
    return [&out](Index x, Index y) { out.emplace_back(x, y); };
}

Trajectory small_traj(Index d, Index T, std::uint64_t seed, Link link = Link::leaky_relu(0.5)) {
    const SystemSpec spec(rand_bimod(d, 0.8, 3), link, NoiseModel::gaussian(1.0));
    return simulate(spec, T, seed, 20);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("buffer layout") {
    const BufferLayout l(240, 10, 100000);
    CHECK(l.block() == 250);
    CHECK(l.n_buffers() == 400);
    CHECK(l.index(3, 7) == 757);
    CHECK(l.reversed(3, 0) == 3 * 250 + 249);
    CHECK(l.recommended_ratio());
    CHECK_FALSE(BufferLayout(5, 1, 100).recommended_ratio());
    CHECK_THROWS_AS(BufferLayout(0, 1, 10), InvalidArgument);
    CHECK_THROWS_AS(BufferLayout(2, -1, 10), InvalidArgument);
    CHECK_THROWS_AS(BufferLayout(8, 3, 10), InvalidArgument);
}

TEST_CASE("replay order for T=12, B=2, u=1") {
    const auto traj = small_traj(2, 12, 1);
    MatrixStream stream(traj);
    Pairs seen;
    sgd_rer(stream, BufferLayout(2, 1, 12), {0.01}, traj.spec().link(), {}, collect(seen));
    const Pairs expect = {{2, 3}, {1, 2}, {5, 6}, {4, 5}, {8, 9}, {7, 8}, {11, 12}, {10, 11}};
    CHECK(seen == expect);
}

TEST_CASE("replay order matches the block index map on small instances") {
    for (Index T = 1; T <= 30; ++T)
        for (Index B = 1; B <= 4; ++B)
            for (Index u = 0; u <= 3; ++u) {
                if (T < B + u) continue;
                const auto traj = small_traj(2, T, 5);
                const BufferLayout layout(B, u, T);
                Pairs expect;
                for (Index t = 0; t < layout.n_buffers(); ++t)
                    for (Index j = B + u - 1; j >= u; --j) expect.emplace_back(t * (B + u) + j, t * (B + u) + j + 1);
                Pairs seen;
                MatrixStream stream(traj);
                sgd_rer(stream, layout, {0.01}, traj.spec().link(), {}, collect(seen));
                CHECK(seen == expect);
            }
}

TEST_CASE("single-pair buffers reproduce forward sgd") {
    const auto traj = small_traj(3, 200, 2);
    const double gamma = 0.01;
    Pairs rer_pairs, fwd_pairs, er_pairs;
    MatrixStream s1(traj), s2(traj), s3(traj);
    StreamConfig cfg{gamma};
    cfg.t0 = 100;
    const auto rer = sgd_rer(s1, BufferLayout(1, 0, 200), cfg, traj.spec().link(), {}, collect(rer_pairs));
    const auto fwd = forward_sgd(s2, gamma, traj.spec().link(), {}, collect(fwd_pairs));
    const auto er = sgd_er(s3, BufferLayout(1, 0, 200), cfg, traj.spec().link(), 9, {}, collect(er_pairs));
    CHECK(rer_pairs == fwd_pairs);
    CHECK(er_pairs == fwd_pairs);
    CHECK((rer.a_hat - fwd.a_hat).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(er.a_hat == rer.a_hat);
}

TEST_CASE("forward sgd single step by hand") {
    Mat states(1, 2);
    states << 0.7, -1.3;
    MatrixStream stream(states);
    const double gamma = 0.05;
    const auto r = forward_sgd(stream, gamma, Link::identity());
    CHECK(r.a_hat(0, 0) == doctest::Approx(2 * gamma * -1.3 * 0.7).epsilon(1e-15));
}

TEST_CASE("forward sgd started at the truth stays there without noise") {
    const SystemSpec spec(rand_bimod(3, 0.9, 4), Link::identity(), NoiseModel::none());
    Vec x0(3);
    x0 << 1.0, -0.5, 0.25;
    const auto traj = simulate(spec, 50, 1, x0);
    MatrixStream stream(traj);
    StreamConfig cfg{0.1};
    cfg.a0 = spec.a_star();
    const auto r = forward_sgd(stream, cfg, spec.link());
    CHECK((r.a_hat - spec.a_star()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("random replay order is uniform over permutations") {
    const auto traj = small_traj(2, 6, 1);
    int swaps = 0;
    const int n = 4000;
    for (int s = 0; s < n; ++s) {
        Pairs seen;
        MatrixStream stream(traj);
        sgd_er(stream, BufferLayout(2, 0, 6), {0.01}, traj.spec().link(), static_cast<std::uint64_t>(s), {},
               collect(seen));
        REQUIRE(seen.size() == 6);
        // first block pairs are (0,1) and (1,2)
        if (seen[0].first == 0) ++swaps;
        else CHECK(seen[0].first == 1);
    }
    CHECK(std::abs(swaps / double(n) - 0.5) < 4 * std::sqrt(0.25 / n));
}

TEST_CASE("random replay uses each pair of a block once") {
    const auto traj = small_traj(2, 200, 3);
    const BufferLayout layout(7, 3, 200);
    Pairs seen;
    MatrixStream stream(traj);
    sgd_er(stream, layout, {0.01}, traj.spec().link(), 4, {}, collect(seen));
    Pairs rer;
    MatrixStream stream2(traj);
    sgd_rer(stream2, layout, {0.01}, traj.spec().link(), {}, collect(rer));
    REQUIRE(seen.size() == rer.size());
    for (std::size_t k = 0; k < seen.size(); k += 7) {
        Pairs a(seen.begin() + k, seen.begin() + k + 7), b(rer.begin() + k, rer.begin() + k + 7);
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        CHECK(a == b);
    }
}

TEST_CASE("tail average equals the mean of buffer-end iterates") {
    const auto traj = small_traj(3, 500, 4);
    const auto link = traj.spec().link();
    const BufferLayout layout(12, 3, 500);
    const double gamma = 0.02;
    for (Index t0 : {Index(0), Index(5), Index(20)}) {
        // reference: straightforward replay with explicit index arithmetic
        Mat a = Mat::Zero(3, 3);
        std::vector<Mat> ends;
        for (Index t = 0; t < layout.n_buffers(); ++t) {
            for (Index i = 0; i < 12; ++i) {
                const Vec x = traj.state(t * 15 + 14 - i);
                const Vec y = traj.state(t * 15 + 15 - i);
                a -= 2 * gamma * (link.apply(a * x) - y) * x.transpose();
            }
            ends.push_back(a);
        }
        Mat mean = Mat::Zero(3, 3);
        for (std::size_t k = static_cast<std::size_t>(t0); k < ends.size(); ++k) mean += ends[k];
        mean /= double(ends.size() - static_cast<std::size_t>(t0));

        MatrixStream stream(traj);
        StreamConfig cfg{gamma};
        cfg.t0 = t0;
        const auto r = sgd_rer(stream, layout, cfg, link);
        CHECK((r.a_hat - mean).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("one pass and bounded buffering") {
    const auto traj = small_traj(2, 1003, 5);
    const BufferLayout layout(40, 10, 1003);
    MatrixStream stream(traj);
    const auto r = sgd_rer(stream, layout, {0.01}, traj.spec().link());
    CHECK(r.samples_read == layout.last_index() + 1);
    CHECK(stream.samples_read() == layout.last_index() + 1);
    CHECK(r.peak_buffered <= layout.block() + 1);
    CHECK(r.updates == layout.n_buffers() * 40);
}

TEST_CASE("truncation returns zero") {
    const auto traj = small_traj(2, 300, 6);
    MatrixStream stream(traj);
    StreamConfig cfg{0.01};
    cfg.r_trunc = 1e-6;
    const auto r = sgd_rer(stream, BufferLayout(10, 2, 300), cfg, traj.spec().link());
    CHECK(r.status == FitStatus::truncated_returned_zero);
    CHECK(r.a_hat.isZero(0.0));
}

TEST_CASE("divergence is reported, not thrown") {
    const auto traj = small_traj(2, 300, 7);
    MatrixStream stream(traj);
    const auto r = sgd_rer(stream, BufferLayout(10, 2, 300), {50.0}, traj.spec().link());
    CHECK(r.status == FitStatus::diverged);
    MatrixStream stream2(traj);
    CHECK(forward_sgd(stream2, 50.0, traj.spec().link()).status == FitStatus::diverged);
}

TEST_CASE("preconditions") {
    const auto traj = small_traj(2, 100, 8);
    MatrixStream stream(traj);
    CHECK_THROWS_AS(sgd_rer(stream, BufferLayout(10, 0, 100), {0.0}, traj.spec().link()), InvalidArgument);
    StreamConfig cfg{0.01};
    cfg.t0 = 10;
    CHECK_THROWS_AS(sgd_rer(stream, BufferLayout(10, 0, 100), cfg, traj.spec().link()), InvalidArgument);
    CHECK_THROWS_AS(sgd_rer(stream, BufferLayout(10, 0, 100), {0.01}, Link::relu()), NonExpansiveLink);
    CHECK_THROWS_AS(sgd_rer(stream, BufferLayout(10, 0, 200), {0.01}, traj.spec().link()), InvalidArgument);
    CHECK_THROWS_AS(sgd_dd(stream, 0, 0.01, 1.0, traj.spec().link()), InvalidArgument);
}

TEST_CASE("data dropping") {
    const auto traj = small_traj(2, 8, 9);
    SUBCASE("gap two uses every other pair") {
        Pairs seen;
        MatrixStream stream(traj);
        sgd_dd(stream, 2, 0.01, 1e9, traj.spec().link(), {}, collect(seen));
        const Pairs expect = {{0, 1}, {2, 3}, {4, 5}, {6, 7}};
        CHECK(seen == expect);
    }
    SUBCASE("gap three") {
        Pairs seen;
        MatrixStream stream(traj);
        sgd_dd(stream, 3, 0.01, 1e9, traj.spec().link(), {}, collect(seen));
        const Pairs expect = {{0, 1}, {3, 4}};
        CHECK(seen == expect);
    }
    SUBCASE("gap one without projection is forward sgd") {
        const auto long_traj = small_traj(3, 400, 10);
        MatrixStream s1(long_traj), s2(long_traj);
        const auto dd = sgd_dd(s1, 1, 0.01, std::numeric_limits<double>::infinity(), long_traj.spec().link());
        const auto fwd = forward_sgd(s2, 0.01, long_traj.spec().link());
        CHECK(dd.a_hat == fwd.a_hat);
    }
    SUBCASE("rows stay inside the projection ball") {
        const auto long_traj = small_traj(3, 400, 10);
        MatrixStream s(long_traj);
        const auto r = sgd_dd(s, 2, 0.05, 0.1, long_traj.spec().link());
        for (Index i = 0; i < 3; ++i) CHECK(r.a_hat.row(i).norm() <= 0.1 + 1e-12);
    }
}

TEST_CASE("deterministic reports") {
    const auto traj = small_traj(3, 2000, 11);
    const BufferLayout layout(30, 5, 2000);
    FitOptions opt;
    opt.a_star = traj.spec().a_star();
    opt.record_stride = 50;
    MatrixStream a(traj), b(traj);
    const auto r1 = sgd_er(a, layout, {0.01}, traj.spec().link(), 3, opt);
    const auto r2 = sgd_er(b, layout, {0.01}, traj.spec().link(), 3, opt);
    CHECK(r1.a_hat == r2.a_hat);
    REQUIRE(r1.trace.size() == r2.trace.size());
    for (std::size_t k = 0; k < r1.trace.size(); ++k) {
        CHECK(r1.trace[k].frob_sq_err == r2.trace[k].frob_sq_err);
        CHECK(r1.trace[k].updates == r2.trace[k].updates);
    }
}

TEST_CASE("per-step contraction with identity link and small steps") {
    // ||I - 2 gamma x x^T|| <= 1 whenever gamma ||x||^2 <= 1/2, so each update
    // cannot increase the noise-free error for either ordering.
    const SystemSpec spec(rand_bimod(3, 0.9, 2), Link::identity(), NoiseModel::none());
    Vec x0(3);
    x0 << 2.0, -1.0, 0.5;
    const auto traj = simulate(spec, 40, 1, x0);
    const double gamma = 0.5 / traj.states().colwise().squaredNorm().maxCoeff();
    for (bool reverse : {true, false}) {
        Mat a = Mat::Zero(3, 3);
        for (Index k = 0; k < 40; ++k) {
            const Index t = reverse ? 39 - k : k;
            const Vec x = traj.state(t), y = traj.state(t + 1);
            const Mat step = Mat::Identity(3, 3) - 2 * gamma * x * x.transpose();
            CHECK(operator_norm(step) <= 1.0 + 1e-12);
            const double before = (a - spec.a_star()).norm();
            a -= 2 * gamma * (a * x - y) * x.transpose();
            CHECK((a - spec.a_star()).norm() <= before + 1e-12);
        }
    }
}

TEST_CASE("l1 projection examples") {
    Vec v(2);
    v << 3, 1;
    CHECK(l1_project(v, 2.0) == Vec((Vec(2) << 2, 0).finished()));
    Vec inside(3);
    inside << 0.2, -0.3, 0.1;
    CHECK(l1_project(inside, 1.0) == inside);
    CHECK(l1_project(Vec::Zero(4), 1.0) == Vec::Zero(4));
    CHECK(l1_project(v, 0.0) == Vec::Zero(2));
    CHECK_THROWS_AS(l1_project(v, -1.0), InvalidArgument);
}

TEST_CASE("l1 projection satisfies the optimality conditions") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> n(0.0, 2.0);
    std::uniform_real_distribution<double> r(0.1, 3.0);
    for (int k = 0; k < 500; ++k) {
        Vec v(6);
        for (auto& x : v) x = n(rng);
        const double radius = r(rng);
        const Vec p = l1_project(v, radius);
        CHECK(p.lpNorm<1>() <= radius * (1 + 1e-12));
        if (v.lpNorm<1>() > radius) {
            CHECK(p.lpNorm<1>() == doctest::Approx(radius).epsilon(1e-12));
            // v - p = theta * sign(p) on the support, |v_i| <= theta off it
            double theta = -1;
            for (Index i = 0; i < 6; ++i)
                if (p(i) != 0) theta = std::abs(v(i) - p(i));
            for (Index i = 0; i < 6; ++i) {
                if (p(i) != 0) CHECK(std::abs(v(i) - p(i)) == doctest::Approx(theta).epsilon(1e-10));
                else CHECK(std::abs(v(i)) <= theta + 1e-10);
            }
        }
    }
}

TEST_CASE("default gap, truncation and step") {
    CHECK(default_gap(0.98, 1.0, 100000) == 1140);
    CHECK(default_gap(1e-20, 1.0, 100000) == 1);
    CHECK(default_gap(0.0, 1.0, 100000) == 1);
    CHECK_THROWS_AS(default_gap(1.0, 1.0, 100000), InvalidArgument);
    CHECK(default_trunc(1.0, 5, 1.0, 1.0, 100000, 0.98) ==
          doctest::Approx(16 * 3 * 5 * std::log(1e5) / 0.02).epsilon(1e-14));
    CHECK(default_stream_gamma(100000) == doctest::Approx(5 * std::log(1e5) / 1e5).epsilon(1e-15));
}

TEST_CASE("projected glm sgd") {
    CHECK(bernoulli_ar_constant(0.5, 1.0) == doctest::Approx(0.25 * std::exp(-1.5)));

    SUBCASE("started at the truth with mean targets it stays put") {
        const Index d = 3, T = 200;
        Mat a_star(d, d);
        a_star << 0.2, -0.1, 0.1, 0.0, 0.3, -0.2, 0.1, 0.1, 0.1;
        Vec nu(d);
        nu << 0.1, -0.2, 0.0;
        std::mt19937_64 rng(13);
        std::bernoulli_distribution coin(0.5);
        Mat states(d, T + 1);
        for (Index t = 0; t <= T; t += 2) {
            for (Index i = 0; i < d; ++i) states(i, t) = coin(rng) ? 1.0 : 0.0;
            if (t + 1 <= T) {
                const Vec z = nu + a_star * states.col(t);
                for (Index i = 0; i < d; ++i) states(i, t + 1) = sigmoid(z(i));
            }
        }
        MatrixStream stream(states);
        GlmProjParams p;
        p.nu = nu;
        p.radius = 1.0;
        p.zeta = p.c0 = bernoulli_ar_constant(0.2, 1.0);
        p.a0 = a_star;
        const auto r = projected_sgd_glm(stream, p);
        CHECK((r.a_hat - a_star).cwiseAbs().maxCoeff() < 1e-13);
    }

    SUBCASE("pairs are every other sample and rows stay in the l1 ball") {
        Mat a_star = Mat::Identity(2, 2) * 0.3;
        const auto traj = bernoulli_ar_simulate(Vec::Zero(2), a_star, 9, 1);
        Pairs seen;
        MatrixStream stream(traj);
        GlmProjParams p;
        p.nu = Vec::Zero(2);
        p.radius = 0.5;
        p.zeta = p.c0 = bernoulli_ar_constant(0.0, 0.5);
        const auto r = projected_sgd_glm(stream, p, {}, collect(seen));
        const Pairs expect = {{0, 1}, {2, 3}, {4, 5}, {6, 7}, {8, 9}};
        CHECK(seen == expect);
        for (Index i = 0; i < 2; ++i) CHECK(r.a_hat.row(i).lpNorm<1>() <= 0.5 + 1e-12);
    }
}
