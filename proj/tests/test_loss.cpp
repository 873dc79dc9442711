#include <doctest.h>

#include <random>

#include "nlsysid/loss.hpp"
#include "nlsysid/sim.hpp"

using namespace nlsysid;

namespace {

Mat random_matrix(Index r, Index c, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    Mat m(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) m(i, j) = n(rng);
    return m;
}

// Term-by-term evaluation of the proxy loss with explicit loops.
double proxy_loss_loops(const Mat& a, const Link& f, const Mat& x, const Mat& y) {
    double total = 0;
    for (Index t = 0; t < x.cols(); ++t)
        for (Index i = 0; i < a.rows(); ++i) {
            double z = 0;
            for (Index j = 0; j < a.cols(); ++j) z += a(i, j) * x(j, t);
            double phibar;
            if (f.kind() == LinkKind::identity) phibar = z * z / 2;
            else phibar = z >= 0 ? z * z / 2 : f.slope() * z * z / 2;
            total += phibar - y(i, t) * z;
        }
    return total / double(x.cols());
}

}  // namespace

TEST_CASE("proxy loss of the zero matrix is zero") {
    std::mt19937_64 rng(1);
    const Mat x = random_matrix(3, 10, rng), y = random_matrix(3, 10, rng);
    CHECK(proxy_loss(Mat::Zero(3, 3), Link::leaky_relu(0.5), x, y) == 0.0);
}

TEST_CASE("proxy loss matches a term-by-term sum") {
    std::mt19937_64 rng(2);
    for (int k = 0; k < 20; ++k) {
        const Mat a = random_matrix(2, 2, rng), x = random_matrix(2, 4, rng), y = random_matrix(2, 4, rng);
        for (const auto& f : {Link::identity(), Link::leaky_relu(0.5)})
            CHECK(proxy_loss(a, f, x, y) == doctest::Approx(proxy_loss_loops(a, f, x, y)).epsilon(1e-13));
    }
}

TEST_CASE("identity-link proxy loss differs from least squares by a constant") {
    std::mt19937_64 rng(3);
    const Mat x = random_matrix(3, 15, rng), y = random_matrix(3, 15, rng);
    const auto f = Link::identity();
    const double c = y.squaredNorm() / 15.0 / 2.0;
    for (int k = 0; k < 5; ++k) {
        const Mat a = random_matrix(3, 3, rng);
        const double closed = 0.5 * (a * x).squaredNorm() / 15.0 - (y.cwiseProduct(a * x)).sum() / 15.0;
        CHECK(proxy_loss(a, f, x, y) == doctest::Approx(closed).epsilon(1e-12));
        CHECK(proxy_loss(a, f, x, y) + c == doctest::Approx(0.5 * squared_loss(a, f, x, y)).epsilon(1e-12));
    }
}

TEST_CASE("gradient vanishes at the truth without noise") {
    const SystemSpec spec(rand_bimod(3, 0.9, 1), Link::leaky_relu(0.5), NoiseModel::none());
    const auto traj = simulate(spec, 30, 1, Vec::Ones(3));
    CHECK(proxy_grad(spec.a_star(), traj).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("identity-link gradient is A G - C") {
    std::mt19937_64 rng(4);
    const Mat x = random_matrix(3, 12, rng), y = random_matrix(3, 12, rng), a = random_matrix(3, 3, rng);
    const Mat g = x * x.transpose() / 12.0, c = y * x.transpose() / 12.0;
    CHECK((proxy_grad(a, Link::identity(), x, y) - (a * g - c)).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("gradient matches central differences in the smooth region") {
    std::mt19937_64 rng(5);
    const auto f = Link::leaky_relu(0.5);
    int tested = 0;
    while (tested < 30) {
        const Mat a = random_matrix(3, 3, rng), x = random_matrix(3, 8, rng), y = random_matrix(3, 8, rng);
        if ((a * x).cwiseAbs().minCoeff() < 1e-3) continue;
        const Mat g = proxy_grad(a, f, x, y);
        Mat fd(3, 3);
        for (Index i = 0; i < 3; ++i)
            for (Index j = 0; j < 3; ++j) {
                const double h = 1e-6 * std::max(1.0, std::abs(a(i, j)));
                Mat ap = a, am = a;
                ap(i, j) += h;
                am(i, j) -= h;
                fd(i, j) = (proxy_loss(ap, f, x, y) - proxy_loss(am, f, x, y)) / (2 * h);
            }
        CHECK((g - fd).norm() <= 1e-6 * std::max(1.0, g.norm()));
        ++tested;
    }
}

TEST_CASE("proxy loss is convex along random chords") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const auto& f : {Link::leaky_relu(0.3), Link::relu(), Link::logistic()}) {
        const Mat x = random_matrix(3, 20, rng), y = random_matrix(3, 20, rng);
        for (int k = 0; k < 50; ++k) {
            const Mat a1 = random_matrix(3, 3, rng), a2 = random_matrix(3, 3, rng);
            const double l = u(rng);
            const double mid = proxy_loss(Mat(l * a1 + (1 - l) * a2), f, x, y);
            CHECK(mid <= l * proxy_loss(a1, f, x, y) + (1 - l) * proxy_loss(a2, f, x, y) + 1e-10);
        }
    }
}

TEST_CASE("frob_sq_error") {
    Mat a(2, 2), b(2, 2);
    a << 1, 0, 0, 1;
    b << 0, 1, 1, 0;
    CHECK(frob_sq_error(a, b) == 4.0);
    CHECK(frob_sq_error(a, a) == 0.0);
    CHECK(frob_sq_error(Mat::Zero(2, 2), b) == b.squaredNorm());
    CHECK_THROWS_AS(frob_sq_error(a, Mat::Zero(3, 3)), InvalidArgument);
}

TEST_CASE("empirical gram") {
    SUBCASE("repeated e1 is singular") {
        Mat x = Mat::Zero(2, 5);
        x.row(0).setOnes();
        const auto g = empirical_gram(x);
        CHECK(g.g_hat(0, 0) == 1.0);
        CHECK(g.g_hat(1, 1) == 0.0);
        CHECK(g.lambda_min == 0.0);
        CHECK(g.singular);
    }
    SUBCASE("two unit vectors give half the identity") {
        const Mat x = Mat::Identity(2, 2);
        const auto g = empirical_gram(x);
        CHECK(g.g_hat == 0.5 * Mat::Identity(2, 2));
        CHECK(g.lambda_min == doctest::Approx(0.5));
        CHECK_FALSE(g.singular);
        CHECK(g.t_used == 2);
    }
    SUBCASE("symmetric and PSD on random data") {
        std::mt19937_64 rng(7);
        const auto g = empirical_gram(random_matrix(4, 9, rng));
        CHECK((g.g_hat - g.g_hat.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(g.lambda_min >= -1e-10);
        Eigen::SelfAdjointEigenSolver<Mat> eig(g.g_hat);
        CHECK(g.lambda_max == doctest::Approx(eig.eigenvalues().maxCoeff()));
    }
    SUBCASE("trajectory ranges") {
        const SystemSpec spec(rand_bimod(5, 0.98, 2022), Link::leaky_relu(0.5), NoiseModel::gaussian(1.0));
        const auto traj = simulate(spec, 100000, 1, default_burn_in(0.98, 100000));
        CHECK(empirical_gram(traj).lambda_min >= 0.5);
        CHECK(empirical_gram(traj, 0, traj.horizon()).g_hat == empirical_gram(traj).g_hat);
        CHECK_THROWS_AS(empirical_gram(traj, 5, 0), InvalidArgument);
        CHECK_THROWS_AS(empirical_gram(traj, 1, traj.horizon() + 1), InvalidArgument);
    }
}

TEST_CASE("difference-quotient Gram sits between zeta G and G") {
    std::mt19937_64 rng(8);
    const auto f = Link::leaky_relu(0.4);
    const Mat x = random_matrix(3, 40, rng);
    const Mat g = empirical_gram(x).g_hat;
    for (int k = 0; k < 20; ++k) {
        const Vec a = random_matrix(3, 1, rng), b = random_matrix(3, 1, rng);
        const Mat kmat = secant_gram(f, a, b, x);
        for (int r = 0; r < 20; ++r) {
            const Vec v = random_matrix(3, 1, rng);
            const double qk = v.dot(kmat * v), qg = v.dot(g * v);
            CHECK(qk >= f.zeta() * qg - 1e-12);
            CHECK(qk <= qg + 1e-12);
        }
    }
}

TEST_CASE("losses work with other scalar types") {
    MatrixX<float> a = MatrixX<float>::Identity(2, 2), x = MatrixX<float>::Ones(2, 3), y = MatrixX<float>::Zero(2, 3);
    const float v = proxy_loss(a, LinkFunction<float>::identity(), x, y);
    CHECK(v == doctest::Approx(1.0f));
}
