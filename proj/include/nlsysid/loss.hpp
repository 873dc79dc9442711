#pragma once

#include <Eigen/Eigenvalues>

#include "nlsysid/link.hpp"
#include "nlsysid/sim.hpp"
#include "nlsysid/types.hpp"

namespace nlsysid {

// All losses take explicit (input, target) columns so that reordered or
// subsampled data can reuse them: column k of inputs is X_t, column k of
// targets is the X_{t+1} paired with it.

/// Convex proxy loss (1/n) sum_k sum_i [ Phi(<a_i, x_k>) - y_ki <a_i, x_k> ],
/// Phi the antiderivative of the link.
template <typename Scalar, typename DerivedA, typename DerivedX, typename DerivedY>
Scalar proxy_loss(const Eigen::MatrixBase<DerivedA>& a, const LinkFunction<Scalar>& link,
                  const Eigen::MatrixBase<DerivedX>& inputs, const Eigen::MatrixBase<DerivedY>& targets) {
    const MatrixX<Scalar> z = a * inputs;
    const Scalar integral = z.unaryExpr([&link](Scalar v) { return link.antideriv(v); }).sum();
    const Scalar cross = targets.cwiseProduct(z).sum();
    return (integral - cross) / static_cast<Scalar>(inputs.cols());
}

/// Gradient of proxy_loss: (1/n) (phi(A X) - Y) X^T.
template <typename Scalar, typename DerivedA, typename DerivedX, typename DerivedY>
MatrixX<Scalar> proxy_grad(const Eigen::MatrixBase<DerivedA>& a, const LinkFunction<Scalar>& link,
                           const Eigen::MatrixBase<DerivedX>& inputs, const Eigen::MatrixBase<DerivedY>& targets) {
    const MatrixX<Scalar> residual = link.apply(a * inputs) - targets;
    return residual * inputs.transpose() / static_cast<Scalar>(inputs.cols());
}

/// (1/n) sum_k || phi(A x_k) - y_k ||^2
template <typename Scalar, typename DerivedA, typename DerivedX, typename DerivedY>
Scalar squared_loss(const Eigen::MatrixBase<DerivedA>& a, const LinkFunction<Scalar>& link,
                    const Eigen::MatrixBase<DerivedX>& inputs, const Eigen::MatrixBase<DerivedY>& targets) {
    return (link.apply(a * inputs) - targets).squaredNorm() / static_cast<Scalar>(inputs.cols());
}

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar frob_sq_error(const Eigen::MatrixBase<DerivedA>& a_hat,
                                        const Eigen::MatrixBase<DerivedB>& a_star) {
    if (a_hat.rows() != a_star.rows() || a_hat.cols() != a_star.cols())
        throw InvalidArgument("frob_sq_error: shape mismatch");
    return (a_hat - a_star).squaredNorm();
}

/// Empirical second moment (1/n) sum x_k x_k^T with its extreme eigenvalues.
/// singular is set when lambda_min < 1e-12 * lambda_max (or the matrix is zero).
template <typename Scalar>
struct GramMatrix {
    MatrixX<Scalar> g_hat;
    Scalar lambda_min = 0;
    Scalar lambda_max = 0;
    Index t_used = 0;
    bool singular = true;
};

inline constexpr double kSingularRatio = 1e-12;

template <typename DerivedX>
GramMatrix<typename DerivedX::Scalar> empirical_gram(const Eigen::MatrixBase<DerivedX>& inputs) {
    using Scalar = typename DerivedX::Scalar;
    if (inputs.cols() < 1) throw InvalidArgument("empirical_gram needs a non-empty range");
    GramMatrix<Scalar> g;
    g.t_used = inputs.cols();
    g.g_hat = inputs * inputs.transpose() / static_cast<Scalar>(inputs.cols());
    g.g_hat = Scalar(0.5) * (g.g_hat + g.g_hat.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(g.g_hat, Eigen::EigenvaluesOnly);
    g.lambda_min = eig.eigenvalues()(0);
    g.lambda_max = eig.eigenvalues()(eig.eigenvalues().size() - 1);
    g.singular = !(g.lambda_max > 0) || g.lambda_min < Scalar(kSingularRatio) * g.lambda_max;
    return g;
}

/// Difference-quotient weighted Gram for one row:
/// (1/n) sum_k q_k x_k x_k^T, q_k = (phi(<a, x_k>) - phi(<b, x_k>)) / (<a, x_k> - <b, x_k>).
template <typename Scalar, typename DerivedA, typename DerivedB, typename DerivedX>
MatrixX<Scalar> secant_gram(const LinkFunction<Scalar>& link, const Eigen::MatrixBase<DerivedA>& a,
                            const Eigen::MatrixBase<DerivedB>& b, const Eigen::MatrixBase<DerivedX>& inputs) {
    const VectorX<Scalar> za = inputs.transpose() * a;
    const VectorX<Scalar> zb = inputs.transpose() * b;
    VectorX<Scalar> q(za.size());
    for (Index k = 0; k < za.size(); ++k) q(k) = link.secant(za(k), zb(k));
    return inputs * q.asDiagonal() * inputs.transpose() / static_cast<Scalar>(inputs.cols());
}

// Trajectory conveniences: pairs (X_t, X_{t+1}) for t = 0..T-1.

template <typename DerivedA>
double proxy_loss(const Eigen::MatrixBase<DerivedA>& a, const Trajectory& traj) {
    return proxy_loss(a, traj.spec().link(), traj.inputs(), traj.targets());
}

template <typename DerivedA>
Mat proxy_grad(const Eigen::MatrixBase<DerivedA>& a, const Trajectory& traj) {
    return proxy_grad(a, traj.spec().link(), traj.inputs(), traj.targets());
}

template <typename DerivedA>
double squared_loss(const Eigen::MatrixBase<DerivedA>& a, const Trajectory& traj) {
    return squared_loss(a, traj.spec().link(), traj.inputs(), traj.targets());
}

/// Gram over X_first .. X_{first+count-1}.
inline GramMatrix<double> empirical_gram(const Trajectory& traj, Index first, Index count) {
    if (first < 0 || count < 1 || first + count > traj.states().cols())
        throw InvalidArgument("empirical_gram: index range out of bounds");
    return empirical_gram(traj.states().middleCols(first, count));
}

// Gram over X_0 .. X_{T-1}.
inline GramMatrix<double> empirical_gram(const Trajectory& traj) { return empirical_gram(traj.inputs()); }

}  // namespace nlsysid
