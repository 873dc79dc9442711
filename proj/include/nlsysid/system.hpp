#pragma once

#include <string>
#include <string_view>

#include "nlsysid/link.hpp"
#include "nlsysid/types.hpp"

namespace nlsysid {

enum class NoiseKind { none, gaussian, student_t, bernoulli };

/// Additive noise law with E eta = 0 and E eta eta^T = sigma_sq * I.
/// student_t draws are rescaled by sqrt((dof - 2) / dof) so the covariance
/// stays sigma_sq * I for any dof > 4. bernoulli marks the state-dependent
/// noise of the Bernoulli autoregressive model; it is never drawn directly.
struct NoiseModel {
    NoiseKind kind = NoiseKind::gaussian;
    double sigma_sq = 1.0;
    double dof = 0.0;

    static NoiseModel none() { return {NoiseKind::none, 0.0, 0.0}; }
    static NoiseModel gaussian(double sigma_sq);
    static NoiseModel student_t(double dof, double sigma_sq);
    static NoiseModel bernoulli() { return {NoiseKind::bernoulli, 0.0, 0.0}; }

    /// "none", "gaussian", "student_t:<dof>", "bernoulli"; sigma_sq is supplied separately.
    static NoiseModel parse(std::string_view text, double sigma_sq);
    std::string name() const;

    // Sub-Gaussian variance proxy; 1 for gaussian coordinates, NaN where undefined.
    double c_eta() const;
    // E ||eta||^4 in dimension d; NaN where undefined.
    double m4(Index d) const;
};

/// An instance X_{t+1} = phi(offset + A* X_t) + eta_t. offset is empty except
/// for the Bernoulli autoregressive model. a_star may be empty when the
/// system is only known through a trajectory file; rho is then the declared
/// value from that file.
class SystemSpec {
public:
    SystemSpec(Mat a_star, Link link, NoiseModel noise, Vec offset = {});
    static SystemSpec unknown(Index d, Link link, NoiseModel noise, double declared_rho);

    Index dim() const noexcept { return d_; }
    bool known() const noexcept { return a_star_.size() > 0; }
    const Mat& a_star() const;
    const Link& link() const noexcept { return link_; }
    const NoiseModel& noise() const noexcept { return noise_; }
    const Vec& offset() const noexcept { return offset_; }
    double rho() const noexcept { return rho_; }

    void require_stable(std::string_view who) const;

private:
    SystemSpec() = default;

    Index d_ = 0;
    Mat a_star_;
    Link link_ = Link::identity();
    NoiseModel noise_;
    Vec offset_;
    double rho_ = 0.0;
};

// Largest singular value.
double operator_norm(const Mat& a);

}  // namespace nlsysid
