#include "nlsysid/system.hpp"

#include <cmath>
#include <limits>

#include "nlsysid/numfmt.hpp"

namespace nlsysid {

NoiseModel NoiseModel::gaussian(double sigma_sq) {
    if (!(sigma_sq >= 0)) throw InvalidArgument("noise variance must be non-negative");
    return {NoiseKind::gaussian, sigma_sq, 0.0};
}

NoiseModel NoiseModel::student_t(double dof, double sigma_sq) {
    if (!(dof > 4)) throw InvalidArgument("student_t noise needs dof > 4 for a finite fourth moment");
    if (!(sigma_sq >= 0)) throw InvalidArgument("noise variance must be non-negative");
    return {NoiseKind::student_t, sigma_sq, dof};
}

NoiseModel NoiseModel::parse(std::string_view text, double sigma_sq) {
    text = trim(text);
    if (text == "none") return none();
    if (text == "gaussian") return gaussian(sigma_sq);
    if (text == "bernoulli") return bernoulli();
    if (text.starts_with("student_t:")) return student_t(parse_double(text.substr(10)), sigma_sq);
    throw ParseError("unknown noise model '" + std::string(text) + "'");
}

std::string NoiseModel::name() const {
    switch (kind) {
        case NoiseKind::none: return "none";
        case NoiseKind::gaussian: return "gaussian";
        case NoiseKind::student_t: return "student_t:" + format_double(dof);
        case NoiseKind::bernoulli: return "bernoulli";
    }
    return {};
}

double NoiseModel::c_eta() const {
    if (kind == NoiseKind::gaussian) return 1.0;
    return std::numeric_limits<double>::quiet_NaN();
}

double NoiseModel::m4(Index d) const {
    const double dd = static_cast<double>(d);
    const double s4 = sigma_sq * sigma_sq;
    switch (kind) {
        case NoiseKind::none: return 0.0;
        case NoiseKind::gaussian: return dd * (dd + 2.0) * s4;
        case NoiseKind::student_t: {
            // independent coordinates: per-coordinate kurtosis 3 + 6/(dof-4)
            const double coord4 = s4 * (3.0 + 6.0 / (dof - 4.0));
            return dd * coord4 + dd * (dd - 1.0) * s4;
        }
        case NoiseKind::bernoulli: break;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

double operator_norm(const Mat& a) {
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(a);
    return svd.singularValues()(0);
}

SystemSpec::SystemSpec(Mat a_star, Link link, NoiseModel noise, Vec offset)
    : d_(a_star.rows()), a_star_(std::move(a_star)), link_(link), noise_(noise), offset_(std::move(offset)) {
    if (a_star_.rows() != a_star_.cols() || a_star_.rows() < 1)
        throw InvalidArgument("system matrix must be square and non-empty");
    if (!a_star_.allFinite()) throw InvalidArgument("system matrix has non-finite entries");
    if (offset_.size() != 0 && offset_.size() != d_) throw InvalidArgument("offset dimension mismatch");
    rho_ = operator_norm(a_star_);
}

SystemSpec SystemSpec::unknown(Index d, Link link, NoiseModel noise, double declared_rho) {
    if (d < 1) throw InvalidArgument("dimension must be >= 1");
    SystemSpec s;
    s.d_ = d;
    s.link_ = link;
    s.noise_ = noise;
    s.rho_ = declared_rho;
    return s;
}

const Mat& SystemSpec::a_star() const {
    if (!known()) throw InvalidArgument("system matrix is not known for this trajectory");
    return a_star_;
}

void SystemSpec::require_stable(std::string_view who) const {
    if (!(rho_ < 1.0))
        throw InvalidArgument(std::string(who) + " requires a stable system (rho < 1), got rho = " +
                              format_double(rho_));
}

}  // namespace nlsysid
