#pragma once

#include <charconv>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>

#include "nlsysid/types.hpp"

namespace nlsysid {

enum class LinkKind { identity, leaky_relu, relu, logistic };

/// Monotone scalar link phi applied coordinate-wise, with the analytic
/// metadata the losses and solvers need: its derivative, its antiderivative
/// (normalized so that antideriv(0) == 0), the expansivity floor zeta and the
/// Lipschitz ceiling.
///
/// Kinks (relu, leaky_relu at 0) use the right derivative.
template <typename Scalar = double>
class LinkFunction {
public:
    static LinkFunction identity() { return {LinkKind::identity, Scalar(1)}; }

    static LinkFunction leaky_relu(Scalar slope) {
        if (!(slope > 0 && slope <= 1))
            throw InvalidArgument("leaky_relu slope must lie in (0, 1]");
        return {LinkKind::leaky_relu, slope};
    }

    static LinkFunction relu() { return {LinkKind::relu, Scalar(0)}; }

    /// Logistic sigmoid. Its expansivity only holds on [-radius, radius],
    /// where zeta = sigma'(radius).
    static LinkFunction logistic(Scalar domain_radius = std::numeric_limits<Scalar>::infinity()) {
        if (!(domain_radius >= 0))
            throw InvalidArgument("logistic domain radius must be non-negative");
        LinkFunction f{LinkKind::logistic, Scalar(0)};
        f.domain_radius_ = domain_radius;
        return f;
    }

    /// Parses "identity", "relu", "leaky_relu:<slope>", "logistic[:<radius>]".
    static LinkFunction parse(std::string_view text) {
        const auto colon = text.find(':');
        const std::string_view name = text.substr(0, colon);
        const bool has_arg = colon != std::string_view::npos;
        auto arg = [&]() -> Scalar {
            if (!has_arg) throw ParseError("link '" + std::string(text) + "' needs a parameter");
            return parse_scalar(text.substr(colon + 1));
        };
        if (name == "identity" && !has_arg) return identity();
        if (name == "relu" && !has_arg) return relu();
        if (name == "leaky_relu") return leaky_relu(arg());
        if (name == "logistic") return has_arg ? logistic(arg()) : logistic();
        throw ParseError("unknown link '" + std::string(text) + "'");
    }

    std::string name() const {
        switch (kind_) {
            case LinkKind::identity: return "identity";
            case LinkKind::relu: return "relu";
            case LinkKind::leaky_relu: return "leaky_relu:" + format_scalar(slope_);
            case LinkKind::logistic:
                return std::isinf(domain_radius_) ? std::string("logistic")
                                                  : "logistic:" + format_scalar(domain_radius_);
        }
        return {};
    }

    LinkKind kind() const noexcept { return kind_; }
    // Negative-branch slope for leaky_relu; 1 for identity, 0 for relu.
    Scalar slope() const noexcept { return slope_; }
    Scalar domain_radius() const noexcept { return domain_radius_; }

    Scalar zeta() const noexcept {
        switch (kind_) {
            case LinkKind::identity: return Scalar(1);
            case LinkKind::leaky_relu: return slope_;
            case LinkKind::relu: return Scalar(0);
            case LinkKind::logistic: return logistic_deriv(domain_radius_);
        }
        return Scalar(0);
    }

    Scalar lipschitz() const noexcept { return kind_ == LinkKind::logistic ? Scalar(0.25) : Scalar(1); }

    bool zero_at_origin() const noexcept { return kind_ != LinkKind::logistic; }

    bool expansive() const noexcept { return zeta() > 0; }

    void require_expansive(std::string_view who) const {
        if (!expansive())
            throw NonExpansiveLink(std::string(who) + " requires an expansive link (zeta > 0), got " + name());
    }

    Scalar eval(Scalar x) const {
        switch (kind_) {
            case LinkKind::identity: return x;
            case LinkKind::leaky_relu: return x >= 0 ? x : slope_ * x;
            case LinkKind::relu: return x >= 0 ? x : Scalar(0);
            case LinkKind::logistic: return logistic_eval(x);
        }
        return x;
    }

    Scalar deriv(Scalar x) const {
        switch (kind_) {
            case LinkKind::identity: return Scalar(1);
            case LinkKind::leaky_relu: return x >= 0 ? Scalar(1) : slope_;
            case LinkKind::relu: return x >= 0 ? Scalar(1) : Scalar(0);
            case LinkKind::logistic: return logistic_deriv(x);
        }
        return Scalar(1);
    }

    Scalar antideriv(Scalar x) const {
        switch (kind_) {
            case LinkKind::identity: return Scalar(0.5) * x * x;
            case LinkKind::leaky_relu: return Scalar(0.5) * (x >= 0 ? x * x : slope_ * x * x);
            case LinkKind::relu: return x >= 0 ? Scalar(0.5) * x * x : Scalar(0);
            case LinkKind::logistic: {
                using std::abs, std::exp, std::log, std::log1p;
                const Scalar softplus = (x > 0 ? x : Scalar(0)) + log1p(exp(-abs(x)));
                return softplus - log(Scalar(2));
            }
        }
        return Scalar(0);
    }

    /// (phi(x) - phi(y)) / (x - y), falling back to deriv(x) when x == y.
    Scalar secant(Scalar x, Scalar y) const {
        if (x == y) return deriv(x);
        return (eval(x) - eval(y)) / (x - y);
    }

    template <typename Derived>
    MatrixX<Scalar> apply(const Eigen::MatrixBase<Derived>& x) const {
        MatrixX<Scalar> out = x;
        apply_in_place(out);
        return out;
    }

    // Coefficient-wise phi, vectorized per kind.
    template <typename Derived>
    void apply_in_place(Eigen::MatrixBase<Derived>& z) const {
        switch (kind_) {
            case LinkKind::identity: return;
            // slope <= 1, so max(x, a x) is x for x >= 0 and a x otherwise
            case LinkKind::leaky_relu: z = z.cwiseMax(slope_ * z); return;
            case LinkKind::relu: z = z.cwiseMax(Scalar(0)); return;
            case LinkKind::logistic: z = z.unaryExpr([this](Scalar v) { return eval(v); }); return;
        }
    }

    template <typename Derived>
    MatrixX<Scalar> apply_deriv(const Eigen::MatrixBase<Derived>& x) const {
        return x.unaryExpr([this](Scalar v) { return deriv(v); });
    }

    friend bool operator==(const LinkFunction& a, const LinkFunction& b) {
        return a.kind_ == b.kind_ && a.slope_ == b.slope_ &&
               (a.domain_radius_ == b.domain_radius_ ||
                (std::isinf(a.domain_radius_) && std::isinf(b.domain_radius_)));
    }

private:
    LinkFunction(LinkKind kind, Scalar slope) : kind_(kind), slope_(slope) {}

    static Scalar logistic_eval(Scalar x) {
        using std::exp;
        if (x >= 0) return Scalar(1) / (Scalar(1) + exp(-x));
        const Scalar e = exp(x);
        return e / (Scalar(1) + e);
    }

    static Scalar logistic_deriv(Scalar x) {
        const Scalar s = logistic_eval(x);
        return s * (Scalar(1) - s);
    }

    static Scalar parse_scalar(std::string_view s) {
        double v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size())
            throw ParseError("bad link parameter '" + std::string(s) + "'");
        return static_cast<Scalar>(v);
    }

    static std::string format_scalar(Scalar v) {
        char buf[64];
        const auto res = std::to_chars(buf, buf + sizeof buf, static_cast<double>(v));
        return std::string(buf, res.ptr);
    }

    LinkKind kind_;
    Scalar slope_;
    Scalar domain_radius_ = std::numeric_limits<Scalar>::infinity();
};

using Link = LinkFunction<double>;

template <typename Scalar>
Scalar eval(const LinkFunction<Scalar>& link, Scalar x) { return link.eval(x); }

template <typename Scalar>
Scalar deriv(const LinkFunction<Scalar>& link, Scalar x) { return link.deriv(x); }

template <typename Scalar>
Scalar antideriv(const LinkFunction<Scalar>& link, Scalar x) { return link.antideriv(x); }

}  // namespace nlsysid
