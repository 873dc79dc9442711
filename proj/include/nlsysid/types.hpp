#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace nlsysid {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Mat = MatrixX<double>;
using Vec = VectorX<double>;

// Base for every error raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

// A link whose expansivity is zero was handed to a solver that needs zeta > 0.
class NonExpansiveLink : public Error {
public:
    using Error::Error;
};

// Simulation produced a non-finite state.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, Index index)
        : Error(what + " (at index " + std::to_string(index) + ")"), index_(index) {}

    Index index() const noexcept { return index_; }

private:
    Index index_;
};

class ParseError : public Error {
public:
    using Error::Error;
};

}  // namespace nlsysid
