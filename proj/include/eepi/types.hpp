#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace eepi
{
using Scalar = double;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IndexVector = Eigen::VectorXi;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

template <typename T>
using Point2T = Eigen::Matrix<T, 2, 1>;
using Point2 = Point2T<double>;

/// Error categories; the CLI maps them to exit statuses and machine-readable codes.
enum class ErrorCode
{
    InvalidInput,   // malformed data or violated precondition
    InvalidSpec,    // invalid model description
    Numerical,      // non-finite values, log of zero intensity, ...
    NotConverged,
    Io,
};

constexpr std::string_view to_string(ErrorCode code)
{
    switch (code)
    {
    case ErrorCode::InvalidInput:
        return "E_INPUT";
    case ErrorCode::InvalidSpec:
        return "E_SPEC";
    case ErrorCode::Numerical:
        return "E_NUMERIC";
    case ErrorCode::NotConverged:
        return "E_CONVERGENCE";
    case ErrorCode::Io:
        return "E_IO";
    }
    return "E_UNKNOWN";
}

class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string& message) : std::runtime_error(message), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline void require(bool condition, const std::string& message,
                    ErrorCode code = ErrorCode::InvalidInput)
{
    if (!condition)
        throw Error(code, message);
}

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;

}  // namespace eepi
