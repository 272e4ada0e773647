#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace prollout {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised on precondition violations (dimension mismatch, unstable closed
/// loop, malformed data). Solver outcomes such as infeasibility are reported
/// through status values instead.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

namespace numerics {

/// Single source of truth for solver tolerances.
struct NumericSettings {
    double feasibility = 1e-8;
    double stationarity = 1e-8;
    double riccati_residual = 1e-9;
    double riccati_step = 1e-11;
    double pivot = 1e-11;
    int riccati_max_iterations = 100000;
};

inline const NumericSettings& default_settings() {
    static const NumericSettings s{};
    return s;
}

inline void require(bool condition, const std::string& message) {
    if (!condition)
        throw Error(message);
}

} // namespace numerics
} // namespace prollout
