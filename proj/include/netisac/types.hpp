#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace netisac {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

// Error taxonomy. The CLI maps ParameterError/ConfigError to exit code 2 and
// NumericalError (and subclasses) to exit code 3.
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DivergenceError : NumericalError {
    DivergenceError(int iteration, int user)
        : NumericalError("non-finite estimate at iteration " + std::to_string(iteration) +
                         ", user " + std::to_string(user)),
          iteration(iteration), user(user) {}
    int iteration;
    int user;
};

struct StabilityError : NumericalError {
    using NumericalError::NumericalError;
};

/// Which implementation of a data-parallel kernel to run. Both produce
/// bit-identical results; Serial is the reference used in tests.
enum class Backend { Serial, OpenMP };

}  // namespace netisac
