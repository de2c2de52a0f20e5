#pragma once

#include <stdexcept>
#include <string>

namespace nfc {

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateGeometry : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// Thrown when adaptive quadrature cannot reach the requested tolerance.
class QuadratureError : public NumericalError {
public:
    QuadratureError(const std::string &what, double achieved)
        : NumericalError(what), achieved_error(achieved) {}
    double achieved_error;
};

}  // namespace nfc
