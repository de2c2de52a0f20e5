#include "nfc/special_functions.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nfc {

namespace {

// sum_m (-x^2/4)^m / (m! (nu+1)_m)
double normalized_series(double nu, double x)
{
    const double q = -0.25 * x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int m = 1; m < 1000; ++m) {
        term *= q / (static_cast<double>(m) * (nu + static_cast<double>(m)));
        sum += term;
        if (std::abs(term) <= 1e-17 * std::abs(sum) && static_cast<double>(m) > -q / (nu + 1.0))
            break;
    }
    return sum;
}

bool use_series(double nu, double x)
{
    const double q = 0.25 * x * x;
    return q <= 36.0 || q <= 2.0 * (nu + 1.0);
}

}  // namespace

double bessel_j(double nu, double x)
{
    if (nu < 0.0)
        throw std::invalid_argument("bessel_j: order must be non-negative");
    if (x < 0.0)
        throw std::invalid_argument("bessel_j: argument must be non-negative");
    if (x == 0.0)
        return nu == 0.0 ? 1.0 : 0.0;
    return std::cyl_bessel_j(nu, x);
}

double gamma_fn(double x)
{
    if (!(x > 0.0))
        throw std::invalid_argument("gamma_fn: argument must be positive");
    return std::tgamma(x);
}

double normalized_bessel(double nu, double x)
{
    if (nu < 0.0)
        throw std::invalid_argument("normalized_bessel: order must be non-negative");
    if (x < 0.0)
        throw std::invalid_argument("normalized_bessel: argument must be non-negative");
    if (use_series(nu, x))
        return normalized_series(nu, x);
    const double j = std::cyl_bessel_j(nu, x);
    if (j == 0.0)
        return 0.0;
    const double logmag = std::lgamma(nu + 1.0) + nu * std::log(2.0 / x) + std::log(std::abs(j));
    return std::copysign(std::exp(logmag), j);
}

double scaled_bessel(double nu, double x)
{
    if (x < 0.0)
        throw std::invalid_argument("scaled_bessel: argument must be non-negative");
    if (x == 0.0)
        return std::exp(-nu * std::numbers::ln2 - std::lgamma(nu + 1.0));
    if (use_series(nu, x)) {
        const double scale = std::exp(-nu * std::numbers::ln2 - std::lgamma(nu + 1.0));
        return scale * normalized_series(nu, x);
    }
    return std::cyl_bessel_j(nu, x) * std::pow(x, -nu);
}

double sinc_normalized(double x)
{
    if (x == 0.0)
        return 1.0;
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

}  // namespace nfc
