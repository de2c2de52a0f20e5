#pragma once

namespace nfc {

// Bessel function of the first kind of real order nu >= 0 at x >= 0.
double bessel_j(double nu, double x);

// x^(-nu) J_nu(x), continuous at x = 0 where it equals 2^(-nu) / Gamma(nu + 1).
double scaled_bessel(double nu, double x);

// Gamma(nu + 1) (2 / x)^nu J_nu(x), normalised so that the value at 0 is 1.
// Stays finite for large nu where scaled_bessel under- or overflows.
double normalized_bessel(double nu, double x);

double gamma_fn(double x);

// sin(pi x) / (pi x)
double sinc_normalized(double x);

}  // namespace nfc
