#pragma once

#include <numbers>

#include "nfc/field_synthesis.hpp"
#include "nfc/geometry.hpp"
#include "nfc/linalg.hpp"

namespace nfc {

// Cumulative eigenvalue mass, negative eigenvalues clamped to zero.
RVector eigen_fractions(const RVector &eigenvalues);

// Smallest k whose leading eigenvalues carry at least `threshold` of the mass.
int effective_dof(const RVector &eigenvalues, double threshold = 0.99);
int effective_dof(const EigenSystem &eigs, double threshold = 0.99);

struct Bandwidth {
    double lower;
    double upper;
};

Bandwidth bandwidth_bounds(double r_s, const Wave &wave);

// Lower bound on the spatial bandwidth when the disk normal is tilted by
// theta away from the line of sight.
double tilted_bandwidth_lower(double r_s, double d, double theta, const Wave &wave);

struct CapDof {
    double n0;
    double n1;
    double n2;
};

inline constexpr double kDefaultCapConstant = 4.0 * std::numbers::pi;

CapDof cap_dof_bounds(double r_s, double r_m, double d, const Wave &wave,
                      double c0 = kDefaultCapConstant);

struct DofReport {
    int effective_dof = 0;
    double threshold = 0.99;
    RVector eigenvalues;
    RVector eigen_fractions;
    Bandwidth bandwidth{};
    CapDof caps{};
};

DofReport dof_report(const RVector &eigenvalues, double r_s, double r_m, double d,
                     const Wave &wave, double threshold = 0.99,
                     double c0 = kDefaultCapConstant);

}  // namespace nfc
