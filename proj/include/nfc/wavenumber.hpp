#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "nfc/geometry.hpp"
#include "nfc/linalg.hpp"

namespace nfc {

// Values over (k_y, k_z) bins. Rows follow the y axis, columns the z axis.
struct SpectrumGrid {
    RMatrix values;
    RVector k_y;
    RVector k_z;
};

// Direction cosines of the spectrum bins produced by F1 H F2^H.
double bin_to_ky(double i, std::size_t n_y);
double bin_to_kz(double j, std::size_t n_z);

struct DftPair {
    CMatrix F1;
    CMatrix F2;
};

// F[i,j] = exp(j (2k/(N-1)) (i-c)(j-c) spacing) with c = (N-1)/2.
DftPair dft_matrices(const ArrayGeometry &array, const Wave &wave);

// Row i of H holds elements i*n_z .. i*n_z + n_z - 1.
CMatrix reshape_channel(const CVector &h, const ArrayGeometry &array);

// E|F1 H F2^H|^2 for h ~ CN(0, R).
SpectrumGrid expected_spectrum(const CMatrix &R, const ArrayGeometry &array, const Wave &wave);

// |F1 H F2^H|^2
SpectrumGrid sample_spectrum(const CVector &h, const ArrayGeometry &array, const Wave &wave);

enum class Neighborhood { eight, four };

struct Peak {
    std::size_t i = 0;
    std::size_t j = 0;
    double k_y = 0.0;
    double k_z = 0.0;
    double value = 0.0;
};

struct PeakOptions {
    Neighborhood neighborhood = Neighborhood::eight;
    // Parabolic interpolation of log-values around each peak.
    bool refine = false;
};

// Cells strictly above every neighbour and above eta times the grid mean.
// Edge cells compare against the neighbours that exist.
std::vector<Peak> detect_peaks(const SpectrumGrid &grid, double eta,
                               const PeakOptions &opts = {});

// Unit direction [sqrt(1 - ky^2 - kz^2), ky, kz], clamped onto the sphere.
Vec3 direction_from_cosines(double k_y, double k_z);

// Stationary plane-wave correlation of a cluster seen from the array centre.
cdouble far_field_corr(const Vec3 &r1, const Vec3 &r2, const ScattererCluster &cluster,
                       const Wave &wave);

enum class Regime { point_scatterer_far, extended_scatterer_far, extended_scatterer_near };

const char *to_string(Regime r);

struct FieldRegime {
    Regime classification;
    double negligible_radius;   // lambda / 16
    double negligible_distance; // 8 (r_s + r_m)^2 / (lambda - 16 r_s), +inf when undefined
    double near_field_distance; // 8 (r_s + r_m)^2 / lambda
};

FieldRegime classify_regime(double r_s, double r_m, double d, const Wave &wave);

}  // namespace nfc
