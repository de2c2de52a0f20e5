#pragma once

#include <cstddef>
#include <utility>

#include "nfc/linalg.hpp"

namespace nfc {

struct Wave {
    double wavelength = 0.0;

    double wavenumber() const;
    void validate() const;
};

// A disk scatterer centred at `center` and perpendicular to `normal`.
struct ScattererCluster {
    Vec3 center = Vec3::Zero();
    Vec3 normal = Vec3::UnitX();
    double radius = 1.0;
    double concentration = 0.0;
    double power = 1.0;

    double distance() const { return center.norm(); }
    void validate() const;
};

// Planar receiver grid in the x = 0 plane, centred at the origin.
// Flat index i maps to row i / n_z (y axis) and column i % n_z (z axis).
struct ArrayGeometry {
    std::size_t n_y = 1;
    std::size_t n_z = 1;
    double spacing_y = 0.0;
    double spacing_z = 0.0;

    std::size_t size() const { return n_y * n_z; }
    Vec3 element_position(std::size_t i) const;
    std::size_t flat_index(std::size_t iy, std::size_t iz) const { return iy * n_z + iz; }
    // Largest distance from the array centre to an element.
    double half_extent() const;
    void validate() const;
};

struct Frame {
    Vec3 mu1;
    Vec3 mu2;
};

Frame orthonormal_frame(const Vec3 &normal);

double factor_A(const Vec3 &r, const ScattererCluster &cluster);

double factor_C(const Vec3 &r1, const Vec3 &r2, const ScattererCluster &cluster,
                const Wave &wave);

// Per-point quantities shared by every correlation entry involving r:
// A(r) and the two transverse projections whose differences build C.
struct PointFactors {
    double A;
    double v1;
    double v2;
};

PointFactors point_factors(const Vec3 &r, const ScattererCluster &cluster, const Frame &frame);

}  // namespace nfc
