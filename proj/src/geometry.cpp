#include "nfc/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "nfc/error.hpp"

namespace nfc {

double Wave::wavenumber() const { return 2.0 * std::numbers::pi / wavelength; }

void Wave::validate() const
{
    if (!(wavelength > 0.0) || !std::isfinite(wavelength))
        throw std::invalid_argument("wavelength must be positive and finite");
}

void ScattererCluster::validate() const
{
    if (!center.allFinite() || !normal.allFinite())
        throw std::invalid_argument("scatterer center and normal must be finite");
    if (center.norm() <= 0.0)
        throw std::invalid_argument("scatterer center must not be at the origin");
    if (std::abs(normal.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("scatterer normal must be a unit vector");
    if (!(radius > 0.0))
        throw std::invalid_argument("scatterer radius must be positive");
    if (!(concentration > -1.0))
        throw std::invalid_argument("scatterer concentration must exceed -1");
    if (!(power >= 0.0))
        throw std::invalid_argument("scatterer power must be non-negative");
}

Vec3 ArrayGeometry::element_position(std::size_t i) const
{
    if (i >= size())
        throw std::out_of_range("element index out of range");
    const double iy = static_cast<double>(i / n_z);
    const double iz = static_cast<double>(i % n_z);
    return {0.0, (iy - (static_cast<double>(n_y) - 1.0) / 2.0) * spacing_y,
            (iz - (static_cast<double>(n_z) - 1.0) / 2.0) * spacing_z};
}

double ArrayGeometry::half_extent() const
{
    const double hy = (static_cast<double>(n_y) - 1.0) / 2.0 * spacing_y;
    const double hz = (static_cast<double>(n_z) - 1.0) / 2.0 * spacing_z;
    return std::hypot(hy, hz);
}

void ArrayGeometry::validate() const
{
    if (n_y == 0 || n_z == 0)
        throw std::invalid_argument("array dimensions must be positive");
    if (!(spacing_y > 0.0) || !(spacing_z > 0.0))
        throw std::invalid_argument("array spacing must be positive");
}

Frame orthonormal_frame(const Vec3 &normal)
{
    const double n = normal.norm();
    if (!(n > 0.0) || !std::isfinite(n))
        throw std::invalid_argument("normal must be a non-zero finite vector");
    const Vec3 mu = normal / n;

    int axis = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(mu[i]) < std::abs(mu[axis]))
            axis = i;
    Vec3 e = Vec3::Zero();
    e[axis] = 1.0;

    Frame f;
    f.mu1 = (e - mu * mu.dot(e)).normalized();
    f.mu2 = mu.cross(f.mu1);
    return f;
}

PointFactors point_factors(const Vec3 &r, const ScattererCluster &cluster, const Frame &frame)
{
    const double d = cluster.center.norm();
    if (!(d > 0.0))
        throw DegenerateGeometry("scatterer at the origin");
    const Vec3 w = (cluster.center - r) / d;
    const double A = w.squaredNorm();
    if (!(A > 0.0))
        throw DegenerateGeometry("observation point coincides with scatterer center");
    const double s = std::sqrt(A);
    return {A, w.dot(frame.mu1) / s, w.dot(frame.mu2) / s};
}

double factor_A(const Vec3 &r, const ScattererCluster &cluster)
{
    const double d = cluster.center.norm();
    if (!(d > 0.0))
        throw DegenerateGeometry("scatterer at the origin");
    const Vec3 dh = cluster.center / d;
    const Frame f = orthonormal_frame(cluster.normal);
    const double rn = r.norm();
    double proj = 0.0;
    if (rn > 0.0) {
        const Vec3 rh = r / rn;
        proj = dh.dot(cluster.normal) * rh.dot(cluster.normal) + dh.dot(f.mu1) * rh.dot(f.mu1) +
               dh.dot(f.mu2) * rh.dot(f.mu2);
    }
    const double q = rn / d;
    return 1.0 + q * q - 2.0 * q * proj;
}

double factor_C(const Vec3 &r1, const Vec3 &r2, const ScattererCluster &cluster,
                const Wave &wave)
{
    const Frame f = orthonormal_frame(cluster.normal);
    const PointFactors p1 = point_factors(r1, cluster, f);
    const PointFactors p2 = point_factors(r2, cluster, f);
    const double k = wave.wavenumber();
    const double t1 = p1.v1 - p2.v1;
    const double t2 = p1.v2 - p2.v2;
    return k * k * (t1 * t1 + t2 * t2);
}

}  // namespace nfc
