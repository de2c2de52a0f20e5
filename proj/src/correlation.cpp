#include "nfc/correlation.hpp"

#include <cmath>
#include <exception>
#include <numbers>
#include <stdexcept>
#include <string>

#include "nfc/error.hpp"
#include "nfc/quadrature.hpp"
#include "nfc/special_functions.hpp"

namespace nfc {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr cdouble kJ{0.0, 1.0};

cdouble analytic_entry(const PointFactors &p1, const PointFactors &p2, double d, double k,
                       const ScattererCluster &c)
{
    const double s1 = std::sqrt(p1.A);
    const double s2 = std::sqrt(p2.A);
    const double t1 = p1.v1 - p2.v1;
    const double t2 = p1.v2 - p2.v2;
    const double x = k * c.radius * std::sqrt(t1 * t1 + t2 * t2);
    const double amp = c.power / (16.0 * kPi * kPi * d * d * s1 * s2) *
                       normalized_bessel(c.concentration + 1.0, x);
    return amp * std::exp(kJ * (k * d * (s1 - s2)));
}

}  // namespace

const char *to_string(Provenance p)
{
    switch (p) {
    case Provenance::analytic: return "analytic";
    case Provenance::oracle: return "oracle";
    case Provenance::imported: return "imported";
    case Provenance::reconstructed: return "reconstructed";
    }
    return "unknown";
}

Provenance provenance_from_string(const std::string &s)
{
    if (s == "analytic") return Provenance::analytic;
    if (s == "oracle") return Provenance::oracle;
    if (s == "imported") return Provenance::imported;
    if (s == "reconstructed") return Provenance::reconstructed;
    throw std::invalid_argument("unknown provenance '" + s + "'");
}

void CorrelationKernel::validate() const
{
    wave.validate();
    if (clusters.empty())
        throw std::invalid_argument("correlation kernel needs at least one scatterer");
    for (const auto &c : clusters)
        c.validate();
}

bool analytic_regime_ok(const ScattererCluster &cluster)
{
    return cluster.radius <= 0.1 * cluster.distance();
}

cdouble corr_analytic(const Vec3 &r1, const Vec3 &r2, const ScattererCluster &cluster,
                      const Wave &wave)
{
    const Frame f = orthonormal_frame(cluster.normal);
    return analytic_entry(point_factors(r1, cluster, f), point_factors(r2, cluster, f),
                          cluster.distance(), wave.wavenumber(), cluster);
}

cdouble corr_oracle(const Vec3 &r1, const Vec3 &r2, const ScattererCluster &cluster,
                    const Wave &wave, double tol, const OracleOptions &opts)
{
    if (!(tol > 0.0))
        throw std::invalid_argument("corr_oracle: tol must be positive");
    if (cluster.power == 0.0)
        return 0.0;
    const Frame f = orthonormal_frame(cluster.normal);
    const double k = wave.wavenumber();
    const double rs = cluster.radius;
    const double p = 1.0 / (cluster.concentration + 1.0);
    const Vec3 &d = cluster.center;

    const double d1 = (r1 - d).norm();
    const double d2 = (r2 - d).norm();
    if (!(d1 > 0.0) || !(d2 > 0.0))
        throw DegenerateGeometry("observation point coincides with scatterer center");
    const double scale = cluster.power / (16.0 * kPi * kPi * d1 * d2);
    const Vec3 diff = r1 - r2;
    const Vec3 sum = r1 + r2;
    const double floor_abs = tol * opts.relative_floor * scale;

    // s = (1 - rho^2/rs^2)^(a+1) turns the weighted disk measure into ds dtheta / (2 pi).
    auto radial = [&](double s) -> cdouble {
        const double t = 1.0 - std::pow(s, p);
        const double rho = rs * std::sqrt(std::max(t, 0.0));
        auto angular = [&](double theta) -> cdouble {
            const Vec3 rp = d + rho * (std::cos(theta) * f.mu1 + std::sin(theta) * f.mu2);
            const double l1 = (r1 - rp).norm();
            const double l2 = (r2 - rp).norm();
            // l1 - l2 without cancellation
            const double dl = diff.dot(sum - 2.0 * rp) / (l1 + l2);
            return std::exp(kJ * (k * dl)) / (16.0 * kPi * kPi * l1 * l2);
        };
        return quad::periodic_mean<cdouble>(angular, 0.01 * floor_abs / cluster.power).value;
    };

    const auto est = quad::adaptive_gauss_kronrod<cdouble>(radial, 0.0, 1.0,
                                                           floor_abs / cluster.power, tol,
                                                           opts.max_panels);
    return cluster.power * est.value;
}

cdouble corr_multi(const Vec3 &r1, const Vec3 &r2, const CorrelationKernel &kernel)
{
    cdouble sum = 0.0;
    for (const auto &c : kernel.clusters)
        sum += corr_analytic(r1, r2, c, kernel.wave);
    return sum;
}

std::vector<Vec3> element_positions(const ArrayGeometry &array)
{
    std::vector<Vec3> pts(array.size());
    for (std::size_t i = 0; i < pts.size(); ++i)
        pts[i] = array.element_position(i);
    return pts;
}

void accumulate_analytic(CMatrix &R, const std::vector<Vec3> &points,
                         const ScattererCluster &cluster, const Wave &wave)
{
    const auto n = static_cast<Eigen::Index>(points.size());
    if (R.rows() != n || R.cols() != n)
        throw std::invalid_argument("accumulate_analytic: matrix size mismatch");
    const Frame f = orthonormal_frame(cluster.normal);
    const double d = cluster.distance();
    const double k = wave.wavenumber();
    std::vector<PointFactors> pf(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        pf[i] = point_factors(points[i], cluster, f);

#pragma omp parallel for schedule(dynamic, 8)
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i <= j; ++i) {
            const cdouble v = analytic_entry(pf[static_cast<std::size_t>(i)],
                                             pf[static_cast<std::size_t>(j)], d, k, cluster);
            R(i, j) += v;
            if (i != j)
                R(j, i) += std::conj(v);
        }
    }
}

CorrelationMatrix assemble_matrix(const CorrelationKernel &kernel, const ArrayGeometry &array,
                                  CorrMode mode, double tol, const OracleOptions &opts)
{
    kernel.validate();
    array.validate();
    const auto pts = element_positions(array);
    const auto n = static_cast<Eigen::Index>(pts.size());
    CorrelationMatrix out;
    out.values = CMatrix::Zero(n, n);
    if (mode == CorrMode::analytic) {
        out.provenance = Provenance::analytic;
        for (const auto &c : kernel.clusters)
            accumulate_analytic(out.values, pts, c, kernel.wave);
        return out;
    }
    out.provenance = Provenance::oracle;
    bool failed = false;
    double worst = 0.0;
    std::exception_ptr other;
#pragma omp parallel for schedule(dynamic, 1)
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i <= j; ++i) {
            cdouble v = 0.0;
            try {
                for (const auto &c : kernel.clusters)
                    v += corr_oracle(pts[static_cast<std::size_t>(i)],
                                     pts[static_cast<std::size_t>(j)], c, kernel.wave, tol, opts);
            } catch (const QuadratureError &e) {
#pragma omp critical
                {
                    failed = true;
                    worst = std::max(worst, e.achieved_error);
                }
            } catch (...) {
#pragma omp critical
                other = std::current_exception();
            }
            if (i == j)
                v = v.real();
            out.values(i, j) = v;
            out.values(j, i) = std::conj(v);
        }
    }
    if (other)
        std::rethrow_exception(other);
    if (failed)
        throw QuadratureError("oracle assembly: quadrature did not converge", worst);
    return out;
}

double relative_error(const CMatrix &Ra, const CMatrix &Rb)
{
    if (Ra.rows() != Rb.rows() || Ra.cols() != Rb.cols())
        throw std::invalid_argument("relative_error: dimension mismatch");
    const double den = Rb.squaredNorm();
    if (den == 0.0)
        throw std::invalid_argument("relative_error: reference matrix is zero");
    return (Ra - Rb).squaredNorm() / den;
}

double relative_error(const CorrelationMatrix &Ra, const CorrelationMatrix &Rb)
{
    return relative_error(Ra.values, Rb.values);
}

double hermitian_defect(const CMatrix &R)
{
    const double n = R.norm();
    if (n == 0.0)
        return 0.0;
    return (R - R.adjoint()).norm() / n;
}

double psd_margin(const CMatrix &R)
{
    const CMatrix H = 0.5 * (R + R.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(H, Eigen::EigenvaluesOnly);
    const RVector &ev = es.eigenvalues();
    const double top = ev.maxCoeff();
    if (top <= 0.0)
        return ev.minCoeff() < 0.0 ? -1.0 : 0.0;
    return ev.minCoeff() / top;
}

}  // namespace nfc
