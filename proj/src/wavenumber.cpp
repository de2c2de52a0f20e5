#include "nfc/wavenumber.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace nfc {

namespace {

constexpr cdouble kJ{0.0, 1.0};

CMatrix dft_matrix(std::size_t n, double spacing, double k)
{
    if (n < 2)
        throw std::invalid_argument("dft_matrices: each array dimension needs at least 2 elements");
    const double c = (static_cast<double>(n) - 1.0) / 2.0;
    const double scale = 2.0 * k / (static_cast<double>(n) - 1.0) * spacing;
    CMatrix F(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            F(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                std::exp(kJ * (scale * (static_cast<double>(i) - c) * (static_cast<double>(j) - c)));
    return F;
}

SpectrumGrid empty_grid(const ArrayGeometry &array)
{
    SpectrumGrid g;
    g.k_y.resize(static_cast<Eigen::Index>(array.n_y));
    g.k_z.resize(static_cast<Eigen::Index>(array.n_z));
    for (std::size_t i = 0; i < array.n_y; ++i)
        g.k_y[static_cast<Eigen::Index>(i)] = bin_to_ky(static_cast<double>(i), array.n_y);
    for (std::size_t j = 0; j < array.n_z; ++j)
        g.k_z[static_cast<Eigen::Index>(j)] = bin_to_kz(static_cast<double>(j), array.n_z);
    return g;
}

// Vertex offset of the parabola through log-values (l, c, r), in (-0.5, 0.5).
double parabolic_offset(double l, double c, double r)
{
    if (!(l > 0.0) || !(c > 0.0) || !(r > 0.0))
        return 0.0;
    const double a = std::log(l), b = std::log(c), e = std::log(r);
    const double den = a - 2.0 * b + e;
    if (!(den < 0.0))
        return 0.0;
    return std::clamp(0.5 * (a - e) / den, -0.5, 0.5);
}

}  // namespace

double bin_to_ky(double i, std::size_t n_y)
{
    const double n = static_cast<double>(n_y);
    return (2.0 * i - n + 1.0) / (n - 1.0);
}

double bin_to_kz(double j, std::size_t n_z)
{
    const double n = static_cast<double>(n_z);
    return -(2.0 * j - n + 1.0) / (n - 1.0);
}

DftPair dft_matrices(const ArrayGeometry &array, const Wave &wave)
{
    const double k = wave.wavenumber();
    return {dft_matrix(array.n_y, array.spacing_y, k), dft_matrix(array.n_z, array.spacing_z, k)};
}

CMatrix reshape_channel(const CVector &h, const ArrayGeometry &array)
{
    if (static_cast<std::size_t>(h.size()) != array.size())
        throw std::invalid_argument("channel length does not match the array size");
    const auto ny = static_cast<Eigen::Index>(array.n_y);
    const auto nz = static_cast<Eigen::Index>(array.n_z);
    CMatrix H(ny, nz);
    for (Eigen::Index i = 0; i < ny; ++i)
        for (Eigen::Index j = 0; j < nz; ++j)
            H(i, j) = h[i * nz + j];
    return H;
}

SpectrumGrid expected_spectrum(const CMatrix &R, const ArrayGeometry &array, const Wave &wave)
{
    const auto ny = static_cast<Eigen::Index>(array.n_y);
    const auto nz = static_cast<Eigen::Index>(array.n_z);
    if (R.rows() != ny * nz || R.cols() != ny * nz)
        throw std::invalid_argument("expected_spectrum: correlation size does not match the array");
    const DftPair F = dft_matrices(array, wave);
    const CMatrix &A = F.F1;
    const CMatrix B = F.F2.conjugate();
    const CMatrix Bc = F.F2;

    // M[q](i, i') = (B R_{i i'} B^H)_{qq}
    std::vector<CMatrix> M(static_cast<std::size_t>(nz), CMatrix(ny, ny));
#pragma omp parallel for schedule(dynamic, 1)
    for (Eigen::Index i = 0; i < ny; ++i) {
        CMatrix T(nz, nz);
        for (Eigen::Index ip = 0; ip < ny; ++ip) {
            T.noalias() = B * R.block(i * nz, ip * nz, nz, nz);
            const CVector diag = T.cwiseProduct(Bc).rowwise().sum();
            for (Eigen::Index q = 0; q < nz; ++q)
                M[static_cast<std::size_t>(q)](i, ip) = diag[q];
        }
    }

    SpectrumGrid g = empty_grid(array);
    g.values.resize(ny, nz);
#pragma omp parallel for schedule(dynamic, 1)
    for (Eigen::Index q = 0; q < nz; ++q) {
        const CMatrix AM = A * M[static_cast<std::size_t>(q)];
        const CVector diag = AM.cwiseProduct(A.conjugate()).rowwise().sum();
        for (Eigen::Index p = 0; p < ny; ++p)
            g.values(p, q) = std::max(diag[p].real(), 0.0);
    }
    return g;
}

SpectrumGrid sample_spectrum(const CVector &h, const ArrayGeometry &array, const Wave &wave)
{
    const CMatrix H = reshape_channel(h, array);
    const DftPair F = dft_matrices(array, wave);
    const CMatrix Y = F.F1 * H * F.F2.adjoint();
    SpectrumGrid g = empty_grid(array);
    g.values = Y.cwiseAbs2();
    return g;
}

std::vector<Peak> detect_peaks(const SpectrumGrid &grid, double eta, const PeakOptions &opts)
{
    if (!(eta > 0.0))
        throw std::invalid_argument("detect_peaks: eta must be positive");
    const RMatrix &v = grid.values;
    const Eigen::Index ny = v.rows(), nz = v.cols();
    std::vector<Peak> peaks;
    if (v.size() == 0)
        return peaks;
    const double threshold = eta * v.mean();
    for (Eigen::Index i = 0; i < ny; ++i) {
        for (Eigen::Index j = 0; j < nz; ++j) {
            const double c = v(i, j);
            if (!(c > threshold))
                continue;
            bool is_peak = true;
            for (Eigen::Index di = -1; di <= 1 && is_peak; ++di)
                for (Eigen::Index dj = -1; dj <= 1; ++dj) {
                    if (di == 0 && dj == 0)
                        continue;
                    if (opts.neighborhood == Neighborhood::four && di != 0 && dj != 0)
                        continue;
                    const Eigen::Index a = i + di, b = j + dj;
                    if (a < 0 || b < 0 || a >= ny || b >= nz)
                        continue;
                    if (!(c > v(a, b))) {
                        is_peak = false;
                        break;
                    }
                }
            if (!is_peak)
                continue;
            double fi = static_cast<double>(i), fj = static_cast<double>(j);
            if (opts.refine) {
                if (i > 0 && i + 1 < ny)
                    fi += parabolic_offset(v(i - 1, j), c, v(i + 1, j));
                if (j > 0 && j + 1 < nz)
                    fj += parabolic_offset(v(i, j - 1), c, v(i, j + 1));
            }
            Peak p;
            p.i = static_cast<std::size_t>(i);
            p.j = static_cast<std::size_t>(j);
            p.k_y = bin_to_ky(fi, static_cast<std::size_t>(ny));
            p.k_z = bin_to_kz(fj, static_cast<std::size_t>(nz));
            p.value = c;
            peaks.push_back(p);
        }
    }
    return peaks;
}

Vec3 direction_from_cosines(double k_y, double k_z)
{
    const double s = 1.0 - k_y * k_y - k_z * k_z;
    Vec3 u(std::sqrt(std::max(s, 0.0)), k_y, k_z);
    return u.normalized();
}

cdouble far_field_corr(const Vec3 &r1, const Vec3 &r2, const ScattererCluster &cluster,
                       const Wave &wave)
{
    const double d = cluster.distance();
    const Vec3 dh = cluster.center / d;
    const double amp = cluster.power / (16.0 * std::numbers::pi * std::numbers::pi * d * d);
    return amp * std::exp(-kJ * (wave.wavenumber() * dh.dot(r1 - r2)));
}

const char *to_string(Regime r)
{
    switch (r) {
    case Regime::point_scatterer_far: return "point-scatterer-far";
    case Regime::extended_scatterer_far: return "extended-scatterer-far";
    case Regime::extended_scatterer_near: return "extended-scatterer-near";
    }
    return "unknown";
}

FieldRegime classify_regime(double r_s, double r_m, double d, const Wave &wave)
{
    wave.validate();
    if (!(r_s > 0.0) || !(r_m > 0.0) || !(d > 0.0))
        throw std::invalid_argument("classify_regime: r_s, r_m and d must be positive");
    const double lambda = wave.wavelength;
    const double span = (r_s + r_m) * (r_s + r_m);
    FieldRegime out{};
    out.negligible_radius = lambda / 16.0;
    out.negligible_distance = lambda > 16.0 * r_s ? 8.0 * span / (lambda - 16.0 * r_s)
                                                  : std::numeric_limits<double>::infinity();
    out.near_field_distance = 8.0 * span / lambda;
    if (r_s <= out.negligible_radius && d >= out.negligible_distance)
        out.classification = Regime::point_scatterer_far;
    else if (d <= out.near_field_distance)
        out.classification = Regime::extended_scatterer_near;
    else
        out.classification = Regime::extended_scatterer_far;
    return out;
}

}  // namespace nfc
