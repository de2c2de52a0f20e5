#include "nfc/estimators.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "nfc/correlation.hpp"
#include "nfc/error.hpp"
#include "nfc/field_synthesis.hpp"
#include "nfc/special_functions.hpp"

namespace nfc {

namespace {

constexpr cdouble kJ{0.0, 1.0};

void check_snr(double snr)
{
    if (!(snr > 0.0) || !std::isfinite(snr))
        throw std::invalid_argument("snr must be positive and finite");
}

EstimatorReport finish(std::string method, CVector estimate, const Observation &obs)
{
    EstimatorReport r;
    r.method = std::move(method);
    r.estimate = std::move(estimate);
    r.nmse = std::numeric_limits<double>::quiet_NaN();
    if (obs.truth) {
        if (obs.truth->squaredNorm() == 0.0)
            r.zero_truth = true;
        else
            r.nmse = nmse(r.estimate, *obs.truth);
    }
    return r;
}

}  // namespace

Observation make_observation(const CVector &h, double snr, std::mt19937_64 &rng)
{
    check_snr(snr);
    Observation obs;
    obs.snr = snr;
    obs.y = std::sqrt(snr) * h + complex_normal(rng, h.size());
    obs.truth = h;
    return obs;
}

double nmse(const CVector &estimate, const CVector &truth)
{
    if (estimate.size() != truth.size())
        throw std::invalid_argument("nmse: length mismatch");
    const double den = truth.squaredNorm();
    if (den == 0.0)
        throw std::invalid_argument("nmse: truth is zero");
    return (estimate - truth).squaredNorm() / den;
}

EstimatorReport estimate_ls(const Observation &obs)
{
    check_snr(obs.snr);
    return finish("ls", obs.y / std::sqrt(obs.snr), obs);
}

std::vector<double> default_distance_rings(const ArrayGeometry &array, const Wave &wave,
                                           std::size_t n_rings)
{
    if (n_rings == 0)
        throw std::invalid_argument("default_distance_rings: need at least one ring");
    const double aperture = std::max(2.0 * array.half_extent(), wave.wavelength);
    const double far = std::max(2.0 * aperture * aperture / wave.wavelength, aperture);
    std::vector<double> rings(n_rings);
    for (std::size_t i = 0; i < n_rings; ++i) {
        const double t = n_rings == 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(n_rings - 1);
        rings[i] = aperture * std::pow(far / aperture, t);
    }
    return rings;
}

Codebook build_codebook(const ArrayGeometry &array, const Wave &wave, std::size_t n_az,
                        std::size_t n_el, const std::vector<double> &distance_rings)
{
    array.validate();
    wave.validate();
    if (n_az == 0 || n_el == 0 || distance_rings.empty())
        throw std::invalid_argument("build_codebook: grids must be non-empty");
    for (double r : distance_rings)
        if (!(r > 0.0))
            throw std::invalid_argument("build_codebook: distance rings must be positive");

    const auto pts = element_positions(array);
    const auto n = static_cast<Eigen::Index>(pts.size());
    const double k = wave.wavenumber();
    const double norm = 1.0 / std::sqrt(static_cast<double>(n));

    Codebook cb;
    std::vector<CVector> cols;
    for (double dist : distance_rings) {
        for (std::size_t a = 0; a < n_az; ++a) {
            const double uy = -1.0 + (2.0 * static_cast<double>(a) + 1.0) / static_cast<double>(n_az);
            for (std::size_t e = 0; e < n_el; ++e) {
                const double uz =
                    -1.0 + (2.0 * static_cast<double>(e) + 1.0) / static_cast<double>(n_el);
                const double s = 1.0 - uy * uy - uz * uz;
                if (!(s > 0.0))
                    continue;
                const Vec3 u(std::sqrt(s), uy, uz);
                CVector w(n);
                for (Eigen::Index i = 0; i < n; ++i) {
                    const Vec3 &p = pts[static_cast<std::size_t>(i)];
                    double path;
                    if (std::isinf(dist)) {
                        path = -u.dot(p);
                    } else {
                        const Vec3 q = dist * u;
                        path = (p - q).norm() - dist;
                    }
                    w[i] = norm * std::exp(kJ * (k * path));
                }
                cols.push_back(std::move(w));
                cb.atoms.push_back({std::atan2(uy, u.x()), std::asin(uz), dist});
            }
        }
    }
    cb.W.resize(n, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c)
        cb.W.col(static_cast<Eigen::Index>(c)) = cols[c];
    return cb;
}

EstimatorReport estimate_omp(const Observation &obs, const Codebook &codebook,
                             std::size_t n_paths)
{
    check_snr(obs.snr);
    const auto n_atoms = static_cast<std::size_t>(codebook.W.cols());
    if (n_paths < 1 || n_paths > n_atoms)
        throw std::invalid_argument("estimate_omp: number of paths must lie in [1, atoms]");
    if (codebook.W.rows() != obs.y.size())
        throw std::invalid_argument("estimate_omp: codebook does not match the observation");

    std::vector<std::size_t> support;
    std::vector<bool> used(n_atoms, false);
    CVector residual = obs.y;
    CVector coef;
    CMatrix Ws(obs.y.size(), 0);
    bool deficient = false;
    for (std::size_t t = 0; t < n_paths; ++t) {
        const CVector gamma = codebook.W.adjoint() * residual;
        Eigen::Index best = -1;
        double best_val = -1.0;
        for (Eigen::Index p = 0; p < gamma.size(); ++p) {
            if (used[static_cast<std::size_t>(p)])
                continue;
            const double v = std::abs(gamma[p]);
            if (v > best_val) {
                best_val = v;
                best = p;
            }
        }
        used[static_cast<std::size_t>(best)] = true;
        support.push_back(static_cast<std::size_t>(best));
        Ws.conservativeResize(Eigen::NoChange, Ws.cols() + 1);
        Ws.col(Ws.cols() - 1) = codebook.W.col(best);
        Eigen::ColPivHouseholderQR<CMatrix> qr(Ws);
        if (qr.rank() < Ws.cols())
            deficient = true;
        coef = qr.solve(obs.y);
        residual = obs.y - Ws * coef;
    }
    auto rep = finish("omp", Ws * coef / std::sqrt(obs.snr), obs);
    rep.support = std::move(support);
    if (deficient) {
        rep.flagged = true;
        rep.note = "rank-deficient support";
    }
    return rep;
}

CMatrix isotropic_correlation(const ArrayGeometry &array, const Wave &wave)
{
    const auto pts = element_positions(array);
    const auto n = static_cast<Eigen::Index>(pts.size());
    CMatrix R(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            R(i, j) = sinc_normalized(2.0 *
                                      (pts[static_cast<std::size_t>(i)] -
                                       pts[static_cast<std::size_t>(j)]).norm() /
                                      wave.wavelength);
    return R;
}

SubspaceModel::SubspaceModel(const ArrayGeometry &array, const Wave &wave, double eps)
    : iso_(isotropic_correlation(array, wave))
{
    const EigenSystem es = eigen_system(iso_);
    const double top = es.eigenvalues[0];
    Eigen::Index keep = 0;
    while (keep < es.eigenvalues.size() && es.eigenvalues[keep] > eps * top)
        ++keep;
    U1_ = es.eigenvectors.leftCols(keep);
    L1_ = es.eigenvalues.head(keep);
}

CVector SubspaceModel::estimate(const CVector &y, double snr, bool weighted) const
{
    check_snr(snr);
    const CVector c = U1_.adjoint() * y;
    if (!weighted)
        return U1_ * c / std::sqrt(snr);
    const RVector gain = L1_.array() / (snr * L1_.array() + 1.0);
    return std::sqrt(snr) * (U1_ * (gain.asDiagonal() * c));
}

EstimatorReport estimate_subspace(const Observation &obs, const SubspaceModel &model,
                                  bool weighted)
{
    return finish(weighted ? "subspace-weighted" : "subspace",
                  model.estimate(obs.y, obs.snr, weighted), obs);
}

EstimatorReport estimate_subspace(const Observation &obs, const ArrayGeometry &array,
                                  const Wave &wave, bool weighted)
{
    return estimate_subspace(obs, SubspaceModel(array, wave), weighted);
}

CMatrix nfs_prior(const CVector &y, double snr, const ArrayGeometry &array, const Wave &wave,
                  const NfsOptions &opts, const CMatrix &isotropic, std::size_t &n_peaks)
{
    check_snr(snr);
    if (opts.prior_mix < 0.0 || opts.prior_mix > 1.0)
        throw std::invalid_argument("nfs: prior_mix must lie in [0, 1]");
    SpectrumGrid grid = sample_spectrum(y, array, wave);
    grid.values = grid.values.cwiseSqrt();
    const auto peaks = detect_peaks(grid, opts.eta, opts.peaks);
    n_peaks = peaks.size();
    if (peaks.empty())
        return {};

    const auto pts = element_positions(array);
    const auto n = static_cast<Eigen::Index>(pts.size());
    CMatrix R = CMatrix::Zero(n, n);
    const double d = opts.distance;
    for (const auto &p : peaks) {
        const Vec3 u = direction_from_cosines(p.k_y, p.k_z);
        ScattererCluster c;
        c.center = d * u;
        c.normal = -u;
        c.radius = opts.radius;
        c.concentration = opts.concentration;
        c.power = 16.0 * std::numbers::pi * std::numbers::pi * d * d;
        accumulate_analytic(R, pts, c, wave);
    }
    const double dim = static_cast<double>(n);
    const double energy = y.squaredNorm();
    const double target = std::max((energy - dim) / snr, 1e-3 * energy / snr);
    R *= target / R.trace().real();
    if (opts.prior_mix > 0.0)
        R = (1.0 - opts.prior_mix) * R + (opts.prior_mix * target / isotropic.trace().real()) * isotropic;
    return R;
}

EstimatorReport estimate_nfs(const Observation &obs, const ArrayGeometry &array,
                             const Wave &wave, const NfsOptions &opts,
                             const SubspaceModel &model)
{
    std::size_t n_peaks = 0;
    const CMatrix R = nfs_prior(obs.y, obs.snr, array, wave, opts, model.isotropic(), n_peaks);
    if (R.size() == 0) {
        auto rep = finish("nfs", model.estimate(obs.y, obs.snr, true), obs);
        rep.flagged = true;
        rep.note = "no wavenumber peaks; weighted subspace fallback";
        return rep;
    }
    auto rep = finish("nfs", mmse_filter(R, obs.y, obs.snr), obs);
    rep.n_peaks = n_peaks;
    rep.prior_hash = matrix_hash(R);
    return rep;
}

EstimatorReport estimate_nfs(const Observation &obs, const ArrayGeometry &array,
                             const Wave &wave, const NfsOptions &opts)
{
    return estimate_nfs(obs, array, wave, opts, SubspaceModel(array, wave));
}

CVector mmse_filter(const CMatrix &R, const CVector &y, double snr)
{
    check_snr(snr);
    if (R.rows() != y.size() || R.cols() != y.size())
        throw std::invalid_argument("mmse_filter: size mismatch");
    const auto n = R.rows();
    const CMatrix M = snr * R + CMatrix::Identity(n, n);
    Eigen::LDLT<CMatrix> ldlt(M);
    if (ldlt.info() != Eigen::Success)
        throw NumericalError("mmse_filter: factorisation failed");
    return std::sqrt(snr) * (R * ldlt.solve(y));
}

EstimatorReport estimate_mmse(const Observation &obs, const CMatrix &R)
{
    return finish("mmse", mmse_filter(R, obs.y, obs.snr), obs);
}

double analytic_mse(const CMatrix &R, const CMatrix &R_hat, double snr, bool *regularized)
{
    check_snr(snr);
    if (R.rows() != R_hat.rows() || R.cols() != R_hat.cols() || R.rows() != R.cols())
        throw std::invalid_argument("analytic_mse: dimension mismatch");
    const auto n = R.rows();
    CMatrix Rh = 0.5 * (R_hat + R_hat.adjoint());
    bool reg = false;
    CMatrix M = snr * Rh + CMatrix::Identity(n, n);
    Eigen::LDLT<CMatrix> ldlt(M);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().real().minCoeff() > 0.0)) {
        Rh = regularize_psd(Rh, 1e-6);
        M = snr * Rh + CMatrix::Identity(n, n);
        ldlt.compute(M);
        reg = true;
        if (ldlt.info() != Eigen::Success)
            throw NumericalError("analytic_mse: factorisation failed");
    }
    if (regularized)
        *regularized = reg;
    // K = (P R_hat + I)^-1 R_hat, so the filter is sqrt(P) K.
    const CMatrix K = ldlt.solve(Rh);
    const CMatrix PRI = snr * R + CMatrix::Identity(n, n);
    const double t1 = (K * PRI * K.adjoint()).trace().real();
    const double t2 = (K * R).trace().real();
    return snr * t1 - 2.0 * snr * t2 + R.trace().real();
}

}  // namespace nfc
