#include "nfc/field_synthesis.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <stdexcept>

#include "nfc/error.hpp"

namespace nfc {

EigenSystem eigen_system(const CMatrix &R)
{
    if (R.rows() != R.cols())
        throw std::invalid_argument("eigen_system: matrix must be square");
    const CMatrix H = 0.5 * (R + R.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(H);
    if (es.info() != Eigen::Success)
        throw NumericalError("eigen_system: eigendecomposition did not converge");
    EigenSystem out;
    out.eigenvalues = es.eigenvalues().reverse();
    out.eigenvectors = es.eigenvectors().rowwise().reverse();
    return out;
}

RVector eigenvalues_descending(const CMatrix &R)
{
    const CMatrix H = 0.5 * (R + R.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(H, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw NumericalError("eigenvalues_descending: eigendecomposition did not converge");
    return es.eigenvalues().reverse();
}

CMatrix regularize_psd(const CMatrix &R, double floor)
{
    const EigenSystem es = eigen_system(R);
    const double top = std::max(es.eigenvalues.maxCoeff(), 0.0);
    const double low = es.eigenvalues.minCoeff();
    if (low >= 0.0)
        return 0.5 * (R + R.adjoint());
    if (low < -floor * top)
        throw NumericalError("matrix is indefinite beyond the regularisation floor");
    const RVector clamped = es.eigenvalues.cwiseMax(0.0);
    return es.eigenvectors * clamped.asDiagonal() * es.eigenvectors.adjoint();
}

CMatrix cholesky_factor(const CMatrix &R)
{
    const CMatrix H = regularize_psd(R);
    Eigen::LLT<CMatrix> llt(H);
    if (llt.info() == Eigen::Success)
        return llt.matrixL();
    Eigen::LDLT<CMatrix> ldlt(H);
    if (ldlt.info() != Eigen::Success)
        throw NumericalError("cholesky_factor: factorisation failed");
    const RVector dsq = ldlt.vectorD().real().cwiseMax(0.0).cwiseSqrt();
    CMatrix L = ldlt.matrixL();
    L = L * dsq.asDiagonal();
    return ldlt.transpositionsP().transpose() * L;
}

std::uint64_t matrix_hash(const CMatrix &R)
{
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void *p, std::size_t n) {
        const auto *b = static_cast<const unsigned char *>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    const std::uint64_t rows = static_cast<std::uint64_t>(R.rows());
    mix(&rows, sizeof rows);
    for (Eigen::Index j = 0; j < R.cols(); ++j)
        for (Eigen::Index i = 0; i < R.rows(); ++i) {
            const double re = R(i, j).real();
            const double im = R(i, j).imag();
            mix(&re, sizeof re);
            mix(&im, sizeof im);
        }
    return h;
}

CVector complex_normal(std::mt19937_64 &rng, Eigen::Index n)
{
    constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
    CVector z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double u1 = 1.0 - static_cast<double>(rng() >> 11) * scale;
        const double u2 = static_cast<double>(rng() >> 11) * scale;
        const double r = std::sqrt(-std::log(u1));
        const double t = 2.0 * std::numbers::pi * u2;
        z[i] = {r * std::cos(t), r * std::sin(t)};
    }
    return z;
}

ChannelSampler::ChannelSampler(const CMatrix &R, SamplerMethod method)
    : source_hash_(matrix_hash(R))
{
    if (R.rows() != R.cols() || R.rows() == 0)
        throw std::invalid_argument("ChannelSampler: matrix must be square and non-empty");
    if (method == SamplerMethod::cholesky) {
        factor_ = cholesky_factor(R);
    } else {
        const EigenSystem es = eigen_system(regularize_psd(R));
        factor_ = es.eigenvectors * es.eigenvalues.cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }
}

CVector ChannelSampler::draw(std::mt19937_64 &rng) const
{
    return factor_ * complex_normal(rng, factor_.cols());
}

ChannelRealization ChannelSampler::sample(std::uint64_t seed) const
{
    std::mt19937_64 rng(seed);
    return {draw(rng), seed, source_hash_};
}

ChannelRealization sample_channel(const CorrelationMatrix &R, std::uint64_t seed,
                                  SamplerMethod method)
{
    return ChannelSampler(R.values, method).sample(seed);
}

double mutual_information(const RVector &eigenvalues, double noise_var, bool bits)
{
    if (!(noise_var > 0.0))
        throw std::invalid_argument("mutual_information: noise variance must be positive");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
        sum += std::log1p(std::max(eigenvalues[i], 0.0) / noise_var);
    return bits ? sum / std::numbers::ln2 : sum;
}

double mutual_information(const EigenSystem &eigs, double noise_var, bool bits)
{
    return mutual_information(eigs.eigenvalues, noise_var, bits);
}

}  // namespace nfc
