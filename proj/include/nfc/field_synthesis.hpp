#pragma once

#include <cstdint>
#include <random>

#include "nfc/correlation.hpp"
#include "nfc/linalg.hpp"

namespace nfc {

struct EigenSystem {
    RVector eigenvalues;   // descending
    CMatrix eigenvectors;  // columns match eigenvalues
};

EigenSystem eigen_system(const CMatrix &R);
RVector eigenvalues_descending(const CMatrix &R);

// Clamps eigenvalues in [-floor * lambda_max, 0) to zero. More negative
// eigenvalues throw NumericalError.
CMatrix regularize_psd(const CMatrix &R, double floor = 1e-8);

// F with F F^H = R: Cholesky when R is positive definite, pivoted LDL^T otherwise.
CMatrix cholesky_factor(const CMatrix &R);

// 64-bit FNV-1a over the raw entries.
std::uint64_t matrix_hash(const CMatrix &R);

// Circularly-symmetric standard complex normal vector: real and imaginary
// parts N(0, 1/2), Box-Muller over the supplied 64-bit Mersenne twister.
CVector complex_normal(std::mt19937_64 &rng, Eigen::Index n);

struct ChannelRealization {
    CVector h;
    std::uint64_t seed = 0;
    std::uint64_t source_hash = 0;
};

enum class SamplerMethod { cholesky, karhunen_loeve };

// Holds the square-root factor so that many draws from the same R are cheap.
class ChannelSampler {
public:
    explicit ChannelSampler(const CMatrix &R, SamplerMethod method = SamplerMethod::cholesky);

    CVector draw(std::mt19937_64 &rng) const;
    ChannelRealization sample(std::uint64_t seed) const;
    const CMatrix &factor() const { return factor_; }

private:
    CMatrix factor_;
    std::uint64_t source_hash_;
};

ChannelRealization sample_channel(const CorrelationMatrix &R, std::uint64_t seed,
                                  SamplerMethod method = SamplerMethod::cholesky);

// sum_i log(1 + lambda_i / noise_var), negative eigenvalues clamped to zero.
double mutual_information(const EigenSystem &eigs, double noise_var, bool bits = false);
double mutual_information(const RVector &eigenvalues, double noise_var, bool bits = false);

}  // namespace nfc
