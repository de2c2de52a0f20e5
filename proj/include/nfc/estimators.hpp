#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "nfc/geometry.hpp"
#include "nfc/linalg.hpp"
#include "nfc/wavenumber.hpp"

namespace nfc {

// y = sqrt(P) h + n with n ~ CN(0, I).
struct Observation {
    CVector y;
    double snr = 1.0;
    std::optional<CVector> truth;
};

Observation make_observation(const CVector &h, double snr, std::mt19937_64 &rng);

struct EstimatorReport {
    std::string method;
    CVector estimate;
    double nmse = 0.0;       // NaN when no truth is attached
    bool zero_truth = false;
    bool flagged = false;    // fallback or regularisation happened
    std::string note;
    std::vector<std::size_t> support;
    std::size_t n_peaks = 0;
    std::uint64_t prior_hash = 0;
};

// ||est - truth||^2 / ||truth||^2
double nmse(const CVector &estimate, const CVector &truth);

EstimatorReport estimate_ls(const Observation &obs);

struct Codebook {
    struct Atom {
        double azimuth;
        double elevation;
        double distance;  // +inf for a plane wave
    };
    CMatrix W;
    std::vector<Atom> atoms;
};

// Geometric rings from the array aperture out to the Fraunhofer distance.
std::vector<double> default_distance_rings(const ArrayGeometry &array, const Wave &wave,
                                           std::size_t n_rings);

// Spherical-wave atoms exp(j k (|p - q| - |q|)) / sqrt(N) focused on points q
// laid out on a direction-cosine grid (cell centres) times distance rings.
Codebook build_codebook(const ArrayGeometry &array, const Wave &wave, std::size_t n_az,
                        std::size_t n_el, const std::vector<double> &distance_rings);

EstimatorReport estimate_omp(const Observation &obs, const Codebook &codebook,
                             std::size_t n_paths);

// sinc(2 |r_i - r_j| / lambda)
CMatrix isotropic_correlation(const ArrayGeometry &array, const Wave &wave);

// Compact eigendecomposition of the isotropic correlation, reusable across trials.
class SubspaceModel {
public:
    SubspaceModel(const ArrayGeometry &array, const Wave &wave, double eps = 1e-6);

    CVector estimate(const CVector &y, double snr, bool weighted) const;
    const CMatrix &isotropic() const { return iso_; }
    Eigen::Index rank() const { return U1_.cols(); }

private:
    CMatrix iso_;
    CMatrix U1_;
    RVector L1_;
};

EstimatorReport estimate_subspace(const Observation &obs, const SubspaceModel &model,
                                  bool weighted);
EstimatorReport estimate_subspace(const Observation &obs, const ArrayGeometry &array,
                                  const Wave &wave, bool weighted);

struct NfsOptions {
    double eta = 1.5;
    double distance = 100.0;
    double radius = 2.0;
    double concentration = 0.0;
    // Share of the isotropic correlation blended into the reconstructed prior.
    // Zero keeps the peak-only reconstruction.
    double prior_mix = 0.05;
    PeakOptions peaks;
};

// Reconstructed correlation from the wavenumber peaks of y. Returns an empty
// matrix when no peak is found.
CMatrix nfs_prior(const CVector &y, double snr, const ArrayGeometry &array, const Wave &wave,
                  const NfsOptions &opts, const CMatrix &isotropic, std::size_t &n_peaks);

EstimatorReport estimate_nfs(const Observation &obs, const ArrayGeometry &array,
                             const Wave &wave, const NfsOptions &opts,
                             const SubspaceModel &model);
EstimatorReport estimate_nfs(const Observation &obs, const ArrayGeometry &array,
                             const Wave &wave, const NfsOptions &opts = {});

// sqrt(P) R (P R + I)^-1 y
CVector mmse_filter(const CMatrix &R, const CVector &y, double snr);
EstimatorReport estimate_mmse(const Observation &obs, const CMatrix &R);

// Expected squared error of the filter built from R_hat when the channel has
// correlation R.
double analytic_mse(const CMatrix &R, const CMatrix &R_hat, double snr,
                    bool *regularized = nullptr);

}  // namespace nfc
