#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "nfc/geometry.hpp"
#include "nfc/linalg.hpp"

namespace nfc {

enum class Provenance { analytic, oracle, imported, reconstructed };

const char *to_string(Provenance p);
Provenance provenance_from_string(const std::string &s);

struct CorrelationMatrix {
    CMatrix values;
    Provenance provenance = Provenance::analytic;

    std::size_t dim() const { return static_cast<std::size_t>(values.rows()); }
};

struct CorrelationKernel {
    std::vector<ScattererCluster> clusters;
    Wave wave;

    void validate() const;
};

enum class CorrMode { analytic, oracle };

// Closed-form correlation between r1 and r2 for one disk scatterer.
cdouble corr_analytic(const Vec3 &r1, const Vec3 &r2, const ScattererCluster &cluster,
                      const Wave &wave);

// True when the radius is small enough relative to distance for the closed form
// to be trusted (r_s / d <= 0.1).
bool analytic_regime_ok(const ScattererCluster &cluster);

struct OracleOptions {
    // The error target is tol * max(|I|, relative_floor * S) where S is the
    // magnitude of the product of the two Green's functions at the disk centre.
    double relative_floor = 1e-4;
    std::size_t max_panels = 4000;
};

// Direct quadrature of the scattering integral over the disk.
cdouble corr_oracle(const Vec3 &r1, const Vec3 &r2, const ScattererCluster &cluster,
                    const Wave &wave, double tol, const OracleOptions &opts = {});

cdouble corr_multi(const Vec3 &r1, const Vec3 &r2, const CorrelationKernel &kernel);

// Adds the closed-form contribution of one cluster for every pair of points.
void accumulate_analytic(CMatrix &R, const std::vector<Vec3> &points,
                         const ScattererCluster &cluster, const Wave &wave);

std::vector<Vec3> element_positions(const ArrayGeometry &array);

CorrelationMatrix assemble_matrix(const CorrelationKernel &kernel, const ArrayGeometry &array,
                                  CorrMode mode, double tol = 1e-8,
                                  const OracleOptions &opts = {});

// ||Ra - Rb||_F^2 / ||Rb||_F^2
double relative_error(const CMatrix &Ra, const CMatrix &Rb);
double relative_error(const CorrelationMatrix &Ra, const CorrelationMatrix &Rb);

// ||R - R^H||_F / ||R||_F
double hermitian_defect(const CMatrix &R);

// lambda_min / lambda_max of the Hermitian part.
double psd_margin(const CMatrix &R);

}  // namespace nfc
