#include "nfc/dof_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace nfc {

RVector eigen_fractions(const RVector &eigenvalues)
{
    RVector out(eigenvalues.size());
    const RVector clamped = eigenvalues.cwiseMax(0.0);
    const double total = clamped.sum();
    double run = 0.0;
    for (Eigen::Index i = 0; i < clamped.size(); ++i) {
        run += clamped[i];
        out[i] = total > 0.0 ? run / total : 0.0;
    }
    if (total > 0.0 && out.size() > 0)
        out[out.size() - 1] = 1.0;
    return out;
}

int effective_dof(const RVector &eigenvalues, double threshold)
{
    if (!(threshold > 0.0) || !(threshold < 1.0))
        throw std::invalid_argument("effective_dof: threshold must lie in (0, 1)");
    RVector sorted = eigenvalues.cwiseMax(0.0);
    std::sort(sorted.data(), sorted.data() + sorted.size(), std::greater<>());
    const double total = sorted.sum();
    if (total <= 0.0)
        return 0;
    double run = 0.0;
    for (Eigen::Index i = 0; i < sorted.size(); ++i) {
        run += sorted[i];
        if (run >= threshold * total)
            return static_cast<int>(i + 1);
    }
    return static_cast<int>(sorted.size());
}

int effective_dof(const EigenSystem &eigs, double threshold)
{
    return effective_dof(eigs.eigenvalues, threshold);
}

Bandwidth bandwidth_bounds(double r_s, const Wave &wave)
{
    wave.validate();
    if (!(r_s > 0.0))
        throw std::invalid_argument("bandwidth_bounds: r_s must be positive");
    const double base = wave.wavenumber() * r_s;
    return {base, std::numbers::sqrt2 * base};
}

double tilted_bandwidth_lower(double r_s, double d, double theta, const Wave &wave)
{
    wave.validate();
    if (!(r_s > 0.0) || !(d > 0.0))
        throw std::invalid_argument("tilted_bandwidth_lower: r_s and d must be positive");
    if (r_s >= d)
        throw std::invalid_argument("tilted_bandwidth_lower: requires r_s < d");
    if (theta < 0.0 || theta >= std::numbers::pi / 2.0)
        throw std::invalid_argument("tilted_bandwidth_lower: theta must lie in [0, pi/2)");
    const double alpha0 = std::asin(r_s / d);
    const double phi = alpha0 + theta;
    const double num = r_s * std::cos(phi);
    const double den = std::sqrt(d * d + r_s * r_s - 2.0 * d * r_s * std::sin(phi));
    return std::max(wave.wavenumber() * d * num / den, 0.0);
}

CapDof cap_dof_bounds(double r_s, double r_m, double d, const Wave &wave, double c0)
{
    wave.validate();
    if (!(r_s > 0.0) || !(r_m > 0.0) || !(d > 0.0))
        throw std::invalid_argument("cap_dof_bounds: inputs must be positive");
    const double lam = wave.wavelength;
    CapDof out{};
    out.n0 = c0 * r_s * r_s / (lam * lam);
    // Cap area over sphere area: (1 - cos(half-angle)) / 2.
    out.n1 = out.n0 * 0.5 * (1.0 - d / std::sqrt(d * d + r_m * r_m));
    out.n2 = out.n0 * 0.5 * (1.0 - std::numbers::sqrt2 * d / std::sqrt(2.0 * d * d + r_m * r_m));
    return out;
}

DofReport dof_report(const RVector &eigenvalues, double r_s, double r_m, double d,
                     const Wave &wave, double threshold, double c0)
{
    DofReport rep;
    rep.threshold = threshold;
    rep.eigenvalues = eigenvalues;
    rep.eigen_fractions = eigen_fractions(eigenvalues);
    rep.effective_dof = effective_dof(eigenvalues, threshold);
    rep.bandwidth = bandwidth_bounds(r_s, wave);
    rep.caps = cap_dof_bounds(r_s, r_m, d, wave, c0);
    return rep;
}

}  // namespace nfc
