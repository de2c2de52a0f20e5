#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "nfc/correlation.hpp"
#include "nfc/geometry.hpp"
#include "nfc/linalg.hpp"

namespace nfc {

// Per-cluster parameter layout:
// [ln d, azimuth, elevation, normal azimuth, normal elevation, ln r_s, a, p]
// where p is the received power beta / (16 pi^2 d^2) in units of the mean
// target diagonal.
inline constexpr std::size_t kParamsPerCluster = 8;

struct FitProblem {
    CorrelationMatrix target;
    ArrayGeometry array;
    Wave wave;
    std::size_t n_clusters = 1;
    double power_scale = 1.0;
    RVector lower;
    RVector upper;
    std::vector<Vec3> points;
    double target_norm2 = 1.0;
};

FitProblem make_fit_problem(const CorrelationMatrix &target, const ArrayGeometry &array,
                            const Wave &wave, std::size_t n_clusters);

RVector encode_clusters(const std::vector<ScattererCluster> &clusters, const FitProblem &problem);
std::vector<ScattererCluster> decode_clusters(const RVector &x, const FitProblem &problem);

CMatrix model_matrix(const RVector &x, const FitProblem &problem);

// ||R(x) - target||_F^2 / ||target||_F^2
double fit_loss(const RVector &x, const FitProblem &problem);

RVector project_to_bounds(const RVector &x, const RVector &lower, const RVector &upper);

using Objective = std::function<double(const RVector &)>;

// Central differences with step rel_step * (1 + |x_i|), clipped to the bounds.
RVector finite_difference_gradient(const Objective &f, const RVector &x, const RVector &lower,
                                   const RVector &upper, double rel_step = 1e-5);

struct QuasiNewtonOptions {
    int max_iter = 200;
    double loss_tol = 1e-10;
    double grad_tol = 1e-10;
    double armijo_c1 = 1e-4;
    int max_backtracks = 40;
    double fd_step = 1e-5;
    // Cap on the parameter-space length of the first trial step of each line search.
    double max_step_norm = 0.2;
    // Use V H V^T instead of V^T H V in the inverse-Hessian recursion.
    bool literal_update = false;
};

struct FitIterate {
    RVector x;
    double loss = 0.0;
    double grad_norm = 0.0;
    double step = 0.0;
    bool curvature_skipped = false;
};

struct FitTrace {
    std::vector<FitIterate> iterates;
    bool converged = false;
    std::string stop_reason;
};

struct FitResult {
    RVector x;
    double loss = 0.0;
    FitTrace trace;
};

// Projected quasi-Newton with Armijo backtracking. iterates[0] is the start point.
FitResult quasi_newton_minimize(const Objective &f, const RVector &x0, const RVector &lower,
                                const RVector &upper, const QuasiNewtonOptions &opts = {});

FitResult quasi_newton_fit(const FitProblem &problem, const RVector &x0,
                           const QuasiNewtonOptions &opts = {});

struct InitOptions {
    double distance = 50.0;
    double radius_ratio = 0.05;
    double concentration = 0.0;
    double eta = 1.0;
};

// Starting point from the strongest peaks of the target's expected spectrum.
RVector initial_guess(const FitProblem &problem, const InitOptions &opts = {});

struct Ray {
    double power = 0.0;
    double azimuth = 0.0;    // radians
    double elevation = 0.0;  // radians
};

// sum_rays power * exp(-j k u_ray . (r1 - r2))
CorrelationMatrix ray_cluster_target(const std::vector<Ray> &rays, const ArrayGeometry &array,
                                     const Wave &wave);

struct RayTableOptions {
    std::size_t n_clusters = 23;
    std::size_t rays_per_cluster = 20;
    double decay = 1.0;            // cluster power ~ exp(-decay * index)
    double azimuth_spread_deg = 3.0;
    double elevation_spread_deg = 3.0;
    double azimuth_range_deg = 60.0;
    double elevation_range_deg = 30.0;
};

std::vector<Ray> synthetic_ray_table(std::uint64_t seed, const RayTableOptions &opts = {});

// CSV rows "power,azimuth_deg,elevation_deg"; a header row is skipped.
std::vector<Ray> read_ray_table(std::istream &is);
void write_fit_trace_csv(std::ostream &os, const FitTrace &trace);

}  // namespace nfc
