#include "nfc/fitting.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "nfc/matrix_io.hpp"
#include "nfc/wavenumber.hpp"

namespace nfc {

namespace {

constexpr double kPi = std::numbers::pi;

Vec3 from_angles(double az, double el)
{
    return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}

double received_scale(double d) { return 16.0 * kPi * kPi * d * d; }

}  // namespace

FitProblem make_fit_problem(const CorrelationMatrix &target, const ArrayGeometry &array,
                            const Wave &wave, std::size_t n_clusters)
{
    array.validate();
    wave.validate();
    if (n_clusters == 0)
        throw std::invalid_argument("fit problem needs at least one cluster");
    if (target.dim() != array.size())
        throw std::invalid_argument("fit target does not match the array size");
    FitProblem p;
    p.target = target;
    p.array = array;
    p.wave = wave;
    p.n_clusters = n_clusters;
    p.points = element_positions(array);
    p.target_norm2 = target.values.squaredNorm();
    if (!(p.target_norm2 > 0.0))
        throw std::invalid_argument("fit target is zero");
    const double diag = target.values.diagonal().real().mean();
    p.power_scale = diag > 0.0 ? diag : 1.0;

    const double dmin = std::max(4.0 * array.half_extent(), wave.wavelength);
    RVector lo(kParamsPerCluster), hi(kParamsPerCluster);
    lo << std::log(dmin), -2.0 * kPi, -kPi / 2.0, -2.0 * kPi, -kPi / 2.0, std::log(1e-3), -0.9, 0.0;
    hi << std::log(1e5), 2.0 * kPi, kPi / 2.0, 2.0 * kPi, kPi / 2.0, std::log(1e3), 50.0, 100.0;
    const auto n = static_cast<Eigen::Index>(n_clusters * kParamsPerCluster);
    p.lower.resize(n);
    p.upper.resize(n);
    for (std::size_t c = 0; c < n_clusters; ++c) {
        p.lower.segment(static_cast<Eigen::Index>(c * kParamsPerCluster), kParamsPerCluster) = lo;
        p.upper.segment(static_cast<Eigen::Index>(c * kParamsPerCluster), kParamsPerCluster) = hi;
    }
    return p;
}

RVector encode_clusters(const std::vector<ScattererCluster> &clusters, const FitProblem &problem)
{
    if (clusters.size() != problem.n_clusters)
        throw std::invalid_argument("encode_clusters: cluster count mismatch");
    RVector x(static_cast<Eigen::Index>(clusters.size() * kParamsPerCluster));
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        const auto &cl = clusters[c];
        const double d = cl.distance();
        const Vec3 u = cl.center / d;
        const Vec3 nrm = cl.normal.normalized();
        auto seg = x.segment(static_cast<Eigen::Index>(c * kParamsPerCluster), kParamsPerCluster);
        seg << std::log(d), std::atan2(u.y(), u.x()), std::asin(std::clamp(u.z(), -1.0, 1.0)),
            std::atan2(nrm.y(), nrm.x()), std::asin(std::clamp(nrm.z(), -1.0, 1.0)),
            std::log(cl.radius), cl.concentration,
            cl.power / received_scale(d) / problem.power_scale;
    }
    return x;
}

std::vector<ScattererCluster> decode_clusters(const RVector &x, const FitProblem &problem)
{
    if (static_cast<std::size_t>(x.size()) != problem.n_clusters * kParamsPerCluster)
        throw std::invalid_argument("decode_clusters: parameter vector has the wrong length");
    if (!x.allFinite())
        throw std::invalid_argument("decode_clusters: parameters must be finite");
    std::vector<ScattererCluster> out(problem.n_clusters);
    for (std::size_t c = 0; c < problem.n_clusters; ++c) {
        const auto s = x.segment(static_cast<Eigen::Index>(c * kParamsPerCluster), kParamsPerCluster);
        auto &cl = out[c];
        const double d = std::exp(s[0]);
        cl.center = d * from_angles(s[1], s[2]);
        cl.normal = from_angles(s[3], s[4]).normalized();
        cl.radius = std::exp(s[5]);
        cl.concentration = s[6];
        cl.power = s[7] * problem.power_scale * received_scale(d);
    }
    return out;
}

CMatrix model_matrix(const RVector &x, const FitProblem &problem)
{
    const auto n = static_cast<Eigen::Index>(problem.points.size());
    CMatrix R = CMatrix::Zero(n, n);
    for (const auto &cl : decode_clusters(x, problem))
        accumulate_analytic(R, problem.points, cl, problem.wave);
    return R;
}

double fit_loss(const RVector &x, const FitProblem &problem)
{
    return (model_matrix(x, problem) - problem.target.values).squaredNorm() / problem.target_norm2;
}

RVector project_to_bounds(const RVector &x, const RVector &lower, const RVector &upper)
{
    return x.cwiseMax(lower).cwiseMin(upper);
}

RVector finite_difference_gradient(const Objective &f, const RVector &x, const RVector &lower,
                                   const RVector &upper, double rel_step)
{
    const Eigen::Index n = x.size();
    RVector g(n);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 1)
    for (Eigen::Index i = 0; i < n; ++i) {
        try {
            const double h = rel_step * (1.0 + std::abs(x[i]));
            RVector xp = x, xm = x;
            xp[i] = std::min(x[i] + h, upper[i]);
            xm[i] = std::max(x[i] - h, lower[i]);
            const double span = xp[i] - xm[i];
            g[i] = span > 0.0 ? (f(xp) - f(xm)) / span : 0.0;
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (const auto &e : errors)
        if (e)
            std::rethrow_exception(e);
    return g;
}

FitResult quasi_newton_minimize(const Objective &f, const RVector &x0, const RVector &lower,
                                const RVector &upper, const QuasiNewtonOptions &opts)
{
    if (x0.size() != lower.size() || x0.size() != upper.size())
        throw std::invalid_argument("quasi_newton_minimize: bound sizes do not match");
    if (!x0.allFinite())
        throw std::invalid_argument("quasi_newton_minimize: initial point must be finite");
    const Eigen::Index n = x0.size();
    const RMatrix I = RMatrix::Identity(n, n);

    RVector x = project_to_bounds(x0, lower, upper);
    double fx = f(x);
    RVector g = finite_difference_gradient(f, x, lower, upper, opts.fd_step);
    RMatrix H = I;
    bool h_is_identity = true;

    FitResult res;
    res.trace.iterates.push_back({x, fx, g.norm(), 0.0, false});

    for (int it = 0; it < opts.max_iter; ++it) {
        if (fx <= opts.loss_tol) {
            res.trace.converged = true;
            res.trace.stop_reason = "loss below tolerance";
            break;
        }
        const double pg = (x - project_to_bounds(x - g, lower, upper)).norm();
        if (pg <= opts.grad_tol) {
            res.trace.converged = true;
            res.trace.stop_reason = "gradient below tolerance";
            break;
        }

        bool accepted = false;
        RVector xn, s;
        double fn = fx, alpha = 0.0;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            RVector dir = -(H * g);
            if (!(g.dot(dir) < 0.0)) {
                H = I;
                h_is_identity = true;
                dir = -g;
            }
            const double dn = dir.norm();
            alpha = dn > opts.max_step_norm ? opts.max_step_norm / dn : 1.0;
            for (int bt = 0; bt < opts.max_backtracks; ++bt, alpha *= 0.5) {
                xn = project_to_bounds(x + alpha * dir, lower, upper);
                s = xn - x;
                if (s.norm() == 0.0)
                    break;
                fn = f(xn);
                if (std::isfinite(fn) && fn < fx && fn <= fx + opts.armijo_c1 * g.dot(s)) {
                    accepted = true;
                    break;
                }
            }
            if (!accepted && !h_is_identity) {
                H = I;
                h_is_identity = true;
            } else {
                break;
            }
        }
        if (!accepted) {
            res.trace.stop_reason = "line search failed";
            break;
        }

        const RVector gn = finite_difference_gradient(f, xn, lower, upper, opts.fd_step);
        const RVector q = gn - g;
        const double qs = q.dot(s);
        bool skipped = false;
        if (qs > 1e-12 * q.norm() * s.norm()) {
            const double rho = 1.0 / qs;
            const RMatrix V = I - rho * q * s.transpose();
            if (opts.literal_update)
                H = V * H * V.transpose() + rho * s * s.transpose();
            else
                H = V.transpose() * H * V + rho * s * s.transpose();
            H = 0.5 * (H + H.transpose());
            h_is_identity = false;
        } else {
            skipped = true;
        }
        x = xn;
        fx = fn;
        g = gn;
        res.trace.iterates.push_back({x, fx, g.norm(), alpha, skipped});
    }
    if (res.trace.stop_reason.empty())
        res.trace.stop_reason = "iteration limit";
    res.x = x;
    res.loss = fx;
    return res;
}

FitResult quasi_newton_fit(const FitProblem &problem, const RVector &x0,
                           const QuasiNewtonOptions &opts)
{
    const Objective f = [&problem](const RVector &x) { return fit_loss(x, problem); };
    return quasi_newton_minimize(f, x0, problem.lower, problem.upper, opts);
}

RVector initial_guess(const FitProblem &problem, const InitOptions &opts)
{
    SpectrumGrid grid = expected_spectrum(problem.target.values, problem.array, problem.wave);
    grid.values = grid.values.cwiseSqrt();
    auto peaks = detect_peaks(grid, opts.eta);
    if (peaks.empty()) {
        Eigen::Index bi = 0, bj = 0;
        grid.values.maxCoeff(&bi, &bj);
        Peak p;
        p.i = static_cast<std::size_t>(bi);
        p.j = static_cast<std::size_t>(bj);
        p.k_y = grid.k_y[bi];
        p.k_z = grid.k_z[bj];
        p.value = grid.values(bi, bj);
        peaks.push_back(p);
    }
    std::sort(peaks.begin(), peaks.end(),
              [](const Peak &a, const Peak &b) { return a.value > b.value; });

    const std::size_t used = std::min(peaks.size(), problem.n_clusters);
    double total = 0.0;
    for (std::size_t i = 0; i < used; ++i)
        total += peaks[i].value * peaks[i].value;

    std::vector<ScattererCluster> clusters(problem.n_clusters);
    const double d = std::clamp(opts.distance, std::exp(problem.lower[0]), std::exp(problem.upper[0]));
    for (std::size_t c = 0; c < problem.n_clusters; ++c) {
        const Peak &pk = peaks[c % used];
        Vec3 u = direction_from_cosines(pk.k_y, pk.k_z);
        if (c >= used) {
            // Spread duplicates slightly so the clusters can separate.
            const double shift = 0.02 * static_cast<double>(c - used + 1);
            u = direction_from_cosines(std::clamp(pk.k_y + shift, -0.99, 0.99), pk.k_z);
        }
        auto &cl = clusters[c];
        cl.center = d * u;
        cl.normal = -u;
        cl.radius = opts.radius_ratio * d;
        cl.concentration = opts.concentration;
        const double share = c < used ? pk.value * pk.value / total : 0.1 / static_cast<double>(problem.n_clusters);
        cl.power = share * problem.power_scale * received_scale(d);
    }
    return project_to_bounds(encode_clusters(clusters, problem), problem.lower, problem.upper);
}

CorrelationMatrix ray_cluster_target(const std::vector<Ray> &rays, const ArrayGeometry &array,
                                     const Wave &wave)
{
    array.validate();
    wave.validate();
    if (rays.empty())
        throw std::invalid_argument("ray_cluster_target: ray list is empty");
    const auto pts = element_positions(array);
    const auto n = static_cast<Eigen::Index>(pts.size());
    const auto m = static_cast<Eigen::Index>(rays.size());
    const double k = wave.wavenumber();
    CMatrix A(n, m);
    RVector p(m);
    for (Eigen::Index r = 0; r < m; ++r) {
        const Ray &ray = rays[static_cast<std::size_t>(r)];
        if (!(ray.power >= 0.0))
            throw std::invalid_argument("ray_cluster_target: ray powers must be non-negative");
        p[r] = ray.power;
        const Vec3 u = from_angles(ray.azimuth, ray.elevation);
        for (Eigen::Index i = 0; i < n; ++i)
            A(i, r) = std::exp(cdouble(0.0, -k * u.dot(pts[static_cast<std::size_t>(i)])));
    }
    CorrelationMatrix out;
    out.values = A * p.asDiagonal() * A.adjoint();
    out.values = 0.5 * (out.values + out.values.adjoint()).eval();
    out.provenance = Provenance::imported;
    return out;
}

std::vector<Ray> synthetic_ray_table(std::uint64_t seed, const RayTableOptions &opts)
{
    if (opts.n_clusters == 0 || opts.rays_per_cluster == 0)
        throw std::invalid_argument("synthetic_ray_table: need at least one cluster and ray");
    // Offsets of the 20-ray intra-cluster layout, in units of the cluster spread.
    static constexpr std::array<double, 10> base = {0.0447, 0.1413, 0.2492, 0.3715, 0.5129,
                                                    0.6797, 0.8844, 1.1481, 1.5195, 2.1551};
    std::vector<double> offsets;
    for (std::size_t m = 0; m < opts.rays_per_cluster; ++m) {
        const double v = base[(m / 2) % base.size()];
        offsets.push_back(m % 2 == 0 ? v : -v);
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double deg = kPi / 180.0;
    std::vector<Ray> rays;
    double total = 0.0;
    for (std::size_t c = 0; c < opts.n_clusters; ++c) {
        const double az = unit(rng) * opts.azimuth_range_deg * deg;
        const double el = unit(rng) * opts.elevation_range_deg * deg;
        const double pc = std::exp(-opts.decay * static_cast<double>(c));
        std::vector<double> el_off = offsets;
        std::shuffle(el_off.begin(), el_off.end(), rng);
        for (std::size_t m = 0; m < opts.rays_per_cluster; ++m) {
            rays.push_back({pc / static_cast<double>(opts.rays_per_cluster),
                            az + offsets[m] * opts.azimuth_spread_deg * deg,
                            el + el_off[m] * opts.elevation_spread_deg * deg});
            total += rays.back().power;
        }
    }
    for (auto &r : rays)
        r.power /= total;
    return rays;
}

std::vector<Ray> read_ray_table(std::istream &is)
{
    std::vector<Ray> rays;
    std::string line;
    const double deg = kPi / 180.0;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::stringstream ss(line);
        std::string a, b, c;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c))
            throw std::invalid_argument("ray table rows need power,azimuth_deg,elevation_deg");
        double p = 0.0;
        try {
            p = io::parse_double(a);
        } catch (const std::invalid_argument &) {
            if (rays.empty())
                continue;  // header row
            throw;
        }
        if (!(p >= 0.0))
            throw std::invalid_argument("ray table powers must be non-negative");
        rays.push_back({p, io::parse_double(b) * deg, io::parse_double(c) * deg});
    }
    if (rays.empty())
        throw std::invalid_argument("ray table is empty");
    return rays;
}

void write_fit_trace_csv(std::ostream &os, const FitTrace &trace)
{
    os << "# format_version=" << io::kFormatVersion << "\n";
    os << "iteration,loss,grad_norm,step,curvature_skipped\n";
    for (std::size_t i = 0; i < trace.iterates.size(); ++i) {
        const auto &it = trace.iterates[i];
        os << i << ',' << io::format_double(it.loss) << ',' << io::format_double(it.grad_norm)
           << ',' << io::format_double(it.step) << ',' << (it.curvature_skipped ? 1 : 0) << "\n";
    }
}

}  // namespace nfc
