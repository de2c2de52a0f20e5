#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "nfc/correlation.hpp"
#include "nfc/estimators.hpp"
#include "nfc/field_synthesis.hpp"

using namespace nfc;

namespace {

ScattererCluster facing_cluster(const Vec3 &center, double radius, double a = 0.0)
{
    ScattererCluster c;
    c.center = center;
    c.normal = -center.normalized();
    c.radius = radius;
    c.concentration = a;
    c.power = 16.0 * M_PI * M_PI * center.squaredNorm();
    return c;
}

CMatrix scene_matrix(const ArrayGeometry &array, const Wave &w)
{
    CorrelationKernel k{{facing_cluster(Vec3(30, 20, 10), 3.0),
                         facing_cluster(Vec3(40, -30, 25), 4.0, 1.0)},
                        w};
    CMatrix R = assemble_matrix(k, array, CorrMode::analytic).values;
    return R * (static_cast<double>(array.size()) / R.trace().real());
}

CMatrix random_psd(int n, std::mt19937_64 &rng)
{
    std::normal_distribution<double> nd;
    CMatrix G(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            G(i, j) = cdouble(nd(rng), nd(rng));
    return G * G.adjoint() / static_cast<double>(n);
}

}  // namespace

TEST_CASE("nmse definition")
{
    CVector h(3);
    h << cdouble(1, 2), cdouble(-1, 0), cdouble(0, 0.5);
    CHECK(nmse(h, h) == 0.0);
    CHECK(nmse(CVector::Zero(3), h) == doctest::Approx(1.0));
    CHECK(nmse(2.0 * h, h) == doctest::Approx(1.0));
    CHECK_THROWS_AS(nmse(h, CVector::Zero(3)), std::invalid_argument);
    CHECK_THROWS_AS(nmse(h, CVector::Zero(2)), std::invalid_argument);
}

TEST_CASE("least squares")
{
    CVector h = CVector::Constant(4, cdouble(0.5, -1.0));
    Observation clean{std::sqrt(10.0) * h, 10.0, h};
    const auto r = estimate_ls(clean);
    CHECK((r.estimate - h).norm() < 1e-14);
    CHECK(r.nmse < 1e-28);

    Observation zero{CVector::Ones(4), 2.0, CVector::Zero(4)};
    const auto z = estimate_ls(zero);
    CHECK(z.zero_truth);
    CHECK(std::isnan(z.nmse));

    // E||h_ls - h||^2 = dim / P
    std::mt19937_64 rng(1);
    double acc = 0.0;
    const int trials = 10000;
    const CVector h0 = CVector::Zero(16);
    for (int t = 0; t < trials; ++t) {
        const auto obs = make_observation(h0, 4.0, rng);
        acc += (estimate_ls(obs).estimate - h0).squaredNorm();
    }
    CHECK(acc / trials == doctest::Approx(16.0 / 4.0).epsilon(0.05));
}

TEST_CASE("codebook atoms")
{
    const Wave w{0.05};
    const ArrayGeometry array{16, 16, 0.025, 0.025};
    const auto rings = default_distance_rings(array, w, 4);
    REQUIRE(rings.size() == 4);
    CHECK(rings.front() == doctest::Approx(2.0 * array.half_extent()));
    const double aperture = 2.0 * array.half_extent();
    CHECK(rings.back() == doctest::Approx(2.0 * aperture * aperture / w.wavelength));

    const auto cb = build_codebook(array, w, 16, 16, rings);
    CHECK(cb.W.cols() == static_cast<Eigen::Index>(cb.atoms.size()));
    for (Eigen::Index c = 0; c < cb.W.cols(); ++c)
        CHECK(std::abs(cb.W.col(c).norm() - 1.0) < 1e-10);

    const CMatrix G = cb.W.adjoint() * cb.W;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < G.rows(); ++i)
        for (Eigen::Index j = 0; j < G.cols(); ++j)
            if (i != j)
                worst = std::max(worst, std::abs(G(i, j)));
    CHECK(worst < 1.0 - 1e-6);

    // a very far ring approaches the planar atom
    const ArrayGeometry small{8, 8, 0.025, 0.025};
    const auto far = build_codebook(small, w, 4, 4, {1e6});
    const auto plane = build_codebook(small, w, 4, 4, {std::numeric_limits<double>::infinity()});
    REQUIRE(far.W.cols() == plane.W.cols());
    for (Eigen::Index c = 0; c < far.W.cols(); ++c)
        for (Eigen::Index i = 0; i < far.W.rows(); ++i)
            CHECK(std::abs(std::arg(far.W(i, c) / plane.W(i, c))) < 1e-3);

    CHECK_THROWS_AS(build_codebook(array, w, 0, 4, rings), std::invalid_argument);
    CHECK_THROWS_AS(build_codebook(array, w, 4, 4, {}), std::invalid_argument);
}

TEST_CASE("OMP recovers sparse combinations exactly")
{
    const Wave w{0.05};
    const ArrayGeometry array{8, 8, 0.025, 0.025};
    const auto cb = build_codebook(array, w, 8, 8, default_distance_rings(array, w, 2));

    const std::size_t atom = 17;
    Observation one{cb.W.col(atom), 1.0, cb.W.col(atom)};
    const auto r1 = estimate_omp(one, cb, 1);
    REQUIRE(r1.support.size() == 1);
    CHECK(r1.support[0] == atom);
    CHECK(r1.nmse < 1e-20);

    // pick supports with pairwise coherence below 0.3
    const CMatrix G = cb.W.adjoint() * cb.W;
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<Eigen::Index> pick(0, cb.W.cols() - 1);
    std::normal_distribution<double> nd;
    int tested = 0;
    while (tested < 20) {
        std::vector<Eigen::Index> s{pick(rng), pick(rng), pick(rng)};
        bool ok = s[0] != s[1] && s[1] != s[2] && s[0] != s[2];
        for (int a = 0; a < 3 && ok; ++a)
            for (int b = a + 1; b < 3; ++b)
                ok = ok && std::abs(G(s[a], s[b])) < 0.3;
        if (!ok)
            continue;
        ++tested;
        CVector h = CVector::Zero(64);
        for (auto i : s)
            h += cdouble(1.0 + std::abs(nd(rng)), nd(rng)) * cb.W.col(i);
        Observation obs{2.0 * h, 4.0, h};
        const auto r = estimate_omp(obs, cb, 3);
        std::vector<std::size_t> want(s.begin(), s.end()), got = r.support;
        std::sort(want.begin(), want.end());
        std::sort(got.begin(), got.end());
        CHECK(got == want);
        CHECK(r.nmse < 1e-20);
    }

    CHECK_THROWS_AS(estimate_omp(one, cb, 0), std::invalid_argument);
    CHECK_THROWS_AS(estimate_omp(one, cb, cb.atoms.size() + 1), std::invalid_argument);
}

TEST_CASE("subspace estimators")
{
    const Wave w{0.2};
    const ArrayGeometry array{9, 9, 0.025, 0.025};
    const SubspaceModel model(array, w);
    CHECK(model.rank() > 0);
    CHECK(model.rank() < 81);
    const CMatrix &iso = model.isotropic();
    CHECK(iso(0, 0).real() == doctest::Approx(1.0));
    CHECK(hermitian_defect(iso) < 1e-15);

    // a vector inside the kept subspace is reproduced by the projector
    std::mt19937_64 rng(5);
    const CVector h = model.estimate(ChannelSampler(iso).draw(rng), 1.0, false);
    Observation clean{3.0 * h, 9.0, h};
    const auto plain = estimate_subspace(clean, model, false);
    CHECK(plain.nmse < 1e-8);

    // weighted tends to the projector at high SNR
    const SubspaceModel coarse(array, w, 1e-2);
    const CVector y = complex_normal(rng, 81);
    const CVector a = coarse.estimate(y, 1e6, true);
    const CVector b = coarse.estimate(y, 1e6, false);
    CHECK((a - b).norm() / b.norm() < 1e-3);

    // weighted beats plain on a correlated scene at 10 dB
    const CMatrix R = scene_matrix(array, w);
    const ChannelSampler s(R);
    double ew = 0.0, ep = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const CVector ht = s.draw(rng);
        const auto obs = make_observation(ht, 10.0, rng);
        ew += estimate_subspace(obs, model, true).nmse;
        ep += estimate_subspace(obs, model, false).nmse;
    }
    CHECK(ew <= ep);
}

TEST_CASE("MMSE filter with the true prior beats the alternatives")
{
    const Wave w{0.2};
    const ArrayGeometry array{7, 7, 0.025, 0.025};
    const CMatrix R = scene_matrix(array, w);
    const SubspaceModel model(array, w);
    const ChannelSampler s(R);
    std::mt19937_64 rng(9);
    double e_mmse = 0, e_ls = 0, e_sub = 0, e_nfs = 0;
    for (int t = 0; t < 1000; ++t) {
        const CVector h = s.draw(rng);
        const auto obs = make_observation(h, std::pow(10.0, 0.5), rng);
        e_mmse += estimate_mmse(obs, R).nmse;
        e_ls += estimate_ls(obs).nmse;
        e_sub += estimate_subspace(obs, model, true).nmse;
        e_nfs += estimate_nfs(obs, array, w, NfsOptions{}, model).nmse;
    }
    CHECK(e_mmse <= e_ls);
    CHECK(e_mmse <= e_sub);
    CHECK(e_mmse <= e_nfs);
}

TEST_CASE("NFS falls back when no peak is found")
{
    const Wave w{0.2};
    const ArrayGeometry array{7, 7, 0.025, 0.025};
    const SubspaceModel model(array, w);
    Observation obs{CVector::Zero(49), 10.0, std::nullopt};
    NfsOptions opts;
    const auto r = estimate_nfs(obs, array, w, opts, model);
    CHECK(r.flagged);
    CHECK(r.n_peaks == 0);
    CHECK(r.estimate.norm() == 0.0);
}

TEST_CASE("NFS prior is Hermitian with the requested trace")
{
    const Wave w{0.2};
    const ArrayGeometry array{9, 9, 0.025, 0.025};
    const CMatrix R = scene_matrix(array, w);
    std::mt19937_64 rng(4);
    const CVector h = ChannelSampler(R).draw(rng);
    const auto obs = make_observation(h, 100.0, rng);
    std::size_t peaks = 0;
    const SubspaceModel model(array, w);
    const CMatrix prior = nfs_prior(obs.y, 100.0, array, w, NfsOptions{}, model.isotropic(), peaks);
    REQUIRE(peaks >= 1);
    CHECK(hermitian_defect(prior) < 1e-12);
    CHECK(psd_margin(prior) > -1e-10);
    const double target = std::max((obs.y.squaredNorm() - 81.0) / 100.0,
                                   1e-3 * obs.y.squaredNorm() / 100.0);
    CHECK(prior.trace().real() == doctest::Approx(target).epsilon(1e-10));
    const auto rep = estimate_nfs(obs, array, w, NfsOptions{}, model);
    CHECK(rep.prior_hash == matrix_hash(prior));
    CHECK_FALSE(rep.flagged);
}

TEST_CASE("analytic MSE limits and dominance")
{
    std::mt19937_64 rng(3);
    const CMatrix R = random_psd(12, rng);
    const double tr = R.trace().real();
    for (int t = 0; t < 10; ++t) {
        const CMatrix Rh = R + 0.3 * random_psd(12, rng);
        CHECK(std::abs(analytic_mse(R, Rh, 1e-6) - tr) / tr < 1e-3);
        CHECK(analytic_mse(R, Rh, 1e6) / tr < 1e-3);
        for (double P : {1.0, 10.0, 100.0})
            CHECK(analytic_mse(R, Rh, P) >= analytic_mse(R, R, P) * (1.0 - 1e-12));
    }
    bool reg = false;
    CMatrix singular = CMatrix::Zero(12, 12);
    singular(0, 0) = 1.0;
    const double v = analytic_mse(R, singular, 5.0, &reg);
    CHECK(std::isfinite(v));
    CHECK_THROWS_AS(analytic_mse(R, CMatrix::Identity(3, 3), 1.0), std::invalid_argument);
}

TEST_CASE("analytic MSE matches Monte Carlo of the filter")
{
    const Wave w{0.2};
    const ArrayGeometry array{4, 4, 0.025, 0.025};
    const CMatrix R = scene_matrix(array, w);
    std::mt19937_64 rng(17);
    const CMatrix Rh = R + 0.2 * random_psd(16, rng);
    const double P = 10.0;
    const ChannelSampler s(R);
    double acc = 0.0;
    const int trials = 20000;
    for (int t = 0; t < trials; ++t) {
        const CVector h = s.draw(rng);
        const auto obs = make_observation(h, P, rng);
        acc += (mmse_filter(Rh, obs.y, P) - h).squaredNorm();
    }
    CHECK(acc / trials == doctest::Approx(analytic_mse(R, Rh, P)).epsilon(0.03));
}
