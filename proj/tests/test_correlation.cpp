#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "nfc/correlation.hpp"
#include "nfc/geometry.hpp"

using namespace nfc;

namespace {

ScattererCluster oblique_cluster(double d, double radius, double a)
{
    ScattererCluster c;
    c.center = Vec3(1, 1, 1).normalized() * d;
    c.normal = Vec3(-1, 1, -1).normalized();
    c.radius = radius;
    c.concentration = a;
    c.power = 1.0;
    return c;
}

}  // namespace

TEST_CASE("closed form matches frozen reference value")
{
    const auto c = oblique_cluster(100.0, 2.0, 0.5);
    const Wave w{0.05};
    const cdouble v = corr_analytic(Vec3(0, 0.4, -0.3), Vec3(0, -0.2, 0.5), c, w);
    CHECK(v.real() == doctest::Approx(-1.7468173860611325e-07).epsilon(1e-9));
    CHECK(v.imag() == doctest::Approx(4.5760720579074407e-07).epsilon(1e-9));
}

TEST_CASE("closed-form diagonal identity")
{
    const Wave w{0.05};
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double a : {-0.5, 0.0, 2.0}) {
        auto c = oblique_cluster(80.0, 1.5, a);
        c.power = 3.0;
        for (int i = 0; i < 20; ++i) {
            const Vec3 r(0, u(rng), u(rng));
            const double want = c.power / (16.0 * M_PI * M_PI * c.center.squaredNorm() *
                                           factor_A(r, c));
            const cdouble got = corr_analytic(r, r, c, w);
            CHECK(got.real() == doctest::Approx(want).epsilon(1e-14));
            CHECK(got.imag() == 0.0);
        }
    }
}

TEST_CASE("closed form is conjugate symmetric")
{
    const Wave w{0.05};
    const auto c = oblique_cluster(60.0, 2.0, 1.0);
    const Vec3 r1(0, 0.3, 0.1), r2(0, -0.25, 0.45);
    const cdouble a = corr_analytic(r1, r2, c, w);
    const cdouble b = corr_analytic(r2, r1, c, w);
    CHECK(std::abs(a - std::conj(b)) < 1e-15 * std::abs(a) + 1e-300);
}

TEST_CASE("oracle quadrature agrees with the closed form far from the disk")
{
    const Wave w{0.05};
    for (double a : {0.0, 1.0}) {
        const auto c = oblique_cluster(200.0, 1.0, a);
        const Vec3 r1(0, 0.1, -0.05), r2(0, -0.12, 0.2);
        const cdouble an = corr_analytic(r1, r2, c, w);
        const cdouble orc = corr_oracle(r1, r2, c, w, 1e-8);
        CHECK(std::abs(an - orc) < 0.01 * std::abs(orc));
        const cdouble dn = corr_analytic(r1, r1, c, w);
        const cdouble dor = corr_oracle(r1, r1, c, w, 1e-8);
        CHECK(std::abs(dn - dor) < 0.01 * std::abs(dor));
        CHECK(std::abs(dor.imag()) < 1e-10 * dor.real());
    }
}

TEST_CASE("oracle of a zero-power cluster is zero")
{
    auto c = oblique_cluster(50.0, 1.0, 0.0);
    c.power = 0.0;
    CHECK(corr_oracle(Vec3::Zero(), Vec3(0, 0.1, 0), c, Wave{0.05}, 1e-8) == cdouble(0.0));
}

TEST_CASE("analytic regime flag")
{
    CHECK(analytic_regime_ok(oblique_cluster(100.0, 5.0, 0.0)));
    CHECK_FALSE(analytic_regime_ok(oblique_cluster(100.0, 20.0, 0.0)));
}

TEST_CASE("assembled matrices are Hermitian and PSD")
{
    CorrelationKernel kernel;
    kernel.wave = Wave{0.05};
    kernel.clusters = {oblique_cluster(40.0, 1.0, 0.0), oblique_cluster(90.0, 3.0, 2.0)};
    kernel.clusters[1].center = Vec3(30.0, -50.0, 70.0);
    kernel.clusters[1].normal = -kernel.clusters[1].center.normalized();
    const ArrayGeometry array{6, 5, 0.025, 0.025};
    const auto R = assemble_matrix(kernel, array, CorrMode::analytic);
    CHECK(R.dim() == 30);
    CHECK(R.provenance == Provenance::analytic);
    CHECK(hermitian_defect(R.values) < 1e-14);
    CHECK(psd_margin(R.values) > -1e-10);

    // entries agree with corr_multi, which sums the per-cluster closed form
    const auto pts = element_positions(array);
    for (std::size_t i : {0u, 7u, 29u})
        for (std::size_t j : {3u, 12u}) {
            const cdouble want = corr_multi(pts[i], pts[j], kernel);
            CHECK(std::abs(R.values(i, j) - want) < 1e-12 * std::abs(want));
        }

    const ArrayGeometry small{3, 3, 0.025, 0.025};
    const auto Ro = assemble_matrix(kernel, small, CorrMode::oracle, 1e-8);
    CHECK(Ro.provenance == Provenance::oracle);
    CHECK(hermitian_defect(Ro.values) < 1e-8);
    CHECK(psd_margin(Ro.values) > -1e-8);
    const auto Ra = assemble_matrix(kernel, small, CorrMode::analytic);
    CHECK(relative_error(Ra, Ro) < 1e-2);
}

TEST_CASE("matrix diagnostics")
{
    CMatrix I = CMatrix::Identity(4, 4);
    CHECK(relative_error(I, I) == 0.0);
    CHECK(relative_error(CMatrix::Zero(4, 4), I) == doctest::Approx(1.0));
    CHECK(hermitian_defect(I) == 0.0);
    CHECK(psd_margin(I) == doctest::Approx(1.0));
    CMatrix N = I;
    N(0, 1) = cdouble(0.0, 1.0);
    CHECK(hermitian_defect(N) > 0.1);
}

TEST_CASE("provenance round trip")
{
    for (auto p : {Provenance::analytic, Provenance::oracle, Provenance::imported,
                   Provenance::reconstructed})
        CHECK(provenance_from_string(to_string(p)) == p);
    CHECK_THROWS_AS(provenance_from_string("bogus"), std::invalid_argument);
}
