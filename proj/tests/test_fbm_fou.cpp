#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "simlab/fbm.hpp"
#include "simlab/fou.hpp"
#include "simlab/stats.hpp"

using namespace simlab;

namespace {

ModelParams standard_params() {
    ModelParams p;  // beta 2.5, theta 1, alpha 2, b = a = 2, d = 1
    return validate_params(p);
}

}  // namespace

TEST_CASE("fBm covariance: point values, increments, self-similarity, guards") {
    for (double H : {0.55, 0.75, 0.95}) REQUIRE(fbm_cov(1.0, 1.0, H) == 1.0);
    REQUIRE_THAT(fbm_cov(1.0, 2.0, 0.75), Catch::Matchers::WithinAbs(std::sqrt(2.0), 1e-12));

    // stationary increments: E|B(t)-B(s)|^2 = |t-s|^{2H}
    for (double H : {0.6, 0.75, 0.9})
        for (double s : {0.3, 1.0, 2.7})
            for (double t : {0.5, 1.9}) {
                const double inc =
                    fbm_cov(t, t, H) - 2.0 * fbm_cov(s, t, H) + fbm_cov(s, s, H);
                REQUIRE_THAT(inc, Catch::Matchers::WithinAbs(std::pow(std::fabs(t - s), 2.0 * H),
                                                             1e-12));
            }

    // H-self-similarity on scaled triples
    for (double c : {0.37, 2.25})
        for (double s : {0.4, 1.3})
            for (double t : {0.8, 2.6}) {
                const double H = 0.75;
                REQUIRE_THAT(fbm_cov(c * s, c * t, H),
                             Catch::Matchers::WithinRel(std::pow(c, 2.0 * H) * fbm_cov(s, t, H),
                                                        1e-12));
            }

    REQUIRE_THROWS_AS(fbm_cov(1.0, 1.0, 0.0), std::domain_error);
    REQUIRE_THROWS_AS(fbm_cov(1.0, 1.0, 1.0), std::domain_error);
    REQUIRE_THROWS_AS(fbm_cov(-1.0, 1.0, 0.75), std::domain_error);
}

TEST_CASE("fBm sampler: clean spectrum, determinism, argument guards") {
    const TimeGrid grid(2.0, 64);
    for (double H : {0.6, 0.75, 0.9}) {
        const FbmEnsemble ens = sample_fbm(grid, H, 1, 5);
        REQUIRE_FALSE(ens.circulant_fallback);
        REQUIRE(ens.min_spectrum > -1e-6);
        REQUIRE(ens.chol_jitter == 0.0);
        REQUIRE(ens.paths[0][0] == 0.0);
    }
    REQUIRE(sample_fbm(grid, 0.75, 2, 5).paths[0] == sample_fbm(grid, 0.75, 2, 5).paths[0]);
    REQUIRE_THROWS_AS(sample_fbm(grid, 1.5, 1, 5), std::domain_error);
    REQUIRE_THROWS_AS(sample_fbm(grid, 0.75, 1, 5, "specular"), std::invalid_argument);
}

TEST_CASE("fBm sampler: Brownian case has uncorrelated increments") {
    const TimeGrid grid(1.0, 16);
    const FbmEnsemble ens = sample_fbm(grid, 0.5, 4000, 1001);
    std::vector<double> x(ens.paths.size()), y(ens.paths.size());
    for (std::size_t r = 0; r < ens.paths.size(); ++r) {
        x[r] = ens.paths[r][9] - ens.paths[r][8];
        y[r] = ens.paths[r][8] - ens.paths[r][7];
    }
    const Estimate c = summarize_covariance(x, y);
    REQUIRE(std::fabs(c.value) <= 3.0 * c.se);
}

TEST_CASE("fBm sampler: marginal variance and method agreement") {
    const TimeGrid grid(2.0, 64);
    const double H = 0.75;
    const FbmEnsemble circ = sample_fbm(grid, H, 2000, 21, "circulant");
    const FbmEnsemble chol = sample_fbm(grid, H, 2000, 22, "cholesky");

    for (double t : {0.5, 1.0, 2.0}) {
        const std::size_t k = grid.index_of(t);
        std::vector<double> at(circ.paths.size());
        for (std::size_t r = 0; r < circ.paths.size(); ++r) at[r] = circ.paths[r][k];
        const Estimate v = summarize_variance(at);
        REQUIRE(std::fabs(v.value - std::pow(t, 2.0 * H)) <= 3.0 * v.se);
    }

    std::vector<double> a(circ.paths.size()), b(chol.paths.size());
    const std::size_t k1 = grid.index_of(1.0);
    for (std::size_t r = 0; r < circ.paths.size(); ++r) {
        a[r] = circ.paths[r][k1];
        b[r] = chol.paths[r][k1];
    }
    REQUIRE(ks_two_sample(a, b).p_value > 0.01);
}

TEST_CASE("long-run constants: closed values and cross-checked stationary variance") {
    const ModelParams p = standard_params();
    const Policy g = Policy::linear(1.0);
    const FouConstants c = fou_constants(p, g);
    REQUIRE_THAT(c.H, Catch::Matchers::WithinAbs(0.75, 1e-15));
    REQUIRE_THAT(c.kappa, Catch::Matchers::WithinAbs(2.0, 1e-15));
    REQUIRE_THAT(c.sigma * c.sigma, Catch::Matchers::WithinRel(16.0 / 3.0, 1e-14));
    REQUIRE(c.H > 0.5);
    REQUIRE(c.H < 1.0);

    const double closed = fou_sigma0sq_closed(p, g);
    REQUIRE_THAT(closed, Catch::Matchers::WithinAbs(std::sqrt(std::numbers::pi / 2.0), 1e-12));
    // quadrature of the double integral against the reduced closed form
    REQUIRE_THAT(c.sigma0sq, Catch::Matchers::WithinRel(closed, 1e-6));
    // classical stationary-variance identity sigma^2 H Gamma(2H) / kappa^{2H}
    const double identity = c.sigma * c.sigma * c.H * std::tgamma(2.0 * c.H) *
                            std::pow(c.kappa, -2.0 * c.H);
    REQUIRE_THAT(closed, Catch::Matchers::WithinRel(identity, 1e-8));
}

TEST_CASE("long-run constants: theta carried through, drift restriction enforced") {
    ModelParams p;
    p.theta = 2.0;
    p.b = 1.0;  // a = 1/(theta (beta-2)) = 1
    p = validate_params(p);
    const Policy g = Policy::linear(1.0);
    const FouConstants c = fou_constants(p, g);
    REQUIRE_THAT(c.kappa, Catch::Matchers::WithinAbs(1.0, 1e-15));
    const double closed = fou_sigma0sq_closed(p, g);
    REQUIRE_THAT(c.sigma0sq, Catch::Matchers::WithinRel(closed, 1e-6));
    const double identity = c.sigma * c.sigma * c.H * std::tgamma(2.0 * c.H) *
                            std::pow(c.kappa, -2.0 * c.H);
    REQUIRE_THAT(closed, Catch::Matchers::WithinRel(identity, 1e-8));

    ModelParams q = standard_params();
    q.b = 1.0;  // != a
    const FouConstants cc = fou_constants(standard_params(), Policy::linear(1.0));
    REQUIRE_THROWS_AS(fou_constants(q, g), unsupported_error);
    REQUIRE_THROWS_AS(fou_sigma0sq_closed(q, g), unsupported_error);
    REQUIRE_THROWS_AS(cross_cov_BH_Z0(1.0, cc, q, g), unsupported_error);
    REQUIRE_THROWS_AS(sample_fou(TimeGrid(1.0, 4), cc, q, g, 1, 1), unsupported_error);
    REQUIRE_THROWS_AS(longrun_diag(1.0, 1.0, cc, q, g), unsupported_error);
}

TEST_CASE("driver cross covariance: boundary, monotonicity, frozen value") {
    const ModelParams p = standard_params();
    const Policy g = Policy::linear(1.0);
    const FouConstants c = fou_constants(p, g);
    REQUIRE(cross_cov_BH_Z0(0.0, c, p, g) == 0.0);
    REQUIRE_THROWS_AS(cross_cov_BH_Z0(-1.0, c, p, g), std::domain_error);
    double prev = 0.0;
    for (double t : {0.25, 0.5, 1.0, 1.5, 2.0}) {
        const double cur = cross_cov_BH_Z0(t, c, p, g);
        REQUIRE(cur > prev);  // positive integrand
        prev = cur;
    }
    REQUIRE_THAT(cross_cov_BH_Z0(1.0, c, p, g),
                 Catch::Matchers::WithinRel(0.5057826913340003, 1e-8));
}

TEST_CASE("stationary sampler: zero diffusion reduces to pure decay") {
    const ModelParams p = standard_params();
    const Policy g = Policy::linear(1.0);
    FouConstants c = fou_constants(p, g);
    c.sigma = 0.0;
    const TimeGrid grid(2.0, 40);
    const FouEnsemble ens = sample_fou(grid, c, p, g, 3, 77);
    for (const auto& Z : ens.Z)
        for (std::size_t k = 0; k < grid.size(); ++k)
            REQUIRE_THAT(Z[k],
                         Catch::Matchers::WithinAbs(Z[0] * std::exp(-c.kappa * grid.time(k)),
                                                    1e-12));
}

TEST_CASE("stationary sampler: variance flat in time and calibrated") {
    const ModelParams p = standard_params();
    const Policy g = Policy::linear(1.0);
    const FouConstants c = fou_constants(p, g);
    const TimeGrid grid(5.0, 100);
    const FouEnsemble ens = sample_fou(grid, c, p, g, 5000, 2024);
    REQUIRE(sample_fou(grid, c, p, g, 1, 2024).Z[0] == ens.Z[0]);

    std::vector<double> z0(ens.Z.size()), zT(ens.Z.size()), b1(ens.Z.size());
    const std::size_t k1 = grid.index_of(1.0);
    for (std::size_t r = 0; r < ens.Z.size(); ++r) {
        z0[r] = ens.Z[r][0];
        zT[r] = ens.Z[r].back();
        b1[r] = ens.BH[r][k1];
    }
    const Estimate v0 = summarize_variance(z0);
    const Estimate vT = summarize_variance(zT);
    REQUIRE(std::fabs(v0.value - c.sigma0sq) <= 3.0 * v0.se);
    REQUIRE(std::fabs(vT.value - c.sigma0sq) <= 3.0 * vT.se);
    REQUIRE(std::fabs(v0.value - vT.value) <= 3.0 * std::hypot(v0.se, vT.se));

    // joint coupling reproduces the analytic driver cross covariance
    const Estimate cb = summarize_covariance(b1, z0);
    REQUIRE(std::fabs(cb.value - cross_cov_BH_Z0(1.0, c, p, g)) <= 3.0 * cb.se);
}

TEST_CASE("stationary sampler: integral-equation residual shrinks under refinement") {
    const ModelParams p = standard_params();
    const Policy g = Policy::linear(1.0);
    const FouConstants c = fou_constants(p, g);
    auto residual = [&](std::size_t steps) {
        const TimeGrid grid(2.0, steps);
        const FouEnsemble ens = sample_fou(grid, c, p, g, 8, 31415);
        const double h = grid.step();
        double worst = 0.0;
        for (std::size_t r = 0; r < ens.Z.size(); ++r) {
            const auto& Z = ens.Z[r];
            const auto& B = ens.BH[r];
            double trap = 0.0;
            for (std::size_t k = 1; k < grid.size(); ++k) {
                trap += 0.5 * h * (Z[k - 1] + Z[k]);
                const double res = Z[k] - (Z[0] - c.kappa * trap + c.sigma * B[k]);
                worst = std::max(worst, std::fabs(res));
            }
        }
        return worst;
    };
    REQUIRE(residual(256) < residual(64));
}

TEST_CASE("long-run diagnostics: frozen finite-horizon values against their limits") {
    const ModelParams p = standard_params();
    const Policy g = Policy::linear(1.0);
    const FouConstants c = fou_constants(p, g);
    const LongrunDiag d = longrun_diag(20.0 / c.kappa, 1.0, c, p, g);

    REQUIRE(d.zbar_var_limit == c.sigma0sq);
    REQUIRE_THAT(d.rbar_inc_limit, Catch::Matchers::WithinRel(16.0 / 3.0, 1e-12));
    REQUIRE_THAT(d.cross_limit, Catch::Matchers::WithinRel(1.1680550919725539, 1e-9));

    // the approach to all three limits is polynomially slow, (kappa T)^{2-beta};
    // at T = 20/kappa the relative gaps are still 13%, 11%, and 26%
    REQUIRE_THAT(d.zbar_var_T, Catch::Matchers::WithinAbs(1.093145, 5e-6));
    REQUIRE_THAT(d.rbar_inc_T, Catch::Matchers::WithinAbs(4.720848, 5e-6));
    REQUIRE_THAT(d.cross_T, Catch::Matchers::WithinAbs(0.859361, 5e-6));
    REQUIRE(d.zbar_gap == std::fabs(d.zbar_var_T - d.zbar_var_limit));

    // T = 0 start of the increment second moment: 2 t^{4-beta}/(d(3-beta)(4-beta))
    const LongrunDiag d0 = longrun_diag(0.0, 1.0, c, p, g);
    REQUIRE_THAT(d0.rbar_inc_T, Catch::Matchers::WithinRel(8.0 / 3.0, 1e-10));
    REQUIRE(d0.rbar_inc_T < d0.rbar_inc_limit);
}

TEST_CASE("long-run diagnostics: gaps decrease monotonically in the horizon") {
    const ModelParams p = standard_params();
    const Policy g = Policy::linear(1.0);
    const FouConstants c = fou_constants(p, g);
    double prev_z = 1e300, prev_r = 1e300, prev_x = 1e300;
    for (double kT : {2.0, 5.0, 10.0, 20.0}) {
        const LongrunDiag d = longrun_diag(kT / c.kappa, 1.0, c, p, g);
        REQUIRE(d.zbar_gap < prev_z);
        REQUIRE(d.rbar_gap < prev_r);
        REQUIRE(d.cross_gap < prev_x);
        prev_z = d.zbar_gap;
        prev_r = d.rbar_gap;
        prev_x = d.cross_gap;
    }
}

TEST_CASE("path export format") {
    const ModelParams p = standard_params();
    const Policy g = Policy::linear(1.0);
    const FouConstants c = fou_constants(p, g);
    const TimeGrid grid(1.0, 4);
    const FouEnsemble ens = sample_fou(grid, c, p, g, 3, 9);
    const auto file = std::filesystem::temp_directory_path() / "simlab_test_fou.csv";
    write_fou_csv(ens, grid, file.string());
    std::ifstream in(file, std::ios::binary);
    std::string line;
    std::getline(in, line);
    REQUIRE(line == "rep,t,value");
    std::size_t rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    REQUIRE(rows == 3 * grid.size());
    std::filesystem::remove(file.string());
}
