#include <catch_amalgamated.hpp>

#include <cmath>

#include "simlab/model.hpp"

using namespace simlab;

TEST_CASE("alpha window endpoints") {
    auto w = alpha_window(2.5);
    REQUIRE_THAT(w.first, Catch::Matchers::WithinAbs(1.5, 1e-15));
    REQUIRE_THAT(w.second, Catch::Matchers::WithinAbs(2.5, 1e-15));

    // below the kink 3b-5 is the binding branch
    w = alpha_window(2.2);
    REQUIRE_THAT(w.first, Catch::Matchers::WithinAbs(1.2, 1e-15));
    REQUIRE_THAT(w.second, Catch::Matchers::WithinAbs(1.6, 1e-15));

    // above the kink 5-b binds
    w = alpha_window(2.9);
    REQUIRE_THAT(w.first, Catch::Matchers::WithinAbs(1.9, 1e-15));
    REQUIRE_THAT(w.second, Catch::Matchers::WithinAbs(2.1, 1e-15));
}

TEST_CASE("alpha window rejects tail index outside (2,3)") {
    REQUIRE_THROWS_AS(alpha_window(2.0), std::domain_error);
    REQUIRE_THROWS_AS(alpha_window(3.0), std::domain_error);
    REQUIRE_THROWS_AS(alpha_window(1.5), std::domain_error);
    REQUIRE_THROWS_AS(alpha_window(3.5), std::domain_error);
}

TEST_CASE("alpha window stays nonempty strictly inside (2,3)") {
    for (double beta : {2.0 + 1e-9, 2.1, 7.0 / 3.0, 2.5, 2.7, 3.0 - 1e-9}) {
        const auto [lo, hi] = alpha_window(beta);
        CAPTURE(beta);
        REQUIRE(lo < hi);
    }
}

TEST_CASE("validate_params accepts the standard configuration") {
    ModelParams p;  // beta 2.5, theta 1, alpha 2, b 2, d 1, n 1
    const ModelParams q = validate_params(p);
    REQUIRE(q.beta == 2.5);
    REQUIRE_THAT(q.a(), Catch::Matchers::WithinAbs(2.0, 1e-15));
    REQUIRE(q.b_equals_a());
}

TEST_CASE("validate_params names the offending field") {
    auto expect = [](ModelParams p, const std::string& fragment) {
        try {
            validate_params(p);
            FAIL("expected validation_error");
        } catch (const validation_error& e) {
            REQUIRE_THAT(e.what(), Catch::Matchers::ContainsSubstring(fragment));
        }
    };
    ModelParams p;

    p.beta = 3.2;
    expect(p, "beta");
    p.beta = 2.0;
    expect(p, "beta");
    p = ModelParams{};

    p.theta = 0.0;
    expect(p, "theta");
    p = ModelParams{};

    p.b = -1.0;
    expect(p, "b not positive");
    p = ModelParams{};

    p.d = 0;
    expect(p, "d below 1");
    p = ModelParams{};

    p.n = 0;
    expect(p, "n below 1");
    p = ModelParams{};

    p.alpha = 1.4;  // at beta 2.5 the window is (1.5, 2.5)
    expect(p, "alpha below");
    p.alpha = 2.6;
    expect(p, "alpha above");
}

TEST_CASE("derived arrival scale a = 1/(theta (beta-2))") {
    ModelParams p;
    p.beta = 2.5;
    p.theta = 1.0;
    REQUIRE_THAT(p.a(), Catch::Matchers::WithinAbs(2.0, 1e-15));
    p.theta = 0.5;
    REQUIRE_THAT(p.a(), Catch::Matchers::WithinAbs(4.0, 1e-15));
    p.beta = 2.25;
    p.theta = 2.0;
    REQUIRE_THAT(p.a(), Catch::Matchers::WithinAbs(2.0, 1e-15));
}

TEST_CASE("policy catalog point values") {
    const Policy lin = Policy::linear(1.0);
    auto e = policy_eval(lin, 0.0);
    REQUIRE(e.g == 0.0);
    REQUIRE(e.gp == 1.0);
    REQUIRE(e.gpp == 0.0);

    const Policy lpt = Policy::linear_plus_tanh(1.0, 0.5);
    e = policy_eval(lpt, 0.0);
    REQUIRE(e.g == 0.0);
    REQUIRE_THAT(e.gp, Catch::Matchers::WithinAbs(1.5, 1e-15));
    REQUIRE_THAT(e.gpp, Catch::Matchers::WithinAbs(0.0, 1e-15));

    // tanh saturates: the slope collapses to the linear part far out
    REQUIRE_THAT(lpt.gp(30.0), Catch::Matchers::WithinAbs(lpt.ell(), 1e-12));
    REQUIRE_THAT(lpt.gp(-30.0), Catch::Matchers::WithinAbs(lpt.ell(), 1e-12));

    const Policy z = Policy::zero();
    REQUIRE(z.is_zero());
    REQUIRE(z.g(3.7) == 0.0);
    REQUIRE(z.gp(3.7) == 0.0);
}

TEST_CASE("policy construction rejects bad coefficients") {
    REQUIRE_THROWS_AS(Policy::linear(0.0), validation_error);
    REQUIRE_THROWS_AS(Policy::linear(-2.0), validation_error);
    REQUIRE_THROWS_AS(Policy::linear_plus_tanh(0.0, 0.5), validation_error);
    REQUIRE_THROWS_AS(Policy::linear_plus_tanh(1.0, -0.1), validation_error);
}

TEST_CASE("policy derivatives match finite differences on a dense grid") {
    const double h1 = 1e-6;
    const double h2 = 1e-4;  // second differences need a wider step to beat rounding
    for (const Policy& g : {Policy::linear(0.7), Policy::linear_plus_tanh(1.0, 0.5),
                            Policy::linear_plus_tanh(0.3, 2.0)}) {
        for (int k = 0; k <= 400; ++k) {
            const double x = -10.0 + 20.0 * k / 400.0;
            const double fd1 = (g.g(x + h1) - g.g(x - h1)) / (2.0 * h1);
            const double fd2 = (g.g(x + h2) - 2.0 * g.g(x) + g.g(x - h2)) / (h2 * h2);
            CAPTURE(x);
            REQUIRE_THAT(g.gp(x), Catch::Matchers::WithinAbs(fd1, 1e-6 * (1.0 + std::fabs(fd1))));
            REQUIRE_THAT(g.gpp(x), Catch::Matchers::WithinAbs(fd2, 1e-5 * (1.0 + std::fabs(fd2))));
        }
    }
}

TEST_CASE("policy slope bounds hold everywhere") {
    for (const Policy& g : {Policy::linear(0.7), Policy::linear_plus_tanh(1.0, 0.5),
                            Policy::linear_plus_tanh(0.3, 2.0)}) {
        REQUIRE(g.g(0.0) == 0.0);
        for (int k = 0; k <= 400; ++k) {
            const double x = -10.0 + 20.0 * k / 400.0;
            CAPTURE(x);
            REQUIRE(g.gp(x) >= g.ell() - 1e-15);
            REQUIRE(g.gp(x) <= g.L() + 1e-15);
            REQUIRE(std::fabs(g.gpp(x)) <= g.L() + 1e-15);
        }
    }
}

TEST_CASE("monotonicity of the policy catalog") {
    for (const Policy& g : {Policy::linear(1.0), Policy::linear_plus_tanh(1.0, 0.5)}) {
        double prev = g.g(-10.0);
        for (int k = 1; k <= 100; ++k) {
            const double x = -10.0 + 20.0 * k / 100.0;
            const double cur = g.g(x);
            REQUIRE(cur > prev);
            prev = cur;
        }
    }
}

TEST_CASE("intensity point values, standard configuration") {
    ModelParams p;  // b = 2, g = linear(1)
    const Policy g = Policy::linear(1.0);

    // on-target workload: argument 0, unit intensity and slope -1
    auto I = intensity_eval(p, g, 1.0, 2.0);
    REQUIRE_THAT(I.f, Catch::Matchers::WithinAbs(1.0, 1e-15));
    REQUIRE_THAT(I.f_y, Catch::Matchers::WithinAbs(-1.0, 1e-15));

    // workload ahead of target by 1
    I = intensity_eval(p, g, 0.0, 1.0);
    REQUIRE_THAT(I.f, Catch::Matchers::WithinAbs(std::exp(-1.0), 1e-15));
    REQUIRE_THAT(I.f_y, Catch::Matchers::WithinAbs(-std::exp(-1.0), 1e-15));

    // y = b t exactly
    I = intensity_eval(p, g, 3.25, 2.0 * 3.25);
    REQUIRE_THAT(I.f, Catch::Matchers::WithinAbs(1.0, 1e-15));
}

TEST_CASE("intensity dominated by the empty-system bound") {
    ModelParams p;
    for (const Policy& g : {Policy::linear(1.0), Policy::linear_plus_tanh(1.0, 0.5)}) {
        for (double t : {0.0, 0.5, 1.0, 4.0}) {
            const double cap = std::exp(-g.g(-p.b * t));  // y = 0 maximizes f
            for (double y : {0.0, 0.1, 1.0, 5.0, 25.0}) {
                const auto I = intensity_eval(p, g, t, y);
                REQUIRE(I.f <= cap * (1.0 + 1e-15));
                REQUIRE(I.f > 0.0);
                REQUIRE(I.f_y <= 0.0);
            }
        }
    }
}

TEST_CASE("intensity derivative consistency") {
    ModelParams p;
    const Policy g = Policy::linear_plus_tanh(1.0, 0.5);
    const double h = 1e-6;
    for (double t : {0.3, 1.7}) {
        for (double y : {0.0, 0.9, 3.1}) {
            const double fd = (intensity_eval(p, g, t, y + h).f -
                               intensity_eval(p, g, t, y - h).f) / (2.0 * h);
            REQUIRE_THAT(intensity_eval(p, g, t, y).f_y,
                         Catch::Matchers::WithinAbs(fd, 1e-7));
        }
    }
}
