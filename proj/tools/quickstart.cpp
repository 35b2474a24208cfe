// Minimal end-to-end tour of the library: simulate one prelimit path, solve
// the fluid equations, sample the Gaussian limit, and sample the stationary
// long-run process. Prints a handful of values and exits.

#include <cstdio>

#include "simlab/experiments.hpp"

int main() {
    using namespace simlab;

    ModelParams p;  // beta 2.5, theta 1, alpha 2, d 1, b = a = 2
    p.n = 32;
    p = validate_params(p);
    const Policy g = Policy::linear(1.0);

    // one prelimit sample path on [0, 4]
    const SamplePath path = simulate_scaled_path(p, g, 4.0, 20240915);
    const PathValue end = evaluate_path(path, 4.0);
    std::printf("prelimit n=%ld: %zu arrivals, Ybar(4) = %.4f\n", p.n, path.events.size(),
                end.Ybar);

    // deterministic fluid limit and its first-order correction
    const FluidSolution fl = make_fluid(p, g, 4.0, 1600);
    std::printf("fluid:        U(4) = %.4f, V(4) = %.4f, damping mu = %.3f\n", fl.U_at(4.0),
                fl.V_at(4.0), fl.mu);

    // centered fluctuation of the path above against the fluid solution
    const std::vector<double> z = fluctuation_path(path, fl, {1.0, 2.0, 4.0});
    const IntegratingFactor fac(fl);
    std::printf("fluctuation:  Zbar_n(4) = %.4f (limit sd %.4f)\n", z.back(),
                std::sqrt(cov_Zbar(4.0, 4.0, fl, fac)));

    // exact draw from the Gaussian limit on a 65-node grid
    const GaussianLimitKit kit(p, g, fl, 4.0, 64);
    const LimitZEnsemble ens = sample_limit_Z(kit, 1, 7);
    std::printf("limit draw:   Zbar(4) = %.4f, moment bound %.4f\n", ens.Zbar[0].back(),
                kit.momentBound);

    // stationary long-run regime: constants and one exact fOU path
    const FouConstants c = fou_constants(p, g);
    const TimeGrid grid(2.0, 80);
    const FouEnsemble fou = sample_fou(grid, c, p, g, 1, 11);
    std::printf("long run:     kappa = %g, H = %g, sigma0^2 = %.4f, Z(0) = %.4f\n", c.kappa,
                c.H, c.sigma0sq, fou.Z[0].front());
    return 0;
}
