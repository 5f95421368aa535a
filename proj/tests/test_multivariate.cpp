#include <doctest.h>

#include "test_helpers.hpp"
#include "wkinterp/simulation.hpp"

#include <cmath>

using namespace wkinterp;

namespace {

// Correlated bivariate signal: scalar rational diagonals with a real coupled
// off-diagonal at half the admissible magnitude (keeps every sample PD).
struct BivariateFixture {
    FrequencyGrid grid;
    MissingSet S;
    WeightFunction a;
    SpectralDensity F, G;
};

BivariateFixture make_bivariate(double lambda_max = 32.0, int n_points = 1025,
                                double step = 1.0 / 64.0) {
    BivariateFixture fx;
    fx.grid = FrequencyGrid::make(lambda_max, n_points);
    fx.S = MissingSet::make({{-1.0, 0.0}}, step);
    fx.a = WeightFunction::from_expression(fx.S, "one", 2);
    const auto coupled = [](double l) {
        const double f1 = 2.0 / (l * l + 1.0);
        const double f2 = 1.0 / (l * l + 4.0);
        Eigen::MatrixXcd m(2, 2);
        m(0, 0) = f1;
        m(1, 1) = f2;
        m(0, 1) = 0.5 * std::sqrt(f1 * f2);
        m(1, 0) = m(0, 1);
        return m;
    };
    fx.F = SpectralDensity::from_function(fx.grid, 2, coupled,
                                          SpectralDensity::Interpolation::PiecewiseLinear,
                                          SpectralDensity::Extension::InverseSquare);
    fx.G = SpectralDensity::from_function(
        fx.grid, 2,
        [&](double l) { return (0.5 * coupled(l)).eval(); },
        SpectralDensity::Interpolation::PiecewiseLinear,
        SpectralDensity::Extension::InverseSquare);
    return fx;
}

} // namespace

TEST_CASE("bivariate model passes validation and the dual-form check") {
    const auto fx = make_bivariate();
    CHECK(validate_density(fx.F).passes);
    CHECK(validate_density(fx.G).passes);

    const auto sol = estimate(fx.F, fx.G, fx.S, fx.a, fx.grid);
    const double scale = std::max(sol.delta_operator_form, sol.delta_spectral_form);
    CHECK(std::abs(sol.delta_operator_form - sol.delta_spectral_form) <= 1e-4 * scale);
    CHECK(sol.delta > 0.0);

    // The optimal error never exceeds the plain functional variance.
    const SpectralVectorField h0(sol.qgrid.size(), Eigen::VectorXcd::Zero(2));
    const double var = cross_mse(h0, sol.A, fx.F, fx.G, sol.qgrid);
    CHECK(sol.delta <= var);
}

TEST_CASE("bivariate scaling laws hold") {
    const auto fx = make_bivariate(16.0, 513, 1.0 / 32.0);
    const auto base = estimate(fx.F, fx.G, fx.S, fx.a, fx.grid);
    const auto scaled = estimate(fx.F.scaled(3.0), fx.G.scaled(3.0), fx.S, fx.a, fx.grid);
    CHECK(scaled.delta == doctest::Approx(3.0 * base.delta).epsilon(1e-8));
    double hsup = 0.0, dsup = 0.0;
    for (std::size_t j = 0; j < base.h.size(); ++j) {
        hsup = std::max(hsup, base.h[j].norm());
        dsup = std::max(dsup, (scaled.h[j] - base.h[j]).norm());
    }
    CHECK(dsup <= 1e-8 * hsup);
}

TEST_CASE("bivariate error agrees with the conditioning oracle") {
    const auto fx = make_bivariate();
    const auto sol = estimate(fx.F, fx.G, fx.S, fx.a, fx.grid);
    const auto oracle = gaussian_oracle(fx.F, fx.G, fx.S, fx.a, fx.grid, -5.0, 4.0, 0.02);
    CHECK(sol.delta == doctest::Approx(oracle.mse).epsilon(0.10));
    CHECK(oracle.mse <= oracle.var_functional);
}

TEST_CASE("bivariate Monte Carlo is consistent with the theoretical error") {
    const auto fx = make_bivariate();
    const auto sol = estimate(fx.F, fx.G, fx.S, fx.a, fx.grid);
    SimulationConfig cfg;
    cfg.n_replications = 3000;
    cfg.seed = 99;
    const auto res = empirical_mse(fx.F, fx.G, sol.h, fx.a, fx.S, fx.grid, cfg, sol.delta);
    CHECK(std::abs(res.z_score) <= 4.0);
}
