#include <doctest.h>

#include "test_helpers.hpp"
#include "wkinterp/errors.hpp"

#include <cmath>
#include <random>

using namespace wkinterp;
using namespace wkitest;

namespace {

const EstimateSolution& ou_noiseless_estimate() {
    static const EstimateSolution sol = [] {
        const auto fx = make_ou(false);
        return estimate(fx.F, fx.G, fx.S, fx.a, fx.grid);
    }();
    return sol;
}

const EstimateSolution& ou_noisy_estimate() {
    static const EstimateSolution sol = [] {
        const auto fx = make_ou(true);
        return estimate(fx.F, fx.G, fx.S, fx.a, fx.grid);
    }();
    return sol;
}

} // namespace

TEST_CASE("noiseless error matches the boundary-projection closed form") {
    const auto& sol = ou_noiseless_estimate();
    CHECK(sol.noiseless);
    CHECK(sol.delta == doctest::Approx(delta_ou_noiseless()).epsilon(0.02));
}

TEST_CASE("noisy error matches the decomposition closed form") {
    const auto& sol = ou_noisy_estimate();
    CHECK_FALSE(sol.noiseless);
    CHECK(sol.delta == doctest::Approx(delta_ou_noisy()).epsilon(0.02));
}

TEST_CASE("the two error evaluations agree to 1e-4 relative") {
    for (const EstimateSolution* sol : {&ou_noiseless_estimate(), &ou_noisy_estimate()}) {
        const double scale = std::max(sol->delta_operator_form, sol->delta_spectral_form);
        CHECK(std::abs(sol->delta_operator_form - sol->delta_spectral_form) <= 1e-4 * scale);
    }
}

TEST_CASE("zero functional gives a zero characteristic and zero error") {
    const auto fx = make_ou(true, 16.0, 257, 1.0 / 32.0);
    const auto a0 = WeightFunction::constant(fx.S, Eigen::VectorXd::Zero(1));
    const auto sol = estimate(fx.F, fx.G, fx.S, a0, fx.grid);
    for (const auto& h : sol.h) CHECK(h.norm() <= 1e-14);
    CHECK(sol.delta_operator_form == doctest::Approx(0.0));
    CHECK(sol.delta_spectral_form == doctest::Approx(0.0));
}

TEST_CASE("joint density scaling leaves h fixed and scales the error") {
    const auto fx = make_ou(true, 32.0, 513, 1.0 / 64.0);
    const auto base = estimate(fx.F, fx.G, fx.S, fx.a, fx.grid);
    for (double c : {0.5, 2.0, 10.0}) {
        const auto scaled = estimate(fx.F.scaled(c), fx.G.scaled(c), fx.S, fx.a, fx.grid);
        double hsup = 0.0, dsup = 0.0;
        for (std::size_t j = 0; j < fx.grid.size(); ++j) {
            hsup = std::max(hsup, base.h[j].norm());
            dsup = std::max(dsup, (scaled.h[j] - base.h[j]).norm());
        }
        CHECK(dsup <= 1e-8 * hsup);
        CHECK(scaled.delta == doctest::Approx(c * base.delta).epsilon(1e-8));
    }
}

TEST_CASE("noiseless formula is the limit of the general one") {
    const auto fx = make_ou(false, 32.0, 513, 1.0 / 64.0);
    const auto noiseless = estimate(fx.F, fx.G, fx.S, fx.a, fx.grid);
    const auto tiny = SpectralDensity::constant(fx.grid, 1e-12 * Eigen::MatrixXcd::Identity(1, 1));
    const auto general = estimate(fx.F, tiny, fx.S, fx.a, fx.grid);
    CHECK(general.delta == doctest::Approx(noiseless.delta).epsilon(1e-4));
    double hsup = 0.0, dsup = 0.0;
    for (std::size_t j = 0; j < noiseless.h.size(); ++j) {
        hsup = std::max(hsup, noiseless.h[j].norm());
        dsup = std::max(dsup, (general.h[j] - noiseless.h[j]).norm());
    }
    CHECK(dsup <= 1e-4 * hsup);
}

TEST_CASE("the reduced exact-observation solve tracks the general route") {
    // B c = a (no band-limiting of the right-hand side) differs from the
    // general route only through the boundary rows; <c, a> approximates the
    // same error up to the boundary-layer scale.
    const auto fx = make_ou(false);
    const auto sys = assemble_system(fx.F, fx.G, fx.S, fx.grid);
    const auto sol = solve_c(sys, fx.a, SolveMode::Noiseless, default_tikhonov(sys));
    double inner = 0.0;
    for (std::size_t k = 0; k < fx.S.node_count(); ++k) {
        inner += fx.S.node_weights()[k] * sol.c(0, static_cast<Eigen::Index>(k)).real();
    }
    CHECK(inner == doctest::Approx(delta_ou_noiseless()).epsilon(0.05));
}

TEST_CASE("cross evaluation is self-consistent and affine in F") {
    const auto fx = make_ou(true, 16.0, 257, 1.0 / 32.0);
    const auto sol = estimate(fx.F, fx.G, fx.S, fx.a, fx.grid);

    const double self = cross_mse(sol.h, sol.A, fx.F, fx.G, sol.qgrid);
    CHECK(self == doctest::Approx(sol.delta_spectral_form).epsilon(1e-8));

    // Affine in F: value at the midpoint equals the mean of the endpoints.
    const auto f2 = fx.F.scaled(2.0);
    const auto fmid = fx.F.scaled(1.5);
    const double v1 = cross_mse(sol.h, sol.A, fx.F, fx.G, sol.qgrid);
    const double v2 = cross_mse(sol.h, sol.A, f2, fx.G, sol.qgrid);
    const double vm = cross_mse(sol.h, sol.A, fmid, fx.G, sol.qgrid);
    CHECK(vm == doctest::Approx(0.5 * (v1 + v2)).epsilon(1e-10));
}

TEST_CASE("the zero characteristic recovers the functional variance") {
    const auto fx = make_ou(true, 16.0, 257, 1.0 / 32.0);
    const auto q = QuadratureGrid::extended(fx.grid, fx.S);
    const auto A = exponential_transform(fx.a, fx.S, q);
    const SpectralVectorField h0(q.size(), Eigen::VectorXcd::Zero(1));

    const auto f_values = fx.F.evaluate_on(q);
    double var = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) {
        var += q.weight(j) *
               (A[j].conjugate().adjoint() * f_values[j] * A[j].conjugate()).value().real();
    }
    var /= 2.0 * M_PI;
    CHECK(cross_mse(h0, A, fx.F, fx.G, q) == doctest::Approx(var).epsilon(1e-12));

    // And the optimal error never exceeds it.
    const auto sol = estimate(fx.F, fx.G, fx.S, fx.a, fx.grid);
    CHECK(sol.delta <= var + 1e-12);
}

TEST_CASE("projection residual is small at the optimum and detects h = 0") {
    const auto& sol = ou_noiseless_estimate();
    const auto fx = make_ou(false);
    const std::vector<double> ts{-3.0, -2.0, 0.5, 1.0, 2.0};
    const auto rep = verify_orthogonality(sol.h, sol.A, fx.F, fx.G, sol.qgrid, ts);
    CHECK(rep.max_residual <= 1e-3); // ||a||_{L2} = 1 on [-1, 0]

    const SpectralVectorField h0(sol.qgrid.size(), Eigen::VectorXcd::Zero(1));
    const auto bad = verify_orthogonality(h0, sol.A, fx.F, fx.G, sol.qgrid, ts);
    CHECK(bad.max_residual > 10.0 * rep.max_residual);

    const auto a0 = WeightFunction::constant(fx.S, Eigen::VectorXd::Zero(1));
    const auto A0 = exponential_transform(a0, fx.S, sol.qgrid);
    const auto zero = verify_orthogonality(h0, A0, fx.F, fx.G, sol.qgrid, ts);
    CHECK(zero.max_residual == doctest::Approx(0.0));
}

TEST_CASE("projection residual halves under grid refinement") {
    const std::vector<double> ts{-3.0, -2.0, 0.5, 1.0, 2.0};
    const auto coarse_fx = make_ou(false);
    const auto& coarse = ou_noiseless_estimate();
    const auto rc =
        verify_orthogonality(coarse.h, coarse.A, coarse_fx.F, coarse_fx.G, coarse.qgrid, ts);

    const auto fine_fx = make_ou(false, 128.0, 8193, 1.0 / 512.0);
    const auto fine = estimate(fine_fx.F, fine_fx.G, fine_fx.S, fine_fx.a, fine_fx.grid);
    const auto rf = verify_orthogonality(fine.h, fine.A, fine_fx.F, fine_fx.G, fine.qgrid, ts);
    CHECK(rf.max_residual <= 0.5 * rc.max_residual);
}

TEST_CASE("small systems: operator error equals the dense quadratic form") {
    const auto fx = make_ou(true, 16.0, 257, 0.25); // m = 5
    const auto sys = assemble_system(fx.F, fx.G, fx.S, fx.grid);
    const auto sol = estimate_with_system(sys, fx.F, fx.G, fx.S, fx.a, fx.grid,
                                          {.tikhonov = 0.0});
    const Eigen::VectorXcd a_hat = sys.lift(fx.a);
    const Eigen::VectorXcd rhs = sys.R * a_hat;
    const double direct = (rhs.adjoint() * sys.B.inverse() * rhs).value().real() +
                          (a_hat.adjoint() * sys.Q * a_hat).value().real();
    CHECK(sol.delta_operator_form == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("heavy truncation degrades the residual but not the form agreement") {
    // The truncated-mode solve keeps <rhs, c> equal to <Bc, c>, so the two
    // error routes stay consistent at any threshold.
    const auto fx = make_ou(true, 16.0, 257, 1.0 / 32.0);
    EstimateOptions opts;
    opts.tikhonov = 1e2;
    const auto sol = estimate(fx.F, fx.G, fx.S, fx.a, fx.grid, opts);
    const double scale = std::max(sol.delta_operator_form, sol.delta_spectral_form);
    CHECK(std::abs(sol.delta_operator_form - sol.delta_spectral_form) <= 1e-6 * scale);
    const auto tight = estimate(fx.F, fx.G, fx.S, fx.a, fx.grid);
    CHECK(sol.solve_residual >= tight.solve_residual);
}
