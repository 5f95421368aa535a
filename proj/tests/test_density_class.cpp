#include <doctest.h>

#include "test_toy.hpp"
#include "wkinterp/errors.hpp"

#include <random>

using namespace wkinterp;
using wkitest::Toy;

namespace {
const Toy toy;
}

TEST_CASE("a density is a member of the moment class built from its own mass") {
    const auto X = SpectralDensity::rational(toy.grid, 2.0, 1.0);
    auto cls = toy.trace_class(trace_integral(X));
    CHECK(project_membership(cls, X).member);

    cls.budget *= 1.5;
    const auto rep = project_membership(cls, X);
    CHECK_FALSE(rep.member);
    CHECK(rep.violations.size() == 1);
}

TEST_CASE("zero contamination pins the trace profile to the reference") {
    auto cls = toy.eps_class(1.0, 0.0);
    CHECK(project_membership(cls, *cls.reference).member);

    // Same integral, mass moved across frequencies: not a member when eps = 0.
    std::vector<Eigen::MatrixXcd> samples(toy.grid.size());
    for (std::size_t j = 0; j < toy.grid.size(); ++j) samples[j] = cls.reference->sample(j);
    const double bump = 0.05;
    const std::size_t c = static_cast<std::size_t>(toy.grid.center_index());
    samples[c](0, 0) += bump;
    samples[c - 1](0, 0) -= bump * toy.grid.weight(c) / (2.0 * toy.grid.weight(c - 1));
    samples[c + 1](0, 0) -= bump * toy.grid.weight(c) / (2.0 * toy.grid.weight(c + 1));
    const auto moved = SpectralDensity::from_samples(toy.grid, std::move(samples));
    CHECK(trace_integral(moved) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(project_membership(cls, moved).member);
}

TEST_CASE("the ball center is a member with zero defect") {
    const auto cls = toy.ball_class(0.01);
    const auto rep = project_membership(cls, *cls.reference);
    CHECK(rep.member);
    CHECK(rep.max_defect == 0.0);
}

TEST_CASE("initial members belong to their classes") {
    const std::vector<DensityClass> classes = {
        toy.trace_class(1.0),
        toy.eps_class(1.0, 0.1),
        toy.strip_class(0.2, 0.8, 1.0),
        toy.ball_class(0.02),
        toy.singleton(SpectralDensity::rational(toy.grid, 1.0, 1.0)),
    };
    for (const auto& cls : classes) {
        const auto member = class_initial_member(cls, toy.grid);
        CHECK(validate_density(member).passes);
        CHECK(project_membership(cls, member).member);
    }
}

TEST_CASE("random members belong to their classes") {
    std::mt19937_64 rng(123);
    const std::vector<DensityClass> classes = {
        toy.trace_class(1.0),
        toy.eps_class(1.0, 0.1),
        toy.strip_class(0.2, 0.8, 1.0),
        toy.ball_class(0.02),
    };
    for (const auto& cls : classes) {
        for (int i = 0; i < 25; ++i) {
            const auto member = class_random_member(cls, toy.grid, rng);
            CHECK(validate_density(member).passes);
            const auto rep = project_membership(cls, member);
            CHECK(rep.member);
        }
    }
}

TEST_CASE("component classes work for bivariate densities") {
    DensityClass cls;
    cls.kind = ClassKind::D0Component;
    cls.dim = 2;
    cls.budget_k = Eigen::Vector2d(0.7, 1.3);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 10; ++i) {
        const auto member = class_random_member(cls, toy.grid, rng);
        CHECK(project_membership(cls, member).member);
        CHECK(component_integral(member, 0) == doctest::Approx(0.7).epsilon(1e-9));
        CHECK(component_integral(member, 1) == doctest::Approx(1.3).epsilon(1e-9));
    }
}

TEST_CASE("membership is evaluable for every constraint style") {
    const int dim = 2;
    const double span_mass = 2.0 * toy.grid.lambda_max() / (2.0 * M_PI);
    const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(dim, dim);
    const auto flat = SpectralDensity::constant(toy.grid, eye / span_mass,
                                                SpectralDensity::Extension::Zero);
    Eigen::MatrixXcd b(2, 2);
    b << 2.0, 0.5, 0.5, 1.0;

    DensityClass weighted;
    weighted.kind = ClassKind::D0Weighted;
    weighted.dim = dim;
    weighted.weight_mat = b;
    weighted.budget = weighted_integral(flat, b);
    CHECK(project_membership(weighted, flat).member);
    CHECK(project_membership(weighted, class_initial_member(weighted, toy.grid)).member);
    weighted.budget *= 2.0;
    CHECK_FALSE(project_membership(weighted, flat).member);

    DensityClass matrix;
    matrix.kind = ClassKind::D0Matrix;
    matrix.dim = dim;
    matrix.budget_mat = matrix_integral(flat);
    CHECK(project_membership(matrix, flat).member);
    CHECK(project_membership(matrix, class_initial_member(matrix, toy.grid)).member);
    std::mt19937_64 rng(8);
    for (int i = 0; i < 5; ++i) {
        CHECK(project_membership(matrix, class_random_member(matrix, toy.grid, rng)).member);
    }

    DensityClass eps_w;
    eps_w.kind = ClassKind::EpsWeighted;
    eps_w.dim = dim;
    eps_w.eps = 0.2;
    eps_w.weight_mat = b;
    eps_w.reference = flat;
    eps_w.budget = weighted_integral(flat, b); // q = q1: floor met with equality
    CHECK(project_membership(eps_w, flat).member);
    CHECK(project_membership(eps_w, class_initial_member(eps_w, toy.grid)).member);

    DensityClass eps_m;
    eps_m.kind = ClassKind::EpsMatrix;
    eps_m.dim = dim;
    eps_m.eps = 0.3;
    eps_m.reference = flat;
    eps_m.budget_mat = matrix_integral(flat);
    CHECK(project_membership(eps_m, flat).member);
    CHECK(project_membership(eps_m, class_initial_member(eps_m, toy.grid)).member);
    // A density below the contamination floor is rejected pointwise.
    CHECK_FALSE(project_membership(eps_m, flat.scaled(0.5)).member);

    DensityClass strip_w;
    strip_w.kind = ClassKind::StripWeighted;
    strip_w.dim = dim;
    strip_w.weight_mat = b;
    strip_w.lower = flat.scaled(0.5);
    strip_w.upper = flat.scaled(2.0);
    strip_w.budget = weighted_integral(flat, b);
    CHECK(project_membership(strip_w, flat).member);
    CHECK(project_membership(strip_w, class_initial_member(strip_w, toy.grid)).member);
    CHECK_FALSE(project_membership(strip_w, flat.scaled(3.0)).member);

    DensityClass strip_m;
    strip_m.kind = ClassKind::StripMatrix;
    strip_m.dim = dim;
    strip_m.lower = flat.scaled(0.5);
    strip_m.upper = flat.scaled(2.0);
    strip_m.budget_mat = matrix_integral(flat);
    CHECK(project_membership(strip_m, flat).member);
    CHECK(project_membership(strip_m, class_initial_member(strip_m, toy.grid)).member);

    DensityClass ball_w;
    ball_w.kind = ClassKind::BallWeighted;
    ball_w.dim = dim;
    ball_w.weight_mat = b;
    ball_w.reference = flat;
    ball_w.radius = 1e-3;
    CHECK(project_membership(ball_w, flat).member);
    CHECK_FALSE(project_membership(ball_w, flat.scaled(2.0)).member);

    DensityClass ball_e;
    ball_e.kind = ClassKind::BallEntry;
    ball_e.dim = dim;
    ball_e.reference = flat;
    ball_e.radius_ij = 1e-3 * Eigen::MatrixXd::Ones(dim, dim);
    CHECK(project_membership(ball_e, flat).member);
    std::mt19937_64 rng2(9);
    for (int i = 0; i < 5; ++i) {
        CHECK(project_membership(ball_e, class_random_member(ball_e, toy.grid, rng2)).member);
    }
    CHECK_FALSE(project_membership(ball_e, flat.scaled(1.5)).member);
}

TEST_CASE("infeasible contamination budgets are refused") {
    auto cls = toy.eps_class(0.5, 0.1); // floor is 0.9 * 1.0 > 0.5
    cls.reference = SpectralDensity::constant(
        toy.grid, (M_PI / toy.grid.lambda_max()) * Eigen::MatrixXcd::Identity(1, 1));
    CHECK_THROWS_AS(class_initial_member(cls, toy.grid), infeasible_class_error);
}

TEST_CASE("strip budgets outside the band are refused") {
    const auto cls = toy.strip_class(0.4, 0.6, 10.0);
    CHECK_THROWS_AS(class_initial_member(cls, toy.grid), infeasible_class_error);
}
