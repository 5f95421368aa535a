#include <doctest.h>

#include "wkinterp/spectral_density.hpp"

#include <complex>

using namespace wkinterp;
using Cplx = std::complex<double>;

namespace {
const FrequencyGrid kGrid = FrequencyGrid::make(8.0, 17);
}

TEST_CASE("identity density validates with zero defects") {
    const auto d = SpectralDensity::constant(kGrid, Eigen::MatrixXcd::Identity(2, 2));
    const ValidationReport rep = validate_density(d);
    CHECK(rep.passes);
    CHECK(rep.max_hermitian_defect == 0.0);
    CHECK(rep.worst_min_eigenvalue >= 0.0);
    CHECK(rep.max_symmetry_defect == 0.0);
}

TEST_CASE("non-Hermitian sample is flagged") {
    Eigen::MatrixXcd bad = Eigen::MatrixXcd::Identity(2, 2);
    bad(0, 1) = Cplx(0.0, 1.0);
    bad(1, 0) = Cplx(0.0, 1.0); // conjugate would need -i
    const auto d = SpectralDensity::constant(kGrid, bad);
    const ValidationReport rep = validate_density(d);
    CHECK_FALSE(rep.passes);
    CHECK(rep.max_hermitian_defect > 0.0);
}

TEST_CASE("indefinite sample fails PSD with its eigenvalue reported") {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2, 2);
    m(0, 0) = 1.0;
    m(1, 1) = -0.5;
    const auto d = SpectralDensity::constant(kGrid, m);
    const ValidationReport rep = validate_density(d);
    CHECK_FALSE(rep.passes);
    CHECK(rep.worst_min_eigenvalue == doctest::Approx(-0.5));
    CHECK(rep.worst_psd_index >= 0);
}

TEST_CASE("conjugate symmetry across zero is enforced") {
    std::vector<Eigen::MatrixXcd> samples(kGrid.size(), Eigen::MatrixXcd::Identity(1, 1));
    samples[0](0, 0) = 2.0; // breaks the mirror relation against the last node
    const auto d = SpectralDensity::from_samples(kGrid, std::move(samples));
    const ValidationReport rep = validate_density(d);
    CHECK_FALSE(rep.passes);
    CHECK(rep.max_symmetry_defect > 0.0);
}

TEST_CASE("rational family evaluates scale/(l^2+c^2)") {
    const auto d = SpectralDensity::rational(kGrid, 2.0, 1.0);
    CHECK(d.sample(kGrid.center_index())(0, 0).real() == doctest::Approx(2.0));
    CHECK(d.value_at(1.0)(0, 0).real() == doctest::Approx(1.0).epsilon(2e-2)); // linear interp
    // Rational tails extend by the inverse-square law.
    CHECK(d.value_at(16.0)(0, 0).real() == doctest::Approx(2.0 / 257.0).epsilon(5e-2));
    CHECK(d.extension() == SpectralDensity::Extension::InverseSquare);
    CHECK(validate_density(d).passes);
}

TEST_CASE("extension policies shape the tail values") {
    Eigen::MatrixXcd one = Eigen::MatrixXcd::Identity(1, 1);
    const auto clamped = SpectralDensity::constant(kGrid, one);
    CHECK(clamped.value_at(100.0)(0, 0).real() == doctest::Approx(1.0));
    const auto zeroed = clamped.with_extension(SpectralDensity::Extension::Zero);
    CHECK(zeroed.value_at(100.0)(0, 0).real() == 0.0);
    CHECK(zeroed.value_at(2.0)(0, 0).real() == doctest::Approx(1.0)); // in band
    const auto decayed = clamped.with_extension(SpectralDensity::Extension::InverseSquare);
    CHECK(decayed.value_at(16.0)(0, 0).real() == doctest::Approx(0.25));
}

TEST_CASE("density algebra: plus and scaled") {
    const auto f = SpectralDensity::rational(kGrid, 2.0, 1.0);
    const auto sum = f.plus(f.scaled(0.5));
    for (std::size_t j = 0; j < kGrid.size(); ++j) {
        CHECK(sum.sample(j)(0, 0).real() ==
              doctest::Approx(1.5 * f.sample(j)(0, 0).real()).epsilon(1e-14));
    }
    CHECK(SpectralDensity::zero(kGrid, 3).is_zero());
    CHECK_FALSE(f.is_zero());
}
