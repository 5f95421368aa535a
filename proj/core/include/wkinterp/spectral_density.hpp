#ifndef WKINTERP_SPECTRAL_DENSITY_HPP
#define WKINTERP_SPECTRAL_DENSITY_HPP

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <vector>

#include "wkinterp/frequency_grid.hpp"
#include "wkinterp/quadrature_grid.hpp"

namespace wkinterp {

/// Hermitian PSD matrix-valued spectral density sampled on a FrequencyGrid.
///
/// Real processes impose conjugate symmetry across lambda = 0 in addition to
/// Hermitian PSD samples; validate_density() reports defects of all three.
///
/// Beyond the grid the density is evaluated through its extension policy:
/// Zero (compact spectral support), Clamp (flat continuation, the white-noise
/// reading of a constant density) or InverseSquare (edge value decaying as
/// 1/lambda^2, the tail law of the rational families).
class SpectralDensity {
public:
    enum class Interpolation { PiecewiseLinear, Nearest };
    enum class Extension { Zero, Clamp, InverseSquare };

    SpectralDensity() = default;

    static SpectralDensity from_samples(const FrequencyGrid& grid,
                                        std::vector<Eigen::MatrixXcd> samples,
                                        Interpolation interp = Interpolation::PiecewiseLinear,
                                        Extension extension = Extension::Zero);

    static SpectralDensity from_function(const FrequencyGrid& grid, int dim,
                                         const std::function<Eigen::MatrixXcd(double)>& f,
                                         Interpolation interp = Interpolation::PiecewiseLinear,
                                         Extension extension = Extension::Zero);

    static SpectralDensity zero(const FrequencyGrid& grid, int dim);
    static SpectralDensity constant(const FrequencyGrid& grid, const Eigen::MatrixXcd& value,
                                    Extension extension = Extension::Clamp);
    /// Scalar family scale / (lambda^2 + c^2); extends by its own tail law.
    static SpectralDensity rational(const FrequencyGrid& grid, double scale, double c);
    /// Diagonal matrix density from per-component scalar densities (all on `grid`).
    static SpectralDensity diagonal(const FrequencyGrid& grid,
                                    const std::vector<SpectralDensity>& components);

    int dim() const { return dim_; }
    const FrequencyGrid& grid() const { return grid_; }
    Interpolation interpolation() const { return interp_; }
    Extension extension() const { return extension_; }

    /// Copy with a different extension policy.
    SpectralDensity with_extension(Extension extension) const;

    const Eigen::MatrixXcd& sample(std::size_t j) const { return samples_[j]; }
    Eigen::MatrixXcd& sample(std::size_t j) { return samples_[j]; }
    const std::vector<Eigen::MatrixXcd>& samples() const { return samples_; }

    /// Value at arbitrary lambda: interpolated inside the grid, extension
    /// policy outside.
    Eigen::MatrixXcd value_at(double lambda) const;

    /// Values on a working quadrature (density samples inside, policy tails).
    std::vector<Eigen::MatrixXcd> evaluate_on(const QuadratureGrid& q) const;

    bool is_zero(double tol = 0.0) const;

    SpectralDensity scaled(double factor) const;
    SpectralDensity plus(const SpectralDensity& other) const;

private:
    FrequencyGrid grid_;
    int dim_ = 0;
    Interpolation interp_ = Interpolation::PiecewiseLinear;
    Extension extension_ = Extension::Zero;
    std::vector<Eigen::MatrixXcd> samples_;
};

/// Per-frequency invariant defects of a density.
struct ValidationReport {
    bool passes = false;
    double hermitian_tol = 1e-10;      // relative
    double psd_tol = 1e-10;            // relative to the sample norm
    double symmetry_tol = 1e-10;       // relative

    std::vector<double> hermitian_defect;   // ||M - M*|| / max(1, ||M||)
    std::vector<double> min_eigenvalue;     // of the Hermitian part
    std::vector<double> symmetry_defect;    // ||M(-l) - conj(M(l))|| / max(1, ||M||)

    double max_hermitian_defect = 0.0;
    double worst_min_eigenvalue = 0.0;      // most negative, scaled by ||M||
    double max_symmetry_defect = 0.0;
    int worst_hermitian_index = -1;
    int worst_psd_index = -1;
    int worst_symmetry_index = -1;
};

ValidationReport validate_density(const SpectralDensity& density);

} // namespace wkinterp

#endif
