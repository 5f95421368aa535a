#ifndef WKINTERP_TRANSFORMS_HPP
#define WKINTERP_TRANSFORMS_HPP

#include <Eigen/Dense>

#include <complex>
#include <vector>

#include "wkinterp/frequency_grid.hpp"
#include "wkinterp/missing_set.hpp"
#include "wkinterp/spectral_density.hpp"
#include "wkinterp/weight_function.hpp"

namespace wkinterp {

/// One complex T-vector per frequency node; used for A(lambda), b(lambda),
/// C(lambda) and the spectral characteristic h(lambda).
using SpectralVectorField = std::vector<Eigen::VectorXcd>;

/// A(lambda) = sum_l integral over interval l of a(t) e^{i t lambda} dt,
/// evaluated with the MissingSet's trapezoid rule at every grid node.
SpectralVectorField exponential_transform(const WeightFunction& a, const MissingSet& set,
                                          const FrequencyGrid& grid);

/// Same transform for complex node values (used for c(t) -> C(lambda)).
SpectralVectorField exponential_transform(const Eigen::MatrixXcd& values, const MissingSet& set,
                                          const FrequencyGrid& grid);

/// Working-quadrature variants (tail nodes included).
SpectralVectorField exponential_transform(const WeightFunction& a, const MissingSet& set,
                                          const QuadratureGrid& q);
SpectralVectorField exponential_transform(const Eigen::MatrixXcd& values, const MissingSet& set,
                                          const QuadratureGrid& q);

struct MinimalityReport {
    double value = 0.0;          // integral of b^T (F+G)^{-1} conj(b) over the grid
    bool divergence_flag = false;
    double tail_average = 0.0;   // mean integrand over the outer 20% of the grid
    double peak = 0.0;           // max integrand
};

/// Truncated-grid minimality check for the probe alpha. Throws
/// singular_density_error if sum_density has a near-singular sample.
MinimalityReport minimality_check(const SpectralDensity& sum_density, const WeightFunction& probe,
                                  const MissingSet& set, const FrequencyGrid& grid);

} // namespace wkinterp

#endif
