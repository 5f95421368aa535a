#ifndef WKINTERP_ESTIMATOR_HPP
#define WKINTERP_ESTIMATOR_HPP

#include <optional>
#include <vector>

#include "wkinterp/operator_system.hpp"
#include "wkinterp/quadrature_grid.hpp"
#include "wkinterp/transforms.hpp"

namespace wkinterp {

/// Spectral characteristic h(lambda) and the transform C(lambda) of c(t),
/// sampled on a working quadrature grid.
struct Characteristic {
    SpectralVectorField h;
    SpectralVectorField C;
};

/// h^T = A^T F (F+G)^{-1} - C^T (F+G)^{-1}; with exact observations (G = 0)
/// the reduced form h^T = A^T - C^T F^{-1}. Evaluated on `q`.
Characteristic spectral_characteristic(const SpectralDensity& F, const SpectralDensity& G,
                                       const SolutionC& c, const SpectralVectorField& A,
                                       const MissingSet& S, const QuadratureGrid& q,
                                       bool noiseless);

struct MseForms {
    double operator_form = 0.0; // <Ra, B^{-1}Ra> + <Qa, a>   (or <B^{-1}a, a> without noise)
    double spectral_form = 0.0; // (1/2pi) int (A-h)^T F conj(A-h) + (1/2pi) int h^T G conj(h)
};

MseForms mse(const OperatorSystem& sys, const SolutionC& c, const WeightFunction& a,
             const SpectralDensity& F, const SpectralDensity& G, const SpectralVectorField& h,
             const SpectralVectorField& A, const QuadratureGrid& q, bool noiseless);

/// Value of the error functional for an arbitrary characteristic h0 under
/// (F, G); linear in (F, G) for fixed h0. Fields live on `q`.
double cross_mse(const SpectralVectorField& h0, const SpectralVectorField& A,
                 const SpectralDensity& F, const SpectralDensity& G, const QuadratureGrid& q);

struct OrthogonalityReport {
    double max_residual = 0.0;
    std::vector<double> residuals; // one per sample point
};

/// Residual of the projection condition
/// (1/2pi) int [A^T F - h^T (F+G)] e^{-it lambda} d lambda at points outside S.
OrthogonalityReport verify_orthogonality(const SpectralVectorField& h, const SpectralVectorField& A,
                                         const SpectralDensity& F, const SpectralDensity& G,
                                         const QuadratureGrid& q,
                                         const std::vector<double>& t_samples);

struct EstimateOptions {
    std::optional<double> tikhonov;   // default: default_tikhonov of the assembled system
    double form_agreement_tol = 1e-4; // relative gap allowed between the two Delta forms
    bool check_form_agreement = true;
};

struct EstimateSolution {
    QuadratureGrid qgrid;    // working quadrature carrying h, C, A
    SpectralVectorField h, C, A;
    SolutionC c;
    double delta = 0.0; // the spectral form; both forms must agree to form_agreement_tol
    double delta_operator_form = 0.0;
    double delta_spectral_form = 0.0;
    double condition_number = 0.0;
    double solve_residual = 0.0;
    bool noiseless = false;

    /// Slice of a field covering the density grid (for reports and I/O).
    SpectralVectorField on_density_grid(const SpectralVectorField& field) const;
};

/// Full pipeline: assemble, solve for c, form h and both error evaluations.
/// Throws dual_form_mismatch_error if the two Delta routes disagree.
EstimateSolution estimate(const SpectralDensity& F, const SpectralDensity& G, const MissingSet& S,
                          const WeightFunction& a, const FrequencyGrid& grid,
                          const EstimateOptions& opts = {});

/// Same pipeline on a pre-assembled system (used by the saddle point loop and
/// the operator cache).
EstimateSolution estimate_with_system(const OperatorSystem& sys, const SpectralDensity& F,
                                      const SpectralDensity& G, const MissingSet& S,
                                      const WeightFunction& a, const FrequencyGrid& grid,
                                      const EstimateOptions& opts = {});

} // namespace wkinterp

#endif
