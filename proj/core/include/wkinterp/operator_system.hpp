#ifndef WKINTERP_OPERATOR_SYSTEM_HPP
#define WKINTERP_OPERATOR_SYSTEM_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>

#include "wkinterp/frequency_grid.hpp"
#include "wkinterp/missing_set.hpp"
#include "wkinterp/quadrature_grid.hpp"
#include "wkinterp/spectral_density.hpp"
#include "wkinterp/weight_function.hpp"

namespace wkinterp {

/// Discretized integral operators on L2(S).
///
/// Matrices are stored in weight-symmetrized coordinates: the (i,j) block is
/// sqrt(w_i w_j) K(t_j - t_i)^T where K is the frequency quadrature of the
/// operator symbol ((F+G)^{-1} for B, F(F+G)^{-1} for R, F(F+G)^{-1}G for Q).
/// In these coordinates B and Q are Hermitian PSD and the L2(S) inner product
/// is the plain complex dot product. Node values x map to W^{1/2} x (lift) and
/// back (lower). Index layout is node-major: entry k*dim + component.
///
/// Kernel quadrature runs on the Nyquist-extended grid (see QuadratureGrid):
/// the inverse symbols grow where the densities decay, so stopping at the
/// density truncation loses the continuum equation. Where the extended sum
/// F+G falls below a floor (zero-extended densities), the inversion is
/// floored, which prices spectral content beyond the density support out of
/// the solution.
struct OperatorSystem {
    int dim = 0;
    std::vector<double> nodes;    // flattened S quadrature nodes (m total)
    std::vector<double> weights;  // matching trapezoid weights

    Eigen::MatrixXcd B, R, Q;     // (dim*m) x (dim*m)

    // Eigendecomposition of the Hermitian part of B, reused by the solver.
    Eigen::VectorXd eig_B;
    Eigen::MatrixXcd basis_B;

    double condition_number_B = 0.0;
    double min_eig_B = 0.0, max_eig_B = 0.0, min_eig_Q = 0.0;
    double hermitian_defect_B = 0.0, hermitian_defect_Q = 0.0;
    double toeplitz_defect = 0.0; // max block deviation from the lag-table kernel

    std::size_t node_count() const { return nodes.size(); }
    Eigen::Index stacked_size() const { return static_cast<Eigen::Index>(nodes.size()) * dim; }

    /// W^{1/2}-scaled stacking of node values (dim x m).
    Eigen::VectorXcd lift(const Eigen::MatrixXcd& values) const;
    Eigen::VectorXcd lift(const WeightFunction& a) const;
    /// Inverse of lift: stacked coordinates back to node values.
    Eigen::MatrixXcd lower(const Eigen::VectorXcd& stacked) const;
};

/// Assembles B, R, Q by frequency quadrature of the three kernels, computed
/// once per distinct lag. Throws singular_density_error when F+G is
/// numerically singular at a grid node.
OperatorSystem assemble_system(const SpectralDensity& F, const SpectralDensity& G,
                               const MissingSet& S, const FrequencyGrid& grid);

enum class SolveMode { Noisy, Noiseless };

struct SolutionC {
    Eigen::MatrixXcd c;       // dim x m node values
    Eigen::VectorXcd c_hat;   // solution in lifted coordinates
    Eigen::VectorXcd rhs_hat; // right-hand side in lifted coordinates
    double regularization_used = 0.0;
    double residual = 0.0;    // ||B c_hat - rhs_hat|| / ||rhs_hat|| against the unregularized B
};

/// 1e-8 * trace(B) / m; the documented default regularization scale.
double default_tikhonov(const OperatorSystem& sys);

/// Solves B c = R a (noisy) or B c = a (noiseless) in lifted coordinates by a
/// truncated eigenvalue expansion: modes of B below the threshold `tikhonov`
/// are dropped, the rest inverted exactly. This keeps the operator-form and
/// spectral-form error evaluations consistent (a ridge shifts them apart by
/// eps ||c||^2) while still damping the unresolved tail of the first-kind
/// equation. Throws ill_conditioned_error when tikhonov = 0 and
/// cond(B) > 1e12.
SolutionC solve_c(const OperatorSystem& sys, const WeightFunction& a, SolveMode mode,
                  double tikhonov);

/// Binary cache of an assembled system. Matrix payload is row-major complex64
/// (float32 re/im pairs); header carries dims and the content hash.
void save_operator_cache(const std::string& path, const OperatorSystem& sys, std::uint64_t hash);
std::optional<OperatorSystem> load_operator_cache(const std::string& path, std::uint64_t expected_hash);

} // namespace wkinterp

#endif
