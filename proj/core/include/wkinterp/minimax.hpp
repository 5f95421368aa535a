#ifndef WKINTERP_MINIMAX_HPP
#define WKINTERP_MINIMAX_HPP

#include <cstdint>
#include <optional>
#include <utility>

#include "wkinterp/density_class.hpp"
#include "wkinterp/estimator.hpp"

namespace wkinterp {

/// Maximizes the (F,G)-linear functional Delta(h0; F, G) over D_F x D_G.
/// Per frequency the quadratic gain directions are conj(A - h0) for F and
/// conj(h0) for G, given on the density grid; under trace-style budgets the
/// maximizer is an extreme point: spiked mass allocation (moment classes),
/// greedy band fill (strip), or a radius-scaled aligned deviation (L2 ball).
/// Returned members are zero-extended beyond the density grid. Weighted and
/// matrix constraint styles raise unsupported_class_error.
std::pair<SpectralDensity, SpectralDensity> maximize_linear(const SpectralVectorField& h0,
                                                            const SpectralVectorField& A,
                                                            const DensityClass& class_F,
                                                            const DensityClass& class_G,
                                                            const FrequencyGrid& grid);

/// Single-side version; `direction` is the per-frequency gain vector on the
/// density grid.
SpectralDensity maximize_side(const DensityClass& cls, const SpectralVectorField& direction,
                              const FrequencyGrid& grid);

struct SaddleOptions {
    double tol = 1e-4;
    int max_iter = 500;
    int probes = 32;
    std::uint64_t probe_seed = 2024;
    std::optional<double> tikhonov;
    int stall_window = 50;
};

struct SaddlePoint {
    SpectralDensity F0, G0;
    QuadratureGrid qgrid;           // working quadrature carrying the fields
    SpectralVectorField h0, C0, A;
    double delta0 = 0.0;
    int iterations = 0;
    bool converged = false;
    double gap = 0.0;        // certified: max over the class of Delta(h0;F,G) - delta0
    double probe_gap = 0.0;  // same gap sampled at random members
    std::vector<double> delta_trace;
};

/// Conditional-gradient search for the least favorable pair: alternates the
/// exact estimate h(F,G) with a line-searched step toward the linear
/// maximizer. Throws stalled_error when the gap stops shrinking above tol and
/// minimality_lost_error when an iterate makes F+G numerically singular.
SaddlePoint saddle_iterate(const DensityClass& class_F, const DensityClass& class_G,
                           const WeightFunction& a, const MissingSet& S, const FrequencyGrid& grid,
                           const SaddleOptions& opts = {},
                           std::optional<SpectralDensity> F_init = std::nullopt,
                           std::optional<SpectralDensity> G_init = std::nullopt);

} // namespace wkinterp

#endif
