#ifndef WKINTERP_QUADRATURE_GRID_HPP
#define WKINTERP_QUADRATURE_GRID_HPP

#include <cstddef>
#include <vector>

#include "wkinterp/frequency_grid.hpp"
#include "wkinterp/missing_set.hpp"

namespace wkinterp {

/// Working frequency quadrature: the density grid plus symmetric tail blocks
/// reaching the Nyquist rate of the time discretization. Densities are
/// evaluated on the tails through their extension policy; without tails this
/// is exactly the density grid.
///
/// Rationale: operator symbols like (F+G)^{-1} grow where the density decays,
/// so their kernel integrals are not captured by the density truncation; the
/// tails restore the continuum equation while the density grid remains the
/// user-facing sampling.
class QuadratureGrid {
public:
    QuadratureGrid() = default;

    /// Density grid only (no tails).
    static QuadratureGrid from(const FrequencyGrid& grid);

    /// Density grid extended to max(lambda_max, pi / min time step of S).
    static QuadratureGrid extended(const FrequencyGrid& grid, const MissingSet& S);

    /// Same, with an explicit Nyquist target.
    static QuadratureGrid extended_to(const FrequencyGrid& grid, double nyquist);

    std::size_t size() const { return nodes_.size(); }
    double node(std::size_t j) const { return nodes_[j]; }
    double weight(std::size_t j) const { return weights_[j]; }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& weights() const { return weights_; }

    int center_index() const { return center_; }
    std::size_t mirror(std::size_t j) const { return nodes_.size() - 1 - j; }

    /// [first, first + count) indices covering the embedded density grid.
    std::size_t density_first() const { return density_first_; }
    std::size_t density_count() const { return density_count_; }

    double lambda_max() const { return nodes_.empty() ? 0.0 : nodes_.back(); }
    double density_lambda_max() const { return density_lambda_max_; }
    bool has_tails() const { return density_count_ != nodes_.size(); }

private:
    std::vector<double> nodes_;
    std::vector<double> weights_;
    int center_ = 0;
    std::size_t density_first_ = 0;
    std::size_t density_count_ = 0;
    double density_lambda_max_ = 0.0;
};

} // namespace wkinterp

#endif
