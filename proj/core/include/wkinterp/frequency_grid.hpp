#ifndef WKINTERP_FREQUENCY_GRID_HPP
#define WKINTERP_FREQUENCY_GRID_HPP

#include <cstddef>
#include <vector>

namespace wkinterp {

/// Uniform symmetric grid on [-lambda_max, lambda_max] with trapezoid weights.
///
/// All frequency integrals in the library are truncated to this grid, so
/// lambda_max and n_points together form the convergence knob: doubling both
/// should leave desk-scale results unchanged at the documented tolerances.
class FrequencyGrid {
public:
    FrequencyGrid() = default; // empty grid; fill via make()

    /// n_points must be odd (lambda = 0 is a node) and >= 3.
    static FrequencyGrid make(double lambda_max, int n_points);

    double lambda_max() const { return lambda_max_; }
    int n_points() const { return n_points_; }
    double spacing() const { return spacing_; }
    std::size_t size() const { return nodes_.size(); }
    int center_index() const { return (n_points_ - 1) / 2; }

    double node(std::size_t j) const { return nodes_[j]; }
    double weight(std::size_t j) const { return weights_[j]; }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& weights() const { return weights_; }

    /// Index of the node mirrored about lambda = 0.
    std::size_t mirror(std::size_t j) const { return nodes_.size() - 1 - j; }

    bool same_as(const FrequencyGrid& other, double tol = 1e-12) const;

private:
    double lambda_max_ = 0.0;
    int n_points_ = 0;
    double spacing_ = 0.0;
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

} // namespace wkinterp

#endif
