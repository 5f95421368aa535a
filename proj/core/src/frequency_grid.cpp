#include "wkinterp/frequency_grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace wkinterp {

FrequencyGrid FrequencyGrid::make(double lambda_max, int n_points) {
    if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) {
        throw std::invalid_argument("FrequencyGrid: lambda_max must be positive, got " +
                                    std::to_string(lambda_max));
    }
    if (n_points < 3 || n_points % 2 == 0) {
        throw std::invalid_argument("FrequencyGrid: n_points must be odd and >= 3, got " +
                                    std::to_string(n_points));
    }
    FrequencyGrid g;
    g.lambda_max_ = lambda_max;
    g.n_points_ = n_points;
    g.spacing_ = 2.0 * lambda_max / static_cast<double>(n_points - 1);
    g.nodes_.resize(static_cast<std::size_t>(n_points));
    g.weights_.resize(static_cast<std::size_t>(n_points));
    const int half = (n_points - 1) / 2;
    for (int j = 0; j < n_points; ++j) {
        // Symmetric by construction: node(j) = (j - half) * spacing.
        g.nodes_[static_cast<std::size_t>(j)] = static_cast<double>(j - half) * g.spacing_;
        const bool endpoint = (j == 0 || j == n_points - 1);
        g.weights_[static_cast<std::size_t>(j)] = endpoint ? 0.5 * g.spacing_ : g.spacing_;
    }
    return g;
}

bool FrequencyGrid::same_as(const FrequencyGrid& other, double tol) const {
    return n_points_ == other.n_points_ &&
           std::abs(lambda_max_ - other.lambda_max_) <= tol * (1.0 + std::abs(lambda_max_));
}

} // namespace wkinterp
