#include "wkinterp/quadrature_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wkinterp {

QuadratureGrid QuadratureGrid::from(const FrequencyGrid& grid) {
    QuadratureGrid q;
    q.nodes_ = grid.nodes();
    q.weights_ = grid.weights();
    q.center_ = grid.center_index();
    q.density_first_ = 0;
    q.density_count_ = grid.size();
    q.density_lambda_max_ = grid.lambda_max();
    return q;
}

QuadratureGrid QuadratureGrid::extended(const FrequencyGrid& grid, const MissingSet& S) {
    double min_step = std::numeric_limits<double>::max();
    for (std::size_t l = 0; l < S.interval_count(); ++l) {
        min_step = std::min(min_step, S.interval_step(l));
    }
    return extended_to(grid, M_PI / min_step);
}

QuadratureGrid QuadratureGrid::extended_to(const FrequencyGrid& grid, double nyquist) {
    if (nyquist <= grid.lambda_max() * (1.0 + 1e-12)) {
        return from(grid);
    }
    // Tail blocks [lambda_max, nyquist], coarser than the density grid: the
    // tail integrands oscillate no faster than e^{i lambda tau} with tau a few
    // time units, so a step of ~1/8 rad resolves them.
    const double spacing = std::clamp(4.0 * grid.spacing(), grid.spacing(),
                                      std::max(grid.spacing(), 0.125));
    const auto segments =
        std::max<std::size_t>(1, static_cast<std::size_t>(
                                     std::ceil((nyquist - grid.lambda_max()) / spacing - 1e-9)));
    const double h = (nyquist - grid.lambda_max()) / static_cast<double>(segments);

    QuadratureGrid q;
    const std::size_t tail = segments + 1;
    q.nodes_.reserve(grid.size() + 2 * tail);
    q.weights_.reserve(grid.size() + 2 * tail);

    for (std::size_t k = 0; k < tail; ++k) {
        const std::size_t back = tail - 1 - k;
        q.nodes_.push_back(-(grid.lambda_max() + static_cast<double>(back) * h));
        q.weights_.push_back((back == 0 || back == segments) ? 0.5 * h : h);
    }
    q.density_first_ = q.nodes_.size();
    for (std::size_t j = 0; j < grid.size(); ++j) {
        q.nodes_.push_back(grid.node(j));
        q.weights_.push_back(grid.weight(j));
    }
    q.density_count_ = grid.size();
    for (std::size_t k = 0; k < tail; ++k) {
        q.nodes_.push_back(grid.lambda_max() + static_cast<double>(k) * h);
        q.weights_.push_back((k == 0 || k == segments) ? 0.5 * h : h);
    }
    q.center_ = static_cast<int>(q.density_first_) + grid.center_index();
    q.density_lambda_max_ = grid.lambda_max();
    return q;
}

} // namespace wkinterp
