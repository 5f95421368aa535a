#include "wkinterp/transforms.hpp"

#include <cmath>
#include <complex>

#include "wkinterp/errors.hpp"
#include "wkinterp/parallel.hpp"

namespace wkinterp {

namespace {

template <typename GridLike>
SpectralVectorField transform_impl(const Eigen::MatrixXcd& values, const MissingSet& set,
                                   const GridLike& grid) {
    if (static_cast<std::size_t>(values.cols()) != set.node_count()) {
        throw grid_mismatch_error("exponential_transform: node count mismatch");
    }
    const auto dim = values.rows();
    const std::size_t n = grid.size();
    SpectralVectorField out(n, Eigen::VectorXcd::Zero(dim));
    const auto& nodes = set.nodes();
    const auto& weights = set.node_weights();

    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            const double lambda = grid.node(j);
            Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(dim);
            for (std::size_t k = 0; k < nodes.size(); ++k) {
                const std::complex<double> phase = std::polar(weights[k], nodes[k] * lambda);
                acc += phase * values.col(static_cast<Eigen::Index>(k));
            }
            out[j] = std::move(acc);
        }
    });
    return out;
}

} // namespace

SpectralVectorField exponential_transform(const WeightFunction& a, const MissingSet& set,
                                          const FrequencyGrid& grid) {
    return transform_impl(a.values().cast<std::complex<double>>(), set, grid);
}

SpectralVectorField exponential_transform(const Eigen::MatrixXcd& values, const MissingSet& set,
                                          const FrequencyGrid& grid) {
    return transform_impl(values, set, grid);
}

SpectralVectorField exponential_transform(const WeightFunction& a, const MissingSet& set,
                                          const QuadratureGrid& q) {
    return transform_impl(a.values().cast<std::complex<double>>(), set, q);
}

SpectralVectorField exponential_transform(const Eigen::MatrixXcd& values, const MissingSet& set,
                                          const QuadratureGrid& q) {
    return transform_impl(values, set, q);
}

MinimalityReport minimality_check(const SpectralDensity& sum_density, const WeightFunction& probe,
                                  const MissingSet& set, const FrequencyGrid& grid) {
    if (!sum_density.grid().same_as(grid)) {
        throw grid_mismatch_error("minimality_check: density grid mismatch");
    }
    const SpectralVectorField b = exponential_transform(probe, set, grid);
    const std::size_t n = grid.size();
    std::vector<double> integrand(n, 0.0);

    for (std::size_t j = 0; j < n; ++j) {
        const Eigen::MatrixXcd& m = sum_density.sample(j);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (m + m.adjoint()));
        if (es.eigenvalues().minCoeff() <= 1e-12) {
            throw singular_density_error("minimality_check: F+G numerically singular at lambda = " +
                                         std::to_string(grid.node(j)));
        }
        // b^T M^{-1} conj(b) = u^* M^{-1} u with u = conj(b); real and nonnegative.
        const Eigen::VectorXcd u = b[j].conjugate();
        const Eigen::VectorXcd solved = es.operatorInverseSqrt() * u;
        integrand[j] = solved.squaredNorm();
    }

    MinimalityReport rep;
    double tail_sum = 0.0;
    std::size_t tail_count = 0;
    const double tail_cut = 0.8 * grid.lambda_max();
    for (std::size_t j = 0; j < n; ++j) {
        rep.value += grid.weight(j) * integrand[j];
        rep.peak = std::max(rep.peak, integrand[j]);
        if (std::abs(grid.node(j)) >= tail_cut) {
            tail_sum += integrand[j];
            ++tail_count;
        }
    }
    rep.tail_average = tail_count > 0 ? tail_sum / static_cast<double>(tail_count) : 0.0;
    rep.divergence_flag = rep.tail_average > 1e-3 * rep.peak;
    return rep;
}

} // namespace wkinterp
