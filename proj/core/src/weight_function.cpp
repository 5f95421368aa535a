#include "wkinterp/weight_function.hpp"

#include <cmath>

#include "wkinterp/errors.hpp"

namespace wkinterp {

WeightFunction WeightFunction::from_values(const MissingSet& set, Eigen::MatrixXd values) {
    if (static_cast<std::size_t>(values.cols()) != set.node_count()) {
        throw input_error("WeightFunction: " + std::to_string(values.cols()) +
                          " columns for " + std::to_string(set.node_count()) + " nodes");
    }
    if (!values.allFinite()) {
        throw input_error("WeightFunction: values must be finite");
    }
    WeightFunction a;
    a.values_ = std::move(values);
    return a;
}

WeightFunction WeightFunction::from_function(const MissingSet& set, int dim,
                                             const std::function<Eigen::VectorXd(double)>& f) {
    Eigen::MatrixXd values(dim, static_cast<Eigen::Index>(set.node_count()));
    for (std::size_t k = 0; k < set.node_count(); ++k) {
        Eigen::VectorXd v = f(set.nodes()[k]);
        if (v.size() != dim) throw input_error("WeightFunction: generator returned wrong dimension");
        values.col(static_cast<Eigen::Index>(k)) = v;
    }
    return from_values(set, std::move(values));
}

WeightFunction WeightFunction::constant(const MissingSet& set, const Eigen::VectorXd& value) {
    return from_function(set, static_cast<int>(value.size()), [&](double) { return value; });
}

WeightFunction WeightFunction::from_expression(const MissingSet& set, const std::string& id, int dim) {
    std::function<double(double)> scalar;
    if (id == "one") {
        scalar = [](double) { return 1.0; };
    } else if (id == "t") {
        scalar = [](double t) { return t; };
    } else if (id == "abs_t") {
        scalar = [](double t) { return std::abs(t); };
    } else if (id == "sin_sq_pi") {
        scalar = [](double t) { const double s = std::sin(M_PI * t); return s * s; };
    } else {
        throw input_error("WeightFunction: unknown expression id '" + id + "'");
    }
    return from_function(set, dim, [&](double t) {
        return Eigen::VectorXd::Constant(dim, scalar(t)).eval();
    });
}

WeightFunction::IntegrabilityReport WeightFunction::integrability(const MissingSet& set) const {
    if (node_count() != set.node_count()) {
        throw grid_mismatch_error("WeightFunction::integrability: node count mismatch");
    }
    IntegrabilityReport rep;
    for (std::size_t k = 0; k < set.node_count(); ++k) {
        const double w = set.node_weights()[k];
        const double t = set.nodes()[k];
        rep.l1_integral += w * values_.col(static_cast<Eigen::Index>(k)).cwiseAbs().sum();
        // |t| rather than t: the nodes are nonpositive and the report must be a mass.
        rep.weighted_sq_integral += w * std::abs(t) * values_.col(static_cast<Eigen::Index>(k)).squaredNorm();
    }
    return rep;
}

} // namespace wkinterp
