#ifndef WKINTERP_WEIGHT_FUNCTION_HPP
#define WKINTERP_WEIGHT_FUNCTION_HPP

#include <Eigen/Dense>

#include <functional>
#include <string>

#include "wkinterp/missing_set.hpp"

namespace wkinterp {

/// Real vector-valued weight a(t) given by its values at the MissingSet nodes.
/// Also serves as the minimality probe alpha(t).
class WeightFunction {
public:
    WeightFunction() = default;

    /// values is dim x node_count, column k = a(t_k).
    static WeightFunction from_values(const MissingSet& set, Eigen::MatrixXd values);

    static WeightFunction from_function(const MissingSet& set, int dim,
                                        const std::function<Eigen::VectorXd(double)>& f);

    /// a(t) = value (same vector at every node).
    static WeightFunction constant(const MissingSet& set, const Eigen::VectorXd& value);

    /// Named scalar profiles broadcast across all components:
    ///   "one"        a  = 1
    ///   "t"          a  = t
    ///   "abs_t"      a  = |t|
    ///   "sin_sq_pi"  a  = sin^2(pi t)
    static WeightFunction from_expression(const MissingSet& set, const std::string& id, int dim);

    int dim() const { return static_cast<int>(values_.rows()); }
    std::size_t node_count() const { return static_cast<std::size_t>(values_.cols()); }
    const Eigen::MatrixXd& values() const { return values_; }
    Eigen::VectorXd at_node(std::size_t k) const { return values_.col(static_cast<Eigen::Index>(k)); }

    /// Integrals behind the finiteness conditions on a(t): the summed L1 mass of
    /// the components and the |t|-weighted squared norm. Informational only.
    struct IntegrabilityReport {
        double l1_integral = 0.0;
        double weighted_sq_integral = 0.0;
    };
    IntegrabilityReport integrability(const MissingSet& set) const;

private:
    Eigen::MatrixXd values_;
};

} // namespace wkinterp

#endif
