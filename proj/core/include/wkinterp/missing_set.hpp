#ifndef WKINTERP_MISSING_SET_HPP
#define WKINTERP_MISSING_SET_HPP

#include <cstddef>
#include <utility>
#include <vector>

namespace wkinterp {

struct Interval {
    double left = 0.0;
    double right = 0.0;
    double length() const { return right - left; }
};

/// Finite union of disjoint closed intervals on the nonpositive axis where the
/// process is unobserved, together with a composite trapezoid rule on each
/// interval. Immutable after construction.
class MissingSet {
public:
    MissingSet() = default; // empty set; fill via make()

    /// time_step <= 0 selects the default step length/256 per interval.
    static MissingSet make(std::vector<Interval> intervals, double time_step = 0.0);

    const std::vector<Interval>& intervals() const { return intervals_; }
    std::size_t interval_count() const { return intervals_.size(); }

    /// Flattened quadrature nodes over all intervals, ascending within each interval.
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& node_weights() const { return weights_; }
    std::size_t node_count() const { return nodes_.size(); }

    /// [first, last) node index range of interval l.
    std::pair<std::size_t, std::size_t> interval_range(std::size_t l) const { return ranges_[l]; }

    /// Actual step used inside interval l (snapped so nodes hit both endpoints).
    double interval_step(std::size_t l) const { return steps_[l]; }

    double requested_step() const { return requested_step_; }
    double total_length() const { return total_length_; }

    bool contains(double t, double tol = 1e-12) const;

    bool same_as(const MissingSet& other, double tol = 1e-12) const;

private:
    std::vector<Interval> intervals_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
    std::vector<std::pair<std::size_t, std::size_t>> ranges_;
    std::vector<double> steps_;
    double requested_step_ = 0.0;
    double total_length_ = 0.0;
};

} // namespace wkinterp

#endif
