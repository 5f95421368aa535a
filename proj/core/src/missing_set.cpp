#include "wkinterp/missing_set.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace wkinterp {

MissingSet MissingSet::make(std::vector<Interval> intervals, double time_step) {
    if (intervals.empty()) {
        throw std::invalid_argument("MissingSet: need at least one interval");
    }
    std::sort(intervals.begin(), intervals.end(),
              [](const Interval& a, const Interval& b) { return a.left < b.left; });
    for (std::size_t l = 0; l < intervals.size(); ++l) {
        const Interval& iv = intervals[l];
        if (!(iv.right > iv.left)) {
            throw std::invalid_argument("MissingSet: interval " + std::to_string(l) +
                                        " has right <= left");
        }
        if (iv.right > 0.0) {
            throw std::invalid_argument("MissingSet: interval " + std::to_string(l) +
                                        " extends past t = 0");
        }
        if (l > 0 && intervals[l - 1].right >= iv.left) {
            throw std::invalid_argument("MissingSet: intervals overlap or touch");
        }
    }

    MissingSet s;
    s.intervals_ = std::move(intervals);
    s.requested_step_ = time_step;
    for (const Interval& iv : s.intervals_) {
        const double len = iv.length();
        s.total_length_ += len;
        const double want = time_step > 0.0 ? time_step : len / 256.0;
        const auto segments = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(len / want)));
        const double h = len / static_cast<double>(segments);
        const std::size_t first = s.nodes_.size();
        for (std::size_t k = 0; k <= segments; ++k) {
            s.nodes_.push_back(iv.left + static_cast<double>(k) * h);
            const bool endpoint = (k == 0 || k == segments);
            s.weights_.push_back(endpoint ? 0.5 * h : h);
        }
        s.nodes_.back() = iv.right; // exact endpoint
        s.ranges_.emplace_back(first, s.nodes_.size());
        s.steps_.push_back(h);
    }
    return s;
}

bool MissingSet::contains(double t, double tol) const {
    for (const Interval& iv : intervals_) {
        if (t >= iv.left - tol && t <= iv.right + tol) return true;
    }
    return false;
}

bool MissingSet::same_as(const MissingSet& other, double tol) const {
    if (nodes_.size() != other.nodes_.size()) return false;
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        if (std::abs(nodes_[k] - other.nodes_[k]) > tol) return false;
    }
    return true;
}

} // namespace wkinterp
