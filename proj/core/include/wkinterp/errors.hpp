#ifndef WKINTERP_ERRORS_HPP
#define WKINTERP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace wkinterp {

/// Base class for all failures raised by this library.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input: bad JSON, schema violation, inconsistent sizes.
class input_error : public error {
public:
    explicit input_error(const std::string& what) : error(what) {}
};

/// A density (or a density sum) is numerically singular where an inverse is needed.
class singular_density_error : public error {
public:
    explicit singular_density_error(const std::string& what) : error(what) {}
};

/// Unregularized solve requested on a system whose condition number exceeds the cap.
class ill_conditioned_error : public error {
public:
    explicit ill_conditioned_error(const std::string& what) : error(what) {}
};

/// Frequency or time grids of two objects do not match.
class grid_mismatch_error : public error {
public:
    explicit grid_mismatch_error(const std::string& what) : error(what) {}
};

/// Density class kind has no implementation for the requested operation.
class unsupported_class_error : public error {
public:
    explicit unsupported_class_error(const std::string& what) : error(what) {}
};

/// Class budget is incompatible with its pointwise bounds.
class infeasible_class_error : public error {
public:
    explicit infeasible_class_error(const std::string& what) : error(what) {}
};

/// Saddle point iteration stopped making progress above tolerance.
class stalled_error : public error {
public:
    explicit stalled_error(const std::string& what) : error(what) {}
};

/// An iterate of the saddle point search violates the minimality condition.
class minimality_lost_error : public error {
public:
    explicit minimality_lost_error(const std::string& what) : error(what) {}
};

/// The two independent evaluations of the mean-square error disagree.
class dual_form_mismatch_error : public error {
public:
    explicit dual_form_mismatch_error(const std::string& what) : error(what) {}
};

} // namespace wkinterp

#endif
