#ifndef WKINTERP_DENSITY_CLASS_HPP
#define WKINTERP_DENSITY_CLASS_HPP

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "wkinterp/spectral_density.hpp"

namespace wkinterp {

/// Admissible-density families. Trace/Component/Weighted/Matrix mirror the
/// four constraint styles of each family: scalar trace moment, per-component
/// moments, <B,.> weighted moment, and full matrix moment. Eps* are the
/// contamination classes around a reference G1, Strip* the pointwise band
/// [V, U] with a moment budget, Ball* the L2 neighborhoods of G1.
enum class ClassKind {
    Singleton,
    D0Trace,
    D0Component,
    D0Weighted,
    D0Matrix,
    EpsTrace,
    EpsComponent,
    EpsWeighted,
    EpsMatrix,
    StripTrace,
    StripComponent,
    StripWeighted,
    StripMatrix,
    BallTrace,
    BallComponent,
    BallWeighted,
    BallEntry,
};

std::string class_kind_name(ClassKind kind);
ClassKind class_kind_from_name(const std::string& name);

struct DensityClass {
    ClassKind kind = ClassKind::Singleton;
    int dim = 1;

    double budget = 0.0;            // p or q
    Eigen::VectorXd budget_k;       // p_k / q_k
    Eigen::MatrixXcd budget_mat;    // P or Q

    double eps = 0.0;               // contamination fraction, in [0, 1]
    double radius = 0.0;            // delta
    Eigen::VectorXd radius_k;       // delta_k
    Eigen::MatrixXd radius_ij;      // delta_i^j

    Eigen::MatrixXcd weight_mat;    // B1 / B2

    std::optional<SpectralDensity> reference; // G1, or the singleton member
    std::optional<SpectralDensity> lower;     // V
    std::optional<SpectralDensity> upper;     // U

    std::string name() const { return class_kind_name(kind); }
};

struct ConstraintDefect {
    std::string what;
    double defect = 0.0;
    int index = -1; // frequency index when pointwise, -1 for integral constraints
};

struct MembershipReport {
    bool member = false;
    double max_defect = 0.0;
    double tol = 1e-8;
    std::vector<ConstraintDefect> violations;
};

/// Evaluates every defining equality/inequality of the class by quadrature.
MembershipReport project_membership(const DensityClass& cls, const SpectralDensity& X);

/// A deterministic member used to start the saddle point iteration.
SpectralDensity class_initial_member(const DensityClass& cls, const FrequencyGrid& grid);

/// A random member (used for saddle verification probes and tests).
SpectralDensity class_random_member(const DensityClass& cls, const FrequencyGrid& grid,
                                    std::mt19937_64& rng);

/// True for the kinds the linear maximizer handles (singleton plus the
/// trace/component constraint styles). Weighted and matrix styles are
/// diagnostics-only.
bool class_is_optimizable(ClassKind kind);

/// Quadrature helpers shared by the class machinery and the KKT diagnostics.
double trace_integral(const SpectralDensity& X);
double component_integral(const SpectralDensity& X, int k);
double weighted_integral(const SpectralDensity& X, const Eigen::MatrixXcd& B);
Eigen::MatrixXcd matrix_integral(const SpectralDensity& X);
double matrix_inner(const Eigen::MatrixXcd& B, const Eigen::MatrixXcd& X);

} // namespace wkinterp

#endif
