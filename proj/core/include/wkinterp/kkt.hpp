#ifndef WKINTERP_KKT_HPP
#define WKINTERP_KKT_HPP

#include <map>
#include <string>
#include <vector>

#include "wkinterp/density_class.hpp"
#include "wkinterp/minimax.hpp"
#include "wkinterp/transforms.hpp"

namespace wkinterp {

/// Residuals of the least-favorable-density relations at a candidate pair
/// (F0, G0). Each relation is reduced to "middle(lambda) = multiplier
/// structure" by sandwiching with (F0+G0)^{-1}; multipliers are fitted by
/// weighted least squares and the leftover norm is reported relative to the
/// middle field's norm. Slackness and sign defects follow the stated
/// activity conditions of each class.
struct KKTResiduals {
    std::string pair_name;
    std::string note; // records ambiguities in the source relations, if any

    double residual_first = 0.0;  // relation carrying the F-class multipliers
    double residual_second = 0.0; // relation carrying the G-class multipliers

    std::map<std::string, double> multipliers; // alpha2, beta2, alpha2_k, ...
    Eigen::VectorXcd alpha_vec, beta_vec;      // matrix-style rank-1 multipliers

    std::vector<double> gamma_first;  // per-frequency multiplier (scalar styles)
    std::vector<double> gamma_second;

    double slackness_defect = 0.0;     // primary activity reading
    double slackness_defect_alt = 0.0; // alternate reading where the text is ambiguous
    double sign_defect = 0.0;          // violations of the stated multiplier signs

    std::vector<double> ball_equality_defect; // |deviation norm - delta| for ball classes
};

/// Evaluates the relation pair selected by the two classes. The first
/// relation's structure follows the F-class family (moment or strip), the
/// second the G-class family (contamination or ball); constraint style
/// (trace/component/weighted/matrix) follows each class independently, so all
/// eight published pairs and the noiseless corollaries are covered.
KKTResiduals kkt_residuals(const SpectralDensity& F0, const SpectralDensity& G0,
                           const SpectralVectorField& A, const SpectralVectorField& C0,
                           const DensityClass& class_F, const DensityClass& class_G,
                           const FrequencyGrid& grid);

KKTResiduals kkt_residuals(const SaddlePoint& sp, const DensityClass& class_F,
                           const DensityClass& class_G, const FrequencyGrid& grid);

} // namespace wkinterp

#endif
