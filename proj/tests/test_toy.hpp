#ifndef WKINTERP_TEST_TOY_HPP
#define WKINTERP_TEST_TOY_HPP

#include "wkinterp/density_class.hpp"
#include "wkinterp/minimax.hpp"
#include "wkinterp/missing_set.hpp"
#include "wkinterp/weight_function.hpp"

namespace wkitest {

using namespace wkinterp;

/// 16-bin scalar playground for the robust-estimation machinery.
struct Toy {
    FrequencyGrid grid = FrequencyGrid::make(8.0, 17);
    MissingSet S = MissingSet::make({{-1.0, 0.0}}, 1.0 / 32.0);
    WeightFunction a = WeightFunction::from_expression(S, "one", 1);

    DensityClass trace_class(double p = 1.0) const {
        DensityClass cls;
        cls.kind = ClassKind::D0Trace;
        cls.dim = 1;
        cls.budget = p;
        return cls;
    }

    DensityClass eps_class(double q = 1.0, double eps = 0.1) const {
        DensityClass cls;
        cls.kind = ClassKind::EpsTrace;
        cls.dim = 1;
        cls.budget = q;
        cls.eps = eps;
        // Uniform reference with unit spectral mass: trace = 2 pi q / (2 L).
        // Zero-extended: toy members live on the density grid alone.
        const double level = q * M_PI / grid.lambda_max();
        cls.reference = SpectralDensity::constant(grid, level * Eigen::MatrixXcd::Identity(1, 1),
                                                  SpectralDensity::Extension::Zero);
        return cls;
    }

    DensityClass strip_class(double lo, double hi, double p) const {
        DensityClass cls;
        cls.kind = ClassKind::StripTrace;
        cls.dim = 1;
        cls.budget = p;
        cls.lower = SpectralDensity::constant(grid, lo * Eigen::MatrixXcd::Identity(1, 1),
                                              SpectralDensity::Extension::Zero);
        cls.upper = SpectralDensity::constant(grid, hi * Eigen::MatrixXcd::Identity(1, 1),
                                              SpectralDensity::Extension::Zero);
        return cls;
    }

    DensityClass ball_class(double delta, double center_level = 0.5) const {
        DensityClass cls;
        cls.kind = ClassKind::BallTrace;
        cls.dim = 1;
        cls.radius = delta;
        cls.reference = SpectralDensity::constant(
            grid, center_level * Eigen::MatrixXcd::Identity(1, 1),
            SpectralDensity::Extension::Zero);
        return cls;
    }

    DensityClass singleton(const SpectralDensity& ref) const {
        DensityClass cls;
        cls.kind = ClassKind::Singleton;
        cls.dim = ref.dim();
        cls.reference = ref;
        return cls;
    }
};

} // namespace wkitest

#endif
