#include "wkinterp/estimator.hpp"

#include <cmath>
#include <complex>

#include "wkinterp/errors.hpp"

namespace wkinterp {

namespace {

Eigen::MatrixXcd floored_inverse(const Eigen::MatrixXcd& m, double floor) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (m + m.adjoint()));
    return es.eigenvectors() * es.eigenvalues().cwiseMax(floor).cwiseInverse().asDiagonal() *
           es.eigenvectors().adjoint();
}

// x^T M conj(x) = u^* M u with u = conj(x); real for Hermitian M.
double quad_form(const Eigen::VectorXcd& x, const Eigen::MatrixXcd& m) {
    const Eigen::VectorXcd u = x.conjugate();
    return (u.adjoint() * m * u).value().real();
}

/// Floor used for symbol inversions on the working grid; 0 in-band samples
/// are a caller error, tails below the floor are priced out.
struct SymbolContext {
    std::vector<Eigen::MatrixXcd> f, g;
    double floor = 0.0;
};

SymbolContext make_context(const SpectralDensity& F, const SpectralDensity& G,
                           const QuadratureGrid& q) {
    SymbolContext ctx;
    ctx.f = F.evaluate_on(q);
    ctx.g = G.evaluate_on(q);
    double max_inband = 0.0;
    for (std::size_t j = q.density_first(); j < q.density_first() + q.density_count(); ++j) {
        max_inband = std::max(max_inband, (ctx.f[j] + ctx.g[j]).norm());
    }
    ctx.floor = 1e-9 * std::max(max_inband, 1e-300);
    return ctx;
}

void check_inband_invertible(const SymbolContext& ctx, const QuadratureGrid& q, bool noiseless) {
    for (std::size_t j = q.density_first(); j < q.density_first() + q.density_count(); ++j) {
        const Eigen::MatrixXcd m = noiseless ? ctx.f[j] : (ctx.f[j] + ctx.g[j]).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (m + m.adjoint()),
                                                           Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() <= 1e-12) {
            throw singular_density_error(
                "spectral_characteristic: singular density at lambda = " +
                std::to_string(q.node(j)));
        }
    }
}

} // namespace

SpectralVectorField EstimateSolution::on_density_grid(const SpectralVectorField& field) const {
    SpectralVectorField out(qgrid.density_count());
    for (std::size_t j = 0; j < qgrid.density_count(); ++j) {
        out[j] = field[qgrid.density_first() + j];
    }
    return out;
}

Characteristic spectral_characteristic(const SpectralDensity& F, const SpectralDensity& G,
                                       const SolutionC& c, const SpectralVectorField& A,
                                       const MissingSet& S, const QuadratureGrid& q,
                                       bool noiseless) {
    const SymbolContext ctx = make_context(F, G, q);
    check_inband_invertible(ctx, q, noiseless);

    Characteristic out;
    out.C = exponential_transform(c.c, S, q);
    out.h.resize(q.size());
    for (std::size_t j = 0; j < q.size(); ++j) {
        if (noiseless) {
            const Eigen::MatrixXcd finv = floored_inverse(ctx.f[j], ctx.floor);
            out.h[j] = A[j] - finv.transpose() * out.C[j];
        } else {
            const Eigen::MatrixXcd minv = floored_inverse(ctx.f[j] + ctx.g[j], ctx.floor);
            out.h[j] = (ctx.f[j] * minv).transpose() * A[j] - minv.transpose() * out.C[j];
        }
    }
    return out;
}

MseForms mse(const OperatorSystem& sys, const SolutionC& c, const WeightFunction& a,
             const SpectralDensity& F, const SpectralDensity& G, const SpectralVectorField& h,
             const SpectralVectorField& A, const QuadratureGrid& q, bool noiseless) {
    MseForms out;

    const Eigen::VectorXcd a_hat = sys.lift(a);
    if (noiseless) {
        out.operator_form = c.c_hat.dot(a_hat).real(); // <B^{-1} a, a>
    } else {
        out.operator_form =
            c.c_hat.dot(c.rhs_hat).real() + (a_hat.adjoint() * sys.Q * a_hat).value().real();
    }

    const SymbolContext ctx = make_context(F, G, q);
    double spec = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) {
        const Eigen::VectorXcd diff = A[j] - h[j];
        spec += q.weight(j) * quad_form(diff, ctx.f[j]);
        if (!noiseless) {
            spec += q.weight(j) * quad_form(h[j], ctx.g[j]);
        }
    }
    out.spectral_form = spec / (2.0 * M_PI);
    return out;
}

double cross_mse(const SpectralVectorField& h0, const SpectralVectorField& A,
                 const SpectralDensity& F, const SpectralDensity& G, const QuadratureGrid& q) {
    if (h0.size() != q.size() || A.size() != q.size()) {
        throw grid_mismatch_error("cross_mse: field size mismatch");
    }
    const SymbolContext ctx = make_context(F, G, q);
    double acc = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) {
        const Eigen::VectorXcd diff = A[j] - h0[j];
        acc += q.weight(j) * (quad_form(diff, ctx.f[j]) + quad_form(h0[j], ctx.g[j]));
    }
    return acc / (2.0 * M_PI);
}

OrthogonalityReport verify_orthogonality(const SpectralVectorField& h, const SpectralVectorField& A,
                                         const SpectralDensity& F, const SpectralDensity& G,
                                         const QuadratureGrid& q,
                                         const std::vector<double>& t_samples) {
    OrthogonalityReport rep;
    rep.residuals.reserve(t_samples.size());
    const int dim = F.dim();
    const SymbolContext ctx = make_context(F, G, q);

    // Integrand column form: F^T A - (F+G)^T h, fixed over t.
    std::vector<Eigen::VectorXcd> integrand(q.size());
    for (std::size_t j = 0; j < q.size(); ++j) {
        integrand[j] = ctx.f[j].transpose() * A[j] - (ctx.f[j] + ctx.g[j]).transpose() * h[j];
    }

    for (double t : t_samples) {
        Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(dim);
        for (std::size_t j = 0; j < q.size(); ++j) {
            acc += std::polar(q.weight(j), -t * q.node(j)) * integrand[j];
        }
        const double r = acc.norm() / (2.0 * M_PI);
        rep.residuals.push_back(r);
        rep.max_residual = std::max(rep.max_residual, r);
    }
    return rep;
}

EstimateSolution estimate_with_system(const OperatorSystem& sys, const SpectralDensity& F,
                                      const SpectralDensity& G, const MissingSet& S,
                                      const WeightFunction& a, const FrequencyGrid& grid,
                                      const EstimateOptions& opts) {
    EstimateSolution sol;
    sol.qgrid = QuadratureGrid::extended(grid, S);
    sol.noiseless = G.is_zero();
    sol.condition_number = sys.condition_number_B;

    // The general route degrades gracefully at G = 0 (R becomes the
    // band-limiting identity, Q vanishes) and is continuous in G; the reduced
    // exact-observation solve stays available through SolveMode::Noiseless.
    const double eps = opts.tikhonov.value_or(default_tikhonov(sys));
    sol.c = solve_c(sys, a, SolveMode::Noisy, eps);
    sol.solve_residual = sol.c.residual;

    sol.A = exponential_transform(a, S, sol.qgrid);
    Characteristic ch = spectral_characteristic(F, G, sol.c, sol.A, S, sol.qgrid, false);
    sol.h = std::move(ch.h);
    sol.C = std::move(ch.C);

    const MseForms forms = mse(sys, sol.c, a, F, G, sol.h, sol.A, sol.qgrid, false);
    sol.delta_operator_form = forms.operator_form;
    sol.delta_spectral_form = forms.spectral_form;
    sol.delta = std::max(0.0, forms.spectral_form);

    if (opts.check_form_agreement) {
        const double scale =
            std::max({std::abs(forms.operator_form), std::abs(forms.spectral_form), 1e-12});
        const double gap = std::abs(forms.operator_form - forms.spectral_form);
        if (gap > opts.form_agreement_tol * scale + 1e-14) {
            throw dual_form_mismatch_error(
                "estimate: operator-form and spectral-form errors disagree: " +
                std::to_string(forms.operator_form) + " vs " + std::to_string(forms.spectral_form));
        }
    }
    return sol;
}

EstimateSolution estimate(const SpectralDensity& F, const SpectralDensity& G, const MissingSet& S,
                          const WeightFunction& a, const FrequencyGrid& grid,
                          const EstimateOptions& opts) {
    const OperatorSystem sys = assemble_system(F, G, S, grid);
    return estimate_with_system(sys, F, G, S, a, grid, opts);
}

} // namespace wkinterp
