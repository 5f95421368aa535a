#include "wkinterp/kkt.hpp"

#include <cmath>

#include "wkinterp/errors.hpp"

namespace wkinterp {

namespace {

using Cplx = std::complex<double>;
using MatrixField = std::vector<Eigen::MatrixXcd>;

constexpr double kActiveTol = 1e-6;

struct Prepared {
    MatrixField middle_first;  // from the row A^T G0 + C0^T
    MatrixField middle_second; // from the row A^T F0 - C0^T
    std::vector<double> w;     // grid weights
    double scale_first = 0.0;  // sqrt(sum w ||middle||^2)
    double scale_second = 0.0;
};

Prepared prepare(const SpectralDensity& F0, const SpectralDensity& G0,
                 const SpectralVectorField& A, const SpectralVectorField& C0,
                 const FrequencyGrid& grid) {
    Prepared p;
    const std::size_t n = grid.size();
    p.middle_first.resize(n);
    p.middle_second.resize(n);
    p.w.resize(n);
    double sf = 0.0, ss = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const Eigen::MatrixXcd sum = F0.sample(j) + G0.sample(j);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (sum + sum.adjoint()));
        if (es.eigenvalues().minCoeff() <= 1e-12) {
            throw singular_density_error("kkt_residuals: F0+G0 singular at lambda = " +
                                         std::to_string(grid.node(j)));
        }
        const Eigen::MatrixXcd minv = es.eigenvectors() *
                                      es.eigenvalues().cwiseInverse().asDiagonal() *
                                      es.eigenvectors().adjoint();
        // Columns of the two defining rows.
        const Eigen::VectorXcd r_g = G0.sample(j).transpose() * A[j] + C0[j];
        const Eigen::VectorXcd r_f = F0.sample(j).transpose() * A[j] - C0[j];
        p.middle_first[j] = minv * (r_g.conjugate() * r_g.transpose()) * minv;
        p.middle_second[j] = minv * (r_f.conjugate() * r_f.transpose()) * minv;
        p.w[j] = grid.weight(j);
        sf += p.w[j] * p.middle_first[j].squaredNorm();
        ss += p.w[j] * p.middle_second[j].squaredNorm();
    }
    p.scale_first = std::sqrt(std::max(sf, 1e-300));
    p.scale_second = std::sqrt(std::max(ss, 1e-300));
    return p;
}

/// Weighted LS fit of middle ~ value * basis over the index set `mask`.
double fit_scalar(const MatrixField& middle, const std::vector<double>& w,
                  const Eigen::MatrixXcd& basis, const std::vector<bool>& mask) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < middle.size(); ++j) {
        if (!mask[j]) continue;
        num += w[j] * (basis.adjoint() * middle[j]).trace().real();
        den += w[j] * basis.squaredNorm();
    }
    return den > 0.0 ? num / den : 0.0;
}

double per_freq_scalar(const Eigen::MatrixXcd& middle, const Eigen::MatrixXcd& basis) {
    const double den = basis.squaredNorm();
    return den > 0.0 ? (basis.adjoint() * middle).trace().real() / den : 0.0;
}

double residual_norm(const MatrixField& middle, const std::vector<double>& w,
                     const std::vector<Eigen::MatrixXcd>& fit, double scale) {
    double acc = 0.0;
    for (std::size_t j = 0; j < middle.size(); ++j) {
        acc += w[j] * (middle[j] - fit[j]).squaredNorm();
    }
    return std::sqrt(acc) / scale;
}

Eigen::VectorXcd rank1_vector(const Eigen::MatrixXcd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (m + m.adjoint()));
    const Eigen::Index last = es.eigenvalues().size() - 1;
    const double top = std::max(0.0, es.eigenvalues()(last));
    return std::sqrt(top) * es.eigenvectors().col(last);
}

std::vector<bool> all_mask(std::size_t n) { return std::vector<bool>(n, true); }

} // namespace

KKTResiduals kkt_residuals(const SpectralDensity& F0, const SpectralDensity& G0,
                           const SpectralVectorField& A, const SpectralVectorField& C0,
                           const DensityClass& class_F, const DensityClass& class_G,
                           const FrequencyGrid& grid) {
    const Prepared p = prepare(F0, G0, A, C0, grid);
    const std::size_t n = grid.size();
    const int dim = F0.dim();
    const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(dim, dim);

    KKTResiduals out;
    out.pair_name = class_F.name() + " x " + class_G.name();

    // Support of F0: where the density vanishes, its PSD constraint is active
    // and the stated equalities relax to inequalities. Multipliers are fitted
    // on the support; off-support excesses count as sign defects.
    std::vector<bool> f_support(n, true);
    {
        double peak = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            peak = std::max(peak, F0.sample(j).trace().real());
        }
        bool any = false;
        for (std::size_t j = 0; j < n; ++j) {
            f_support[j] = F0.sample(j).trace().real() > 1e-9 * std::max(peak, 1e-300);
            any |= f_support[j];
        }
        if (!any) f_support.assign(n, true);
    }

    // ---- First relation: F-class multipliers against middle_first. ----
    std::vector<Eigen::MatrixXcd> fit_first(n, Eigen::MatrixXcd::Zero(dim, dim));
    switch (class_F.kind) {
        case ClassKind::D0Trace:
        case ClassKind::EpsTrace: // not an F-side class, treated as a plain moment
        case ClassKind::Singleton: {
            const double alpha2 = fit_scalar(p.middle_first, p.w, eye, f_support);
            out.multipliers["alpha2"] = alpha2;
            out.sign_defect = std::max(out.sign_defect, -alpha2);
            out.gamma_first.assign(n, 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                if (f_support[j]) {
                    fit_first[j] = alpha2 * eye;
                } else {
                    // Off the support the density cannot decrease further; the
                    // relation only demands s_j <= alpha2 there.
                    const double s = per_freq_scalar(p.middle_first[j], eye);
                    out.gamma_first[j] = s - alpha2;
                    out.sign_defect = std::max(out.sign_defect, s - alpha2);
                    fit_first[j] = s * eye;
                }
            }
            break;
        }
        case ClassKind::D0Component: {
            for (int k = 0; k < dim; ++k) {
                Eigen::MatrixXcd basis = Eigen::MatrixXcd::Zero(dim, dim);
                basis(k, k) = 1.0;
                double peak = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    peak = std::max(peak, F0.sample(j)(k, k).real());
                }
                std::vector<bool> support(n, true);
                bool any = false;
                for (std::size_t j = 0; j < n; ++j) {
                    support[j] = F0.sample(j)(k, k).real() > 1e-9 * std::max(peak, 1e-300);
                    any |= support[j];
                }
                if (!any) support.assign(n, true);
                const double ak = fit_scalar(p.middle_first, p.w, basis, support);
                out.multipliers["alpha2_" + std::to_string(k)] = ak;
                out.sign_defect = std::max(out.sign_defect, -ak);
                for (std::size_t j = 0; j < n; ++j) {
                    if (support[j]) {
                        fit_first[j](k, k) = ak;
                    } else {
                        const double s = p.middle_first[j](k, k).real();
                        out.sign_defect = std::max(out.sign_defect, s - ak);
                        fit_first[j](k, k) = s;
                    }
                }
            }
            break;
        }
        case ClassKind::D0Weighted: {
            const Eigen::MatrixXcd basis = class_F.weight_mat.transpose();
            const double alpha2 = fit_scalar(p.middle_first, p.w, basis, f_support);
            out.multipliers["alpha2"] = alpha2;
            out.sign_defect = std::max(out.sign_defect, -alpha2);
            for (std::size_t j = 0; j < n; ++j) {
                if (f_support[j]) {
                    fit_first[j] = alpha2 * basis;
                } else {
                    const double s = per_freq_scalar(p.middle_first[j], basis);
                    out.sign_defect = std::max(out.sign_defect, s - alpha2);
                    fit_first[j] = s * basis;
                }
            }
            break;
        }
        case ClassKind::D0Matrix: {
            Eigen::MatrixXcd mean = Eigen::MatrixXcd::Zero(dim, dim);
            double wsum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                mean += p.w[j] * p.middle_first[j];
                wsum += p.w[j];
            }
            mean /= wsum;
            out.alpha_vec = rank1_vector(mean);
            const Eigen::MatrixXcd aa = out.alpha_vec * out.alpha_vec.adjoint();
            for (std::size_t j = 0; j < n; ++j) fit_first[j] = aa;
            break;
        }
        case ClassKind::StripTrace:
        case ClassKind::StripWeighted: {
            const bool weighted = class_F.kind == ClassKind::StripWeighted;
            const Eigen::MatrixXcd basis =
                weighted ? Eigen::MatrixXcd(class_F.weight_mat.transpose()) : eye;
            std::vector<bool> interior(n, false);
            std::vector<int> at_bound(n, 0); // -1 lower, +1 upper
            for (std::size_t j = 0; j < n; ++j) {
                const double f = weighted ? matrix_inner(class_F.weight_mat, F0.sample(j))
                                          : F0.sample(j).trace().real();
                const double lo = weighted ? matrix_inner(class_F.weight_mat, class_F.lower->sample(j))
                                           : class_F.lower->sample(j).trace().real();
                const double hi = weighted ? matrix_inner(class_F.weight_mat, class_F.upper->sample(j))
                                           : class_F.upper->sample(j).trace().real();
                const double band = std::max(hi - lo, 1e-300);
                if (f <= lo + kActiveTol * band) {
                    at_bound[j] = -1;
                } else if (f >= hi - kActiveTol * band) {
                    at_bound[j] = +1;
                } else {
                    interior[j] = true;
                }
            }
            bool any_interior = false;
            for (std::size_t j = 0; j < n; ++j) any_interior |= interior[j];
            const double alpha2 =
                fit_scalar(p.middle_first, p.w, basis, any_interior ? interior : all_mask(n));
            out.multipliers["alpha2"] = alpha2;
            out.sign_defect = std::max(out.sign_defect, -alpha2);
            out.gamma_first.assign(n, 0.0);
            double slack = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double s = per_freq_scalar(p.middle_first[j], basis);
                if (at_bound[j] == -1) {
                    const double g1 = s - alpha2; // gamma_1 <= 0 expected
                    out.gamma_first[j] = g1;
                    out.sign_defect = std::max(out.sign_defect, g1);
                    fit_first[j] = s * basis;
                } else if (at_bound[j] == +1) {
                    const double g2 = s - alpha2; // gamma_2 >= 0 expected
                    out.gamma_first[j] = g2;
                    out.sign_defect = std::max(out.sign_defect, -g2);
                    fit_first[j] = s * basis;
                } else {
                    slack = std::max(slack, std::abs(s - alpha2));
                    fit_first[j] = alpha2 * basis;
                }
            }
            out.slackness_defect = std::max(out.slackness_defect, slack);
            break;
        }
        case ClassKind::StripComponent: {
            out.gamma_first.assign(n, 0.0);
            for (int k = 0; k < dim; ++k) {
                Eigen::MatrixXcd basis = Eigen::MatrixXcd::Zero(dim, dim);
                basis(k, k) = 1.0;
                std::vector<bool> interior(n, false);
                std::vector<int> at_bound(n, 0);
                for (std::size_t j = 0; j < n; ++j) {
                    const double f = F0.sample(j)(k, k).real();
                    const double lo = class_F.lower->sample(j)(k, k).real();
                    const double hi = class_F.upper->sample(j)(k, k).real();
                    const double band = std::max(hi - lo, 1e-300);
                    if (f <= lo + kActiveTol * band) {
                        at_bound[j] = -1;
                    } else if (f >= hi - kActiveTol * band) {
                        at_bound[j] = +1;
                    } else {
                        interior[j] = true;
                    }
                }
                bool any_interior = false;
                for (std::size_t j = 0; j < n; ++j) any_interior |= interior[j];
                const double ak =
                    fit_scalar(p.middle_first, p.w, basis, any_interior ? interior : all_mask(n));
                out.multipliers["alpha2_" + std::to_string(k)] = ak;
                out.sign_defect = std::max(out.sign_defect, -ak);
                for (std::size_t j = 0; j < n; ++j) {
                    const double s = p.middle_first[j](k, k).real();
                    if (at_bound[j] == -1) {
                        out.sign_defect = std::max(out.sign_defect, s - ak);
                        fit_first[j](k, k) = s;
                    } else if (at_bound[j] == +1) {
                        out.sign_defect = std::max(out.sign_defect, ak - s);
                        fit_first[j](k, k) = s;
                    } else {
                        out.slackness_defect = std::max(out.slackness_defect, std::abs(s - ak));
                        fit_first[j](k, k) = ak;
                    }
                }
            }
            break;
        }
        case ClassKind::StripMatrix: {
            std::vector<bool> interior(n, false);
            std::vector<int> at_bound(n, 0);
            for (std::size_t j = 0; j < n; ++j) {
                const Eigen::MatrixXcd below = F0.sample(j) - class_F.lower->sample(j);
                const Eigen::MatrixXcd above = class_F.upper->sample(j) - F0.sample(j);
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eb(0.5 * (below + below.adjoint()),
                                                                   Eigen::EigenvaluesOnly);
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ea(0.5 * (above + above.adjoint()),
                                                                   Eigen::EigenvaluesOnly);
                const double scale = std::max(class_F.upper->sample(j).norm(), 1e-300);
                const bool at_lo = eb.eigenvalues().minCoeff() <= kActiveTol * scale;
                const bool at_hi = ea.eigenvalues().minCoeff() <= kActiveTol * scale;
                if (at_lo) {
                    at_bound[j] = -1;
                } else if (at_hi) {
                    at_bound[j] = +1;
                } else {
                    interior[j] = true;
                }
            }
            Eigen::MatrixXcd mean = Eigen::MatrixXcd::Zero(dim, dim);
            double wsum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (!interior[j]) continue;
                mean += p.w[j] * p.middle_first[j];
                wsum += p.w[j];
            }
            if (wsum == 0.0) {
                for (std::size_t j = 0; j < n; ++j) {
                    mean += p.w[j] * p.middle_first[j];
                    wsum += p.w[j];
                }
            }
            mean /= wsum;
            out.alpha_vec = rank1_vector(mean);
            const Eigen::MatrixXcd aa = out.alpha_vec * out.alpha_vec.adjoint();
            out.gamma_first.assign(n, 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                if (at_bound[j] == 0) {
                    fit_first[j] = aa;
                    continue;
                }
                const Eigen::MatrixXcd gamma = p.middle_first[j] - aa;
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (gamma + gamma.adjoint()),
                                                                   Eigen::EigenvaluesOnly);
                // Gamma_1 (lower bound) must be <= 0, Gamma_2 (upper) >= 0.
                if (at_bound[j] == -1) {
                    out.sign_defect = std::max(out.sign_defect, es.eigenvalues().maxCoeff());
                    out.gamma_first[j] = es.eigenvalues().minCoeff();
                } else {
                    out.sign_defect = std::max(out.sign_defect, -es.eigenvalues().minCoeff());
                    out.gamma_first[j] = es.eigenvalues().maxCoeff();
                }
                fit_first[j] = p.middle_first[j]; // absorbed by the bound multiplier
            }
            break;
        }
        default:
            throw unsupported_class_error("kkt_residuals: F-side class " + class_F.name() +
                                          " has no relation evaluator");
    }
    out.residual_first = residual_norm(p.middle_first, p.w, fit_first, p.scale_first);

    // ---- Second relation: G-class multipliers against middle_second. ----
    std::vector<Eigen::MatrixXcd> fit_second(n, Eigen::MatrixXcd::Zero(dim, dim));
    switch (class_G.kind) {
        case ClassKind::Singleton:
        case ClassKind::D0Trace: {
            const double beta2 = fit_scalar(p.middle_second, p.w, eye, all_mask(n));
            out.multipliers["beta2"] = beta2;
            out.sign_defect = std::max(out.sign_defect, -beta2);
            for (std::size_t j = 0; j < n; ++j) fit_second[j] = beta2 * eye;
            break;
        }
        case ClassKind::EpsTrace: {
            // Primary activity reading: gamma(lambda) = 0 where Tr G0 exceeds the
            // contamination floor. The source text states the condition with
            // Tr F0; both are evaluated and the text variant is reported as alt.
            out.note = "slackness condition stated with Tr F0; primary uses Tr G0";
            std::vector<bool> slack_primary(n, false), slack_alt(n, false);
            for (std::size_t j = 0; j < n; ++j) {
                const double floor = (1.0 - class_G.eps) *
                                     class_G.reference->sample(j).trace().real();
                const double scale = std::max(1.0, std::abs(floor));
                slack_primary[j] = G0.sample(j).trace().real() > floor + kActiveTol * scale;
                slack_alt[j] = F0.sample(j).trace().real() > floor + kActiveTol * scale;
            }
            bool any = false;
            for (std::size_t j = 0; j < n; ++j) any |= slack_primary[j];
            const double beta2 =
                fit_scalar(p.middle_second, p.w, eye, any ? slack_primary : all_mask(n));
            out.multipliers["beta2"] = beta2;
            out.sign_defect = std::max(out.sign_defect, -beta2);
            bool any_alt = false;
            for (std::size_t j = 0; j < n; ++j) any_alt |= slack_alt[j];
            const double beta2_alt =
                fit_scalar(p.middle_second, p.w, eye, any_alt ? slack_alt : all_mask(n));
            out.multipliers["beta2_alt"] = beta2_alt;

            out.gamma_second.assign(n, 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                const double s = per_freq_scalar(p.middle_second[j], eye);
                if (slack_primary[j]) {
                    out.slackness_defect = std::max(out.slackness_defect, std::abs(s - beta2));
                    fit_second[j] = beta2 * eye;
                } else {
                    const double gamma = s - beta2; // gamma <= 0 expected
                    out.gamma_second[j] = gamma;
                    out.sign_defect = std::max(out.sign_defect, gamma);
                    fit_second[j] = s * eye;
                }
                if (slack_alt[j]) {
                    out.slackness_defect_alt =
                        std::max(out.slackness_defect_alt, std::abs(s - beta2_alt));
                }
            }
            break;
        }
        case ClassKind::EpsComponent: {
            out.gamma_second.assign(n, 0.0);
            for (int k = 0; k < dim; ++k) {
                Eigen::MatrixXcd basis = Eigen::MatrixXcd::Zero(dim, dim);
                basis(k, k) = 1.0;
                std::vector<bool> slack(n, false);
                for (std::size_t j = 0; j < n; ++j) {
                    const double floor = (1.0 - class_G.eps) *
                                         class_G.reference->sample(j)(k, k).real();
                    slack[j] = G0.sample(j)(k, k).real() >
                               floor + kActiveTol * std::max(1.0, std::abs(floor));
                }
                bool any = false;
                for (std::size_t j = 0; j < n; ++j) any |= slack[j];
                const double bk = fit_scalar(p.middle_second, p.w, basis, any ? slack : all_mask(n));
                out.multipliers["beta2_" + std::to_string(k)] = bk;
                out.sign_defect = std::max(out.sign_defect, -bk);
                for (std::size_t j = 0; j < n; ++j) {
                    const double s = p.middle_second[j](k, k).real();
                    if (slack[j]) {
                        out.slackness_defect = std::max(out.slackness_defect, std::abs(s - bk));
                        fit_second[j](k, k) = bk;
                    } else {
                        out.sign_defect = std::max(out.sign_defect, s - bk);
                        fit_second[j](k, k) = s;
                    }
                }
            }
            break;
        }
        case ClassKind::EpsWeighted: {
            const Eigen::MatrixXcd basis = class_G.weight_mat.transpose();
            std::vector<bool> slack(n, false);
            for (std::size_t j = 0; j < n; ++j) {
                const double floor = (1.0 - class_G.eps) *
                                     matrix_inner(class_G.weight_mat, class_G.reference->sample(j));
                slack[j] = matrix_inner(class_G.weight_mat, G0.sample(j)) >
                           floor + kActiveTol * std::max(1.0, std::abs(floor));
            }
            bool any = false;
            for (std::size_t j = 0; j < n; ++j) any |= slack[j];
            const double beta2 = fit_scalar(p.middle_second, p.w, basis, any ? slack : all_mask(n));
            out.multipliers["beta2"] = beta2;
            out.sign_defect = std::max(out.sign_defect, -beta2);
            out.gamma_second.assign(n, 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                const double s = per_freq_scalar(p.middle_second[j], basis);
                if (slack[j]) {
                    out.slackness_defect = std::max(out.slackness_defect, std::abs(s - beta2));
                    fit_second[j] = beta2 * basis;
                } else {
                    out.gamma_second[j] = s - beta2;
                    out.sign_defect = std::max(out.sign_defect, s - beta2);
                    fit_second[j] = s * basis;
                }
            }
            break;
        }
        case ClassKind::EpsMatrix: {
            out.note += (out.note.empty() ? "" : "; ");
            out.note += "source names the slack multiplier Gamma_3; evaluated as Gamma";
            std::vector<bool> slack(n, false);
            for (std::size_t j = 0; j < n; ++j) {
                const Eigen::MatrixXcd diff =
                    G0.sample(j) - (1.0 - class_G.eps) * class_G.reference->sample(j);
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (diff + diff.adjoint()),
                                                                   Eigen::EigenvaluesOnly);
                slack[j] = es.eigenvalues().minCoeff() >
                           kActiveTol * std::max(1.0, G0.sample(j).norm());
            }
            Eigen::MatrixXcd mean = Eigen::MatrixXcd::Zero(dim, dim);
            double wsum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (!slack[j]) continue;
                mean += p.w[j] * p.middle_second[j];
                wsum += p.w[j];
            }
            if (wsum == 0.0) {
                for (std::size_t j = 0; j < n; ++j) {
                    mean += p.w[j] * p.middle_second[j];
                    wsum += p.w[j];
                }
            }
            mean /= wsum;
            out.beta_vec = rank1_vector(mean);
            const Eigen::MatrixXcd bb = out.beta_vec * out.beta_vec.adjoint();
            for (std::size_t j = 0; j < n; ++j) {
                if (slack[j]) {
                    fit_second[j] = bb;
                } else {
                    const Eigen::MatrixXcd gamma = p.middle_second[j] - bb;
                    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
                        0.5 * (gamma + gamma.adjoint()), Eigen::EigenvaluesOnly);
                    out.sign_defect = std::max(out.sign_defect, es.eigenvalues().maxCoeff());
                    fit_second[j] = p.middle_second[j];
                }
            }
            break;
        }
        case ClassKind::BallTrace:
        case ClassKind::BallWeighted: {
            const bool weighted = class_G.kind == ClassKind::BallWeighted;
            // middle_second = beta^2 * dev(lambda) * I with dev the trace (or
            // <B2,.>) deviation from the ball center.
            std::vector<double> dev(n);
            double ball = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const Eigen::MatrixXcd diff = G0.sample(j) - class_G.reference->sample(j);
                dev[j] = weighted ? matrix_inner(class_G.weight_mat, diff) : diff.trace().real();
                ball += p.w[j] * dev[j] * dev[j];
            }
            ball /= 2.0 * M_PI;
            out.ball_equality_defect.push_back(std::abs(ball - class_G.radius) /
                                               std::max(1e-300, std::abs(class_G.radius)));
            double num = 0.0, den = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double s = per_freq_scalar(p.middle_second[j], eye);
                num += p.w[j] * s * dev[j];
                den += p.w[j] * dev[j] * dev[j];
            }
            const double beta2 = den > 0.0 ? num / den : 0.0;
            out.multipliers["beta2"] = beta2;
            out.sign_defect = std::max(out.sign_defect, -beta2);
            for (std::size_t j = 0; j < n; ++j) fit_second[j] = beta2 * dev[j] * eye;
            break;
        }
        case ClassKind::BallComponent: {
            for (int k = 0; k < dim; ++k) {
                std::vector<double> dev(n);
                double ball = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    dev[j] = G0.sample(j)(k, k).real() - class_G.reference->sample(j)(k, k).real();
                    ball += p.w[j] * dev[j] * dev[j];
                }
                ball /= 2.0 * M_PI;
                out.ball_equality_defect.push_back(std::abs(ball - class_G.radius_k(k)) /
                                                   std::max(1e-300, std::abs(class_G.radius_k(k))));
                double num = 0.0, den = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    const double s = p.middle_second[j](k, k).real();
                    num += p.w[j] * s * dev[j];
                    den += p.w[j] * dev[j] * dev[j];
                }
                const double bk = den > 0.0 ? num / den : 0.0;
                out.multipliers["beta2_" + std::to_string(k)] = bk;
                out.sign_defect = std::max(out.sign_defect, -bk);
                for (std::size_t j = 0; j < n; ++j) fit_second[j](k, k) = bk * dev[j];
            }
            break;
        }
        case ClassKind::BallEntry: {
            for (int r = 0; r < dim; ++r) {
                for (int c = 0; c < dim; ++c) {
                    double ball = 0.0;
                    Cplx num = 0.0;
                    double den = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        const Cplx d = G0.sample(j)(r, c) - class_G.reference->sample(j)(r, c);
                        ball += p.w[j] * std::norm(d);
                        num += p.w[j] * p.middle_second[j](r, c) * std::conj(d);
                        den += p.w[j] * std::norm(d);
                    }
                    ball /= 2.0 * M_PI;
                    out.ball_equality_defect.push_back(
                        std::abs(ball - class_G.radius_ij(r, c)) /
                        std::max(1e-300, std::abs(class_G.radius_ij(r, c))));
                    const Cplx beta = den > 0.0 ? num / den : Cplx(0.0, 0.0);
                    out.multipliers["beta_" + std::to_string(r) + std::to_string(c)] =
                        std::abs(beta);
                    for (std::size_t j = 0; j < n; ++j) {
                        const Cplx d = G0.sample(j)(r, c) - class_G.reference->sample(j)(r, c);
                        fit_second[j](r, c) = beta * d;
                    }
                }
            }
            break;
        }
        default:
            throw unsupported_class_error("kkt_residuals: G-side class " + class_G.name() +
                                          " has no relation evaluator");
    }
    out.residual_second = residual_norm(p.middle_second, p.w, fit_second, p.scale_second);

    return out;
}

KKTResiduals kkt_residuals(const SaddlePoint& sp, const DensityClass& class_F,
                           const DensityClass& class_G, const FrequencyGrid& grid) {
    const auto slice = [&](const SpectralVectorField& field) {
        SpectralVectorField out(sp.qgrid.density_count());
        for (std::size_t j = 0; j < out.size(); ++j) {
            out[j] = field[sp.qgrid.density_first() + j];
        }
        return out;
    };
    return kkt_residuals(sp.F0, sp.G0, slice(sp.A), slice(sp.C0), class_F, class_G, grid);
}

} // namespace wkinterp
