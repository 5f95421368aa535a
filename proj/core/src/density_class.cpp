#include "wkinterp/density_class.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "wkinterp/errors.hpp"

namespace wkinterp {

namespace {

using Cplx = std::complex<double>;

const std::map<std::string, ClassKind>& kind_table() {
    static const std::map<std::string, ClassKind> table = {
        {"singleton", ClassKind::Singleton},
        {"d0_trace", ClassKind::D0Trace},
        {"d0_component", ClassKind::D0Component},
        {"d0_weighted", ClassKind::D0Weighted},
        {"d0_matrix", ClassKind::D0Matrix},
        {"eps_trace", ClassKind::EpsTrace},
        {"eps_component", ClassKind::EpsComponent},
        {"eps_weighted", ClassKind::EpsWeighted},
        {"eps_matrix", ClassKind::EpsMatrix},
        {"strip_trace", ClassKind::StripTrace},
        {"strip_component", ClassKind::StripComponent},
        {"strip_weighted", ClassKind::StripWeighted},
        {"strip_matrix", ClassKind::StripMatrix},
        {"ball_trace", ClassKind::BallTrace},
        {"ball_component", ClassKind::BallComponent},
        {"ball_weighted", ClassKind::BallWeighted},
        {"ball_entry", ClassKind::BallEntry},
    };
    return table;
}

double real_trace(const Eigen::MatrixXcd& m) { return m.trace().real(); }

/// Symmetric pair k = 0..center maps to grid nodes center +- k.
struct PairView {
    const FrequencyGrid* grid;
    int center;
    std::size_t count() const { return static_cast<std::size_t>(center) + 1; }
    std::size_t hi(std::size_t k) const { return static_cast<std::size_t>(center) + k; }
    std::size_t lo(std::size_t k) const { return static_cast<std::size_t>(center) - k; }
    /// Spectral mass contributed per unit trace held at both nodes of pair k.
    double mass_per_trace(std::size_t k) const {
        const double w = k == 0 ? grid->weight(hi(0))
                                : grid->weight(hi(k)) + grid->weight(lo(k));
        return w / (2.0 * M_PI);
    }
};

/// Random trace-1 PSD direction, plus its mirror image conj(D).
Eigen::MatrixXcd random_direction(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXcd a(dim, dim);
    for (int r = 0; r < dim; ++r) {
        for (int c = 0; c < dim; ++c) a(r, c) = Cplx(normal(rng), normal(rng));
    }
    Eigen::MatrixXcd m = a * a.adjoint();
    m += 0.05 * real_trace(m) / dim * Eigen::MatrixXcd::Identity(dim, dim);
    return m / real_trace(m);
}

/// Realizes a symmetric trace profile as a density: sample(hi) = t_k * D_k,
/// sample(lo) = t_k * conj(D_k).
SpectralDensity realize_profile(const FrequencyGrid& grid, int dim,
                                const std::vector<double>& pair_trace,
                                const std::vector<Eigen::MatrixXcd>& pair_dir) {
    const PairView pairs{&grid, grid.center_index()};
    std::vector<Eigen::MatrixXcd> samples(grid.size(), Eigen::MatrixXcd::Zero(dim, dim));
    for (std::size_t k = 0; k < pairs.count(); ++k) {
        samples[pairs.hi(k)] = pair_trace[k] * pair_dir[k];
        samples[pairs.lo(k)] = pair_trace[k] * pair_dir[k].conjugate();
    }
    return SpectralDensity::from_samples(grid, std::move(samples));
}

std::vector<Eigen::MatrixXcd> identity_directions(const FrequencyGrid& grid, int dim) {
    const PairView pairs{&grid, grid.center_index()};
    return std::vector<Eigen::MatrixXcd>(pairs.count(),
                                         Eigen::MatrixXcd::Identity(dim, dim) / dim);
}

void require(bool ok, const std::string& what) {
    if (!ok) throw input_error("DensityClass: " + what);
}

void check_reference(const DensityClass& cls, const char* who) {
    if (!cls.reference.has_value()) {
        throw input_error(std::string(who) + ": class " + cls.name() + " needs a reference density");
    }
}

void check_bounds(const DensityClass& cls, const char* who) {
    if (!cls.lower.has_value() || !cls.upper.has_value()) {
        throw input_error(std::string(who) + ": class " + cls.name() + " needs V and U bounds");
    }
}

void add_violation(MembershipReport& rep, const std::string& what, double defect, int index = -1) {
    rep.max_defect = std::max(rep.max_defect, defect);
    if (defect > rep.tol) {
        rep.violations.push_back({what, defect, index});
    }
}

} // namespace

std::string class_kind_name(ClassKind kind) {
    for (const auto& [name, k] : kind_table()) {
        if (k == kind) return name;
    }
    return "unknown";
}

ClassKind class_kind_from_name(const std::string& name) {
    const auto it = kind_table().find(name);
    if (it == kind_table().end()) {
        throw input_error("unknown density class kind '" + name + "'");
    }
    return it->second;
}

double trace_integral(const SpectralDensity& X) {
    double acc = 0.0;
    for (std::size_t j = 0; j < X.grid().size(); ++j) {
        acc += X.grid().weight(j) * real_trace(X.sample(j));
    }
    return acc / (2.0 * M_PI);
}

double component_integral(const SpectralDensity& X, int k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < X.grid().size(); ++j) {
        acc += X.grid().weight(j) * X.sample(j)(k, k).real();
    }
    return acc / (2.0 * M_PI);
}

double matrix_inner(const Eigen::MatrixXcd& B, const Eigen::MatrixXcd& X) {
    return (B.adjoint() * X).trace().real();
}

double weighted_integral(const SpectralDensity& X, const Eigen::MatrixXcd& B) {
    double acc = 0.0;
    for (std::size_t j = 0; j < X.grid().size(); ++j) {
        acc += X.grid().weight(j) * matrix_inner(B, X.sample(j));
    }
    return acc / (2.0 * M_PI);
}

Eigen::MatrixXcd matrix_integral(const SpectralDensity& X) {
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(X.dim(), X.dim());
    for (std::size_t j = 0; j < X.grid().size(); ++j) {
        acc += X.grid().weight(j) * X.sample(j);
    }
    return acc / (2.0 * M_PI);
}

bool class_is_optimizable(ClassKind kind) {
    switch (kind) {
        case ClassKind::Singleton:
        case ClassKind::D0Trace:
        case ClassKind::D0Component:
        case ClassKind::EpsTrace:
        case ClassKind::EpsComponent:
        case ClassKind::StripTrace:
        case ClassKind::StripComponent:
        case ClassKind::BallTrace:
        case ClassKind::BallComponent:
            return true;
        default:
            return false;
    }
}

MembershipReport project_membership(const DensityClass& cls, const SpectralDensity& X) {
    MembershipReport rep;
    const std::size_t n = X.grid().size();
    const auto rel = [](double defect, double scale) { return defect / std::max(1.0, scale); };

    switch (cls.kind) {
        case ClassKind::Singleton: {
            check_reference(cls, "project_membership");
            for (std::size_t j = 0; j < n; ++j) {
                const double d = (X.sample(j) - cls.reference->sample(j)).norm();
                add_violation(rep, "differs from the singleton member",
                              rel(d, cls.reference->sample(j).norm()), static_cast<int>(j));
            }
            break;
        }
        case ClassKind::D0Trace: {
            add_violation(rep, "trace moment != p",
                          rel(std::abs(trace_integral(X) - cls.budget), std::abs(cls.budget)));
            break;
        }
        case ClassKind::D0Component: {
            for (int k = 0; k < cls.dim; ++k) {
                add_violation(rep, "component moment != p_k (k=" + std::to_string(k) + ")",
                              rel(std::abs(component_integral(X, k) - cls.budget_k(k)),
                                  std::abs(cls.budget_k(k))));
            }
            break;
        }
        case ClassKind::D0Weighted: {
            add_violation(rep, "weighted moment != p",
                          rel(std::abs(weighted_integral(X, cls.weight_mat) - cls.budget),
                              std::abs(cls.budget)));
            break;
        }
        case ClassKind::D0Matrix: {
            add_violation(rep, "matrix moment != P",
                          rel((matrix_integral(X) - cls.budget_mat).norm(), cls.budget_mat.norm()));
            break;
        }
        case ClassKind::EpsTrace: {
            check_reference(cls, "project_membership");
            for (std::size_t j = 0; j < n; ++j) {
                const double floor = (1.0 - cls.eps) * real_trace(cls.reference->sample(j));
                const double drop = floor - real_trace(X.sample(j));
                add_violation(rep, "trace below contamination floor", rel(std::max(0.0, drop), floor),
                              static_cast<int>(j));
            }
            add_violation(rep, "trace moment != q",
                          rel(std::abs(trace_integral(X) - cls.budget), std::abs(cls.budget)));
            break;
        }
        case ClassKind::EpsComponent: {
            check_reference(cls, "project_membership");
            for (int k = 0; k < cls.dim; ++k) {
                for (std::size_t j = 0; j < n; ++j) {
                    const double floor = (1.0 - cls.eps) * cls.reference->sample(j)(k, k).real();
                    const double drop = floor - X.sample(j)(k, k).real();
                    add_violation(rep, "g_kk below contamination floor (k=" + std::to_string(k) + ")",
                                  rel(std::max(0.0, drop), floor), static_cast<int>(j));
                }
                add_violation(rep, "component moment != q_k (k=" + std::to_string(k) + ")",
                              rel(std::abs(component_integral(X, k) - cls.budget_k(k)),
                                  std::abs(cls.budget_k(k))));
            }
            break;
        }
        case ClassKind::EpsWeighted: {
            check_reference(cls, "project_membership");
            for (std::size_t j = 0; j < n; ++j) {
                const double floor =
                    (1.0 - cls.eps) * matrix_inner(cls.weight_mat, cls.reference->sample(j));
                const double drop = floor - matrix_inner(cls.weight_mat, X.sample(j));
                add_violation(rep, "<B2,G> below contamination floor",
                              rel(std::max(0.0, drop), std::abs(floor)), static_cast<int>(j));
            }
            add_violation(rep, "weighted moment != q",
                          rel(std::abs(weighted_integral(X, cls.weight_mat) - cls.budget),
                              std::abs(cls.budget)));
            break;
        }
        case ClassKind::EpsMatrix: {
            check_reference(cls, "project_membership");
            for (std::size_t j = 0; j < n; ++j) {
                const Eigen::MatrixXcd diff =
                    X.sample(j) - (1.0 - cls.eps) * cls.reference->sample(j);
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (diff + diff.adjoint()),
                                                                   Eigen::EigenvaluesOnly);
                const double neg = std::max(0.0, -es.eigenvalues().minCoeff());
                add_violation(rep, "G - (1-eps)G1 not PSD", rel(neg, X.sample(j).norm()),
                              static_cast<int>(j));
            }
            add_violation(rep, "matrix moment != Q",
                          rel((matrix_integral(X) - cls.budget_mat).norm(), cls.budget_mat.norm()));
            break;
        }
        case ClassKind::StripTrace: {
            check_bounds(cls, "project_membership");
            for (std::size_t j = 0; j < n; ++j) {
                const double t = real_trace(X.sample(j));
                const double lo = real_trace(cls.lower->sample(j));
                const double hi = real_trace(cls.upper->sample(j));
                add_violation(rep, "trace below V", rel(std::max(0.0, lo - t), std::abs(hi)),
                              static_cast<int>(j));
                add_violation(rep, "trace above U", rel(std::max(0.0, t - hi), std::abs(hi)),
                              static_cast<int>(j));
            }
            add_violation(rep, "trace moment != p",
                          rel(std::abs(trace_integral(X) - cls.budget), std::abs(cls.budget)));
            break;
        }
        case ClassKind::StripComponent: {
            check_bounds(cls, "project_membership");
            for (int k = 0; k < cls.dim; ++k) {
                for (std::size_t j = 0; j < n; ++j) {
                    const double t = X.sample(j)(k, k).real();
                    const double lo = cls.lower->sample(j)(k, k).real();
                    const double hi = cls.upper->sample(j)(k, k).real();
                    add_violation(rep, "f_kk below v_kk (k=" + std::to_string(k) + ")",
                                  rel(std::max(0.0, lo - t), std::abs(hi)), static_cast<int>(j));
                    add_violation(rep, "f_kk above u_kk (k=" + std::to_string(k) + ")",
                                  rel(std::max(0.0, t - hi), std::abs(hi)), static_cast<int>(j));
                }
                add_violation(rep, "component moment != p_k (k=" + std::to_string(k) + ")",
                              rel(std::abs(component_integral(X, k) - cls.budget_k(k)),
                                  std::abs(cls.budget_k(k))));
            }
            break;
        }
        case ClassKind::StripWeighted: {
            check_bounds(cls, "project_membership");
            for (std::size_t j = 0; j < n; ++j) {
                const double t = matrix_inner(cls.weight_mat, X.sample(j));
                const double lo = matrix_inner(cls.weight_mat, cls.lower->sample(j));
                const double hi = matrix_inner(cls.weight_mat, cls.upper->sample(j));
                add_violation(rep, "<B1,F> below <B1,V>", rel(std::max(0.0, lo - t), std::abs(hi)),
                              static_cast<int>(j));
                add_violation(rep, "<B1,F> above <B1,U>", rel(std::max(0.0, t - hi), std::abs(hi)),
                              static_cast<int>(j));
            }
            add_violation(rep, "weighted moment != p",
                          rel(std::abs(weighted_integral(X, cls.weight_mat) - cls.budget),
                              std::abs(cls.budget)));
            break;
        }
        case ClassKind::StripMatrix: {
            check_bounds(cls, "project_membership");
            for (std::size_t j = 0; j < n; ++j) {
                const Eigen::MatrixXcd below = X.sample(j) - cls.lower->sample(j);
                const Eigen::MatrixXcd above = cls.upper->sample(j) - X.sample(j);
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eb(0.5 * (below + below.adjoint()),
                                                                   Eigen::EigenvaluesOnly);
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ea(0.5 * (above + above.adjoint()),
                                                                   Eigen::EigenvaluesOnly);
                const double scale = cls.upper->sample(j).norm();
                add_violation(rep, "F - V not PSD",
                              rel(std::max(0.0, -eb.eigenvalues().minCoeff()), scale),
                              static_cast<int>(j));
                add_violation(rep, "U - F not PSD",
                              rel(std::max(0.0, -ea.eigenvalues().minCoeff()), scale),
                              static_cast<int>(j));
            }
            add_violation(rep, "matrix moment != P",
                          rel((matrix_integral(X) - cls.budget_mat).norm(), cls.budget_mat.norm()));
            break;
        }
        case ClassKind::BallTrace: {
            check_reference(cls, "project_membership");
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double d = real_trace(X.sample(j)) - real_trace(cls.reference->sample(j));
                acc += X.grid().weight(j) * d * d;
            }
            acc /= 2.0 * M_PI;
            add_violation(rep, "trace deviation outside the L2 ball",
                          rel(std::max(0.0, acc - cls.radius), std::abs(cls.radius)));
            break;
        }
        case ClassKind::BallComponent: {
            check_reference(cls, "project_membership");
            for (int k = 0; k < cls.dim; ++k) {
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    const double d =
                        X.sample(j)(k, k).real() - cls.reference->sample(j)(k, k).real();
                    acc += X.grid().weight(j) * d * d;
                }
                acc /= 2.0 * M_PI;
                add_violation(rep, "g_kk deviation outside the L2 ball (k=" + std::to_string(k) + ")",
                              rel(std::max(0.0, acc - cls.radius_k(k)), std::abs(cls.radius_k(k))));
            }
            break;
        }
        case ClassKind::BallWeighted: {
            check_reference(cls, "project_membership");
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double d = matrix_inner(cls.weight_mat,
                                              X.sample(j) - cls.reference->sample(j));
                acc += X.grid().weight(j) * d * d;
            }
            acc /= 2.0 * M_PI;
            add_violation(rep, "<B2,G-G1> deviation outside the L2 ball",
                          rel(std::max(0.0, acc - cls.radius), std::abs(cls.radius)));
            break;
        }
        case ClassKind::BallEntry: {
            check_reference(cls, "project_membership");
            for (int r = 0; r < cls.dim; ++r) {
                for (int c = 0; c < cls.dim; ++c) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        const Cplx d = X.sample(j)(r, c) - cls.reference->sample(j)(r, c);
                        acc += X.grid().weight(j) * std::norm(d);
                    }
                    acc /= 2.0 * M_PI;
                    add_violation(rep,
                                  "g_ij deviation outside the L2 ball (" + std::to_string(r) + "," +
                                      std::to_string(c) + ")",
                                  rel(std::max(0.0, acc - cls.radius_ij(r, c)),
                                      std::abs(cls.radius_ij(r, c))));
                }
            }
            break;
        }
    }

    rep.member = rep.max_defect <= rep.tol;
    return rep;
}

SpectralDensity class_initial_member(const DensityClass& cls, const FrequencyGrid& grid) {
    const int dim = cls.dim;
    const double span_mass = 2.0 * grid.lambda_max() / (2.0 * M_PI);

    switch (cls.kind) {
        case ClassKind::Singleton:
            check_reference(cls, "class_initial_member");
            return *cls.reference;
        case ClassKind::D0Trace: {
            const double t = cls.budget / span_mass;
            return SpectralDensity::constant(grid,
                                             (t / dim) * Eigen::MatrixXcd::Identity(dim, dim),
                                             SpectralDensity::Extension::Zero);
        }
        case ClassKind::D0Component: {
            Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
            for (int k = 0; k < dim; ++k) m(k, k) = cls.budget_k(k) / span_mass;
            return SpectralDensity::constant(grid, m, SpectralDensity::Extension::Zero);
        }
        case ClassKind::D0Weighted: {
            const double tr_b = real_trace(cls.weight_mat);
            require(tr_b > 0.0, "D0Weighted initial member needs trace(B1) > 0");
            return SpectralDensity::constant(
                grid, (cls.budget / (span_mass * tr_b)) * Eigen::MatrixXcd::Identity(dim, dim),
                SpectralDensity::Extension::Zero);
        }
        case ClassKind::D0Matrix:
            return SpectralDensity::constant(grid, cls.budget_mat / span_mass,
                                             SpectralDensity::Extension::Zero);
        case ClassKind::EpsTrace: {
            check_reference(cls, "class_initial_member");
            const double q1 = trace_integral(*cls.reference);
            const double free = cls.budget - (1.0 - cls.eps) * q1;
            if (free < -1e-9 * std::max(1.0, std::abs(cls.budget))) {
                throw infeasible_class_error("EpsTrace: budget below the contamination floor");
            }
            SpectralDensity base = cls.reference->scaled(1.0 - cls.eps);
            const Eigen::MatrixXcd add = (std::max(0.0, free) / span_mass / dim) *
                                         Eigen::MatrixXcd::Identity(dim, dim);
            return base.plus(
                SpectralDensity::constant(grid, add, SpectralDensity::Extension::Zero));
        }
        case ClassKind::EpsComponent: {
            check_reference(cls, "class_initial_member");
            SpectralDensity base = cls.reference->scaled(1.0 - cls.eps);
            Eigen::MatrixXcd add = Eigen::MatrixXcd::Zero(dim, dim);
            for (int k = 0; k < dim; ++k) {
                const double qk1 = component_integral(*cls.reference, k);
                const double free = cls.budget_k(k) - (1.0 - cls.eps) * qk1;
                if (free < -1e-9 * std::max(1.0, std::abs(cls.budget_k(k)))) {
                    throw infeasible_class_error("EpsComponent: budget below the contamination floor");
                }
                add(k, k) = std::max(0.0, free) / span_mass;
            }
            return base.plus(
                SpectralDensity::constant(grid, add, SpectralDensity::Extension::Zero));
        }
        case ClassKind::EpsWeighted: {
            check_reference(cls, "class_initial_member");
            const double q1 = weighted_integral(*cls.reference, cls.weight_mat);
            const double free = cls.budget - (1.0 - cls.eps) * q1;
            const double tr_b = real_trace(cls.weight_mat);
            require(tr_b > 0.0, "EpsWeighted initial member needs trace(B2) > 0");
            if (free < -1e-9 * std::max(1.0, std::abs(cls.budget))) {
                throw infeasible_class_error("EpsWeighted: budget below the contamination floor");
            }
            SpectralDensity base = cls.reference->scaled(1.0 - cls.eps);
            const Eigen::MatrixXcd add = (std::max(0.0, free) / (span_mass * tr_b)) *
                                         Eigen::MatrixXcd::Identity(dim, dim);
            return base.plus(
                SpectralDensity::constant(grid, add, SpectralDensity::Extension::Zero));
        }
        case ClassKind::EpsMatrix: {
            check_reference(cls, "class_initial_member");
            const Eigen::MatrixXcd q1 = matrix_integral(*cls.reference);
            const Eigen::MatrixXcd freem = cls.budget_mat - (1.0 - cls.eps) * q1;
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (freem + freem.adjoint()),
                                                               Eigen::EigenvaluesOnly);
            if (es.eigenvalues().minCoeff() < -1e-9 * std::max(1.0, cls.budget_mat.norm())) {
                throw infeasible_class_error("EpsMatrix: Q - (1-eps) int G1 is not PSD");
            }
            SpectralDensity base = cls.reference->scaled(1.0 - cls.eps);
            return base.plus(SpectralDensity::constant(grid, freem / span_mass,
                                                       SpectralDensity::Extension::Zero));
        }
        case ClassKind::StripTrace:
        case ClassKind::StripComponent:
        case ClassKind::StripWeighted:
        case ClassKind::StripMatrix: {
            check_bounds(cls, "class_initial_member");
            // Blend V + theta (U - V); theta chosen from the scalarized budget.
            double lo = 0.0, hi = 0.0, want = 0.0;
            if (cls.kind == ClassKind::StripTrace) {
                lo = trace_integral(*cls.lower);
                hi = trace_integral(*cls.upper);
                want = cls.budget;
            } else if (cls.kind == ClassKind::StripWeighted) {
                lo = weighted_integral(*cls.lower, cls.weight_mat);
                hi = weighted_integral(*cls.upper, cls.weight_mat);
                want = cls.budget;
            } else if (cls.kind == ClassKind::StripComponent) {
                for (int k = 0; k < dim; ++k) {
                    lo += component_integral(*cls.lower, k);
                    hi += component_integral(*cls.upper, k);
                    want += cls.budget_k(k);
                }
            } else {
                lo = trace_integral(*cls.lower);
                hi = trace_integral(*cls.upper);
                want = real_trace(cls.budget_mat);
            }
            if (want < lo - 1e-9 * std::max(1.0, std::abs(want)) ||
                want > hi + 1e-9 * std::max(1.0, std::abs(want))) {
                throw infeasible_class_error(cls.name() + ": budget outside [int V, int U]");
            }
            const double theta = hi > lo ? std::clamp((want - lo) / (hi - lo), 0.0, 1.0) : 0.0;
            SpectralDensity blend = cls.lower->scaled(1.0 - theta).plus(cls.upper->scaled(theta));
            if (cls.kind == ClassKind::StripComponent) {
                // Per-component blend so each budget is met exactly.
                std::vector<Eigen::MatrixXcd> samples(grid.size());
                std::vector<double> theta_k(static_cast<std::size_t>(dim), 0.0);
                for (int k = 0; k < dim; ++k) {
                    const double lok = component_integral(*cls.lower, k);
                    const double hik = component_integral(*cls.upper, k);
                    if (cls.budget_k(k) < lok - 1e-9 || cls.budget_k(k) > hik + 1e-9) {
                        throw infeasible_class_error("StripComponent: budget outside bounds");
                    }
                    theta_k[static_cast<std::size_t>(k)] =
                        hik > lok ? std::clamp((cls.budget_k(k) - lok) / (hik - lok), 0.0, 1.0) : 0.0;
                }
                for (std::size_t j = 0; j < grid.size(); ++j) {
                    Eigen::MatrixXcd m = cls.lower->sample(j);
                    for (int k = 0; k < dim; ++k) {
                        m(k, k) += theta_k[static_cast<std::size_t>(k)] *
                                   (cls.upper->sample(j)(k, k) - cls.lower->sample(j)(k, k));
                    }
                    samples[j] = std::move(m);
                }
                return SpectralDensity::from_samples(grid, std::move(samples));
            }
            if (cls.kind == ClassKind::StripMatrix) {
                const Eigen::MatrixXcd got = matrix_integral(blend);
                if ((got - cls.budget_mat).norm() > 1e-6 * std::max(1.0, cls.budget_mat.norm())) {
                    throw infeasible_class_error(
                        "StripMatrix: matrix budget unreachable by blending V and U");
                }
            }
            return blend;
        }
        case ClassKind::BallTrace:
        case ClassKind::BallComponent:
        case ClassKind::BallWeighted:
        case ClassKind::BallEntry:
            check_reference(cls, "class_initial_member");
            return *cls.reference; // ball center
    }
    throw input_error("class_initial_member: unhandled kind");
}

SpectralDensity class_random_member(const DensityClass& cls, const FrequencyGrid& grid,
                                    std::mt19937_64& rng) {
    const int dim = cls.dim;
    const PairView pairs{&grid, grid.center_index()};
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const auto random_profile = [&](double lo_frac) {
        std::vector<double> x(pairs.count());
        for (auto& v : x) v = lo_frac + (1.0 - lo_frac) * unit(rng);
        return x;
    };
    const auto random_dirs = [&] {
        std::vector<Eigen::MatrixXcd> d(pairs.count());
        for (auto& m : d) m = random_direction(dim, rng);
        return d;
    };
    const auto scale_to_mass = [&](std::vector<double>& t, double target) {
        double mass = 0.0;
        for (std::size_t k = 0; k < t.size(); ++k) mass += pairs.mass_per_trace(k) * t[k];
        require(mass > 0.0, "random member: degenerate profile");
        for (auto& v : t) v *= target / mass;
    };

    switch (cls.kind) {
        case ClassKind::Singleton:
            check_reference(cls, "class_random_member");
            return *cls.reference;
        case ClassKind::D0Trace: {
            auto t = random_profile(0.1);
            scale_to_mass(t, cls.budget);
            return realize_profile(grid, dim, t, random_dirs());
        }
        case ClassKind::D0Component: {
            std::vector<Eigen::MatrixXcd> samples(grid.size(), Eigen::MatrixXcd::Zero(dim, dim));
            for (int k = 0; k < dim; ++k) {
                auto t = random_profile(0.1);
                scale_to_mass(t, cls.budget_k(k));
                for (std::size_t p = 0; p < pairs.count(); ++p) {
                    samples[pairs.hi(p)](k, k) = t[p];
                    samples[pairs.lo(p)](k, k) = t[p];
                }
            }
            return SpectralDensity::from_samples(grid, std::move(samples));
        }
        case ClassKind::D0Weighted: {
            auto t = random_profile(0.1);
            auto dirs = random_dirs();
            // Normalize each direction so <B1, D> = 1, then t carries the weighted mass.
            for (auto& d : dirs) {
                const double g = matrix_inner(cls.weight_mat, d);
                require(g > 0.0, "D0Weighted random member: direction orthogonal to B1");
                d /= g;
            }
            scale_to_mass(t, cls.budget);
            return realize_profile(grid, dim, t, dirs);
        }
        case ClassKind::D0Matrix: {
            auto t = random_profile(0.1);
            scale_to_mass(t, 1.0);
            std::vector<Eigen::MatrixXcd> dirs(pairs.count(), cls.budget_mat);
            return realize_profile(grid, dim, t, dirs);
        }
        case ClassKind::EpsTrace: {
            check_reference(cls, "class_random_member");
            const double q1 = trace_integral(*cls.reference);
            const double free = cls.budget - (1.0 - cls.eps) * q1;
            if (free < -1e-9 * std::max(1.0, std::abs(cls.budget))) {
                throw infeasible_class_error("EpsTrace: budget below the contamination floor");
            }
            SpectralDensity base = cls.reference->scaled(1.0 - cls.eps);
            if (free <= 0.0) return base;
            auto t = random_profile(0.05);
            scale_to_mass(t, free);
            return base.plus(realize_profile(grid, dim, t, random_dirs()));
        }
        case ClassKind::EpsComponent: {
            check_reference(cls, "class_random_member");
            SpectralDensity base = cls.reference->scaled(1.0 - cls.eps);
            std::vector<Eigen::MatrixXcd> add(grid.size(), Eigen::MatrixXcd::Zero(dim, dim));
            for (int k = 0; k < dim; ++k) {
                const double free =
                    cls.budget_k(k) - (1.0 - cls.eps) * component_integral(*cls.reference, k);
                if (free < -1e-9) throw infeasible_class_error("EpsComponent: infeasible budget");
                if (free <= 0.0) continue;
                auto t = random_profile(0.05);
                scale_to_mass(t, free);
                for (std::size_t p = 0; p < pairs.count(); ++p) {
                    add[pairs.hi(p)](k, k) += t[p];
                    add[pairs.lo(p)](k, k) += t[p];
                }
            }
            return base.plus(SpectralDensity::from_samples(grid, std::move(add)));
        }
        case ClassKind::StripTrace: {
            check_bounds(cls, "class_random_member");
            std::vector<double> lo(pairs.count()), hi(pairs.count()), t(pairs.count());
            double lo_mass = 0.0, hi_mass = 0.0, mass = 0.0;
            for (std::size_t p = 0; p < pairs.count(); ++p) {
                lo[p] = real_trace(cls.lower->sample(pairs.hi(p)));
                hi[p] = real_trace(cls.upper->sample(pairs.hi(p)));
                t[p] = lo[p] + unit(rng) * (hi[p] - lo[p]);
                lo_mass += pairs.mass_per_trace(p) * lo[p];
                hi_mass += pairs.mass_per_trace(p) * hi[p];
                mass += pairs.mass_per_trace(p) * t[p];
            }
            if (cls.budget < lo_mass - 1e-9 || cls.budget > hi_mass + 1e-9) {
                throw infeasible_class_error("StripTrace: budget outside [int V, int U]");
            }
            // Blend toward the binding bound to hit the budget exactly.
            if (cls.budget >= mass) {
                const double theta = hi_mass > mass ? (cls.budget - mass) / (hi_mass - mass) : 0.0;
                for (std::size_t p = 0; p < pairs.count(); ++p) t[p] += theta * (hi[p] - t[p]);
            } else {
                const double theta = mass > lo_mass ? (mass - cls.budget) / (mass - lo_mass) : 0.0;
                for (std::size_t p = 0; p < pairs.count(); ++p) t[p] -= theta * (t[p] - lo[p]);
            }
            return realize_profile(grid, dim, t, random_dirs());
        }
        case ClassKind::StripComponent: {
            check_bounds(cls, "class_random_member");
            std::vector<Eigen::MatrixXcd> samples(grid.size(), Eigen::MatrixXcd::Zero(dim, dim));
            for (int k = 0; k < dim; ++k) {
                std::vector<double> lo(pairs.count()), hi(pairs.count()), t(pairs.count());
                double lo_mass = 0.0, hi_mass = 0.0, mass = 0.0;
                for (std::size_t p = 0; p < pairs.count(); ++p) {
                    lo[p] = cls.lower->sample(pairs.hi(p))(k, k).real();
                    hi[p] = cls.upper->sample(pairs.hi(p))(k, k).real();
                    t[p] = lo[p] + unit(rng) * (hi[p] - lo[p]);
                    lo_mass += pairs.mass_per_trace(p) * lo[p];
                    hi_mass += pairs.mass_per_trace(p) * hi[p];
                    mass += pairs.mass_per_trace(p) * t[p];
                }
                const double want = cls.budget_k(k);
                if (want < lo_mass - 1e-9 || want > hi_mass + 1e-9) {
                    throw infeasible_class_error("StripComponent: budget outside bounds");
                }
                if (want >= mass) {
                    const double theta = hi_mass > mass ? (want - mass) / (hi_mass - mass) : 0.0;
                    for (std::size_t p = 0; p < pairs.count(); ++p) t[p] += theta * (hi[p] - t[p]);
                } else {
                    const double theta = mass > lo_mass ? (mass - want) / (mass - lo_mass) : 0.0;
                    for (std::size_t p = 0; p < pairs.count(); ++p) t[p] -= theta * (t[p] - lo[p]);
                }
                for (std::size_t p = 0; p < pairs.count(); ++p) {
                    samples[pairs.hi(p)](k, k) = t[p];
                    samples[pairs.lo(p)](k, k) = t[p];
                }
            }
            return SpectralDensity::from_samples(grid, std::move(samples));
        }
        case ClassKind::BallTrace: {
            check_reference(cls, "class_random_member");
            auto y = random_profile(0.0);
            double norm_sq = 0.0;
            for (std::size_t p = 0; p < pairs.count(); ++p) {
                norm_sq += pairs.mass_per_trace(p) * y[p] * y[p];
            }
            require(norm_sq > 0.0, "BallTrace random member: zero deviation direction");
            const double target = (0.2 + 0.75 * unit(rng)) * cls.radius;
            const double s = std::sqrt(target / norm_sq);
            std::vector<double> t(pairs.count());
            for (std::size_t p = 0; p < pairs.count(); ++p) t[p] = s * y[p];
            return cls.reference->plus(realize_profile(grid, dim, t, random_dirs()));
        }
        case ClassKind::BallComponent: {
            check_reference(cls, "class_random_member");
            std::vector<Eigen::MatrixXcd> add(grid.size(), Eigen::MatrixXcd::Zero(dim, dim));
            for (int k = 0; k < dim; ++k) {
                auto y = random_profile(0.0);
                double norm_sq = 0.0;
                for (std::size_t p = 0; p < pairs.count(); ++p) {
                    norm_sq += pairs.mass_per_trace(p) * y[p] * y[p];
                }
                if (norm_sq <= 0.0) continue;
                const double target = (0.2 + 0.75 * unit(rng)) * cls.radius_k(k);
                const double s = std::sqrt(target / norm_sq);
                for (std::size_t p = 0; p < pairs.count(); ++p) {
                    add[pairs.hi(p)](k, k) += s * y[p];
                    add[pairs.lo(p)](k, k) += s * y[p];
                }
            }
            return cls.reference->plus(SpectralDensity::from_samples(grid, std::move(add)));
        }
        case ClassKind::BallEntry: {
            check_reference(cls, "class_random_member");
            std::vector<Eigen::MatrixXcd> add(grid.size(), Eigen::MatrixXcd::Zero(dim, dim));
            for (int k = 0; k < dim; ++k) {
                auto y = random_profile(0.0);
                double norm_sq = 0.0;
                for (std::size_t p = 0; p < pairs.count(); ++p) {
                    norm_sq += pairs.mass_per_trace(p) * y[p] * y[p];
                }
                if (norm_sq <= 0.0) continue;
                const double target = (0.2 + 0.75 * unit(rng)) * cls.radius_ij(k, k);
                const double s = std::sqrt(target / norm_sq);
                for (std::size_t p = 0; p < pairs.count(); ++p) {
                    add[pairs.hi(p)](k, k) += s * y[p];
                    add[pairs.lo(p)](k, k) += s * y[p];
                }
            }
            return cls.reference->plus(SpectralDensity::from_samples(grid, std::move(add)));
        }
        case ClassKind::EpsWeighted:
        case ClassKind::EpsMatrix:
        case ClassKind::BallWeighted:
        case ClassKind::StripWeighted:
        case ClassKind::StripMatrix:
        default:
            throw unsupported_class_error("class_random_member: no sampler for " + cls.name());
    }
}

} // namespace wkinterp
