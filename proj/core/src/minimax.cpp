#include "wkinterp/minimax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "wkinterp/errors.hpp"
#include "wkinterp/transforms.hpp"

namespace wkinterp {

namespace {

using Cplx = std::complex<double>;

struct PairView {
    const FrequencyGrid* grid;
    int center;
    std::size_t count() const { return static_cast<std::size_t>(center) + 1; }
    std::size_t hi(std::size_t k) const { return static_cast<std::size_t>(center) + k; }
    std::size_t lo(std::size_t k) const { return static_cast<std::size_t>(center) - k; }
    double mass_per_trace(std::size_t k) const {
        const double w = k == 0 ? grid->weight(hi(0))
                                : grid->weight(hi(k)) + grid->weight(lo(k));
        return w / (2.0 * M_PI);
    }
};

/// Pairwise gains ||u||^2 (symmetrized) and unit directions at the + node.
struct GainField {
    std::vector<double> gain;                 // per pair
    std::vector<Eigen::VectorXcd> direction;  // per pair, at the positive node
};

GainField pair_gains(const SpectralVectorField& u, const PairView& pairs) {
    GainField g;
    g.gain.resize(pairs.count());
    g.direction.resize(pairs.count());
    for (std::size_t k = 0; k < pairs.count(); ++k) {
        const Eigen::VectorXcd& uh = u[pairs.hi(k)];
        const Eigen::VectorXcd& ul = u[pairs.lo(k)];
        g.gain[k] = 0.5 * (uh.squaredNorm() + ul.squaredNorm());
        const double n = uh.norm();
        if (n > 0.0) {
            g.direction[k] = uh / n;
        } else {
            g.direction[k] = Eigen::VectorXcd::Zero(uh.size());
        }
    }
    return g;
}

/// Adds trace tau as a rank-1 spike aligned with dir at both nodes of pair k.
void add_spike(std::vector<Eigen::MatrixXcd>& samples, const PairView& pairs, std::size_t k,
               double tau, const Eigen::VectorXcd& dir) {
    if (tau == 0.0) return;
    const auto dim = samples.front().rows();
    Eigen::MatrixXcd block;
    if (dir.norm() > 0.0) {
        block = tau * (dir * dir.adjoint());
    } else {
        block = (tau / static_cast<double>(dim)) * Eigen::MatrixXcd::Identity(dim, dim);
    }
    samples[pairs.hi(k)] += block;
    if (k > 0) samples[pairs.lo(k)] += block.conjugate();
}

bool all_gains_equal(const std::vector<double>& gain) {
    const auto [lo, hi] = std::minmax_element(gain.begin(), gain.end());
    return *hi - *lo <= 1e-12 * std::max(1.0, *hi);
}

std::size_t argmax_pair(const std::vector<double>& gain) {
    // Strict > keeps the lowest frequency on ties (pair index orders |lambda|).
    std::size_t best = 0;
    for (std::size_t k = 1; k < gain.size(); ++k) {
        if (gain[k] > gain[best]) best = k;
    }
    return best;
}

/// Value of the linear functional restricted to one side.
double linear_value(const SpectralDensity& X, const SpectralVectorField& u) {
    double acc = 0.0;
    for (std::size_t j = 0; j < X.grid().size(); ++j) {
        const Eigen::VectorXcd& uj = u[j];
        acc += X.grid().weight(j) * (uj.adjoint() * X.sample(j) * uj).value().real();
    }
    return acc / (2.0 * M_PI);
}

/// Rank-1 completion with the given diagonal, phases aligned against u.
Eigen::MatrixXcd completed_from_diag(const Eigen::VectorXd& diag, const Eigen::VectorXcd& u) {
    const auto dim = diag.size();
    Eigen::VectorXcd d(dim);
    for (Eigen::Index k = 0; k < dim; ++k) {
        const double mag = std::sqrt(std::max(0.0, diag(k)));
        const Cplx uk = u(k);
        const double an = std::abs(uk);
        d(k) = an > 0.0 ? mag * (uk / an) : Cplx(mag, 0.0);
    }
    return d * d.adjoint();
}

SpectralDensity maximize_trace_budget(const DensityClass& cls, const GainField& g,
                                      const PairView& pairs, const FrequencyGrid& grid,
                                      double budget, const SpectralDensity* base) {
    const int dim = cls.dim;
    std::vector<Eigen::MatrixXcd> samples(grid.size(), Eigen::MatrixXcd::Zero(dim, dim));
    if (base != nullptr) {
        for (std::size_t j = 0; j < grid.size(); ++j) samples[j] = base->sample(j);
    }
    if (budget <= 0.0) {
        return SpectralDensity::from_samples(grid, std::move(samples));
    }
    if (all_gains_equal(g.gain)) {
        // Documented degenerate tie-break: uniform allocation.
        double total_mass = 0.0;
        for (std::size_t k = 0; k < pairs.count(); ++k) total_mass += pairs.mass_per_trace(k);
        const double tau = budget / total_mass;
        for (std::size_t k = 0; k < pairs.count(); ++k) add_spike(samples, pairs, k, tau, g.direction[k]);
    } else {
        const std::size_t k = argmax_pair(g.gain);
        add_spike(samples, pairs, k, budget / pairs.mass_per_trace(k), g.direction[k]);
    }
    return SpectralDensity::from_samples(grid, std::move(samples));
}

SpectralDensity maximize_strip_trace(const DensityClass& cls, const GainField& g,
                                     const PairView& pairs, const FrequencyGrid& grid) {
    const int dim = cls.dim;
    const std::size_t np = pairs.count();
    std::vector<double> lo(np), hi(np), tau(np);
    double lo_mass = 0.0, hi_mass = 0.0;
    for (std::size_t k = 0; k < np; ++k) {
        lo[k] = cls.lower->sample(pairs.hi(k)).trace().real();
        hi[k] = cls.upper->sample(pairs.hi(k)).trace().real();
        lo_mass += pairs.mass_per_trace(k) * lo[k];
        hi_mass += pairs.mass_per_trace(k) * hi[k];
        tau[k] = lo[k];
    }
    const double tol = 1e-9 * std::max(1.0, std::abs(cls.budget));
    if (cls.budget < lo_mass - tol || cls.budget > hi_mass + tol) {
        throw infeasible_class_error("maximize_linear: strip budget outside [int V, int U]");
    }

    if (all_gains_equal(g.gain) && hi_mass > lo_mass) {
        const double theta = std::clamp((cls.budget - lo_mass) / (hi_mass - lo_mass), 0.0, 1.0);
        for (std::size_t k = 0; k < np; ++k) tau[k] = lo[k] + theta * (hi[k] - lo[k]);
    } else {
        double extra = std::clamp(cls.budget - lo_mass, 0.0, hi_mass - lo_mass);
        std::vector<std::size_t> order(np);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return g.gain[a] > g.gain[b]; });
        for (std::size_t k : order) {
            if (extra <= 0.0) break;
            const double cap = pairs.mass_per_trace(k) * (hi[k] - lo[k]);
            const double take = std::min(extra, cap);
            tau[k] += take / pairs.mass_per_trace(k);
            extra -= take;
        }
    }

    std::vector<Eigen::MatrixXcd> samples(grid.size(), Eigen::MatrixXcd::Zero(dim, dim));
    for (std::size_t k = 0; k < np; ++k) add_spike(samples, pairs, k, tau[k], g.direction[k]);
    return SpectralDensity::from_samples(grid, std::move(samples));
}

SpectralDensity maximize_ball_trace(const DensityClass& cls, const GainField& g,
                                    const PairView& pairs, const FrequencyGrid& grid) {
    double norm_sq = 0.0;
    for (std::size_t k = 0; k < pairs.count(); ++k) {
        norm_sq += pairs.mass_per_trace(k) * g.gain[k] * g.gain[k];
    }
    if (norm_sq <= 0.0) {
        return cls.reference->with_extension(SpectralDensity::Extension::Zero);
    }
    const double t = std::sqrt(cls.radius / norm_sq);
    std::vector<Eigen::MatrixXcd> samples(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) samples[j] = cls.reference->sample(j);
    for (std::size_t k = 0; k < pairs.count(); ++k) {
        add_spike(samples, pairs, k, t * g.gain[k], g.direction[k]);
    }
    return SpectralDensity::from_samples(grid, std::move(samples));
}

/// Component styles: per-component gains |u_k|^2, diagonal budget allocation,
/// then a rank-1 completion of the allocated diagonal (exact for dim = 1).
SpectralDensity maximize_component(const DensityClass& cls, const SpectralVectorField& u,
                                   const PairView& pairs, const FrequencyGrid& grid) {
    const int dim = cls.dim;
    const std::size_t np = pairs.count();

    // Per-component per-pair gains.
    std::vector<Eigen::VectorXd> comp_gain(np);
    for (std::size_t k = 0; k < np; ++k) {
        comp_gain[k] = 0.5 * (u[pairs.hi(k)].cwiseAbs2() + u[pairs.lo(k)].cwiseAbs2());
    }

    // Allocate the diagonal profile d(k, pair).
    std::vector<Eigen::VectorXd> diag(np, Eigen::VectorXd::Zero(dim));
    const bool eps_family =
        cls.kind == ClassKind::EpsComponent;
    const SpectralDensity* base = nullptr;
    SpectralDensity base_store;
    if (eps_family) {
        base_store = cls.reference->scaled(1.0 - cls.eps)
                         .with_extension(SpectralDensity::Extension::Zero);
        base = &base_store;
    }

    if (cls.kind == ClassKind::D0Component || cls.kind == ClassKind::EpsComponent) {
        for (int c = 0; c < dim; ++c) {
            double budget = cls.budget_k(c);
            if (eps_family) {
                budget -= (1.0 - cls.eps) * component_integral(*cls.reference, c);
                if (budget < -1e-9 * std::max(1.0, std::abs(cls.budget_k(c)))) {
                    throw infeasible_class_error("maximize_linear: contamination budget infeasible");
                }
                budget = std::max(0.0, budget);
            }
            if (budget <= 0.0) continue;
            std::vector<double> gain(np);
            for (std::size_t k = 0; k < np; ++k) gain[k] = comp_gain[k](c);
            if (all_gains_equal(gain)) {
                double total = 0.0;
                for (std::size_t k = 0; k < np; ++k) total += pairs.mass_per_trace(k);
                for (std::size_t k = 0; k < np; ++k) diag[k](c) += budget / total;
            } else {
                const std::size_t k = argmax_pair(gain);
                diag[k](c) += budget / pairs.mass_per_trace(k);
            }
        }
    } else if (cls.kind == ClassKind::StripComponent) {
        for (int c = 0; c < dim; ++c) {
            std::vector<double> lo(np), hi(np), gain(np);
            double lo_mass = 0.0, hi_mass = 0.0;
            for (std::size_t k = 0; k < np; ++k) {
                lo[k] = cls.lower->sample(pairs.hi(k))(c, c).real();
                hi[k] = cls.upper->sample(pairs.hi(k))(c, c).real();
                gain[k] = comp_gain[k](c);
                lo_mass += pairs.mass_per_trace(k) * lo[k];
                hi_mass += pairs.mass_per_trace(k) * hi[k];
                diag[k](c) = lo[k];
            }
            const double want = cls.budget_k(c);
            if (want < lo_mass - 1e-9 || want > hi_mass + 1e-9) {
                throw infeasible_class_error("maximize_linear: strip budget outside bounds");
            }
            if (all_gains_equal(gain) && hi_mass > lo_mass) {
                const double theta = std::clamp((want - lo_mass) / (hi_mass - lo_mass), 0.0, 1.0);
                for (std::size_t k = 0; k < np; ++k) diag[k](c) = lo[k] + theta * (hi[k] - lo[k]);
            } else {
                double extra = std::clamp(want - lo_mass, 0.0, hi_mass - lo_mass);
                std::vector<std::size_t> order(np);
                std::iota(order.begin(), order.end(), 0);
                std::stable_sort(order.begin(), order.end(),
                                 [&](std::size_t a, std::size_t b) { return gain[a] > gain[b]; });
                for (std::size_t k : order) {
                    if (extra <= 0.0) break;
                    const double cap = pairs.mass_per_trace(k) * (hi[k] - lo[k]);
                    const double take = std::min(extra, cap);
                    diag[k](c) += take / pairs.mass_per_trace(k);
                    extra -= take;
                }
            }
        }
    } else { // BallComponent
        for (int c = 0; c < dim; ++c) {
            double norm_sq = 0.0;
            for (std::size_t k = 0; k < np; ++k) {
                norm_sq += pairs.mass_per_trace(k) * comp_gain[k](c) * comp_gain[k](c);
            }
            if (norm_sq <= 0.0) continue;
            const double t = std::sqrt(cls.radius_k(c) / norm_sq);
            for (std::size_t k = 0; k < np; ++k) diag[k](c) = t * comp_gain[k](c);
        }
        if (cls.reference.has_value()) {
            base_store = cls.reference->with_extension(SpectralDensity::Extension::Zero);
            base = &base_store;
        }
    }

    std::vector<Eigen::MatrixXcd> samples(grid.size(), Eigen::MatrixXcd::Zero(dim, dim));
    if (base != nullptr) {
        for (std::size_t j = 0; j < grid.size(); ++j) samples[j] = base->sample(j);
    }
    for (std::size_t k = 0; k < np; ++k) {
        if (diag[k].maxCoeff() <= 0.0) continue;
        const Eigen::MatrixXcd block = completed_from_diag(diag[k], u[pairs.hi(k)]);
        samples[pairs.hi(k)] += block;
        if (k > 0) samples[pairs.lo(k)] += block.conjugate();
    }
    SpectralDensity diag_candidate = SpectralDensity::from_samples(grid, std::move(samples));

    // Joint candidate for the moment classes: every component budget at the
    // single pair maximizing the coupled rank-1 score.
    if (cls.kind == ClassKind::D0Component || cls.kind == ClassKind::EpsComponent) {
        Eigen::VectorXd budgets(dim);
        bool feasible = true;
        for (int c = 0; c < dim; ++c) {
            double b = cls.budget_k(c);
            if (eps_family) b = std::max(0.0, b - (1.0 - cls.eps) * component_integral(*cls.reference, c));
            budgets(c) = b;
            if (b < 0.0) feasible = false;
        }
        if (feasible && budgets.maxCoeff() > 0.0) {
            std::size_t best = 0;
            double best_score = -1.0;
            for (std::size_t k = 0; k < np; ++k) {
                double score = 0.0;
                for (int c = 0; c < dim; ++c) {
                    score += std::sqrt(budgets(c) * comp_gain[k](c));
                }
                score *= score;
                if (score > best_score) {
                    best_score = score;
                    best = k;
                }
            }
            std::vector<Eigen::MatrixXcd> joint(grid.size(), Eigen::MatrixXcd::Zero(dim, dim));
            if (base != nullptr) {
                for (std::size_t j = 0; j < grid.size(); ++j) joint[j] = base->sample(j);
            }
            Eigen::VectorXd d = budgets / pairs.mass_per_trace(best);
            const Eigen::MatrixXcd block = completed_from_diag(d, u[pairs.hi(best)]);
            joint[pairs.hi(best)] += block;
            if (best > 0) joint[pairs.lo(best)] += block.conjugate();
            SpectralDensity joint_candidate = SpectralDensity::from_samples(grid, std::move(joint));
            if (linear_value(joint_candidate, u) > linear_value(diag_candidate, u)) {
                return joint_candidate;
            }
        }
    }
    return diag_candidate;
}

} // namespace

SpectralDensity maximize_side(const DensityClass& cls, const SpectralVectorField& direction,
                              const FrequencyGrid& grid) {
    if (!class_is_optimizable(cls.kind)) {
        throw unsupported_class_error("maximize_linear: class " + cls.name() +
                                      " is diagnostics-only");
    }
    const PairView pairs{&grid, grid.center_index()};
    const GainField g = pair_gains(direction, pairs);

    switch (cls.kind) {
        case ClassKind::Singleton:
            return *cls.reference;
        case ClassKind::D0Trace:
            return maximize_trace_budget(cls, g, pairs, grid, cls.budget, nullptr);
        case ClassKind::EpsTrace: {
            const double q1 = trace_integral(*cls.reference);
            const double free = cls.budget - (1.0 - cls.eps) * q1;
            if (free < -1e-9 * std::max(1.0, std::abs(cls.budget))) {
                throw infeasible_class_error("maximize_linear: contamination budget infeasible");
            }
            SpectralDensity base = cls.reference->scaled(1.0 - cls.eps)
                                       .with_extension(SpectralDensity::Extension::Zero);
            return maximize_trace_budget(cls, g, pairs, grid, std::max(0.0, free), &base);
        }
        case ClassKind::StripTrace:
            return maximize_strip_trace(cls, g, pairs, grid);
        case ClassKind::BallTrace:
            return maximize_ball_trace(cls, g, pairs, grid);
        case ClassKind::D0Component:
        case ClassKind::EpsComponent:
        case ClassKind::StripComponent:
        case ClassKind::BallComponent:
            return maximize_component(cls, direction, pairs, grid);
        default:
            throw unsupported_class_error("maximize_linear: class " + cls.name() +
                                          " is diagnostics-only");
    }
}

std::pair<SpectralDensity, SpectralDensity> maximize_linear(const SpectralVectorField& h0,
                                                            const SpectralVectorField& A,
                                                            const DensityClass& class_F,
                                                            const DensityClass& class_G,
                                                            const FrequencyGrid& grid) {
    if (h0.size() != grid.size() || A.size() != grid.size()) {
        throw grid_mismatch_error("maximize_linear: field size mismatch");
    }
    SpectralVectorField u_f(grid.size()), u_g(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        u_f[j] = (A[j] - h0[j]).conjugate();
        u_g[j] = h0[j].conjugate();
    }
    return {maximize_side(class_F, u_f, grid), maximize_side(class_G, u_g, grid)};
}

SaddlePoint saddle_iterate(const DensityClass& class_F, const DensityClass& class_G,
                           const WeightFunction& a, const MissingSet& S, const FrequencyGrid& grid,
                           const SaddleOptions& opts, std::optional<SpectralDensity> F_init,
                           std::optional<SpectralDensity> G_init) {
    SpectralDensity F = F_init.value_or(class_initial_member(class_F, grid));
    SpectralDensity G = G_init.value_or(class_initial_member(class_G, grid));

    {
        const auto check_member = [](const DensityClass& cls, const SpectralDensity& X,
                                     const char* side) {
            const MembershipReport rep = project_membership(cls, X);
            if (!rep.member) {
                throw input_error(std::string("saddle_iterate: initial ") + side +
                                  " density is not a class member (defect " +
                                  std::to_string(rep.max_defect) + ")");
            }
        };
        check_member(class_F, F, "F");
        check_member(class_G, G, "G");
    }

    EstimateOptions est_opts;
    est_opts.tikhonov = opts.tikhonov;

    const auto evaluate = [&](const SpectralDensity& Fx, const SpectralDensity& Gx) {
        try {
            return estimate(Fx, Gx, S, a, grid, est_opts);
        } catch (const singular_density_error& e) {
            throw minimality_lost_error(std::string("saddle_iterate: iterate broke minimality: ") +
                                        e.what());
        }
    };

    SaddlePoint sp;
    double best_gap = std::numeric_limits<double>::infinity();
    int stall = 0;

    EstimateSolution est = evaluate(F, G);
    sp.qgrid = est.qgrid;

    // Pairwise mass exchange for scalar trace-style classes: move mass from
    // the worst loaded frequency pair to the best one with a line search.
    // This removes the vertex zig-zag that keeps plain conditional-gradient
    // steps at O(1/k) near a face of the budget simplex.
    const PairView pairs{&grid, grid.center_index()};
    const auto exchange_profile = [&](const DensityClass& cls) {
        return cls.dim == 1 &&
               (cls.kind == ClassKind::D0Trace || cls.kind == ClassKind::EpsTrace ||
                cls.kind == ClassKind::StripTrace);
    };
    const auto pair_bounds = [&](const DensityClass& cls, std::size_t p) {
        double floor = 0.0, cap = std::numeric_limits<double>::infinity();
        if (cls.kind == ClassKind::EpsTrace) {
            floor = (1.0 - cls.eps) * cls.reference->sample(pairs.hi(p))(0, 0).real();
        } else if (cls.kind == ClassKind::StripTrace) {
            floor = cls.lower->sample(pairs.hi(p))(0, 0).real();
            cap = cls.upper->sample(pairs.hi(p))(0, 0).real();
        }
        return std::make_pair(floor, cap);
    };
    const auto exchange_step = [&](const DensityClass& cls, SpectralDensity& X, bool is_f_side) {
        const SpectralVectorField h_d = est.on_density_grid(est.h);
        const SpectralVectorField A_d = est.on_density_grid(est.A);
        std::vector<double> gain(pairs.count());
        for (std::size_t p = 0; p < pairs.count(); ++p) {
            const auto u_at = [&](std::size_t j) {
                return is_f_side ? (A_d[j] - h_d[j]).squaredNorm() : h_d[j].squaredNorm();
            };
            gain[p] = 0.5 * (u_at(pairs.hi(p)) + u_at(pairs.lo(p)));
        }
        std::size_t to = pairs.count(), from = pairs.count();
        for (std::size_t p = 0; p < pairs.count(); ++p) {
            const auto [floor, cap] = pair_bounds(cls, p);
            const double x = X.sample(pairs.hi(p))(0, 0).real();
            if (x < cap - 1e-14 && (to == pairs.count() || gain[p] > gain[to])) to = p;
            if (x > floor + 1e-14 && (from == pairs.count() || gain[p] < gain[from])) from = p;
        }
        if (to == pairs.count() || from == pairs.count() || to == from) return false;
        if (gain[to] - gain[from] <= 1e-15 * std::max(1.0, gain[to])) return false;

        const auto [floor_from, cap_from] = pair_bounds(cls, from);
        const auto [floor_to, cap_to] = pair_bounds(cls, to);
        (void)cap_from;
        (void)floor_to;
        double mass_max = (X.sample(pairs.hi(from))(0, 0).real() - floor_from) *
                          pairs.mass_per_trace(from);
        if (std::isfinite(cap_to)) {
            mass_max = std::min(mass_max, (cap_to - X.sample(pairs.hi(to))(0, 0).real()) *
                                              pairs.mass_per_trace(to));
        }
        if (mass_max <= 0.0) return false;

        const auto moved = [&](double mass) {
            SpectralDensity Y = X;
            const double d_from = mass / pairs.mass_per_trace(from);
            const double d_to = mass / pairs.mass_per_trace(to);
            Y.sample(pairs.hi(from))(0, 0) -= d_from;
            Y.sample(pairs.lo(from))(0, 0) = Y.sample(pairs.hi(from))(0, 0);
            Y.sample(pairs.hi(to))(0, 0) += d_to;
            Y.sample(pairs.lo(to))(0, 0) = Y.sample(pairs.hi(to))(0, 0);
            return Y;
        };
        const auto value = [&](double mass) {
            try {
                const SpectralDensity Y = moved(mass);
                return is_f_side ? evaluate(Y, G).delta : evaluate(F, Y).delta;
            } catch (const error&) {
                return -std::numeric_limits<double>::infinity();
            }
        };

        double lo = 0.0, hi = mass_max;
        const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
        double x1 = hi - ratio * (hi - lo), x2 = lo + ratio * (hi - lo);
        double f1 = value(x1), f2 = value(x2);
        for (int it = 0; it < 14; ++it) {
            if (f1 < f2) {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + ratio * (hi - lo);
                f2 = value(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - ratio * (hi - lo);
                f1 = value(x1);
            }
        }
        const double best_mass = f1 > f2 ? x1 : x2;
        const double best_value = std::max(f1, f2);
        if (best_value <= est.delta) return false;
        X = moved(best_mass);
        est = evaluate(F, G);
        return true;
    };
    for (int k = 0; k < opts.max_iter; ++k) {
        const auto [f_star, g_star] = maximize_linear(est.on_density_grid(est.h),
                                                      est.on_density_grid(est.A), class_F,
                                                      class_G, grid);
        const double here = cross_mse(est.h, est.A, F, G, est.qgrid);
        const double there = cross_mse(est.h, est.A, f_star, g_star, est.qgrid);
        const double gap = there - here;

        sp.delta_trace.push_back(est.delta);
        sp.iterations = k + 1;
        sp.gap = gap;

        if (gap <= opts.tol) {
            sp.converged = true;
            break;
        }
        if (gap >= best_gap - 1e-12 * std::max(1.0, best_gap)) {
            if (++stall >= opts.stall_window) {
                throw stalled_error("saddle_iterate: gap " + std::to_string(gap) +
                                    " stopped improving for " + std::to_string(stall) +
                                    " iterations");
            }
        } else {
            best_gap = gap;
            stall = 0;
        }

        // Exact line search on the concave section phi(t) = Delta(F_t, G_t).
        const auto blend = [&](double t) {
            return std::make_pair(F.scaled(1.0 - t).plus(f_star.scaled(t)),
                                  G.scaled(1.0 - t).plus(g_star.scaled(t)));
        };
        const auto phi = [&](double t) {
            auto [Ft, Gt] = blend(t);
            try {
                return estimate(Ft, Gt, S, a, grid, est_opts).delta;
            } catch (const error&) {
                return -std::numeric_limits<double>::infinity();
            }
        };

        double lo = 0.0, hi = 1.0;
        const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
        double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
        double f1 = phi(x1), f2 = phi(x2);
        for (int it = 0; it < 18; ++it) {
            if (f1 < f2) {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = phi(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = phi(x1);
            }
        }
        double step = f1 > f2 ? x1 : x2;
        double value = std::max(f1, f2);
        if (value <= est.delta) {
            // Fall back to the open-loop schedule if the search found no ascent.
            step = 2.0 / (static_cast<double>(k) + 2.0);
        }
        auto [Fn, Gn] = blend(step);
        EstimateSolution next = evaluate(Fn, Gn);
        if (next.delta < est.delta) {
            // Keep monotonicity: shrink toward the current point.
            double shrink = step;
            for (int tries = 0; tries < 12 && next.delta < est.delta; ++tries) {
                shrink *= 0.5;
                std::tie(Fn, Gn) = blend(shrink);
                next = evaluate(Fn, Gn);
            }
            if (next.delta < est.delta) {
                // No ascent in this direction at any step size.
                if (++stall >= opts.stall_window) {
                    throw stalled_error("saddle_iterate: no ascent along the linearized direction");
                }
                continue;
            }
        }
        F = std::move(Fn);
        G = std::move(Gn);
        est = std::move(next);

        for (int sweep = 0; sweep < 2; ++sweep) {
            bool moved_any = false;
            if (exchange_profile(class_F)) moved_any |= exchange_step(class_F, F, true);
            if (exchange_profile(class_G)) moved_any |= exchange_step(class_G, G, false);
            if (!moved_any) break;
        }
    }

    sp.F0 = F;
    sp.G0 = G;
    sp.h0 = est.h;
    sp.C0 = est.C;
    sp.A = est.A;
    sp.delta0 = est.delta;

    // Saddle verification on random class members.
    std::mt19937_64 rng(opts.probe_seed);
    double probe_gap = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < opts.probes; ++i) {
        const SpectralDensity Fp = class_random_member(class_F, grid, rng);
        const SpectralDensity Gp = class_random_member(class_G, grid, rng);
        probe_gap = std::max(probe_gap, cross_mse(sp.h0, sp.A, Fp, Gp, sp.qgrid) - sp.delta0);
    }
    sp.probe_gap = opts.probes > 0 ? probe_gap : 0.0;
    return sp;
}

} // namespace wkinterp
