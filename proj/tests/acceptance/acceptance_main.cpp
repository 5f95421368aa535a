// Acceptance suite: one pass/fail line per criterion, nonzero exit on failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "wkinterp/density_class.hpp"
#include "wkinterp/estimator.hpp"
#include "wkinterp/kkt.hpp"
#include "wkinterp/minimax.hpp"
#include "wkinterp/simulation.hpp"

using namespace wkinterp;

namespace {

struct Suite {
    int failures = 0;

    void check(int id, const std::string& name, const std::function<bool(std::string&)>& body) {
        std::string detail;
        bool ok = false;
        try {
            ok = body(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::printf("%s %2d %s%s%s\n", ok ? "PASS" : "FAIL", id, name.c_str(),
                    detail.empty() ? "" : " -- ", detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
};

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

struct Problem {
    FrequencyGrid grid;
    MissingSet S;
    WeightFunction a;
    SpectralDensity F, G;
};

Problem ou_problem(bool noisy, double lambda_max = 64.0, int n_points = 4097,
                   double step = 1.0 / 256.0) {
    Problem p;
    p.grid = FrequencyGrid::make(lambda_max, n_points);
    p.S = MissingSet::make({{-1.0, 0.0}}, step);
    p.a = WeightFunction::from_expression(p.S, "one", 1);
    p.F = SpectralDensity::rational(p.grid, 2.0, 1.0);
    p.G = noisy ? SpectralDensity::rational(p.grid, 1.0, 1.0) : SpectralDensity::zero(p.grid, 1);
    return p;
}

Problem two_interval_problem(double lambda_max = 64.0, int n_points = 4097,
                             double step = 1.0 / 256.0) {
    Problem p;
    p.grid = FrequencyGrid::make(lambda_max, n_points);
    p.S = MissingSet::make({{-3.0, -2.0}, {-1.0, 0.0}}, step);
    p.a = WeightFunction::from_expression(p.S, "one", 1);
    p.F = SpectralDensity::rational(p.grid, 2.0, 1.0);
    p.G = SpectralDensity::rational(p.grid, 1.0, 1.0);
    return p;
}

double weight_l2_norm(const WeightFunction& a, const MissingSet& S) {
    double acc = 0.0;
    for (std::size_t k = 0; k < S.node_count(); ++k) {
        acc += S.node_weights()[k] * a.at_node(k).squaredNorm();
    }
    return std::sqrt(acc);
}

bool scaling_laws_hold(const Problem& p, const EstimateSolution& base, std::string& detail) {
    for (double c : {0.5, 2.0, 10.0}) {
        const auto scaled = estimate(p.F.scaled(c), p.G.scaled(c), p.S, p.a, p.grid);
        double hsup = 0.0, dsup = 0.0;
        for (std::size_t j = 0; j < p.grid.size(); ++j) {
            hsup = std::max(hsup, base.h[j].norm());
            dsup = std::max(dsup, (scaled.h[j] - base.h[j]).norm());
        }
        const double delta_gap = std::abs(scaled.delta - c * base.delta) / (c * base.delta);
        const double h_gap = dsup / hsup;
        if (delta_gap > 1e-8 || h_gap > 1e-8) {
            detail = "c=" + num(c) + " delta_gap=" + num(delta_gap) +
                     " h_gap=" + num(h_gap);
            return false;
        }
    }
    return true;
}

bool orthogonality_holds(const Problem& coarse_p, const EstimateSolution& coarse,
                         const Problem& fine_p, const std::vector<double>& ts,
                         std::string& detail) {
    const double norm_a = weight_l2_norm(coarse_p.a, coarse_p.S);
    const auto rc =
        verify_orthogonality(coarse.h, coarse.A, coarse_p.F, coarse_p.G, coarse.qgrid, ts);
    const auto fine = estimate(fine_p.F, fine_p.G, fine_p.S, fine_p.a, fine_p.grid);
    const auto rf = verify_orthogonality(fine.h, fine.A, fine_p.F, fine_p.G, fine.qgrid, ts);
    detail = "coarse=" + num(rc.max_residual) +
             " fine=" + num(rf.max_residual) +
             " bound=" + num(1e-3 * norm_a);
    return rc.max_residual <= 1e-3 * norm_a && rf.max_residual <= 0.5 * rc.max_residual;
}

bool operator_invariants_hold(const OperatorSystem& sys, std::string& detail) {
    const bool ok = sys.hermitian_defect_B <= 1e-8 && sys.hermitian_defect_Q <= 1e-8 &&
                    sys.min_eig_B >= -1e-8 * std::abs(sys.max_eig_B) &&
                    sys.min_eig_Q >= -1e-8 * std::max(1e-300, sys.Q.norm()) &&
                    sys.toeplitz_defect <= 1e-8;
    detail = "min_eig_B=" + num(sys.min_eig_B) +
             " toeplitz=" + num(sys.toeplitz_defect);
    return ok;
}

bool mc_consistent(const Problem& p, const EstimateSolution& est, std::uint64_t seed,
                   double& z_out) {
    SimulationConfig cfg;
    cfg.n_replications = 10000;
    cfg.seed = seed;
    const auto res = empirical_mse(p.F, p.G, est.h, p.a, p.S, p.grid, cfg, est.delta);
    z_out = res.z_score;
    return std::abs(res.z_score) <= 3.0;
}

} // namespace

int main() {
    Suite suite;

    // Shared fixtures at the documented defaults.
    const Problem noiseless = ou_problem(false);
    const Problem noisy = ou_problem(true);
    const Problem twoint = two_interval_problem();

    const auto t_fix = std::chrono::steady_clock::now();
    const EstimateSolution est_noiseless =
        estimate(noiseless.F, noiseless.G, noiseless.S, noiseless.a, noiseless.grid);
    const OperatorSystem sys_noisy = assemble_system(noisy.F, noisy.G, noisy.S, noisy.grid);
    const EstimateSolution est_noisy =
        estimate_with_system(sys_noisy, noisy.F, noisy.G, noisy.S, noisy.a, noisy.grid);
    const OperatorSystem sys_twoint = assemble_system(twoint.F, twoint.G, twoint.S, twoint.grid);
    const EstimateSolution est_twoint =
        estimate_with_system(sys_twoint, twoint.F, twoint.G, twoint.S, twoint.a, twoint.grid);
    std::printf("# fixtures ready in %.1fs\n", seconds_since(t_fix));

    suite.check(1, "oracle equivalence, exact observations", [&](std::string& detail) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto oracle = gaussian_oracle(noiseless.F, noiseless.G, noiseless.S, noiseless.a,
                                            noiseless.grid, -6.0, 5.0, 0.01);
        const double gap = std::abs(est_noiseless.delta - oracle.mse) / oracle.mse;
        const double elapsed = seconds_since(t0);
        detail = "delta=" + num(est_noiseless.delta) +
                 " oracle=" + num(oracle.mse) + " gap=" + num(gap) +
                 " time=" + num(elapsed) + "s";
        return gap <= 0.05 && elapsed <= 60.0;
    });

    suite.check(2, "oracle equivalence, noisy observations", [&](std::string& detail) {
        const auto oracle = gaussian_oracle(noisy.F, noisy.G, noisy.S, noisy.a, noisy.grid, -6.0,
                                            5.0, 0.01);
        const double gap = std::abs(est_noisy.delta - oracle.mse) / oracle.mse;
        detail = "delta=" + num(est_noisy.delta) +
                 " oracle=" + num(oracle.mse) + " gap=" + num(gap);
        return gap <= 0.05;
    });

    suite.check(3, "Monte Carlo consistency at 1e4 replications", [&](std::string& detail) {
        const auto t0 = std::chrono::steady_clock::now();
        double z1 = 0.0, z2 = 0.0;
        const bool ok1 = mc_consistent(noiseless, est_noiseless, 101, z1);
        const bool ok2 = mc_consistent(noisy, est_noisy, 202, z2);
        const double elapsed = seconds_since(t0);
        detail = "z_noiseless=" + num(z1) + " z_noisy=" + num(z2) +
                 " time=" + num(elapsed) + "s";
        return ok1 && ok2 && elapsed <= 300.0;
    });

    suite.check(4, "operator and spectral error forms agree", [&](std::string& detail) {
        for (const EstimateSolution* est : {&est_noiseless, &est_noisy, &est_twoint}) {
            const double scale = std::max(est->delta_operator_form, est->delta_spectral_form);
            const double gap = std::abs(est->delta_operator_form - est->delta_spectral_form);
            if (gap > 1e-4 * scale) {
                detail = "gap=" + num(gap / scale);
                return false;
            }
        }
        return true;
    });

    suite.check(5, "scaling laws for the error and the characteristic",
                [&](std::string& detail) { return scaling_laws_hold(noisy, est_noisy, detail); });

    suite.check(6, "projection residual small and halving under refinement",
                [&](std::string& detail) {
                    const Problem fine = ou_problem(false, 128.0, 8193, 1.0 / 512.0);
                    return orthogonality_holds(noiseless, est_noiseless, fine,
                                               {-3.0, -2.0, 0.5, 1.0, 2.0}, detail);
                });

    suite.check(7, "assembled operators are Hermitian PSD and lag-stationary",
                [&](std::string& detail) { return operator_invariants_hold(sys_noisy, detail); });

    suite.check(8, "two missing intervals pass the single-interval criteria",
                [&](std::string& detail) {
                    double z = 0.0;
                    if (!mc_consistent(twoint, est_twoint, 303, z)) {
                        detail = "z=" + num(z);
                        return false;
                    }
                    const double scale =
                        std::max(est_twoint.delta_operator_form, est_twoint.delta_spectral_form);
                    if (std::abs(est_twoint.delta_operator_form - est_twoint.delta_spectral_form) >
                        1e-4 * scale) {
                        detail = "dual-form gap";
                        return false;
                    }
                    if (!scaling_laws_hold(twoint, est_twoint, detail)) return false;
                    const Problem fine = two_interval_problem(128.0, 8193, 1.0 / 512.0);
                    if (!orthogonality_holds(twoint, est_twoint, fine,
                                             {-5.0, -4.0, -1.5, 0.5, 1.5}, detail)) {
                        return false;
                    }
                    std::string op_detail;
                    if (!operator_invariants_hold(sys_twoint, op_detail)) {
                        detail = op_detail;
                        return false;
                    }
                    detail = "z=" + num(z);
                    return true;
                });

    suite.check(9, "16-bin minimax toy: saddle, domination, search, relations",
                [&](std::string& detail) {
                    const FrequencyGrid grid = FrequencyGrid::make(8.0, 17);
                    const MissingSet S = MissingSet::make({{-1.0, 0.0}}, 1.0 / 32.0);
                    const auto a = WeightFunction::from_expression(S, "one", 1);

                    DensityClass class_F;
                    class_F.kind = ClassKind::D0Trace;
                    class_F.dim = 1;
                    class_F.budget = 1.0;

                    DensityClass class_G;
                    class_G.kind = ClassKind::EpsTrace;
                    class_G.dim = 1;
                    class_G.budget = 1.0;
                    class_G.eps = 0.1;
                    class_G.reference = SpectralDensity::constant(
                        grid, (M_PI / 8.0) * Eigen::MatrixXcd::Identity(1, 1),
                        SpectralDensity::Extension::Zero);

                    SaddleOptions opts;
                    opts.tol = 1e-4;
                    opts.max_iter = 800;
                    const SaddlePoint sp = saddle_iterate(class_F, class_G, a, S, grid, opts);
                    if (!sp.converged || sp.gap > 1e-4) {
                        detail = "gap=" + num(sp.gap);
                        return false;
                    }

                    std::mt19937_64 rng(515);
                    for (int i = 0; i < 100; ++i) {
                        const auto Fp = class_random_member(class_F, grid, rng);
                        const auto Gp = class_random_member(class_G, grid, rng);
                        if (cross_mse(sp.h0, sp.A, Fp, Gp, sp.qgrid) > sp.delta0 + opts.tol) {
                            detail = "random member dominates";
                            return false;
                        }
                    }

                    // Exhaustive 2-bin search at step 1e-3.
                    const FrequencyGrid grid2 = FrequencyGrid::make(8.0, 3);
                    const MissingSet S2 = MissingSet::make({{-1.0, 0.0}}, 0.125);
                    const auto a2 = WeightFunction::from_expression(S2, "one", 1);
                    const auto profile = [&](double mass, double x) {
                        std::vector<Eigen::MatrixXcd> samples(3, Eigen::MatrixXcd::Zero(1, 1));
                        const double wc = grid2.weight(1) / (2.0 * M_PI);
                        const double we = (grid2.weight(0) + grid2.weight(2)) / (2.0 * M_PI);
                        samples[1](0, 0) = mass * x / wc;
                        samples[0](0, 0) = mass * (1.0 - x) / we;
                        samples[2](0, 0) = samples[0](0, 0);
                        return SpectralDensity::from_samples(grid2, samples);
                    };
                    DensityClass tf = class_F;
                    DensityClass tg = class_G;
                    tg.reference = profile(1.0, 0.5);
                    const SpectralDensity base = tg.reference->scaled(0.9);
                    double best = -1.0;
                    for (int i = 0; i <= 1000; ++i) {
                        const auto F = profile(1.0, i / 1000.0);
                        for (int k = 0; k <= 1000; ++k) {
                            const auto G = base.plus(profile(0.1, k / 1000.0));
                            const double d = estimate(F, G, S2, a2, grid2).delta;
                            if (d > best) best = d;
                        }
                    }
                    SaddleOptions opts2;
                    opts2.tol = 1e-6;
                    opts2.max_iter = 1000;
                    const SaddlePoint sp2 = saddle_iterate(tf, tg, a2, S2, grid2, opts2);
                    if (std::abs(sp2.delta0 - best) > 1e-3) {
                        detail = "2-bin search=" + num(best) +
                                 " saddle=" + num(sp2.delta0);
                        return false;
                    }

                    const auto at_saddle = kkt_residuals(sp, class_F, class_G, grid);
                    const double res_saddle =
                        std::max(at_saddle.residual_first, at_saddle.residual_second);
                    std::mt19937_64 rng2(99);
                    const auto Fp = class_random_member(class_F, grid, rng2);
                    const auto Gp = class_random_member(class_G, grid, rng2);
                    const auto est_away = estimate(Fp, Gp, S, a, grid);
                    const auto away =
                        kkt_residuals(Fp, Gp, est_away.A, est_away.C, class_F, class_G, grid);
                    const double res_away = std::max(away.residual_first, away.residual_second);
                    detail = "gap=" + num(sp.gap) +
                             " kkt=" + num(res_saddle) +
                             " away=" + num(res_away) +
                             " search_gap=" + num(std::abs(sp2.delta0 - best));
                    return res_saddle <= 5e-2 && res_away >= 10.0 * res_saddle;
                });

    suite.check(10, "strip subproblem equals brute-force threshold search",
                [&](std::string& detail) {
                    const FrequencyGrid grid = FrequencyGrid::make(8.0, 17);
                    DensityClass cls;
                    cls.kind = ClassKind::StripTrace;
                    cls.dim = 1;
                    cls.budget = 2.0;
                    cls.lower = SpectralDensity::constant(
                        grid, 0.5 * Eigen::MatrixXcd::Identity(1, 1),
                        SpectralDensity::Extension::Zero);
                    cls.upper = SpectralDensity::constant(
                        grid, 2.0 * Eigen::MatrixXcd::Identity(1, 1),
                        SpectralDensity::Extension::Zero);

                    std::mt19937_64 rng(77);
                    std::normal_distribution<double> normal;
                    SpectralVectorField u(grid.size(), Eigen::VectorXcd::Zero(1));
                    const int c = grid.center_index();
                    u[static_cast<std::size_t>(c)](0) = normal(rng);
                    for (int k = 1; k <= c; ++k) {
                        const std::complex<double> v(normal(rng), normal(rng));
                        u[static_cast<std::size_t>(c + k)](0) = v;
                        u[static_cast<std::size_t>(c - k)](0) = std::conj(v);
                    }

                    const auto greedy = maximize_side(cls, u, grid);
                    const auto value = [&](const SpectralDensity& X) {
                        double acc = 0.0;
                        for (std::size_t j = 0; j < grid.size(); ++j) {
                            acc += grid.weight(j) *
                                   (u[j].adjoint() * X.sample(j) * u[j]).value().real();
                        }
                        return acc / (2.0 * M_PI);
                    };
                    const double greedy_value = value(greedy);

                    // Brute force over thresholds: top-r pairs at U, one partial.
                    const auto cc = static_cast<std::size_t>(c);
                    std::vector<double> gain(cc + 1), mass(cc + 1);
                    for (std::size_t k = 0; k <= cc; ++k) {
                        gain[k] = 0.5 * (u[cc + k].squaredNorm() + u[cc - k].squaredNorm());
                        mass[k] = (k == 0 ? grid.weight(cc)
                                          : grid.weight(cc + k) + grid.weight(cc - k)) /
                                  (2.0 * M_PI);
                    }
                    std::vector<std::size_t> order(cc + 1);
                    for (std::size_t k = 0; k <= cc; ++k) order[k] = k;
                    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
                        return gain[x] > gain[y];
                    });
                    double lo_mass = 0.0;
                    for (std::size_t k = 0; k <= cc; ++k) lo_mass += 0.5 * mass[k];
                    double best = -1.0;
                    for (std::size_t t = 0; t <= cc + 1; ++t) {
                        std::vector<double> tau(cc + 1, 0.5);
                        double budget = 2.0 - lo_mass;
                        bool feasible = true;
                        for (std::size_t r = 0; r < t; ++r) {
                            const std::size_t k = order[r];
                            const double cap = mass[k] * 1.5;
                            if (r + 1 < t) {
                                if (budget < cap - 1e-15) {
                                    feasible = false;
                                    break;
                                }
                                tau[k] = 2.0;
                                budget -= cap;
                            } else {
                                const double take = std::min(budget, cap);
                                tau[k] += take / mass[k];
                                budget -= take;
                            }
                        }
                        if (!feasible || budget > 1e-12) continue;
                        double v = 0.0;
                        for (std::size_t k = 0; k <= cc; ++k) v += mass[k] * tau[k] * gain[k];
                        best = std::max(best, v);
                    }
                    detail = "greedy=" + num(greedy_value) +
                             " search=" + num(best);
                    return std::abs(greedy_value - best) <= 1e-10 * std::max(1.0, best);
                });

    suite.check(11, "singleton classes reproduce the plain estimate", [&](std::string& detail) {
        DensityClass sf;
        sf.kind = ClassKind::Singleton;
        sf.dim = 1;
        sf.reference = noisy.F;
        DensityClass sg;
        sg.kind = ClassKind::Singleton;
        sg.dim = 1;
        sg.reference = noisy.G;
        const SaddlePoint sp = saddle_iterate(sf, sg, noisy.a, noisy.S, noisy.grid);
        const double gap = std::abs(sp.delta0 - est_noisy.delta) / est_noisy.delta;
        detail = "delta0=" + num(sp.delta0) + " delta=" +
                 num(est_noisy.delta) + " rel_gap=" + num(gap);
        return sp.converged && sp.iterations == 1 && gap <= 1e-8;
    });

    std::printf("%s: %d criterion(s) failed\n", suite.failures == 0 ? "OK" : "FAILED",
                suite.failures);
    return suite.failures == 0 ? 0 : 1;
}
