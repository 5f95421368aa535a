#include "wkinterp/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <unordered_map>

#include "wkinterp/errors.hpp"
#include "wkinterp/parallel.hpp"

namespace wkinterp {

namespace {

using Cplx = std::complex<double>;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Fixed-order pairwise sum.
double pairwise_sum(const double* data, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += data[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

Eigen::MatrixXcd psd_factor(const Eigen::MatrixXcd& cov) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (cov + cov.adjoint()));
    Eigen::VectorXd eig = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * eig.cwiseSqrt().asDiagonal();
}

/// Covariance R(tau) = (1/2pi) int e^{i tau lambda} F(lambda) d lambda on the
/// working quadrature, memoized per quantized lag. The real part is taken
/// (exact for conjugate-symmetric densities).
class CovarianceTable {
public:
    CovarianceTable(const SpectralDensity& density, const QuadratureGrid& q)
        : q_(q), dim_(density.dim()) {
        const auto values = density.evaluate_on(q);
        flat_.resize(static_cast<Eigen::Index>(dim_) * dim_, static_cast<Eigen::Index>(q.size()));
        for (std::size_t j = 0; j < q.size(); ++j) {
            Eigen::Map<const Eigen::VectorXcd> v(values[j].data(),
                                                 static_cast<Eigen::Index>(dim_) * dim_);
            flat_.col(static_cast<Eigen::Index>(j)) = q.weight(j) * v;
        }
    }

    const Eigen::MatrixXd& at(double tau) {
        const long long key = std::llround(tau * 1e9);
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;
        Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(flat_.rows());
        for (Eigen::Index j = 0; j < flat_.cols(); ++j) {
            acc += std::polar(1.0, q_.node(static_cast<std::size_t>(j)) * tau) * flat_.col(j);
        }
        Eigen::MatrixXd out(dim_, dim_);
        for (int r = 0; r < dim_; ++r) {
            for (int c = 0; c < dim_; ++c) {
                out(r, c) = acc(r + dim_ * c).real() / (2.0 * M_PI);
            }
        }
        return memo_.emplace(key, std::move(out)).first->second;
    }

private:
    const QuadratureGrid& q_;
    int dim_;
    Eigen::MatrixXcd flat_; // dim^2 x n, weight-scaled samples
    std::unordered_map<long long, Eigen::MatrixXd> memo_;
};

} // namespace

CorrelationScale correlation_scale(const SpectralDensity& density, double tau_max, double tau_step) {
    const QuadratureGrid q = QuadratureGrid::from(density.grid());
    CovarianceTable table(density, q);
    const double r0 = table.at(0.0).norm();
    CorrelationScale s;
    if (r0 <= 0.0) return s;
    bool found_e = false, found_3 = false;
    for (double tau = tau_step; tau <= tau_max; tau += tau_step) {
        const double r = table.at(tau).norm();
        if (!found_e && r <= r0 / M_E) {
            s.e_folding = tau;
            found_e = true;
        }
        if (!found_3 && r <= 1e-3 * r0) {
            s.decay_1e3 = tau;
            found_3 = true;
            break;
        }
    }
    if (!found_e) s.e_folding = tau_max;
    if (!found_3) s.decay_1e3 = tau_max;
    s.truncated = !found_3;
    return s;
}

void check_window(const SimulationConfig& cfg, const MissingSet& S, const SpectralDensity& F) {
    const double s_left = S.intervals().front().left;
    const double s_right = S.intervals().back().right;
    if (!(cfg.t_min < s_left && s_right < cfg.t_max)) {
        throw input_error("simulation window must contain S strictly");
    }
    const CorrelationScale scale = correlation_scale(F);
    const double need = 4.0 * scale.e_folding;
    const double left_margin = s_left - cfg.t_min;
    const double right_margin = cfg.t_max - s_right;
    if (left_margin < need || right_margin < need) {
        throw input_error("simulation window margins " + std::to_string(left_margin) + "/" +
                          std::to_string(right_margin) + " below 4 correlation scales (" +
                          std::to_string(need) + ")");
    }
}

IncrementSampler::IncrementSampler(const SpectralDensity& density, const QuadratureGrid& q)
    : dim_(density.dim()), center_(q.center_index()) {
    const auto values = density.evaluate_on(q);
    const int half = static_cast<int>(q.size()) - center_;
    factor_.resize(static_cast<std::size_t>(half));
    active_.resize(static_cast<std::size_t>(half));
    for (int k = 0; k < half; ++k) {
        const auto j = static_cast<std::size_t>(center_ + k);
        const Eigen::MatrixXcd cov = values[j] * (q.weight(j) / (2.0 * M_PI));
        active_[static_cast<std::size_t>(k)] = cov.norm() > 0.0;
        if (!active_[static_cast<std::size_t>(k)]) {
            factor_[static_cast<std::size_t>(k)] = Eigen::MatrixXcd::Zero(dim_, dim_);
            continue;
        }
        if (k == 0) {
            // lambda = 0: the increment is real; factor the real symmetric part.
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
                0.5 * (cov.real() + cov.real().transpose()));
            factor_[0] = (es.eigenvectors() *
                          es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal())
                             .cast<Cplx>();
        } else {
            factor_[static_cast<std::size_t>(k)] = psd_factor(cov);
        }
    }
}

Eigen::MatrixXcd IncrementSampler::sample(std::mt19937_64& rng) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    const int n = center_ * 2 + 1;
    Eigen::MatrixXcd z = Eigen::MatrixXcd::Zero(dim_, n);

    if (active_[0]) {
        Eigen::VectorXcd u(dim_);
        for (int c = 0; c < dim_; ++c) u(c) = normal(rng);
        z.col(center_).noalias() = factor_[0] * u;
    }
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    Eigen::VectorXcd g(dim_);
    for (int k = 1; k <= center_; ++k) {
        if (!active_[static_cast<std::size_t>(k)]) continue;
        for (int c = 0; c < dim_; ++c) {
            const double re = normal(rng);
            const double im = normal(rng);
            g(c) = Cplx(re, im) * inv_sqrt2;
        }
        z.col(center_ + k).noalias() = factor_[static_cast<std::size_t>(k)] * g;
        z.col(center_ - k) = z.col(center_ + k).conjugate();
    }
    return z;
}

Eigen::MatrixXd path_from_increments(const Eigen::MatrixXcd& z, const QuadratureGrid& q,
                                     const std::vector<double>& times) {
    const auto dim = z.rows();
    const int center = q.center_index();
    Eigen::MatrixXd path(dim, static_cast<Eigen::Index>(times.size()));
    parallel_for(times.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            Eigen::VectorXd acc = z.col(center).real();
            for (int k = 1; k <= center; ++k) {
                const auto j = static_cast<std::size_t>(center + k);
                acc += 2.0 * (std::polar(1.0, q.node(j) * times[i]) * z.col(center + k)).real();
                (void)j;
            }
            path.col(static_cast<Eigen::Index>(i)) = acc;
        }
    });
    return path;
}

PathPair simulate_pair(const SpectralDensity& F, const SpectralDensity& G,
                       const SimulationConfig& cfg, const QuadratureGrid& q) {
    PathPair out;
    const auto n_times =
        static_cast<std::size_t>(std::floor((cfg.t_max - cfg.t_min) / cfg.time_step + 0.5)) + 1;
    out.times.resize(n_times);
    for (std::size_t i = 0; i < n_times; ++i) {
        out.times[i] = cfg.t_min + static_cast<double>(i) * cfg.time_step;
    }

    const IncrementSampler sampler_xi(F, q);
    const IncrementSampler sampler_eta(G, q);
    std::mt19937_64 rng(splitmix64(cfg.seed));
    const auto z_xi = sampler_xi.sample(rng);
    const auto z_eta = sampler_eta.sample(rng);
    out.xi = path_from_increments(z_xi, q, out.times);
    out.eta = path_from_increments(z_eta, q, out.times);
    return out;
}

Eigen::MatrixXcd pack_field(const SpectralVectorField& field) {
    const auto dim = field.front().size();
    Eigen::MatrixXcd out(dim, static_cast<Eigen::Index>(field.size()));
    for (std::size_t j = 0; j < field.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = field[j];
    return out;
}

double spectral_functional(const Eigen::MatrixXcd& packed_field, const Eigen::MatrixXcd& z,
                           const QuadratureGrid& q) {
    if (packed_field.cols() != z.cols() ||
        static_cast<std::size_t>(z.cols()) != q.size()) {
        throw grid_mismatch_error("spectral_functional: size mismatch");
    }
    const int center = q.center_index();
    // Per-bin scalars field_j^T z_j in one vectorized pass.
    const Eigen::RowVectorXcd prods =
        (packed_field.array() * z.array()).matrix().colwise().sum();
    double acc = prods(center).real();
    for (Eigen::Index j = center + 1; j < prods.size(); ++j) acc += 2.0 * prods(j).real();
    return acc;
}

double spectral_functional(const SpectralVectorField& field, const Eigen::MatrixXcd& z,
                           const QuadratureGrid& q) {
    return spectral_functional(pack_field(field), z, q);
}

double apply_estimate(const SpectralVectorField& h, const Eigen::MatrixXcd& z_xi,
                      const Eigen::MatrixXcd& z_eta, const QuadratureGrid& q) {
    const Eigen::MatrixXcd packed = pack_field(h);
    return spectral_functional(packed, z_xi, q) + spectral_functional(packed, z_eta, q);
}

TimeDomainEstimator::TimeDomainEstimator(const SpectralVectorField& h,
                                         const std::vector<double>& times, const MissingSet& S,
                                         const QuadratureGrid& q) {
    const auto dim = h.front().size();
    weights_.resize(times.size());
    parallel_for(times.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(dim);
            for (std::size_t j = 0; j < q.size(); ++j) {
                acc += std::polar(q.weight(j), -times[i] * q.node(j)) * h[j];
            }
            weights_[i] = acc.real() / (2.0 * M_PI);
        }
    });

    // Trapezoid over each observed run of nodes (S excluded). The optimal
    // characteristic concentrates near the boundary of S, so this route is a
    // diagnostic: it converges slowly as the window step shrinks.
    trapezoid_.assign(times.size(), 0.0);
    const double dt = times.size() > 1 ? times[1] - times[0] : 0.0;
    std::vector<bool> observed(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) observed[i] = !S.contains(times[i], 1e-9);
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!observed[i]) continue;
        const bool left_edge = (i == 0) || !observed[i - 1];
        const bool right_edge = (i + 1 == times.size()) || !observed[i + 1];
        if (left_edge && right_edge) {
            trapezoid_[i] = 0.0; // isolated node carries no trapezoid mass
        } else if (left_edge || right_edge) {
            trapezoid_[i] = 0.5 * dt;
        } else {
            trapezoid_[i] = dt;
        }
    }
}

double TimeDomainEstimator::apply(const PathPair& paths) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < paths.times.size(); ++i) {
        if (trapezoid_[i] == 0.0) continue;
        const Eigen::VectorXd obs = paths.xi.col(static_cast<Eigen::Index>(i)) +
                                    paths.eta.col(static_cast<Eigen::Index>(i));
        acc += trapezoid_[i] * weights_[i].dot(obs);
    }
    return acc;
}

double apply_estimate_time(const SpectralVectorField& h, const PathPair& paths,
                           const MissingSet& S, const QuadratureGrid& q) {
    return TimeDomainEstimator(h, paths.times, S, q).apply(paths);
}

EnsembleResult empirical_mse(const SpectralDensity& F, const SpectralDensity& G,
                             const SpectralVectorField& h, const WeightFunction& a,
                             const MissingSet& S, const FrequencyGrid& grid,
                             const SimulationConfig& cfg, double theoretical_delta) {
    if (cfg.n_replications < 2) throw input_error("empirical_mse: need at least 2 replications");
    const QuadratureGrid q = QuadratureGrid::extended(grid, S);
    if (h.size() != q.size()) {
        throw grid_mismatch_error("empirical_mse: h must live on the working quadrature");
    }
    const Eigen::MatrixXcd A = pack_field(exponential_transform(a, S, q));
    const Eigen::MatrixXcd hm = pack_field(h);
    const IncrementSampler sampler_xi(F, q);
    const IncrementSampler sampler_eta(G, q);

    const auto n = static_cast<std::size_t>(cfg.n_replications);
    std::vector<double> sq_errors(n);
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            std::mt19937_64 rng(splitmix64(cfg.seed ^ (0x517cc1b727220a95ull * (r + 1))));
            const Eigen::MatrixXcd z_xi = sampler_xi.sample(rng);
            const Eigen::MatrixXcd z_eta = sampler_eta.sample(rng);
            const double target = spectral_functional(A, z_xi, q);
            const double est =
                spectral_functional(hm, z_xi, q) + spectral_functional(hm, z_eta, q);
            const double e = target - est;
            sq_errors[r] = e * e;
        }
    });

    EnsembleResult res;
    res.n_replications = cfg.n_replications;
    res.theoretical_delta = theoretical_delta;
    res.empirical_mse = pairwise_sum(sq_errors.data(), n) / static_cast<double>(n);
    double var_acc = 0.0;
    for (double v : sq_errors) {
        const double d = v - res.empirical_mse;
        var_acc += d * d;
    }
    const double sample_var = var_acc / static_cast<double>(n - 1);
    res.std_error = std::sqrt(sample_var / static_cast<double>(n));
    res.z_score = res.std_error > 0.0
                      ? (res.empirical_mse - theoretical_delta) / res.std_error
                      : 0.0;
    return res;
}

OracleResult gaussian_oracle(const SpectralDensity& F, const SpectralDensity& G,
                             const MissingSet& S, const WeightFunction& a,
                             const FrequencyGrid& grid, double t_min, double t_max,
                             double fine_step) {
    const int dim = F.dim();
    const QuadratureGrid q = QuadratureGrid::extended(grid, S);
    CovarianceTable r_xi(F, q);
    CovarianceTable r_eta(G, q);

    std::vector<double> obs_times;
    const auto n_times =
        static_cast<std::size_t>(std::floor((t_max - t_min) / fine_step + 0.5)) + 1;
    obs_times.reserve(n_times);
    for (std::size_t i = 0; i < n_times; ++i) {
        const double t = t_min + static_cast<double>(i) * fine_step;
        if (!S.contains(t, 1e-9)) obs_times.push_back(t);
    }
    const std::size_t n_obs = obs_times.size();
    if (n_obs == 0) throw input_error("gaussian_oracle: no observation nodes in the window");

    const auto sz = static_cast<Eigen::Index>(n_obs) * dim;
    Eigen::MatrixXd sigma_xx(sz, sz);
    for (std::size_t i = 0; i < n_obs; ++i) {
        for (std::size_t k = i; k < n_obs; ++k) {
            const Eigen::MatrixXd block =
                r_xi.at(obs_times[i] - obs_times[k]) + r_eta.at(obs_times[i] - obs_times[k]);
            sigma_xx.block(static_cast<Eigen::Index>(i) * dim, static_cast<Eigen::Index>(k) * dim,
                           dim, dim) = block;
            if (k != i) {
                sigma_xx.block(static_cast<Eigen::Index>(k) * dim,
                               static_cast<Eigen::Index>(i) * dim, dim, dim) = block.transpose();
            }
        }
    }

    // Cov(X_i, Y) with Y = sum_j wq_j a(s_j)^T xi(s_j): one inverse transform
    // of F(lambda) conj(A(lambda)) instead of a lag sum per node pair.
    const SpectralVectorField A = exponential_transform(a, S, q);
    const auto f_values = F.evaluate_on(q);
    Eigen::VectorXd sigma_xy = Eigen::VectorXd::Zero(sz);
    {
        std::vector<Eigen::VectorXcd> fa(q.size());
        for (std::size_t j = 0; j < q.size(); ++j) fa[j] = f_values[j] * A[j].conjugate();
        parallel_for(n_obs, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(dim);
                for (std::size_t j = 0; j < q.size(); ++j) {
                    acc += std::polar(q.weight(j), obs_times[i] * q.node(j)) * fa[j];
                }
                sigma_xy.segment(static_cast<Eigen::Index>(i) * dim, dim) =
                    acc.real() / (2.0 * M_PI);
            }
        });
    }

    double var_y = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) {
        var_y += q.weight(j) *
                 (A[j].conjugate().adjoint() * f_values[j] * A[j].conjugate()).value().real();
    }
    var_y /= 2.0 * M_PI;

    OracleResult res;
    res.var_functional = var_y;
    res.n_observations = n_obs;

    Eigen::LLT<Eigen::MatrixXd> llt(sigma_xx);
    if (llt.info() != Eigen::Success) {
        res.jitter_used = 1e-10 * sigma_xx.trace();
        sigma_xx.diagonal().array() += res.jitter_used;
        llt.compute(sigma_xx);
        if (llt.info() != Eigen::Success) {
            throw ill_conditioned_error("gaussian_oracle: covariance factorization failed after jitter");
        }
    }
    const Eigen::VectorXd w = llt.solve(sigma_xy);
    res.mse = std::max(0.0, var_y - sigma_xy.dot(w));
    return res;
}

} // namespace wkinterp
