#ifndef WKINTERP_SIMULATION_HPP
#define WKINTERP_SIMULATION_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "wkinterp/estimator.hpp"
#include "wkinterp/quadrature_grid.hpp"
#include "wkinterp/transforms.hpp"

namespace wkinterp {

struct SimulationConfig {
    double t_min = -6.0;
    double t_max = 5.0;
    double time_step = 0.01;
    int n_replications = 10000;
    std::uint64_t seed = 1;
};

/// Covariance decay scales of a density: tau where ||R(tau)|| first drops below
/// ||R(0)||/e and below 1e-3 ||R(0)||. Used by the window-margin diagnostic.
struct CorrelationScale {
    double e_folding = 0.0;
    double decay_1e3 = 0.0;
    bool truncated = false; // scan hit its range before decaying
};
CorrelationScale correlation_scale(const SpectralDensity& density, double tau_max = 64.0,
                                   double tau_step = 0.01);

/// Checks that S sits strictly inside the window with margins of at least
/// 4 e-folding scales; throws input_error otherwise.
void check_window(const SimulationConfig& cfg, const MissingSet& S, const SpectralDensity& F);

/// Independent complex Gaussian spectral increments with per-bin covariance
/// (1/2pi) F(lambda_j) w_j on the working quadrature, conjugate-symmetrized
/// so paths are real. Increments are columns of a dim x n matrix.
class IncrementSampler {
public:
    IncrementSampler(const SpectralDensity& density, const QuadratureGrid& q);

    /// One draw of all increments (full grid, mirror bins conjugate).
    Eigen::MatrixXcd sample(std::mt19937_64& rng) const;

    int dim() const { return dim_; }

private:
    int dim_ = 0;
    int center_ = 0;
    std::vector<Eigen::MatrixXcd> factor_; // factor_[k] for bin center_+k
    std::vector<bool> active_;             // skip zero-variance bins
};

/// Path values sum_j e^{i t lambda_j} Z_j at the requested times (real).
Eigen::MatrixXd path_from_increments(const Eigen::MatrixXcd& z, const QuadratureGrid& q,
                                     const std::vector<double>& times);

struct PathPair {
    std::vector<double> times;
    Eigen::MatrixXd xi;  // dim x n_times
    Eigen::MatrixXd eta; // dim x n_times
};

/// Stationary Gaussian signal/noise paths on the window grid; deterministic
/// for a fixed seed.
PathPair simulate_pair(const SpectralDensity& F, const SpectralDensity& G,
                       const SimulationConfig& cfg, const QuadratureGrid& q);

/// Columns-per-bin packing of a spectral vector field.
Eigen::MatrixXcd pack_field(const SpectralVectorField& field);

/// sum_j field_j^T Z_j over the full grid (real by conjugate symmetry).
double spectral_functional(const Eigen::MatrixXcd& packed_field, const Eigen::MatrixXcd& z,
                           const QuadratureGrid& q);
double spectral_functional(const SpectralVectorField& field, const Eigen::MatrixXcd& z,
                           const QuadratureGrid& q);

/// Estimate applied to the observed increments: spectral route.
double apply_estimate(const SpectralVectorField& h, const Eigen::MatrixXcd& z_xi,
                      const Eigen::MatrixXcd& z_eta, const QuadratureGrid& q);

/// Estimate applied in the time domain: h is inverse-transformed to weights on
/// the observed window nodes (those outside S), then integrated against the
/// observed path xi+eta. Diagnostic route: the optimal characteristic
/// concentrates at the boundary of S, so agreement with the spectral route
/// improves only slowly as the window step shrinks below the S step.
class TimeDomainEstimator {
public:
    TimeDomainEstimator(const SpectralVectorField& h, const std::vector<double>& times,
                        const MissingSet& S, const QuadratureGrid& q);
    double apply(const PathPair& paths) const;

private:
    std::vector<Eigen::VectorXd> weights_;
    std::vector<double> trapezoid_;
};

double apply_estimate_time(const SpectralVectorField& h, const PathPair& paths,
                           const MissingSet& S, const QuadratureGrid& q);

struct EnsembleResult {
    double empirical_mse = 0.0;
    double std_error = 0.0;
    double theoretical_delta = 0.0;
    double z_score = 0.0;
    int n_replications = 0;
};

/// Monte Carlo check of the theoretical error: mean over replications of
/// |A_s xi - estimate|^2 with per-replication substreams of cfg.seed. The
/// characteristic h must live on the working quadrature of (grid, S).
EnsembleResult empirical_mse(const SpectralDensity& F, const SpectralDensity& G,
                             const SpectralVectorField& h, const WeightFunction& a,
                             const MissingSet& S, const FrequencyGrid& grid,
                             const SimulationConfig& cfg, double theoretical_delta);

struct OracleResult {
    double mse = 0.0;
    double var_functional = 0.0;
    double jitter_used = 0.0;
    std::size_t n_observations = 0;
};

/// Brute-force desk-scale ground truth: best linear prediction of the
/// functional from the discretized observations on window \ S, via normal
/// equations built from covariance quadrature.
OracleResult gaussian_oracle(const SpectralDensity& F, const SpectralDensity& G,
                             const MissingSet& S, const WeightFunction& a,
                             const FrequencyGrid& grid, double t_min, double t_max,
                             double fine_step);

} // namespace wkinterp

#endif
