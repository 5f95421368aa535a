#include "wkinterp/operator_system.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <memory>
#include <random>
#include <unordered_map>
#include <vector>

#include "wkinterp/errors.hpp"
#include "wkinterp/parallel.hpp"

namespace wkinterp {

namespace {

using Cplx = std::complex<double>;

struct SymbolTable {
    // Grid-weighted symbols sigma(lambda_j) * w_j / (2 pi), per frequency.
    std::vector<Eigen::MatrixXcd> b, r, q;
};

SymbolTable build_symbols(const SpectralDensity& F, const SpectralDensity& G,
                          const QuadratureGrid& q) {
    const std::size_t n = q.size();
    SymbolTable tab;
    tab.b.resize(n);
    tab.r.resize(n);
    tab.q.resize(n);

    const auto fs = F.evaluate_on(q);
    const auto gs = G.evaluate_on(q);

    // Floor for the tail inversion: spectral content beyond the density
    // support is priced at 1e9 times the strongest in-band response. The
    // floor must stay below any genuine extension tail so the floored and
    // exact inverses coincide wherever F+G is really positive.
    double max_inband = 0.0;
    for (std::size_t j = q.density_first(); j < q.density_first() + q.density_count(); ++j) {
        max_inband = std::max(max_inband, (fs[j] + gs[j]).norm());
    }
    const double floor = 1e-9 * std::max(max_inband, 1e-300);

    for (std::size_t j = 0; j < n; ++j) {
        const bool inband = j >= q.density_first() && j < q.density_first() + q.density_count();
        const Eigen::MatrixXcd sum = fs[j] + gs[j];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (sum + sum.adjoint()));
        if (inband && es.eigenvalues().minCoeff() <= 1e-12) {
            throw singular_density_error("assemble_system: F+G numerically singular at lambda = " +
                                         std::to_string(q.node(j)));
        }
        const Eigen::MatrixXcd minv = es.eigenvectors() *
                                      es.eigenvalues().cwiseMax(floor).cwiseInverse().asDiagonal() *
                                      es.eigenvectors().adjoint();
        const double scale = q.weight(j) / (2.0 * M_PI);
        tab.b[j] = scale * minv;
        tab.r[j] = scale * (fs[j] * minv);
        tab.q[j] = scale * (fs[j] * minv * gs[j]);
    }
    return tab;
}

// K(tau) = sum_j sigma'_j e^{i lambda_j tau} for the three weighted symbols at
// once. The phase factor advances by multiplicative recurrence along each
// uniform run of nodes, re-anchored at block 4096 boundaries.
std::array<Eigen::MatrixXcd, 3> kernels_at(const SymbolTable& tab, const QuadratureGrid& q,
                                           double tau) {
    const auto dim = tab.b.front().rows();
    std::array<Eigen::MatrixXcd, 3> k = {Eigen::MatrixXcd::Zero(dim, dim),
                                         Eigen::MatrixXcd::Zero(dim, dim),
                                         Eigen::MatrixXcd::Zero(dim, dim)};
    const std::size_t n = q.size();
    std::size_t j = 0;
    while (j < n) {
        const std::size_t block = std::min<std::size_t>(4096, n - j);
        Cplx phase = std::polar(1.0, q.node(j) * tau);
        double step_width = 0.0;
        Cplx step(1.0, 0.0);
        for (std::size_t i = 0; i < block; ++i) {
            const std::size_t idx = j + i;
            k[0] += phase * tab.b[idx];
            k[1] += phase * tab.r[idx];
            k[2] += phase * tab.q[idx];
            if (idx + 1 < n) {
                const double width = q.node(idx + 1) - q.node(idx);
                if (width != step_width) {
                    step_width = width;
                    step = std::polar(1.0, width * tau);
                }
                phase *= step;
            }
        }
        j += block;
    }
    return k;
}

} // namespace

Eigen::VectorXcd OperatorSystem::lift(const Eigen::MatrixXcd& values) const {
    if (static_cast<std::size_t>(values.cols()) != nodes.size() || values.rows() != dim) {
        throw grid_mismatch_error("OperatorSystem::lift: values shape mismatch");
    }
    Eigen::VectorXcd out(stacked_size());
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const double sw = std::sqrt(weights[k]);
        for (int c = 0; c < dim; ++c) {
            out(static_cast<Eigen::Index>(k) * dim + c) = sw * values(c, static_cast<Eigen::Index>(k));
        }
    }
    return out;
}

Eigen::VectorXcd OperatorSystem::lift(const WeightFunction& a) const {
    return lift(a.values().cast<Cplx>());
}

Eigen::MatrixXcd OperatorSystem::lower(const Eigen::VectorXcd& stacked) const {
    if (stacked.size() != stacked_size()) {
        throw grid_mismatch_error("OperatorSystem::lower: size mismatch");
    }
    Eigen::MatrixXcd out(dim, static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const double sw = std::sqrt(weights[k]);
        for (int c = 0; c < dim; ++c) {
            out(c, static_cast<Eigen::Index>(k)) = stacked(static_cast<Eigen::Index>(k) * dim + c) / sw;
        }
    }
    return out;
}

OperatorSystem assemble_system(const SpectralDensity& F, const SpectralDensity& G,
                               const MissingSet& S, const FrequencyGrid& grid) {
    if (!F.grid().same_as(grid) || !G.grid().same_as(grid)) {
        throw grid_mismatch_error("assemble_system: density grid mismatch");
    }
    if (F.dim() != G.dim()) {
        throw grid_mismatch_error("assemble_system: F and G dimensions differ");
    }
    const int dim = F.dim();
    const std::size_t m = S.node_count();

    const QuadratureGrid qgrid = QuadratureGrid::extended(grid, S);
    const SymbolTable tab = build_symbols(F, G, qgrid);

    // Distinct lags t_j - t_i, quantized well below the node spacing.
    double min_step = std::numeric_limits<double>::max();
    for (std::size_t l = 0; l < S.interval_count(); ++l) {
        min_step = std::min(min_step, S.interval_step(l));
    }
    const double quantum = min_step * 1e-6;
    const auto key_of = [quantum](double tau) {
        return static_cast<long long>(std::llround(tau / quantum));
    };

    std::unordered_map<long long, std::size_t> lag_index;
    std::vector<double> lag_values;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double tau = S.nodes()[j] - S.nodes()[i];
            const long long key = key_of(tau);
            if (lag_index.emplace(key, lag_values.size()).second) {
                lag_values.push_back(tau);
            }
        }
    }

    std::vector<std::array<Eigen::MatrixXcd, 3>> kernels(lag_values.size());
    parallel_for(lag_values.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t l = begin; l < end; ++l) {
            kernels[l] = kernels_at(tab, qgrid, lag_values[l]);
        }
    });

    OperatorSystem sys;
    sys.dim = dim;
    sys.nodes = S.nodes();
    sys.weights = S.node_weights();
    const auto sz = static_cast<Eigen::Index>(m) * dim;
    sys.B.resize(sz, sz);
    sys.R.resize(sz, sz);
    sys.Q.resize(sz, sz);

    for (std::size_t i = 0; i < m; ++i) {
        const double swi = std::sqrt(S.node_weights()[i]);
        for (std::size_t j = 0; j < m; ++j) {
            const double sw = swi * std::sqrt(S.node_weights()[j]);
            const auto& k = kernels[lag_index.at(key_of(S.nodes()[j] - S.nodes()[i]))];
            const auto bi = static_cast<Eigen::Index>(i) * dim;
            const auto bj = static_cast<Eigen::Index>(j) * dim;
            sys.B.block(bi, bj, dim, dim) = sw * k[0].transpose();
            sys.R.block(bi, bj, dim, dim) = sw * k[1].transpose();
            sys.Q.block(bi, bj, dim, dim) = sw * k[2].transpose();
        }
    }

    // Spot-check that the lag table reproduced per-pair kernels (guards the
    // quantization against collisions).
    {
        std::mt19937_64 rng(12345);
        std::uniform_int_distribution<std::size_t> pick(0, m - 1);
        const std::size_t checks = std::min<std::size_t>(16, m * m);
        for (std::size_t t = 0; t < checks; ++t) {
            const std::size_t i = pick(rng), j = pick(rng);
            const auto direct = kernels_at(tab, qgrid, S.nodes()[j] - S.nodes()[i]);
            const double sw = std::sqrt(S.node_weights()[i] * S.node_weights()[j]);
            const auto bi = static_cast<Eigen::Index>(i) * dim;
            const auto bj = static_cast<Eigen::Index>(j) * dim;
            const double scale = std::max(1e-300, sys.B.norm() / std::sqrt(static_cast<double>(m)));
            sys.toeplitz_defect = std::max(
                sys.toeplitz_defect,
                (sys.B.block(bi, bj, dim, dim) - sw * direct[0].transpose()).norm() / scale);
        }
    }

    sys.hermitian_defect_B = (sys.B - sys.B.adjoint()).norm() / std::max(1e-300, sys.B.norm());
    sys.hermitian_defect_Q = (sys.Q - sys.Q.adjoint()).norm() / std::max(1e-300, sys.Q.norm());

    {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (sys.B + sys.B.adjoint()));
        sys.eig_B = es.eigenvalues();
        sys.basis_B = es.eigenvectors();
        sys.min_eig_B = sys.eig_B.minCoeff();
        sys.max_eig_B = sys.eig_B.maxCoeff();
        sys.condition_number_B = sys.min_eig_B > 0.0
                                     ? sys.max_eig_B / sys.min_eig_B
                                     : std::numeric_limits<double>::infinity();
    }
    {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (sys.Q + sys.Q.adjoint()),
                                                           Eigen::EigenvaluesOnly);
        sys.min_eig_Q = es.eigenvalues().minCoeff();
    }
    return sys;
}

double default_tikhonov(const OperatorSystem& sys) {
    const double m = static_cast<double>(sys.node_count());
    return 1e-8 * sys.B.real().trace() / m;
}

SolutionC solve_c(const OperatorSystem& sys, const WeightFunction& a, SolveMode mode,
                  double tikhonov) {
    if (tikhonov < 0.0) throw input_error("solve_c: tikhonov must be nonnegative");
    if (tikhonov == 0.0 && sys.condition_number_B > 1e12) {
        throw ill_conditioned_error("solve_c: cond(B) = " + std::to_string(sys.condition_number_B) +
                                    " exceeds 1e12 with no regularization");
    }
    const Eigen::VectorXcd a_hat = sys.lift(a);

    SolutionC sol;
    sol.regularization_used = tikhonov;
    sol.rhs_hat = (mode == SolveMode::Noisy) ? (sys.R * a_hat).eval() : a_hat;

    const Eigen::VectorXcd coeffs = sys.basis_B.adjoint() * sol.rhs_hat;
    Eigen::VectorXcd filtered = coeffs;
    for (Eigen::Index k = 0; k < filtered.size(); ++k) {
        const double eig = sys.eig_B(k);
        filtered(k) = eig > tikhonov ? filtered(k) / eig : std::complex<double>(0.0, 0.0);
    }
    sol.c_hat = sys.basis_B * filtered;

    const double rhs_norm = sol.rhs_hat.norm();
    sol.residual = rhs_norm > 0.0 ? (sys.B * sol.c_hat - sol.rhs_hat).norm() / rhs_norm : 0.0;
    sol.c = sys.lower(sol.c_hat);
    return sol;
}

namespace {

constexpr std::uint64_t kCacheMagic = 0x574b4f5043414348ull; // "WKOPCACH"
constexpr std::uint32_t kCacheVersion = 1;

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};

template <typename T>
bool write_pod(std::FILE* f, const T& v) {
    return std::fwrite(&v, sizeof(T), 1, f) == 1;
}

template <typename T>
bool read_pod(std::FILE* f, T& v) {
    return std::fread(&v, sizeof(T), 1, f) == 1;
}

bool write_matrix_c64(std::FILE* f, const Eigen::MatrixXcd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const float re = static_cast<float>(m(r, c).real());
            const float im = static_cast<float>(m(r, c).imag());
            if (!write_pod(f, re) || !write_pod(f, im)) return false;
        }
    }
    return true;
}

bool read_matrix_c64(std::FILE* f, Eigen::MatrixXcd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            float re = 0.0f, im = 0.0f;
            if (!read_pod(f, re) || !read_pod(f, im)) return false;
            m(r, c) = Cplx(re, im);
        }
    }
    return true;
}

} // namespace

void save_operator_cache(const std::string& path, const OperatorSystem& sys, std::uint64_t hash) {
    std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "wb"));
    if (!f) throw input_error("save_operator_cache: cannot open " + path);
    const std::uint32_t dim = static_cast<std::uint32_t>(sys.dim);
    const std::uint64_t m = sys.node_count();
    bool ok = write_pod(f.get(), kCacheMagic) && write_pod(f.get(), kCacheVersion) &&
              write_pod(f.get(), hash) && write_pod(f.get(), dim) && write_pod(f.get(), m);
    ok = ok && std::fwrite(sys.nodes.data(), sizeof(double), sys.nodes.size(), f.get()) == m;
    ok = ok && std::fwrite(sys.weights.data(), sizeof(double), sys.weights.size(), f.get()) == m;
    ok = ok && write_pod(f.get(), sys.condition_number_B) && write_pod(f.get(), sys.min_eig_B) &&
         write_pod(f.get(), sys.max_eig_B) && write_pod(f.get(), sys.min_eig_Q) &&
         write_pod(f.get(), sys.hermitian_defect_B) && write_pod(f.get(), sys.hermitian_defect_Q) &&
         write_pod(f.get(), sys.toeplitz_defect);
    ok = ok && write_matrix_c64(f.get(), sys.B) && write_matrix_c64(f.get(), sys.R) &&
         write_matrix_c64(f.get(), sys.Q);
    if (!ok) throw input_error("save_operator_cache: short write to " + path);
}

std::optional<OperatorSystem> load_operator_cache(const std::string& path,
                                                  std::uint64_t expected_hash) {
    std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "rb"));
    if (!f) return std::nullopt;
    std::uint64_t magic = 0, hash = 0, m = 0;
    std::uint32_t version = 0, dim = 0;
    if (!read_pod(f.get(), magic) || magic != kCacheMagic) return std::nullopt;
    if (!read_pod(f.get(), version) || version != kCacheVersion) return std::nullopt;
    if (!read_pod(f.get(), hash) || hash != expected_hash) return std::nullopt;
    if (!read_pod(f.get(), dim) || !read_pod(f.get(), m)) return std::nullopt;
    if (dim == 0 || m == 0 || m > (1ull << 24)) return std::nullopt;

    OperatorSystem sys;
    sys.dim = static_cast<int>(dim);
    sys.nodes.resize(m);
    sys.weights.resize(m);
    if (std::fread(sys.nodes.data(), sizeof(double), m, f.get()) != m) return std::nullopt;
    if (std::fread(sys.weights.data(), sizeof(double), m, f.get()) != m) return std::nullopt;
    if (!read_pod(f.get(), sys.condition_number_B) || !read_pod(f.get(), sys.min_eig_B) ||
        !read_pod(f.get(), sys.max_eig_B) || !read_pod(f.get(), sys.min_eig_Q) ||
        !read_pod(f.get(), sys.hermitian_defect_B) || !read_pod(f.get(), sys.hermitian_defect_Q) ||
        !read_pod(f.get(), sys.toeplitz_defect)) {
        return std::nullopt;
    }
    const auto sz = static_cast<Eigen::Index>(m) * sys.dim;
    sys.B.resize(sz, sz);
    sys.R.resize(sz, sz);
    sys.Q.resize(sz, sz);
    if (!read_matrix_c64(f.get(), sys.B) || !read_matrix_c64(f.get(), sys.R) ||
        !read_matrix_c64(f.get(), sys.Q)) {
        return std::nullopt;
    }
    // The payload stores matrices only; rebuild the solver decomposition.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (sys.B + sys.B.adjoint()));
    sys.eig_B = es.eigenvalues();
    sys.basis_B = es.eigenvectors();
    return sys;
}

} // namespace wkinterp
