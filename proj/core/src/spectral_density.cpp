#include "wkinterp/spectral_density.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "wkinterp/errors.hpp"

namespace wkinterp {

SpectralDensity SpectralDensity::from_samples(const FrequencyGrid& grid,
                                              std::vector<Eigen::MatrixXcd> samples,
                                              Interpolation interp, Extension extension) {
    if (samples.size() != grid.size()) {
        throw input_error("SpectralDensity: got " + std::to_string(samples.size()) +
                          " samples for a grid of " + std::to_string(grid.size()) + " nodes");
    }
    const int dim = static_cast<int>(samples.front().rows());
    for (const auto& m : samples) {
        if (m.rows() != dim || m.cols() != dim) {
            throw input_error("SpectralDensity: samples must all be square of equal dimension");
        }
    }
    SpectralDensity d;
    d.grid_ = grid;
    d.dim_ = dim;
    d.interp_ = interp;
    d.extension_ = extension;
    d.samples_ = std::move(samples);
    return d;
}

SpectralDensity SpectralDensity::from_function(const FrequencyGrid& grid, int dim,
                                               const std::function<Eigen::MatrixXcd(double)>& f,
                                               Interpolation interp, Extension extension) {
    std::vector<Eigen::MatrixXcd> samples;
    samples.reserve(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        Eigen::MatrixXcd m = f(grid.node(j));
        if (m.rows() != dim || m.cols() != dim) {
            throw input_error("SpectralDensity: generator returned wrong dimension");
        }
        samples.push_back(std::move(m));
    }
    return from_samples(grid, std::move(samples), interp, extension);
}

SpectralDensity SpectralDensity::zero(const FrequencyGrid& grid, int dim) {
    return from_samples(grid,
                        std::vector<Eigen::MatrixXcd>(grid.size(), Eigen::MatrixXcd::Zero(dim, dim)));
}

SpectralDensity SpectralDensity::constant(const FrequencyGrid& grid, const Eigen::MatrixXcd& value,
                                          Extension extension) {
    if (value.rows() != value.cols()) {
        throw input_error("SpectralDensity::constant: value must be square");
    }
    return from_samples(grid, std::vector<Eigen::MatrixXcd>(grid.size(), value),
                        Interpolation::PiecewiseLinear, extension);
}

SpectralDensity SpectralDensity::rational(const FrequencyGrid& grid, double scale, double c) {
    if (!(scale >= 0.0) || !(c != 0.0)) {
        throw input_error("SpectralDensity::rational: need scale >= 0 and c != 0");
    }
    return from_function(grid, 1, [scale, c](double l) {
        Eigen::MatrixXcd m(1, 1);
        m(0, 0) = scale / (l * l + c * c);
        return m;
    }, Interpolation::PiecewiseLinear, Extension::InverseSquare);
}

SpectralDensity SpectralDensity::diagonal(const FrequencyGrid& grid,
                                          const std::vector<SpectralDensity>& components) {
    if (components.empty()) throw input_error("SpectralDensity::diagonal: empty component list");
    const int dim = static_cast<int>(components.size());
    for (const auto& comp : components) {
        if (comp.dim() != 1 || !comp.grid().same_as(grid)) {
            throw input_error("SpectralDensity::diagonal: components must be scalar on the same grid");
        }
    }
    std::vector<Eigen::MatrixXcd> samples(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
        for (int k = 0; k < dim; ++k) m(k, k) = components[static_cast<std::size_t>(k)].sample(j)(0, 0);
        samples[j] = std::move(m);
    }
    // Inherit the components' policy when they agree; otherwise fall back to Zero.
    Extension ext = components.front().extension();
    for (const auto& comp : components) {
        if (comp.extension() != ext) {
            ext = Extension::Zero;
            break;
        }
    }
    return from_samples(grid, std::move(samples), Interpolation::PiecewiseLinear, ext);
}

SpectralDensity SpectralDensity::with_extension(Extension extension) const {
    SpectralDensity d = *this;
    d.extension_ = extension;
    return d;
}

Eigen::MatrixXcd SpectralDensity::value_at(double lambda) const {
    const double hi = grid_.lambda_max();
    if (std::abs(lambda) > hi * (1.0 + 1e-12)) {
        switch (extension_) {
            case Extension::Zero:
                return Eigen::MatrixXcd::Zero(dim_, dim_);
            case Extension::Clamp:
                return lambda > 0.0 ? samples_.back() : samples_.front();
            case Extension::InverseSquare: {
                const double factor = (hi * hi) / (lambda * lambda);
                return factor * (lambda > 0.0 ? samples_.back() : samples_.front());
            }
        }
    }
    const double lo = -hi;
    const double l = std::clamp(lambda, lo, hi);
    const double pos = (l - lo) / grid_.spacing();
    const auto j0 = static_cast<std::size_t>(
        std::clamp(std::floor(pos), 0.0, static_cast<double>(grid_.size() - 1)));
    if (interp_ == Interpolation::Nearest) {
        const std::size_t j = static_cast<std::size_t>(std::llround(pos));
        return samples_[std::min(j, samples_.size() - 1)];
    }
    const std::size_t j1 = std::min(j0 + 1, samples_.size() - 1);
    const double t = pos - static_cast<double>(j0);
    return (1.0 - t) * samples_[j0] + t * samples_[j1];
}

std::vector<Eigen::MatrixXcd> SpectralDensity::evaluate_on(const QuadratureGrid& q) const {
    std::vector<Eigen::MatrixXcd> out(q.size());
    for (std::size_t j = 0; j < q.size(); ++j) {
        // Exact samples on the embedded density block, policy elsewhere.
        if (j >= q.density_first() && j < q.density_first() + q.density_count()) {
            out[j] = samples_[j - q.density_first()];
        } else {
            out[j] = value_at(q.node(j));
        }
    }
    return out;
}

bool SpectralDensity::is_zero(double tol) const {
    for (const auto& m : samples_) {
        if (m.cwiseAbs().maxCoeff() > tol) return false;
    }
    return true;
}

SpectralDensity SpectralDensity::scaled(double factor) const {
    std::vector<Eigen::MatrixXcd> samples(samples_.size());
    for (std::size_t j = 0; j < samples_.size(); ++j) samples[j] = factor * samples_[j];
    return from_samples(grid_, std::move(samples), interp_, extension_);
}

SpectralDensity SpectralDensity::plus(const SpectralDensity& other) const {
    if (!grid_.same_as(other.grid_) || dim_ != other.dim_) {
        throw grid_mismatch_error("SpectralDensity::plus: incompatible densities");
    }
    std::vector<Eigen::MatrixXcd> samples(samples_.size());
    for (std::size_t j = 0; j < samples_.size(); ++j) samples[j] = samples_[j] + other.samples_[j];
    // Extension of a sum: agreeing policies are kept; a Zero-extended term
    // drops out of the tail, so the other policy wins; otherwise clamp.
    Extension ext = extension_;
    if (extension_ != other.extension_) {
        if (extension_ == Extension::Zero) {
            ext = other.extension_;
        } else if (other.extension_ == Extension::Zero) {
            ext = extension_;
        } else {
            ext = Extension::Clamp;
        }
    }
    return from_samples(grid_, std::move(samples), interp_, ext);
}

ValidationReport validate_density(const SpectralDensity& density) {
    ValidationReport rep;
    const std::size_t n = density.grid().size();
    rep.hermitian_defect.resize(n);
    rep.min_eigenvalue.resize(n);
    rep.symmetry_defect.resize(n);

    double worst_scaled_eig = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const Eigen::MatrixXcd& m = density.sample(j);
        // Defects are relative to the sample norm; the floor only guards 0/0.
        const double scale = std::max(m.norm(), 1e-300);

        rep.hermitian_defect[j] = (m - m.adjoint()).norm() / scale;
        if (rep.hermitian_defect[j] > rep.max_hermitian_defect) {
            rep.max_hermitian_defect = rep.hermitian_defect[j];
            rep.worst_hermitian_index = static_cast<int>(j);
        }

        const Eigen::MatrixXcd herm = 0.5 * (m + m.adjoint());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
        rep.min_eigenvalue[j] = es.eigenvalues().minCoeff();
        const double scaled = rep.min_eigenvalue[j] / scale;
        if (scaled < worst_scaled_eig) {
            worst_scaled_eig = scaled;
            rep.worst_min_eigenvalue = rep.min_eigenvalue[j];
            rep.worst_psd_index = static_cast<int>(j);
        }

        const Eigen::MatrixXcd& mirror = density.sample(density.grid().mirror(j));
        rep.symmetry_defect[j] = (mirror - m.conjugate()).norm() / scale;
        if (rep.symmetry_defect[j] > rep.max_symmetry_defect) {
            rep.max_symmetry_defect = rep.symmetry_defect[j];
            rep.worst_symmetry_index = static_cast<int>(j);
        }
    }

    rep.passes = rep.max_hermitian_defect <= rep.hermitian_tol &&
                 worst_scaled_eig >= -rep.psd_tol &&
                 rep.max_symmetry_defect <= rep.symmetry_tol;
    return rep;
}

} // namespace wkinterp
