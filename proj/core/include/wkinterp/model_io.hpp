#ifndef WKINTERP_MODEL_IO_HPP
#define WKINTERP_MODEL_IO_HPP

#include <cstdint>
#include <optional>
#include <string>

#include "wkinterp/density_class.hpp"
#include "wkinterp/frequency_grid.hpp"
#include "wkinterp/missing_set.hpp"
#include "wkinterp/spectral_density.hpp"
#include "wkinterp/transforms.hpp"
#include "wkinterp/weight_function.hpp"

namespace wkinterp {

struct ModelOverrides {
    std::optional<double> lambda_max;
    std::optional<int> n_points;
    std::optional<double> time_step;
};

/// A parsed model document: grid, densities, missing set and weight.
struct ModelSpec {
    int dim = 1;
    FrequencyGrid grid;
    SpectralDensity F, G;
    MissingSet S;
    WeightFunction a;
    double time_step = 0.0; // resolved value (0 = per-interval default)
};

/// Parses the model JSON {dim, grid, F, G, S, a, time_step?}. Unknown keys are
/// rejected; complex numbers are [re, im] pairs. Throws input_error with a
/// field-addressed message.
ModelSpec parse_model(const std::string& json_text, const ModelOverrides& ov = {});
ModelSpec load_model(const std::string& path, const ModelOverrides& ov = {});

struct ClassPairSpec {
    DensityClass class_F;
    DensityClass class_G;
};

/// Parses the class pair JSON {F: {kind, params, references}, G: {...}}.
ClassPairSpec parse_classes(const std::string& json_text, const FrequencyGrid& grid, int dim);
ClassPairSpec load_classes(const std::string& path, const FrequencyGrid& grid, int dim);

/// FNV-1a over the canonicalized model document plus the overrides; keys the
/// operator cache.
std::uint64_t model_content_hash(const std::string& json_text, const ModelOverrides& ov);

/// Write-temp-rename so partial output never lands under the final name.
void write_text_atomic(const std::string& path, const std::string& content);

/// CSV emitters (schema v1): lambda, re_x_1..re_x_T, im_x_1..im_x_T.
std::string csv_spectral_field(const std::string& name, const SpectralVectorField& field,
                               const FrequencyGrid& grid);
/// CSV of a time function on the S nodes: t, re_x_1.., im_x_1..
std::string csv_time_function(const std::string& name, const Eigen::MatrixXcd& values,
                              const std::vector<double>& nodes);
/// CSV of per-frequency traces of a density: lambda, tr.
std::string csv_density_trace(const SpectralDensity& density);
/// CSV of paths: t, xi_1.., eta_1..
std::string csv_paths(const std::vector<double>& times, const Eigen::MatrixXd& xi,
                      const Eigen::MatrixXd& eta);

std::string read_file(const std::string& path);

} // namespace wkinterp

#endif
