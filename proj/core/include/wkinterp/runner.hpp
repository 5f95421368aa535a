#ifndef WKINTERP_RUNNER_HPP
#define WKINTERP_RUNNER_HPP

#include <cstdint>
#include <optional>
#include <string>

namespace wkinterp {

enum class Command { Validate, Estimate, Simulate, Minimax, Report };

Command command_from_name(const std::string& name);

/// One batch run. Overrides mirror the model/class JSON knobs; ranges are
/// checked before anything executes.
struct RunConfig {
    Command command = Command::Validate;
    std::string model_path;
    std::string class_path;  // minimax only
    std::string output_dir = ".";

    std::optional<double> lambda_max;   // [1, 4096]
    std::optional<int> n_points;        // odd, [3, 1048577]
    std::optional<double> time_step;    // > 0
    std::optional<double> tikhonov;     // >= 0
    std::optional<std::uint64_t> seed;
    std::optional<int> n_replications;  // >= 2
    std::optional<double> tol;          // > 0
    std::optional<int> max_iter;        // >= 1

    bool emit_paths = false;
    std::string cache_dir; // empty disables the operator cache
};

/// Exit status: 0 ok, 1 I/O or schema error, 2 validation failure,
/// 3 numerical failure (diagnostic JSON written when possible).
int run(const RunConfig& cfg);

} // namespace wkinterp

#endif
