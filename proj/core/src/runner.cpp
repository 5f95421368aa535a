#include "wkinterp/runner.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>

#include "wkinterp/errors.hpp"
#include "wkinterp/estimator.hpp"
#include "wkinterp/kkt.hpp"
#include "wkinterp/minimax.hpp"
#include "wkinterp/model_io.hpp"
#include "wkinterp/simulation.hpp"

namespace wkinterp {

namespace {

using nlohmann::json;

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&t));
    return buf;
}

void check_ranges(const RunConfig& cfg) {
    if (cfg.lambda_max && (*cfg.lambda_max < 1.0 || *cfg.lambda_max > 4096.0)) {
        throw input_error("lambda_max override must lie in [1, 4096]");
    }
    if (cfg.n_points && (*cfg.n_points < 3 || *cfg.n_points > 1048577 || *cfg.n_points % 2 == 0)) {
        throw input_error("n_points override must be odd and in [3, 1048577]");
    }
    if (cfg.time_step && !(*cfg.time_step > 0.0)) throw input_error("time_step must be positive");
    if (cfg.tikhonov && *cfg.tikhonov < 0.0) throw input_error("tikhonov must be nonnegative");
    if (cfg.n_replications && *cfg.n_replications < 2) {
        throw input_error("n_replications must be at least 2");
    }
    if (cfg.tol && !(*cfg.tol > 0.0)) throw input_error("tol must be positive");
    if (cfg.max_iter && *cfg.max_iter < 1) throw input_error("max_iter must be at least 1");
    if (cfg.model_path.empty()) throw input_error("model path is required");
    if (cfg.command == Command::Minimax && cfg.class_path.empty()) {
        throw input_error("minimax needs a class file");
    }
}

json effective_config(const RunConfig& cfg, const ModelSpec& model) {
    json j;
    j["command"] = static_cast<int>(cfg.command);
    switch (cfg.command) {
        case Command::Validate: j["command"] = "validate"; break;
        case Command::Estimate: j["command"] = "estimate"; break;
        case Command::Simulate: j["command"] = "simulate"; break;
        case Command::Minimax: j["command"] = "minimax"; break;
        case Command::Report: j["command"] = "report"; break;
    }
    j["model"] = cfg.model_path;
    if (!cfg.class_path.empty()) j["classes"] = cfg.class_path;
    j["lambda_max"] = model.grid.lambda_max();
    j["n_points"] = model.grid.n_points();
    j["lambda_max_effective"] = QuadratureGrid::extended(model.grid, model.S).lambda_max();
    j["time_step"] = model.time_step;
    j["tikhonov"] = cfg.tikhonov.has_value() ? json(*cfg.tikhonov) : json("auto");
    j["seed"] = cfg.seed.value_or(1);
    j["n_replications"] = cfg.n_replications.value_or(10000);
    j["tol"] = cfg.tol.value_or(1e-4);
    j["max_iter"] = cfg.max_iter.value_or(500);
    j["emit_paths"] = cfg.emit_paths;
    return j;
}

json validation_to_json(const ValidationReport& rep) {
    json j;
    j["passes"] = rep.passes;
    j["max_hermitian_defect"] = rep.max_hermitian_defect;
    j["worst_min_eigenvalue"] = rep.worst_min_eigenvalue;
    j["max_symmetry_defect"] = rep.max_symmetry_defect;
    j["worst_hermitian_index"] = rep.worst_hermitian_index;
    j["worst_psd_index"] = rep.worst_psd_index;
    j["worst_symmetry_index"] = rep.worst_symmetry_index;
    return j;
}

json kkt_to_json(const KKTResiduals& k) {
    json j;
    j["pair"] = k.pair_name;
    if (!k.note.empty()) j["note"] = k.note;
    j["residual_first"] = k.residual_first;
    j["residual_second"] = k.residual_second;
    j["multipliers"] = k.multipliers;
    j["slackness_defect"] = k.slackness_defect;
    j["slackness_defect_alt"] = k.slackness_defect_alt;
    j["sign_defect"] = k.sign_defect;
    j["ball_equality_defect"] = k.ball_equality_defect;
    return j;
}

/// Orthogonality probe points straddling S at the documented offsets.
std::vector<double> default_probe_points(const MissingSet& S) {
    const double left = S.intervals().front().left;
    const double right = S.intervals().back().right;
    return {left - 2.0, left - 1.0, right + 0.5, right + 1.0, right + 2.0};
}

struct LoadedModel {
    ModelSpec spec;
    std::string text;
};

LoadedModel load(const RunConfig& cfg) {
    ModelOverrides ov;
    ov.lambda_max = cfg.lambda_max;
    ov.n_points = cfg.n_points;
    ov.time_step = cfg.time_step;
    LoadedModel m;
    m.text = read_file(cfg.model_path);
    m.spec = parse_model(m.text, ov);
    return m;
}

int validate_or_fail(const RunConfig& cfg, const ModelSpec& model, json& out) {
    const ValidationReport f_rep = validate_density(model.F);
    const ValidationReport g_rep = validate_density(model.G);
    out["validation"]["F"] = validation_to_json(f_rep);
    out["validation"]["G"] = validation_to_json(g_rep);
    const auto& a = model.a;
    const auto integ = a.integrability(model.S);
    out["weight"]["l1_integral"] = integ.l1_integral;
    out["weight"]["abs_t_weighted_sq_integral"] = integ.weighted_sq_integral;
    if (!f_rep.passes || !g_rep.passes) {
        out["status"] = "validation_failed";
        write_text_atomic(cfg.output_dir + "/result.json", out.dump(2) + "\n");
        return 2;
    }
    return 0;
}

OperatorSystem assemble_with_cache(const RunConfig& cfg, const LoadedModel& m) {
    if (cfg.cache_dir.empty()) {
        return assemble_system(m.spec.F, m.spec.G, m.spec.S, m.spec.grid);
    }
    ModelOverrides ov;
    ov.lambda_max = cfg.lambda_max;
    ov.n_points = cfg.n_points;
    ov.time_step = cfg.time_step;
    const std::uint64_t hash = model_content_hash(m.text, ov);
    char name[64];
    std::snprintf(name, sizeof(name), "/op_%016llx.bin", static_cast<unsigned long long>(hash));
    const std::string path = cfg.cache_dir + name;
    if (auto sys = load_operator_cache(path, hash)) {
        return std::move(*sys);
    }
    OperatorSystem sys = assemble_system(m.spec.F, m.spec.G, m.spec.S, m.spec.grid);
    std::filesystem::create_directories(cfg.cache_dir);
    save_operator_cache(path, sys, hash);
    return sys;
}

json estimate_to_json(const EstimateSolution& est, const OrthogonalityReport& orth) {
    json j;
    j["delta"] = est.delta;
    j["delta_forms"]["operator"] = est.delta_operator_form;
    j["delta_forms"]["spectral"] = est.delta_spectral_form;
    j["condition_number"] = std::isfinite(est.condition_number)
                                ? json(est.condition_number)
                                : json("inf");
    j["residuals"]["solve"] = est.c.residual;
    j["residuals"]["orthogonality_max"] = orth.max_residual;
    j["residuals"]["orthogonality"] = orth.residuals;
    j["regularization"] = est.c.regularization_used;
    j["noiseless"] = est.noiseless;
    return j;
}

void write_estimate_tables(const RunConfig& cfg, const ModelSpec& model,
                           const EstimateSolution& est) {
    write_text_atomic(cfg.output_dir + "/h.csv",
                      csv_spectral_field("h", est.on_density_grid(est.h), model.grid));
    write_text_atomic(cfg.output_dir + "/c.csv",
                      csv_time_function("c", est.c.c, model.S.nodes()));
    write_text_atomic(cfg.output_dir + "/C_lambda.csv",
                      csv_spectral_field("C", est.on_density_grid(est.C), model.grid));
}

SimulationConfig simulation_config(const RunConfig& cfg, const ModelSpec& model) {
    SimulationConfig sim;
    sim.t_min = model.S.intervals().front().left - 5.0;
    sim.t_max = model.S.intervals().back().right + 5.0;
    sim.time_step = 0.01;
    sim.n_replications = cfg.n_replications.value_or(10000);
    sim.seed = cfg.seed.value_or(1);
    return sim;
}

int run_impl(const RunConfig& cfg) {
    std::filesystem::create_directories(cfg.output_dir);
    LoadedModel m = load(cfg);
    const ModelSpec& model = m.spec;

    json out;
    out["config"] = effective_config(cfg, model);
    out["timestamp"] = iso_timestamp();

    if (const int rc = validate_or_fail(cfg, model, out); rc != 0) return rc;
    if (cfg.command == Command::Validate) {
        out["status"] = "ok";
        write_text_atomic(cfg.output_dir + "/result.json", out.dump(2) + "\n");
        return 0;
    }

    if (cfg.command == Command::Minimax) {
        const ClassPairSpec classes = load_classes(cfg.class_path, model.grid, model.dim);
        SaddleOptions opts;
        opts.tol = cfg.tol.value_or(1e-4);
        opts.max_iter = cfg.max_iter.value_or(500);
        opts.tikhonov = cfg.tikhonov;
        const SaddlePoint sp = saddle_iterate(classes.class_F, classes.class_G, model.a, model.S,
                                              model.grid, opts);
        out["saddle"]["delta0"] = sp.delta0;
        out["saddle"]["gap"] = sp.gap;
        out["saddle"]["probe_gap"] = sp.probe_gap;
        out["saddle"]["iterations"] = sp.iterations;
        out["saddle"]["converged"] = sp.converged;
        try {
            out["saddle"]["kkt"] = kkt_to_json(
                kkt_residuals(sp, classes.class_F, classes.class_G, model.grid));
        } catch (const unsupported_class_error& e) {
            out["saddle"]["kkt"] = json{{"unsupported", e.what()}};
        }
        out["status"] = sp.converged ? "ok" : "not_converged";
        {
            SpectralVectorField h_dense(sp.qgrid.density_count());
            for (std::size_t j = 0; j < h_dense.size(); ++j) {
                h_dense[j] = sp.h0[sp.qgrid.density_first() + j];
            }
            write_text_atomic(cfg.output_dir + "/h.csv",
                              csv_spectral_field("h", h_dense, model.grid));
        }
        write_text_atomic(cfg.output_dir + "/f0_trace.csv", csv_density_trace(sp.F0));
        write_text_atomic(cfg.output_dir + "/g0_trace.csv", csv_density_trace(sp.G0));
        write_text_atomic(cfg.output_dir + "/result.json", out.dump(2) + "\n");
        if (!sp.converged) throw stalled_error("minimax did not reach tol within max_iter");
        return 0;
    }

    EstimateOptions eopts;
    eopts.tikhonov = cfg.tikhonov;
    const OperatorSystem sys = assemble_with_cache(cfg, m);
    const EstimateSolution est =
        estimate_with_system(sys, model.F, model.G, model.S, model.a, model.grid, eopts);
    const OrthogonalityReport orth = verify_orthogonality(
        est.h, est.A, model.F, model.G, est.qgrid, default_probe_points(model.S));
    out["estimate"] = estimate_to_json(est, orth);
    write_estimate_tables(cfg, model, est);

    if (cfg.command == Command::Simulate || cfg.command == Command::Report) {
        SimulationConfig sim = simulation_config(cfg, model);
        if (cfg.command == Command::Report) {
            sim.n_replications = cfg.n_replications.value_or(2000);
        }
        const EnsembleResult ens =
            empirical_mse(model.F, model.G, est.h, model.a, model.S, model.grid, sim, est.delta);
        out["ensemble"]["empirical_mse"] = ens.empirical_mse;
        out["ensemble"]["std_error"] = ens.std_error;
        out["ensemble"]["theoretical_delta"] = ens.theoretical_delta;
        out["ensemble"]["z_score"] = ens.z_score;
        out["ensemble"]["n_replications"] = ens.n_replications;
        out["ensemble"]["seed"] = sim.seed;

        if (cfg.emit_paths) {
            check_window(sim, model.S, model.F);
            const QuadratureGrid q = QuadratureGrid::extended(model.grid, model.S);
            const PathPair paths = simulate_pair(model.F, model.G, sim, q);
            write_text_atomic(cfg.output_dir + "/paths.csv",
                              csv_paths(paths.times, paths.xi, paths.eta));
        }
    }

    if (cfg.command == Command::Report) {
        const CorrelationScale scale = correlation_scale(model.F);
        out["diagnostics"]["correlation_e_folding"] = scale.e_folding;
        out["diagnostics"]["correlation_decay_1e3"] = scale.decay_1e3;
        const SpectralDensity sum = model.F.plus(model.G);
        // Smooth probe: its transform decays fast enough that the divergence
        // heuristic reflects the densities, not the probe's own tail.
        const WeightFunction probe =
            WeightFunction::from_expression(model.S, "sin_sq_pi", model.dim);
        const MinimalityReport min_rep = minimality_check(sum, probe, model.S, model.grid);
        out["diagnostics"]["minimality_value"] = min_rep.value;
        out["diagnostics"]["minimality_divergence_flag"] = min_rep.divergence_flag;
        const SimulationConfig sim = simulation_config(cfg, model);
        const OracleResult oracle = gaussian_oracle(model.F, model.G, model.S, model.a, model.grid,
                                                    sim.t_min, sim.t_max, 0.01);
        out["oracle"]["mse"] = oracle.mse;
        out["oracle"]["var_functional"] = oracle.var_functional;
        out["oracle"]["n_observations"] = oracle.n_observations;
        out["oracle"]["jitter_used"] = oracle.jitter_used;
        out["oracle"]["relative_gap_vs_delta"] =
            oracle.mse > 0.0 ? std::abs(est.delta - oracle.mse) / oracle.mse : 0.0;
    }

    out["status"] = "ok";
    write_text_atomic(cfg.output_dir + "/result.json", out.dump(2) + "\n");
    return 0;
}

} // namespace

Command command_from_name(const std::string& name) {
    if (name == "validate") return Command::Validate;
    if (name == "estimate") return Command::Estimate;
    if (name == "simulate") return Command::Simulate;
    if (name == "minimax") return Command::Minimax;
    if (name == "report") return Command::Report;
    throw input_error("unknown command '" + name + "'");
}

namespace {

const char* numerical_error_kind(const std::exception& e) {
    if (dynamic_cast<const singular_density_error*>(&e)) return "singular_density";
    if (dynamic_cast<const ill_conditioned_error*>(&e)) return "ill_conditioned";
    if (dynamic_cast<const stalled_error*>(&e)) return "stalled";
    if (dynamic_cast<const minimality_lost_error*>(&e)) return "minimality_lost";
    if (dynamic_cast<const dual_form_mismatch_error*>(&e)) return "dual_form_mismatch";
    return nullptr;
}

} // namespace

int run(const RunConfig& cfg) {
    try {
        check_ranges(cfg);
        return run_impl(cfg);
    } catch (const std::exception& e) {
        if (const char* kind = numerical_error_kind(e)) {
            json diag{{"error", kind}, {"message", e.what()}};
            try {
                write_text_atomic(cfg.output_dir + "/diagnostics.json", diag.dump(2) + "\n");
            } catch (...) {
            }
            std::cerr << "numerical failure: " << e.what() << "\n";
            return 3;
        }
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace wkinterp
