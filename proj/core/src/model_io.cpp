#include "wkinterp/model_io.hpp"

#include <json.hpp>

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "wkinterp/errors.hpp"

namespace wkinterp {

namespace {

using nlohmann::json;
using Cplx = std::complex<double>;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw input_error(path + ": " + what);
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& path) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        bool ok = false;
        for (const char* k : allowed) {
            if (key == k) {
                ok = true;
                break;
            }
        }
        if (!ok) fail(path, "unknown key '" + key + "'");
    }
}

const json& need(const json& obj, const char* key, const std::string& path) {
    const auto it = obj.find(key);
    if (it == obj.end()) fail(path, "missing key '" + std::string(key) + "'");
    return *it;
}

double need_number(const json& obj, const char* key, const std::string& path) {
    const json& v = need(obj, key, path);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
}

int need_int(const json& obj, const char* key, const std::string& path) {
    const json& v = need(obj, key, path);
    if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
    return v.get<int>();
}

Cplx parse_complex(const json& v, const std::string& path) {
    if (v.is_number()) return Cplx(v.get<double>(), 0.0);
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        return Cplx(v[0].get<double>(), v[1].get<double>());
    }
    fail(path, "expected a number or an [re, im] pair");
}

Eigen::MatrixXcd parse_matrix(const json& v, int dim, const std::string& path) {
    if (v.is_number()) {
        if (dim != 1) fail(path, "scalar given for a matrix of dimension " + std::to_string(dim));
        Eigen::MatrixXcd m(1, 1);
        m(0, 0) = v.get<double>();
        return m;
    }
    if (!v.is_array() || static_cast<int>(v.size()) != dim) {
        fail(path, "expected a " + std::to_string(dim) + "x" + std::to_string(dim) + " matrix");
    }
    Eigen::MatrixXcd m(dim, dim);
    for (int r = 0; r < dim; ++r) {
        const json& row = v[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<int>(row.size()) != dim) {
            fail(path + "[" + std::to_string(r) + "]", "expected a row of length " +
                                                           std::to_string(dim));
        }
        for (int c = 0; c < dim; ++c) {
            m(r, c) = parse_complex(row[static_cast<std::size_t>(c)],
                                    path + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
        }
    }
    return m;
}

SpectralDensity::Extension parse_extension(const json& spec, const std::string& path,
                                           SpectralDensity::Extension fallback) {
    if (!spec.contains("extension")) return fallback;
    const std::string name = spec["extension"].get<std::string>();
    if (name == "zero") return SpectralDensity::Extension::Zero;
    if (name == "clamp") return SpectralDensity::Extension::Clamp;
    if (name == "inverse_square") return SpectralDensity::Extension::InverseSquare;
    fail(path + ".extension", "expected zero | clamp | inverse_square");
}

SpectralDensity parse_density(const json& spec, const FrequencyGrid& grid, int dim,
                              const std::string& path) {
    if (!spec.is_object()) fail(path, "expected a density object");
    const std::string kind = need(spec, "kind", path).get<std::string>();
    if (kind == "zero") {
        check_keys(spec, {"kind"}, path);
        return SpectralDensity::zero(grid, dim);
    }
    if (kind == "samples") {
        check_keys(spec, {"kind", "samples", "extension"}, path);
        const json& arr = need(spec, "samples", path);
        if (!arr.is_array() || arr.size() != grid.size()) {
            fail(path + ".samples", "expected " + std::to_string(grid.size()) + " samples");
        }
        std::vector<Eigen::MatrixXcd> samples;
        samples.reserve(arr.size());
        for (std::size_t j = 0; j < arr.size(); ++j) {
            samples.push_back(parse_matrix(arr[j], dim, path + ".samples[" + std::to_string(j) + "]"));
        }
        return SpectralDensity::from_samples(
            grid, std::move(samples), SpectralDensity::Interpolation::PiecewiseLinear,
            parse_extension(spec, path, SpectralDensity::Extension::Zero));
    }

    check_keys(spec, {"kind", "params", "extension"}, path);
    const json& params = need(spec, "params", path);
    const std::string pp = path + ".params";
    if (kind == "constant") {
        check_keys(params, {"value"}, pp);
        return SpectralDensity::constant(
            grid, parse_matrix(need(params, "value", pp), dim, pp + ".value"),
            parse_extension(spec, path, SpectralDensity::Extension::Clamp));
    }
    if (kind == "rational") {
        check_keys(params, {"scale", "c"}, pp);
        if (dim != 1) fail(path, "rational densities are scalar; use diag for dim > 1");
        return SpectralDensity::rational(grid, need_number(params, "scale", pp),
                                         need_number(params, "c", pp))
            .with_extension(parse_extension(spec, path, SpectralDensity::Extension::InverseSquare));
    }
    if (kind == "diag") {
        check_keys(params, {"components"}, pp);
        const json& comps = need(params, "components", pp);
        if (!comps.is_array() || static_cast<int>(comps.size()) != dim) {
            fail(pp + ".components", "expected " + std::to_string(dim) + " scalar densities");
        }
        std::vector<SpectralDensity> parts;
        parts.reserve(comps.size());
        for (std::size_t k = 0; k < comps.size(); ++k) {
            parts.push_back(parse_density(comps[k], grid, 1,
                                          pp + ".components[" + std::to_string(k) + "]"));
        }
        return SpectralDensity::diagonal(grid, parts);
    }
    if (kind == "scaled") {
        check_keys(params, {"factor", "inner"}, pp);
        SpectralDensity inner = parse_density(need(params, "inner", pp), grid, dim, pp + ".inner")
                                    .scaled(need_number(params, "factor", pp));
        return inner.with_extension(parse_extension(spec, path, inner.extension()));
    }
    fail(path, "unknown density kind '" + kind + "'");
}

WeightFunction parse_weight(const json& spec, const MissingSet& S, int dim,
                            const std::string& path) {
    if (!spec.is_object()) fail(path, "expected an object");
    check_keys(spec, {"expression", "values"}, path);
    const bool has_expr = spec.contains("expression");
    const bool has_values = spec.contains("values");
    if (has_expr == has_values) fail(path, "give exactly one of 'expression' or 'values'");
    if (has_expr) {
        return WeightFunction::from_expression(S, spec["expression"].get<std::string>(), dim);
    }
    const json& arr = spec["values"];
    if (!arr.is_array() || arr.size() != S.node_count()) {
        fail(path + ".values", "expected " + std::to_string(S.node_count()) + " node values");
    }
    Eigen::MatrixXd values(dim, static_cast<Eigen::Index>(S.node_count()));
    for (std::size_t k = 0; k < arr.size(); ++k) {
        const json& v = arr[k];
        const std::string vp = path + ".values[" + std::to_string(k) + "]";
        if (dim == 1 && v.is_number()) {
            values(0, static_cast<Eigen::Index>(k)) = v.get<double>();
        } else if (v.is_array() && static_cast<int>(v.size()) == dim) {
            for (int c = 0; c < dim; ++c) {
                if (!v[static_cast<std::size_t>(c)].is_number()) fail(vp, "expected numbers");
                values(c, static_cast<Eigen::Index>(k)) = v[static_cast<std::size_t>(c)].get<double>();
            }
        } else {
            fail(vp, "expected a vector of length " + std::to_string(dim));
        }
    }
    return WeightFunction::from_values(S, std::move(values));
}

json parse_text(const std::string& text, const std::string& label) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw input_error(label + ": " + e.what());
    }
}

DensityClass parse_class(const json& spec, const FrequencyGrid& grid, int dim,
                         const std::string& path) {
    if (!spec.is_object()) fail(path, "expected a class object");
    check_keys(spec, {"kind", "params", "references"}, path);
    DensityClass cls;
    cls.kind = class_kind_from_name(need(spec, "kind", path).get<std::string>());
    cls.dim = dim;

    const json params = spec.value("params", json::object());
    const json refs = spec.value("references", json::object());
    check_keys(refs, {"G1", "V", "U", "ref"}, path + ".references");
    if (refs.contains("G1")) {
        cls.reference = parse_density(refs["G1"], grid, dim, path + ".references.G1");
    }
    if (refs.contains("ref")) {
        cls.reference = parse_density(refs["ref"], grid, dim, path + ".references.ref");
    }
    if (refs.contains("V")) cls.lower = parse_density(refs["V"], grid, dim, path + ".references.V");
    if (refs.contains("U")) cls.upper = parse_density(refs["U"], grid, dim, path + ".references.U");

    const std::string pp = path + ".params";
    const auto get_vec = [&](const char* key) {
        const json& v = need(params, key, pp);
        if (!v.is_array() || static_cast<int>(v.size()) != dim) {
            fail(pp + "." + key, "expected " + std::to_string(dim) + " numbers");
        }
        Eigen::VectorXd out(dim);
        for (int k = 0; k < dim; ++k) out(k) = v[static_cast<std::size_t>(k)].get<double>();
        return out;
    };

    switch (cls.kind) {
        case ClassKind::Singleton:
            check_keys(params, {}, pp);
            break;
        case ClassKind::D0Trace:
        case ClassKind::StripTrace:
            check_keys(params, {"p"}, pp);
            cls.budget = need_number(params, "p", pp);
            break;
        case ClassKind::D0Component:
        case ClassKind::StripComponent:
            check_keys(params, {"p_k"}, pp);
            cls.budget_k = get_vec("p_k");
            break;
        case ClassKind::D0Weighted:
            check_keys(params, {"p", "B1"}, pp);
            cls.budget = need_number(params, "p", pp);
            cls.weight_mat = parse_matrix(need(params, "B1", pp), dim, pp + ".B1");
            break;
        case ClassKind::StripWeighted:
            check_keys(params, {"p", "B1"}, pp);
            cls.budget = need_number(params, "p", pp);
            cls.weight_mat = parse_matrix(need(params, "B1", pp), dim, pp + ".B1");
            break;
        case ClassKind::D0Matrix:
            check_keys(params, {"P"}, pp);
            cls.budget_mat = parse_matrix(need(params, "P", pp), dim, pp + ".P");
            break;
        case ClassKind::StripMatrix:
            check_keys(params, {"P"}, pp);
            cls.budget_mat = parse_matrix(need(params, "P", pp), dim, pp + ".P");
            break;
        case ClassKind::EpsTrace:
            check_keys(params, {"q", "eps"}, pp);
            cls.budget = need_number(params, "q", pp);
            cls.eps = need_number(params, "eps", pp);
            break;
        case ClassKind::EpsComponent:
            check_keys(params, {"q_k", "eps"}, pp);
            cls.budget_k = get_vec("q_k");
            cls.eps = need_number(params, "eps", pp);
            break;
        case ClassKind::EpsWeighted:
            check_keys(params, {"q", "eps", "B2"}, pp);
            cls.budget = need_number(params, "q", pp);
            cls.eps = need_number(params, "eps", pp);
            cls.weight_mat = parse_matrix(need(params, "B2", pp), dim, pp + ".B2");
            break;
        case ClassKind::EpsMatrix:
            check_keys(params, {"Q", "eps"}, pp);
            cls.budget_mat = parse_matrix(need(params, "Q", pp), dim, pp + ".Q");
            cls.eps = need_number(params, "eps", pp);
            break;
        case ClassKind::BallTrace:
            check_keys(params, {"delta"}, pp);
            cls.radius = need_number(params, "delta", pp);
            break;
        case ClassKind::BallComponent:
            check_keys(params, {"delta_k"}, pp);
            cls.radius_k = get_vec("delta_k");
            break;
        case ClassKind::BallWeighted:
            check_keys(params, {"delta", "B2"}, pp);
            cls.radius = need_number(params, "delta", pp);
            cls.weight_mat = parse_matrix(need(params, "B2", pp), dim, pp + ".B2");
            break;
        case ClassKind::BallEntry: {
            check_keys(params, {"delta_ij"}, pp);
            const Eigen::MatrixXcd m = parse_matrix(need(params, "delta_ij", pp), dim,
                                                    pp + ".delta_ij");
            cls.radius_ij = m.real();
            break;
        }
    }

    if (cls.eps < 0.0 || cls.eps > 1.0) fail(pp + ".eps", "eps must lie in [0, 1]");

    // Basic reference requirements.
    switch (cls.kind) {
        case ClassKind::Singleton:
        case ClassKind::EpsTrace:
        case ClassKind::EpsComponent:
        case ClassKind::EpsWeighted:
        case ClassKind::EpsMatrix:
        case ClassKind::BallTrace:
        case ClassKind::BallComponent:
        case ClassKind::BallWeighted:
        case ClassKind::BallEntry:
            if (!cls.reference.has_value()) fail(path, "class needs a reference density");
            break;
        case ClassKind::StripTrace:
        case ClassKind::StripComponent:
        case ClassKind::StripWeighted:
        case ClassKind::StripMatrix:
            if (!cls.lower.has_value() || !cls.upper.has_value()) {
                fail(path, "strip class needs V and U references");
            }
            break;
        default:
            break;
    }
    return cls;
}

void append_complex_columns(std::ostringstream& os, const Eigen::VectorXcd& v) {
    char buf[64];
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        std::snprintf(buf, sizeof(buf), ",%.17g", v(k).real());
        os << buf;
    }
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        std::snprintf(buf, sizeof(buf), ",%.17g", v(k).imag());
        os << buf;
    }
}

} // namespace

ModelSpec parse_model(const std::string& json_text, const ModelOverrides& ov) {
    const json doc = parse_text(json_text, "model");
    if (!doc.is_object()) throw input_error("model: expected a JSON object");
    check_keys(doc, {"dim", "grid", "F", "G", "S", "a", "time_step"}, "model");

    ModelSpec spec;
    spec.dim = need_int(doc, "dim", "model");
    if (spec.dim < 1 || spec.dim > 16) throw input_error("model.dim: expected 1..16");

    const json& grid_spec = need(doc, "grid", "model");
    check_keys(grid_spec, {"lambda_max", "n_points"}, "model.grid");
    const double lambda_max = ov.lambda_max.value_or(need_number(grid_spec, "lambda_max", "model.grid"));
    const int n_points = ov.n_points.value_or(need_int(grid_spec, "n_points", "model.grid"));
    try {
        spec.grid = FrequencyGrid::make(lambda_max, n_points);
    } catch (const std::invalid_argument& e) {
        throw input_error(std::string("model.grid: ") + e.what());
    }

    const json& s_spec = need(doc, "S", "model");
    if (!s_spec.is_array() || s_spec.empty()) throw input_error("model.S: expected [[l, r], ...]");
    std::vector<Interval> intervals;
    for (std::size_t l = 0; l < s_spec.size(); ++l) {
        const json& iv = s_spec[l];
        if (!iv.is_array() || iv.size() != 2 || !iv[0].is_number() || !iv[1].is_number()) {
            throw input_error("model.S[" + std::to_string(l) + "]: expected [left, right]");
        }
        intervals.push_back({iv[0].get<double>(), iv[1].get<double>()});
    }
    spec.time_step = ov.time_step.value_or(doc.value("time_step", 0.0));
    try {
        spec.S = MissingSet::make(intervals, spec.time_step);
    } catch (const std::invalid_argument& e) {
        throw input_error(std::string("model.S: ") + e.what());
    }

    spec.F = parse_density(need(doc, "F", "model"), spec.grid, spec.dim, "model.F");
    spec.G = parse_density(need(doc, "G", "model"), spec.grid, spec.dim, "model.G");
    spec.a = parse_weight(need(doc, "a", "model"), spec.S, spec.dim, "model.a");
    return spec;
}

ModelSpec load_model(const std::string& path, const ModelOverrides& ov) {
    return parse_model(read_file(path), ov);
}

ClassPairSpec parse_classes(const std::string& json_text, const FrequencyGrid& grid, int dim) {
    const json doc = parse_text(json_text, "classes");
    if (!doc.is_object()) throw input_error("classes: expected a JSON object");
    check_keys(doc, {"F", "G"}, "classes");
    ClassPairSpec out;
    out.class_F = parse_class(need(doc, "F", "classes"), grid, dim, "classes.F");
    out.class_G = parse_class(need(doc, "G", "classes"), grid, dim, "classes.G");
    return out;
}

ClassPairSpec load_classes(const std::string& path, const FrequencyGrid& grid, int dim) {
    return parse_classes(read_file(path), grid, dim);
}

std::uint64_t model_content_hash(const std::string& json_text, const ModelOverrides& ov) {
    const json doc = parse_text(json_text, "model");
    std::string canon = doc.dump();
    canon += "|" + std::to_string(ov.lambda_max.value_or(-1.0));
    canon += "|" + std::to_string(ov.n_points.value_or(-1));
    canon += "|" + std::to_string(ov.time_step.value_or(-1.0));
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : canon) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw input_error("cannot open " + tmp + " for writing");
        out << content;
        if (!out) throw input_error("short write to " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw input_error("cannot rename " + tmp + " to " + path);
    }
}

std::string csv_spectral_field(const std::string& name, const SpectralVectorField& field,
                               const FrequencyGrid& grid) {
    std::ostringstream os;
    const auto dim = field.front().size();
    os << "# wkinterp-csv " << name << " v1\n";
    os << "lambda";
    for (Eigen::Index k = 1; k <= dim; ++k) os << ",re_" << name << "_" << k;
    for (Eigen::Index k = 1; k <= dim; ++k) os << ",im_" << name << "_" << k;
    os << "\n";
    char buf[64];
    for (std::size_t j = 0; j < grid.size(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", grid.node(j));
        os << buf;
        append_complex_columns(os, field[j]);
        os << "\n";
    }
    return os.str();
}

std::string csv_time_function(const std::string& name, const Eigen::MatrixXcd& values,
                              const std::vector<double>& nodes) {
    std::ostringstream os;
    os << "# wkinterp-csv " << name << " v1\n";
    os << "t";
    for (Eigen::Index k = 1; k <= values.rows(); ++k) os << ",re_" << name << "_" << k;
    for (Eigen::Index k = 1; k <= values.rows(); ++k) os << ",im_" << name << "_" << k;
    os << "\n";
    char buf[64];
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", nodes[i]);
        os << buf;
        append_complex_columns(os, values.col(static_cast<Eigen::Index>(i)));
        os << "\n";
    }
    return os.str();
}

std::string csv_density_trace(const SpectralDensity& density) {
    std::ostringstream os;
    os << "# wkinterp-csv trace v1\nlambda,tr\n";
    char buf[128];
    for (std::size_t j = 0; j < density.grid().size(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", density.grid().node(j),
                      density.sample(j).trace().real());
        os << buf;
    }
    return os.str();
}

std::string csv_paths(const std::vector<double>& times, const Eigen::MatrixXd& xi,
                      const Eigen::MatrixXd& eta) {
    std::ostringstream os;
    os << "# wkinterp-csv paths v1\nt";
    for (Eigen::Index k = 1; k <= xi.rows(); ++k) os << ",xi_" << k;
    for (Eigen::Index k = 1; k <= eta.rows(); ++k) os << ",eta_" << k;
    os << "\n";
    char buf[64];
    for (std::size_t i = 0; i < times.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", times[i]);
        os << buf;
        for (Eigen::Index k = 0; k < xi.rows(); ++k) {
            std::snprintf(buf, sizeof(buf), ",%.17g", xi(k, static_cast<Eigen::Index>(i)));
            os << buf;
        }
        for (Eigen::Index k = 0; k < eta.rows(); ++k) {
            std::snprintf(buf, sizeof(buf), ",%.17g", eta(k, static_cast<Eigen::Index>(i)));
            os << buf;
        }
        os << "\n";
    }
    return os.str();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

} // namespace wkinterp
