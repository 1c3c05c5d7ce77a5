#include "mfc/config.hpp"

#include "mfc/error.hpp"
#include "mfc/presets.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace mfc {

using nlohmann::json;

const std::vector<std::string>& config_keys()
{
    static const std::vector<std::string> keys{
        "sigma",          "gamma",        "x_d",          "T",          "dt",         "L",
        "dx",             "seed",         "n_samples",    "m_samples",  "preset",     "method",
        "adjoint_mode",   "adjoint_form", "adjoint_boundary", "ic_scaling", "ic_sign", "initial_form",
        "boundary",       "u_max",        "n_u",          "hjb_time_stride", "tol",  "max_iter",
        "relaxation",     "backtrack",    "threads",      "snapshot_stride", "beta", "kappa"};
    return keys;
}

json read_config_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: top level must be a JSON object");
    return doc;
}

json parse_assignment(const std::string& text)
{
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set: expected key=value, got '" + text + "'");
    const std::string key = text.substr(0, eq);
    const std::string raw = text.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    return json{{key, value}};
}

namespace {

double number(const json& v, const std::string& key)
{
    if (!v.is_number()) throw ConfigError(key + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(key + ": must be finite");
    return d;
}

long long integer(const json& v, const std::string& key, long long lo)
{
    const double d = number(v, key);
    if (d != std::floor(d) || d < static_cast<double>(lo) || d > 9.0e15)
        throw ConfigError(key + ": expected an integer >= " + std::to_string(lo));
    return static_cast<long long>(d);
}

std::string text(const json& v, const std::string& key)
{
    if (!v.is_string()) throw ConfigError(key + ": expected a string");
    return v.get<std::string>();
}

bool boolean(const json& v, const std::string& key)
{
    if (!v.is_boolean()) throw ConfigError(key + ": expected true or false");
    return v.get<bool>();
}

void check_layer(const json& layer)
{
    if (layer.is_null()) return;
    if (!layer.is_object()) throw ConfigError("config: overrides must form a JSON object");
    const auto& keys = config_keys();
    for (const auto& [k, v] : layer.items()) {
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw ConfigError(k + ": unknown key");
        (void)v;
    }
}

} // namespace

void apply_overrides(Problem& p, const json& layer, bool* controls_set)
{
    check_layer(layer);
    if (layer.is_null()) return;
    SimulationConfig& c = p.cfg;
    for (const auto& [k, v] : layer.items()) {
        if (k == "sigma") c.sigma = number(v, k);
        else if (k == "gamma") c.gamma = number(v, k);
        else if (k == "x_d") c.x_d = number(v, k);
        else if (k == "T") c.T = number(v, k);
        else if (k == "dt") c.dt = number(v, k);
        else if (k == "L") c.L = number(v, k);
        else if (k == "dx") c.dx = number(v, k);
        else if (k == "seed") c.seed = static_cast<std::uint64_t>(integer(v, k, 0));
        else if (k == "n_samples") c.n_samples = static_cast<std::size_t>(integer(v, k, 0));
        else if (k == "m_samples") c.m_samples = static_cast<std::size_t>(integer(v, k, 0));
        else if (k == "preset" || k == "method") text(v, k);  // consumed by resolve_run
        else if (k == "adjoint_mode") {
            const std::string s = text(v, k);
            if (s == "quadrature") p.adjoint.mode = IntegralMode::Quadrature;
            else if (s == "mc") p.adjoint.mode = IntegralMode::MonteCarlo;
            else throw ConfigError(k + ": expected quadrature or mc");
        } else if (k == "adjoint_form") {
            const std::string s = text(v, k);
            if (s == "consistent") p.adjoint.form = AdjointForm::Consistent;
            else if (s == "as_printed") p.adjoint.form = AdjointForm::AsPrinted;
            else throw ConfigError(k + ": expected consistent or as_printed");
        } else if (k == "adjoint_boundary") {
            const std::string s = text(v, k);
            if (s == "neumann") p.adjoint.boundary = AdjointBoundary::Neumann;
            else if (s == "one_sided") p.adjoint.boundary = AdjointBoundary::OneSided;
            else throw ConfigError(k + ": expected neumann or one_sided");
        } else if (k == "ic_scaling") {
            p.ic_mode.scaling = ic_scaling_from_string(text(v, k));
        } else if (k == "ic_sign") {
            const std::string s = text(v, k);
            if (s == "minus") p.ic_mode.sign = ICSign::Minus;
            else if (s == "plus") p.ic_mode.sign = ICSign::Plus;
            else throw ConfigError(k + ": expected minus or plus");
        } else if (k == "initial_form") {
            const std::string s = text(v, k);
            auto* sz = std::get_if<initial::SznajdBivariate>(&p.initial);
            if (!sz) throw ConfigError(k + ": only the bivariate initial data has a bump form");
            if (s == "concave") sz->form = initial::BumpForm::Concave;
            else if (s == "literal") sz->form = initial::BumpForm::Literal;
            else throw ConfigError(k + ": expected concave or literal");
        } else if (k == "boundary") {
            const std::string s = text(v, k);
            if (s == "reflect") p.boundary = BoundaryPolicy::Reflect;
            else if (s == "resample-noise") p.boundary = BoundaryPolicy::ResampleNoise;
            else throw ConfigError(k + ": expected reflect or resample-noise");
        } else if (k == "u_max") {
            p.controls.u_max = number(v, k);
            if (controls_set) *controls_set = true;
        } else if (k == "n_u") {
            p.controls.n_u = static_cast<int>(integer(v, k, 1));
            if (controls_set) *controls_set = true;
        } else if (k == "hjb_time_stride") p.hjb_time_stride = static_cast<int>(integer(v, k, 1));
        else if (k == "tol") p.sweep.tol = number(v, k);
        else if (k == "max_iter") p.sweep.max_iter = static_cast<int>(integer(v, k, 1));
        else if (k == "relaxation") p.sweep.relaxation = number(v, k);
        else if (k == "backtrack") p.sweep.backtrack = boolean(v, k);
        else if (k == "threads") p.threads = static_cast<int>(integer(v, k, 1));
        else if (k == "snapshot_stride") p.snapshot_stride = static_cast<int>(integer(v, k, 1));
        else if (k == "beta") {
            if (p.kernel.kind() != InteractionKernel::Kind::Sznajd) throw ConfigError(k + ": only the sznajd kernel has beta");
            p.kernel = InteractionKernel::sznajd(number(v, k));
        } else if (k == "kappa") {
            if (p.kernel.kind() != InteractionKernel::Kind::BoundedConfidence)
                throw ConfigError(k + ": only the bounded confidence kernel has kappa");
            const double kappa = number(v, k);
            if (!(kappa > 0.0)) throw ConfigError(k + ": must be > 0");
            p.kernel = InteractionKernel::bounded_confidence(kappa);
        }
    }
}

RunRequest resolve_run(const json& file, const json& flags)
{
    check_layer(file);
    check_layer(flags);
    auto pick = [&](const char* key) -> std::optional<std::string> {
        if (flags.is_object() && flags.contains(key)) return text(flags[key], key);
        if (file.is_object() && file.contains(key)) return text(file[key], key);
        return std::nullopt;
    };

    RunRequest r;
    r.problem = make_preset(pick("preset").value_or("sznajd"));
    bool controls_set = false;
    apply_overrides(r.problem, file, &controls_set);
    apply_overrides(r.problem, flags, &controls_set);
    if (!controls_set) r.problem.controls = default_controls(r.problem.cfg.gamma);
    if (auto m = pick("method")) r.method = method_from_string(*m);

    r.problem.cfg.validate();
    r.problem.controls.validate();
    r.problem.sweep.validate();
    r.resolved = describe(r.problem);
    if (r.method) r.resolved["method"] = to_string(*r.method);
    return r;
}

json describe(const Problem& p)
{
    const SimulationConfig& c = p.cfg;
    json j;
    j["preset"] = p.preset;
    j["sigma"] = c.sigma;
    j["gamma"] = c.gamma;
    j["x_d"] = c.x_d;
    j["T"] = c.T;
    j["dt"] = c.dt;
    j["L"] = c.L;
    j["dx"] = c.dx;
    j["seed"] = c.seed;
    j["n_samples"] = c.n_samples;
    j["m_samples"] = c.m_samples;
    if (p.kernel.kind() == InteractionKernel::Kind::Sznajd) j["beta"] = p.kernel.parameter();
    if (p.kernel.kind() == InteractionKernel::Kind::BoundedConfidence) j["kappa"] = p.kernel.parameter();
    j["adjoint_mode"] = p.adjoint.mode == IntegralMode::Quadrature ? "quadrature" : "mc";
    j["adjoint_form"] = p.adjoint.form == AdjointForm::Consistent ? "consistent" : "as_printed";
    j["adjoint_boundary"] = p.adjoint.boundary == AdjointBoundary::Neumann ? "neumann" : "one_sided";
    j["ic_scaling"] = to_string(p.ic_mode.scaling);
    j["ic_sign"] = p.ic_mode.sign == ICSign::Minus ? "minus" : "plus";
    if (const auto* sz = std::get_if<initial::SznajdBivariate>(&p.initial))
        j["initial_form"] = sz->form == initial::BumpForm::Literal ? "literal" : "concave";
    j["boundary"] = p.boundary == BoundaryPolicy::Reflect ? "reflect" : "resample-noise";
    j["u_max"] = p.controls.u_max;
    j["n_u"] = p.controls.n_u;
    j["hjb_time_stride"] = p.hjb_time_stride;
    j["tol"] = p.sweep.tol;
    j["max_iter"] = p.sweep.max_iter;
    j["relaxation"] = p.sweep.relaxation;
    j["backtrack"] = p.sweep.backtrack;
    j["threads"] = p.threads;
    j["snapshot_stride"] = p.snapshot_stride;
    return j;
}

} // namespace mfc
