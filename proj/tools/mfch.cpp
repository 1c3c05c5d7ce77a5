// mfch: Boltzmann-type mean-field control runs (hjb precompute, simulate, sweep, compare).

#include "mfc/config.hpp"
#include "mfc/error.hpp"
#include "mfc/io.hpp"
#include "mfc/manifest.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Args {
    std::string preset;
    std::string method;
    double gamma = 0.0;
    long long seed = -1;
    std::string config;
    std::string out = "out";
    std::string table;
    std::string adjoint_mode;
    std::vector<std::string> assignments;
    bool quiet = false;
};

void add_common(CLI::App* cmd, Args& a, bool with_method)
{
    cmd->add_option("--preset", a.preset, "sznajd or hk")->check(CLI::IsMember({"sznajd", "hk"}));
    if (with_method)
        cmd->add_option("--method", a.method, "uncontrolled, ic, fh or oc")
            ->check(CLI::IsMember({"uncontrolled", "ic", "fh", "oc"}));
    cmd->add_option("--gamma", a.gamma, "control penalty");
    cmd->add_option("--seed", a.seed, "random seed");
    cmd->add_option("--config", a.config, "JSON configuration file");
    cmd->add_option("--out", a.out, "output directory");
    cmd->add_option("--table", a.table, "feedback table file");
    cmd->add_option("--adjoint-mode", a.adjoint_mode, "quadrature or mc")->check(CLI::IsMember({"quadrature", "mc"}));
    cmd->add_option("--set", a.assignments, "key=value override, repeatable");
    cmd->add_flag("--quiet", a.quiet, "no progress on stderr");
}

mfc::RunRequest resolve(const Args& a, CLI::App* cmd)
{
    json file = json::object();
    if (!a.config.empty()) file = mfc::read_config_file(a.config);
    json flags = json::object();
    for (const auto& s : a.assignments) flags.update(mfc::parse_assignment(s));
    if (!a.preset.empty()) flags["preset"] = a.preset;
    if (!a.method.empty()) flags["method"] = a.method;
    if (cmd->count("--gamma")) flags["gamma"] = a.gamma;
    if (cmd->count("--seed")) {
        if (a.seed < 0) throw mfc::ConfigError("seed: must be >= 0");
        flags["seed"] = a.seed;
    }
    if (!a.adjoint_mode.empty()) flags["adjoint_mode"] = a.adjoint_mode;
    return mfc::resolve_run(file, flags);
}

fs::path prepare_out(const std::string& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw mfc::IoError("cannot create output directory '" + dir + "': " + ec.message());
    return fs::path(dir);
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path table_path(const Args& a, const fs::path& out)
{
    return a.table.empty() ? out / "feedback.mfch" : fs::path(a.table);
}

mfc::HjbResult run_hjb(const mfc::Problem& p)
{
    mfc::HjbOptions o;
    o.controls = p.controls;
    o.keep_value = false;
    o.time_stride = p.hjb_time_stride;
    o.threads = p.threads;
    return mfc::hjb_solve(p.cfg, p.kernel, o, p.penalty);
}

std::shared_ptr<const mfc::FeedbackTable> load_table(const Args& a, const fs::path& out, mfc::Method m)
{
    if (m != mfc::Method::FH) return nullptr;
    const fs::path path = table_path(a, out);
    if (!fs::exists(path))
        throw mfc::ConfigError("table: '" + path.string() + "' not found; run `mfch hjb` first (hjb precompute)");
    return std::make_shared<const mfc::FeedbackTable>(mfc::read_feedback_table(path));
}

mfc::SweepObserver progress(const Args& a, std::ofstream* log)
{
    return [quiet = a.quiet, log](const mfc::SweepIteration& it) {
        const std::string line = mfc::to_json_line(it);
        if (log) *log << line << '\n';
        if (!quiet) std::cerr << line << '\n';
    };
}

// Writes the per-method outputs and returns their names.
std::vector<std::string> write_outputs(const fs::path& out, const mfc::MethodResult& r)
{
    std::vector<std::string> files;
    mfc::write_density_csv(out / "density.csv", r.density);
    files.push_back("density.csv");
    if (r.control) {
        mfc::write_control_csv(out / "control.csv", *r.control);
        files.push_back("control.csv");
    }
    if (r.applied) {
        mfc::write_applied_csv(out / "applied_controls.csv", *r.applied);
        files.push_back("applied_controls.csv");
    }
    mfc::write_cost_json(out / "cost.json", r.cost);
    files.push_back("cost.json");
    return files;
}

json cost_entry(const mfc::MethodResult& r)
{
    return {{"J", r.cost.J}, {"state_term", r.cost.state_term}, {"control_term", r.cost.control_term},
            {"stderr", r.cost_stderr}};
}

int cmd_hjb(const Args& a, CLI::App* cmd)
{
    const auto t0 = std::chrono::steady_clock::now();
    const mfc::RunRequest req = resolve(a, cmd);
    const fs::path out = prepare_out(a.out);
    const mfc::HjbResult h = run_hjb(req.problem);
    for (const auto& w : h.warnings) std::cerr << "warning: " << w << '\n';
    const fs::path path = table_path(a, out);
    mfc::write_feedback_table(path, h.feedback);

    mfc::RunManifest man{"hjb", req.problem.preset, "fh", req.resolved, {path.string()}, seconds_since(t0)};
    man.extra["n_per_axis"] = h.feedback.grid.n_nodes;
    man.extra["slices"] = h.feedback.slices.size();
    man.write(out / "manifest.json");
    return 0;
}

int cmd_simulate(const Args& a, CLI::App* cmd, bool sweep_only)
{
    const auto t0 = std::chrono::steady_clock::now();
    const mfc::RunRequest req = resolve(a, cmd);
    const mfc::Method method = sweep_only ? mfc::Method::OC : req.method.value_or(mfc::Method::OC);
    const fs::path out = prepare_out(a.out);
    const auto table = load_table(a, out, method);

    std::ofstream log;
    if (method == mfc::Method::OC) {
        log.open(out / "sweep.jsonl");
        if (!log) throw mfc::IoError("cannot open '" + (out / "sweep.jsonl").string() + "' for writing");
    }
    const mfc::MethodResult r =
        mfc::evaluate_method(method, req.problem, table, progress(a, log.is_open() ? &log : nullptr));
    std::vector<std::string> files = write_outputs(out, r);
    if (log.is_open()) {
        log.close();
        if (!log) throw mfc::IoError("write failed for '" + (out / "sweep.jsonl").string() + "'");
        files.push_back("sweep.jsonl");
    }

    mfc::RunManifest man{sweep_only ? "sweep" : "simulate", req.problem.preset, mfc::to_string(method), req.resolved,
                         files, seconds_since(t0)};
    man.config["method"] = mfc::to_string(method);
    man.extra["cost"] = cost_entry(r);
    if (r.report) {
        man.extra["iterations"] = r.report->iterations;
        man.extra["converged"] = r.report->converged;
        if (!r.report->converged) std::cerr << "warning: sweep stopped at max_iter without reaching tol\n";
    }
    man.write(out / "manifest.json");
    std::cout.precision(17);
    std::cout << mfc::to_string(method) << " J = " << r.cost.J << '\n';
    return 0;
}

int cmd_compare(const Args& a, CLI::App* cmd)
{
    const auto t0 = std::chrono::steady_clock::now();
    const mfc::RunRequest req = resolve(a, cmd);
    const fs::path out = prepare_out(a.out);

    std::shared_ptr<const mfc::FeedbackTable> table;
    json summary;
    summary["preset"] = req.problem.preset;
    summary["methods"] = json::object();
    std::map<mfc::Method, mfc::MethodResult> results;
    bool failed = false;
    for (mfc::Method m : {mfc::Method::Uncontrolled, mfc::Method::IC, mfc::Method::FH, mfc::Method::OC}) {
        const std::string name = mfc::to_string(m);
        try {
            if (m == mfc::Method::FH) {
                const fs::path path = table_path(a, out);
                if (fs::exists(path)) {
                    table = std::make_shared<const mfc::FeedbackTable>(mfc::read_feedback_table(path));
                } else {
                    mfc::HjbResult h = run_hjb(req.problem);
                    mfc::write_feedback_table(path, h.feedback);
                    table = std::make_shared<const mfc::FeedbackTable>(std::move(h.feedback));
                }
            }
            if (!a.quiet) std::cerr << "running " << name << '\n';
            const fs::path dir = prepare_out((out / name).string());
            mfc::MethodResult r = mfc::evaluate_method(m, req.problem, table, progress(a, nullptr));
            write_outputs(dir, r);
            summary["methods"][name] = cost_entry(r);
            results.emplace(m, std::move(r));
        } catch (const mfc::Error& e) {
            failed = true;
            summary["methods"][name] = {{"error", e.what()}};
            std::cerr << name << ": " << e.what() << '\n';
        }
    }
    if (results.count(mfc::Method::OC) && results.count(mfc::Method::FH) && results.count(mfc::Method::IC)) {
        const auto h = mfc::check_hierarchy(results.at(mfc::Method::OC), results.at(mfc::Method::FH),
                                            results.at(mfc::Method::IC));
        summary["ordering"] = {{"oc_le_fh", h.oc_le_fh}, {"fh_le_ic", h.fh_le_ic}, {"holds", h.holds()}};
    } else {
        summary["ordering"] = {{"holds", nullptr}};
    }

    std::ofstream os(out / "compare.json");
    if (!os) throw mfc::IoError("cannot open '" + (out / "compare.json").string() + "' for writing");
    os << summary.dump(2) << '\n';
    os.close();
    if (!os) throw mfc::IoError("write failed for '" + (out / "compare.json").string() + "'");

    mfc::RunManifest man{"compare", req.problem.preset, "all", req.resolved, {"compare.json"}, seconds_since(t0)};
    man.write(out / "manifest.json");
    std::cout << summary.dump(2) << '\n';
    return failed ? 3 : 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Mean-field control of opinion dynamics: instantaneous, finite-horizon and optimal control"};
    app.require_subcommand(1);
    Args a;
    CLI::App* hjb = app.add_subcommand("hjb", "precompute the finite-horizon feedback table");
    CLI::App* simulate = app.add_subcommand("simulate", "run one method and write its outputs");
    CLI::App* sweep = app.add_subcommand("sweep", "run the optimal-control sweep and log every iteration");
    CLI::App* compare = app.add_subcommand("compare", "run every method with shared settings");
    add_common(hjb, a, false);
    add_common(simulate, a, true);
    add_common(sweep, a, false);
    add_common(compare, a, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (hjb->parsed()) return cmd_hjb(a, hjb);
        if (simulate->parsed()) return cmd_simulate(a, simulate, false);
        if (sweep->parsed()) return cmd_simulate(a, sweep, true);
        return cmd_compare(a, compare);
    } catch (const mfc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const mfc::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const mfc::IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return 4;
    }
}
