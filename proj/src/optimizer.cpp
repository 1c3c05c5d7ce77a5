#include "mfc/optimizer.hpp"

#include "mfc/error.hpp"
#include "mfc/fokker_planck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mfc {

void SweepConfig::validate() const
{
    if (!(tol > 0.0)) throw ConfigError("tol: must be > 0");
    if (max_iter < 1) throw ConfigError("max_iter: must be >= 1");
    if (!(relaxation > 0.0 && relaxation <= 1.0)) throw ConfigError("relaxation: must lie in (0, 1]");
    if (!(min_relaxation > 0.0)) throw ConfigError("min_relaxation: must be > 0");
}

ControlField control_update(const AdjointField& psi, const SimulationConfig& cfg, const ControlPenalty& penalty)
{
    ControlField f;
    f.grid = psi.grid;
    f.dt = psi.dt;
    f.slices.reserve(psi.slices.size());
    const double h = psi.grid.dx();
    for (const ArrayXd& s : psi.slices) {
        ArrayXd g = -gradient(s, h) / cfg.gamma;
        if (!penalty.is_quadratic()) g = g.unaryExpr([&](double v) { return penalty.invert_gradient(v); });
        f.slices.push_back(std::move(g));
    }
    return f;
}

ControlField blend(const ControlField& f_old, const ControlField& f_update, double omega)
{
    if (f_old.slices.size() != f_update.slices.size()) throw ConfigError("control: cannot blend fields of different length");
    ControlField out = f_old;
    for (std::size_t m = 0; m < out.slices.size(); ++m)
        out.slices[m] = (1.0 - omega) * f_old.slices[m] + omega * f_update.slices[m];
    return out;
}

double control_distance(const ControlField& a, const ControlField& b)
{
    if (a.slices.size() != b.slices.size()) throw ConfigError("control: cannot compare fields of different length");
    double acc = 0.0;
    for (std::size_t m = 0; m < a.slices.size(); ++m) acc += (a.slices[m] - b.slices[m]).square().sum();
    return std::sqrt(acc * a.grid.dx() * a.dt);
}

namespace {

struct Iterate {
    DensityField mu;
    AdjointField psi;
    CostBreakdown cost;
};

Iterate solve_pair(const ArrayXd& mu0, const ControlField& f, const SimulationConfig& cfg,
                   const InteractionKernel& kernel, const AdjointOptions& adjoint, const ControlPenalty& penalty)
{
    Iterate it;
    it.mu = fp_solve(mu0, f, kernel, cfg);
    it.cost = cost_functional(it.mu, f, cfg, penalty);
    it.psi = adjoint_solve(it.mu, f, cfg, kernel, adjoint, penalty);
    return it;
}

} // namespace

SweepResult sweep(const ArrayXd& mu0, const ControlField& f0, const SimulationConfig& cfg,
                  const InteractionKernel& kernel, const SweepConfig& sc, const AdjointOptions& adjoint,
                  const ControlPenalty& penalty, const SweepObserver& observer)
{
    cfg.validate();
    sc.validate();
    for (const ArrayXd& s : f0.slices)
        if (!s.allFinite()) throw ConfigError("f0: initial control must be finite");

    ControlField f = f0;
    Iterate cur = solve_pair(mu0, f, cfg, kernel, adjoint, penalty);
    SweepReport report;
    double omega = sc.relaxation;
    double cap = sc.relaxation;
    int cap_changed = 0;

    for (int i = 0; i < sc.max_iter; ++i) {
        const ControlField g = control_update(cur.psi, cfg, penalty);
        const double residual = control_distance(g, f);
        // Stagnation over a window of iterations means a damped cycle: tighten the step cap.
        constexpr int kWindow = 10;
        if (i - cap_changed >= kWindow && residual > 0.99 * report.history[i - kWindow].residual) {
            cap = std::max(0.5 * cap, sc.min_relaxation);
            omega = std::min(omega, cap);
            cap_changed = i;
        }
        SweepIteration rec;
        rec.iter = i;
        rec.residual = residual;
        if (residual <= sc.tol) {
            rec.cost = cur.cost;
            rec.increment_norm = residual;
            rec.relaxation = 0.0;
            report.history.push_back(rec);
            report.iterations = i + 1;
            report.final_increment = residual;
            report.converged = true;
            if (observer) observer(rec);
            break;
        }

        double w = omega;
        ControlField cand;
        Iterate next;
        for (;;) {
            cand = blend(f, g, w);
            bool ok = true;
            try {
                next = solve_pair(mu0, cand, cfg, kernel, adjoint, penalty);
            } catch (const NumericalError&) {
                if (!sc.backtrack) throw;
                ok = false;
            }
            // A step is kept when it lowers J or cuts the fixed-point residual by a fraction w/4.
            // Plain residual decrease would let a damped 2-cycle through.
            const bool worse = ok && sc.backtrack && next.cost.J > cur.cost.J * (1.0 + 1e-12) &&
                               control_distance(control_update(next.psi, cfg, penalty), cand) >
                                   (1.0 - 0.25 * w) * residual;
            if (ok && !worse) break;
            if (w * 0.5 < sc.min_relaxation) {
                if (ok) break;  // accept the smallest step rather than stall
                throw NumericalError("sweep: no admissible step down to relaxation " + std::to_string(sc.min_relaxation));
            }
            w *= 0.5;
        }

        f = std::move(cand);
        cur = std::move(next);
        rec.cost = cur.cost;
        rec.increment_norm = w * residual;
        rec.relaxation = w;
        report.history.push_back(rec);
        report.iterations = i + 1;
        report.final_increment = rec.increment_norm;
        if (observer) observer(rec);
        omega = std::min(cap, 2.0 * w);
    }

    SweepResult out;
    out.cost = cur.cost;
    out.mu = std::move(cur.mu);
    out.psi = std::move(cur.psi);
    out.f = std::move(f);
    out.report = std::move(report);
    return out;
}

std::string to_json_line(const SweepIteration& it)
{
    std::ostringstream os;
    os.precision(17);
    os << "{\"iter\":" << it.iter << ",\"J\":" << it.cost.J << ",\"state_term\":" << it.cost.state_term
       << ",\"control_term\":" << it.cost.control_term << ",\"increment_norm\":" << it.increment_norm << "}";
    return os.str();
}

std::string to_string(Method m)
{
    switch (m) {
    case Method::Uncontrolled: return "uncontrolled";
    case Method::IC: return "ic";
    case Method::FH: return "fh";
    case Method::OC: return "oc";
    }
    return "?";
}

Method method_from_string(const std::string& s)
{
    if (s == "uncontrolled") return Method::Uncontrolled;
    if (s == "ic") return Method::IC;
    if (s == "fh") return Method::FH;
    if (s == "oc") return Method::OC;
    throw ConfigError("method: unknown value '" + s + "'");
}

namespace {

DensityField subsample(const DensityField& d, int stride)
{
    if (stride <= 1) return d;
    DensityField out;
    out.grid = d.grid;
    const std::size_t last = d.slices.size() - 1;
    for (std::size_t k = 0; k <= last; ++k) {
        if (k % static_cast<std::size_t>(stride) == 0 || k == last) {
            out.times.push_back(d.times[k]);
            out.slices.push_back(d.slices[k]);
        }
    }
    return out;
}

MethodResult run_particles(Method method, const Problem& p, const BinaryController& controller)
{
    McOptions opt = McOptions::for_config(p.cfg);
    opt.boundary = p.boundary;
    opt.threads = p.threads;
    opt.snapshot_stride = p.snapshot_stride;
    McResult r = mc_run(p.initial, controller, p.cfg, p.kernel, opt, p.penalty);
    MethodResult out;
    out.method = method;
    out.density = std::move(r.density);
    out.applied = std::move(r.applied);
    out.cost = r.cost;
    out.cost_stderr = r.cost_stderr;
    return out;
}

} // namespace

MethodResult evaluate_method(Method method, const Problem& p, std::shared_ptr<const FeedbackTable> table,
                             const SweepObserver& observer)
{
    p.cfg.validate();
    const Grid1D grid = Grid1D::from_config(p.cfg);
    switch (method) {
    case Method::Uncontrolled: {
        const ControlField zero = ControlField::zeros(grid, p.cfg.steps(), p.cfg.dt);
        const DensityField mu = fp_solve(build_initial_density(p.initial, grid), zero, p.kernel, p.cfg);
        MethodResult out;
        out.method = method;
        out.cost = cost_functional(mu, zero, p.cfg, p.penalty);
        out.density = subsample(mu, p.snapshot_stride);
        out.control = zero;
        return out;
    }
    case Method::IC: return run_particles(method, p, InstantaneousController{p.ic_mode});
    case Method::FH:
        if (!table) throw ConfigError("table: the fh method needs a feedback table; run `mfch hjb` first (hjb precompute)");
        return run_particles(method, p, FiniteHorizonController{std::move(table)});
    case Method::OC: {
        const ControlField f0 = ControlField::zeros(grid, p.cfg.steps(), p.cfg.dt);
        SweepResult s = sweep(build_initial_density(p.initial, grid), f0, p.cfg, p.kernel, p.sweep, p.adjoint,
                              p.penalty, observer);
        MethodResult out;
        out.method = method;
        out.cost = s.cost;
        out.density = subsample(s.mu, p.snapshot_stride);
        out.control = std::move(s.f);
        out.report = std::move(s.report);
        return out;
    }
    }
    throw ConfigError("method: unsupported");
}

HierarchyCheck check_hierarchy(const MethodResult& oc, const MethodResult& fh, const MethodResult& ic)
{
    auto le = [](const MethodResult& a, const MethodResult& b) {
        return a.cost.J <= b.cost.J + 2.0 * std::hypot(a.cost_stderr, b.cost_stderr);
    };
    return {le(oc, fh), le(fh, ic)};
}

} // namespace mfc
