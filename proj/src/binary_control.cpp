#include "mfc/binary_control.hpp"

#include "mfc/error.hpp"
#include "mfc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mfc {

std::string to_string(ICScaling s)
{
    switch (s) {
    case ICScaling::Unscaled: return "unscaled";
    case ICScaling::ScaledGammaBar: return "scaled_gamma_bar";
    case ICScaling::ScaledKinetic: return "scaled_kinetic";
    case ICScaling::SingleStepExact: return "single_step_exact";
    }
    return "?";
}

ICScaling ic_scaling_from_string(const std::string& s)
{
    if (s == "unscaled") return ICScaling::Unscaled;
    if (s == "scaled_gamma_bar") return ICScaling::ScaledGammaBar;
    if (s == "scaled_kinetic") return ICScaling::ScaledKinetic;
    if (s == "single_step_exact") return ICScaling::SingleStepExact;
    throw ConfigError("ic_mode: unknown value '" + s + "'");
}

double binary_stage_cost(double xi, double xj, double ui, double uj, const SimulationConfig& cfg,
                         const ControlPenalty& penalty)
{
    const double di = xi - cfg.x_d;
    const double dj = xj - cfg.x_d;
    return 0.5 * (di * di + dj * dj) + cfg.gamma * (penalty.value(ui) + penalty.value(uj));
}

double single_step_cost(double u, double xi, double xj, const SimulationConfig& cfg, const InteractionKernel& kernel,
                        const ControlPenalty& penalty)
{
    const double next = xi + 0.5 * cfg.dt * kernel(xi, xj) * (xj - xi) + cfg.dt * u;
    const double d = next - cfg.x_d;
    return cfg.dt * (0.5 * d * d + cfg.gamma * penalty.value(u));
}

namespace {

// Every closed form is the root of  a U + b Psi'(U) = c.
struct Stationarity {
    double a;
    double b;
    double c;
};

Stationarity stationarity(double xi, double xj, const SimulationConfig& cfg, const InteractionKernel& kernel,
                          ICMode mode)
{
    const double dt = cfg.dt;
    const double g = cfg.gamma;
    const double pull = cfg.x_d - xi;
    const double inter = kernel(xi, xj) * (xj - xi);
    const double s = mode.sign == ICSign::Minus ? -1.0 : 1.0;
    switch (mode.scaling) {
    case ICScaling::Unscaled: return {dt * dt, 2.0 * g, dt * (pull + s * 0.5 * dt * inter)};
    case ICScaling::ScaledGammaBar: return {dt, 2.0 * g, pull + s * 0.5 * dt * inter};
    case ICScaling::ScaledKinetic: return {dt, g, pull + s * dt * inter};
    case ICScaling::SingleStepExact: return {dt * dt, g, dt * (pull - 0.5 * dt * inter)};
    }
    return {1.0, 1.0, 0.0};
}

} // namespace

double instantaneous_control(double xi, double xj, double /*t*/, const SimulationConfig& cfg,
                             const InteractionKernel& kernel, ICMode mode, const ControlPenalty& penalty)
{
    const Stationarity st = stationarity(xi, xj, cfg, kernel, mode);
    if (penalty.is_quadratic()) return st.c / (st.a + st.b);

    double u = st.c / (st.a + st.b);
    for (int it = 0; it < 50; ++it) {
        const double r = st.a * u + st.b * penalty.gradient(u) - st.c;
        if (std::abs(r) <= 1e-14 * std::max(1.0, std::abs(st.c))) return u;
        u -= r / (st.a + st.b * penalty.curvature(u));
    }
    throw NumericalError("instantaneous control: Newton did not converge in 50 iterations");
}

double ic_first_order_residual(double u, double xi, double xj, const SimulationConfig& cfg,
                               const InteractionKernel& kernel, const ControlPenalty& penalty)
{
    const double dt = cfg.dt;
    return dt * dt * u + 2.0 * cfg.gamma * penalty.gradient(u) + dt * (xi - cfg.x_d) +
           0.5 * dt * dt * kernel(xi, xj) * (xj - xi);
}

double ic_limit_control(double x, const SimulationConfig& cfg, ICMode mode)
{
    switch (mode.scaling) {
    case ICScaling::ScaledKinetic: return (cfg.x_d - x) / cfg.gamma;
    case ICScaling::ScaledGammaBar: return (cfg.x_d - x) / (2.0 * cfg.gamma);
    case ICScaling::Unscaled:
    case ICScaling::SingleStepExact: break;
    }
    return 0.0;
}

void ControlSet::validate() const
{
    if (!(u_max > 0.0)) throw ConfigError("u_max: must be > 0");
    if (n_u < 1 || n_u % 2 == 0) throw ConfigError("n_u: must be odd so that 0 is a control value");
}

std::vector<double> ControlSet::priority_order() const
{
    std::vector<double> v(n_u);
    for (int k = 0; k < n_u; ++k) v[k] = value(k);
    std::stable_sort(v.begin(), v.end(), [](double a, double b) {
        if (std::abs(a) != std::abs(b)) return std::abs(a) < std::abs(b);
        return a < b;
    });
    return v;
}

namespace {

struct Foot {
    int idx;
    double w;
};

inline Foot locate(double p, double L, double h, int n_nodes)
{
    p = std::clamp(p, -L, L);
    const double s = (p + L) / h;
    const int i = std::min(static_cast<int>(s), n_nodes - 2);
    return {i, s - i};
}

inline double interp(const Slice2D& v, Foot fx, Foot fy)
{
    const double* r0 = v.data() + static_cast<std::ptrdiff_t>(fx.idx) * v.cols();
    const double* r1 = r0 + v.cols();
    return (1.0 - fx.w) * ((1.0 - fy.w) * r0[fy.idx] + fy.w * r0[fy.idx + 1]) +
           fx.w * ((1.0 - fy.w) * r1[fy.idx] + fy.w * r1[fy.idx + 1]);
}

// Precomputed per-solve data shared by every node.
struct BellmanContext {
    const Grid2D& grid;
    const SimulationConfig& cfg;
    const InteractionKernel& kernel;
    std::vector<double> u;       // control values in priority order
    std::vector<double> u_cost;  // dt * gamma * Psi(u)
    double h;

    BellmanContext(const Grid2D& g, const SimulationConfig& c, const InteractionKernel& k, const ControlSet& cs,
                   const ControlPenalty& penalty)
        : grid(g), cfg(c), kernel(k), u(cs.priority_order()), u_cost(u.size()), h(g.dx())
    {
        for (std::size_t q = 0; q < u.size(); ++q) u_cost[q] = c.dt * c.gamma * penalty.value(u[q]);
    }
};

struct NodeResult {
    double value;
    int k;
    int l;
};

NodeResult minimize_node(const BellmanContext& ctx, const Slice2D& next, int i, int j, std::vector<Foot>& fx,
                         std::vector<Foot>& fy)
{
    const double xi = ctx.grid.node(i);
    const double xj = ctx.grid.node(j);
    const double dt = ctx.cfg.dt;
    const double ax = xi + dt * ctx.kernel(xi, xj) * (xj - xi);
    const double ay = xj + dt * ctx.kernel(xj, xi) * (xi - xj);
    const std::size_t n = ctx.u.size();
    for (std::size_t q = 0; q < n; ++q) {
        fx[q] = locate(ax + dt * ctx.u[q], ctx.grid.L, ctx.h, ctx.grid.n_nodes);
        fy[q] = locate(ay + dt * ctx.u[q], ctx.grid.L, ctx.h, ctx.grid.n_nodes);
    }
    double best = std::numeric_limits<double>::infinity();
    int bk = 0;
    int bl = 0;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = 0; l < n; ++l) {
            const double v = (ctx.u_cost[k] + ctx.u_cost[l]) + interp(next, fx[k], fy[l]);
            if (v < best) {
                best = v;
                bk = static_cast<int>(k);
                bl = static_cast<int>(l);
            }
        }
    }
    const double di = xi - ctx.cfg.x_d;
    const double dj = xj - ctx.cfg.x_d;
    const double state = dt * 0.5 * (di * di + dj * dj);
    return {state + best, bk, bl};
}

} // namespace

double bilinear(const Slice2D& v, const Grid2D& grid, double x, double y)
{
    const double h = grid.dx();
    return interp(v, locate(x, grid.L, h, grid.n_nodes), locate(y, grid.L, h, grid.n_nodes));
}

BellmanMin bellman_min(const Slice2D& next, const Grid2D& grid, int i, int j, const SimulationConfig& cfg,
                       const InteractionKernel& kernel, const ControlSet& controls, const ControlPenalty& penalty)
{
    const BellmanContext ctx(grid, cfg, kernel, controls, penalty);
    std::vector<Foot> fx(ctx.u.size());
    std::vector<Foot> fy(ctx.u.size());
    const NodeResult r = minimize_node(ctx, next, i, j, fx, fy);
    return {r.value, ctx.u[r.k], ctx.u[r.l]};
}

int FeedbackTable::slice_for_step(int m, double sim_dt) const
{
    const int s = static_cast<int>(std::floor(m * sim_dt / dt + 1e-9));
    return std::clamp(s, 0, steps() - 1);
}

double FeedbackTable::lookup(double xi, double xj, double t) const
{
    const int s = std::clamp(static_cast<int>(std::floor(t / dt + 1e-9)), 0, steps() - 1);
    return lookup_slice(xi, xj, s);
}

HjbResult hjb_solve(const SimulationConfig& cfg, const InteractionKernel& kernel, const HjbOptions& options,
                    const ControlPenalty& penalty)
{
    cfg.validate();
    options.controls.validate();
    const int M = cfg.steps();
    if (options.time_stride < 1 || M % options.time_stride != 0)
        throw ConfigError("time_stride: must be a positive divisor of T/dt");

    const Grid2D grid = Grid2D::from_config(cfg);
    const int n = grid.n_nodes;
    HjbResult out;

    double max_drift = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            max_drift = std::max(max_drift, std::abs(kernel(grid.node(i), grid.node(j)) * (grid.node(j) - grid.node(i))));
    if (cfg.dt * (max_drift + options.controls.u_max) > 2.0 * cfg.L) {
        std::ostringstream os;
        os << "hjb: dt*(max|F| + u_max) = " << cfg.dt * (max_drift + options.controls.u_max)
           << " exceeds the domain width; feet of characteristics are clamped";
        out.warnings.push_back(os.str());
    }

    const BellmanContext ctx(grid, cfg, kernel, options.controls, penalty);

    out.value.grid = grid;
    out.value.dt = cfg.dt;
    out.feedback.grid = grid;
    out.feedback.dt = cfg.dt * options.time_stride;
    out.feedback.u_max = options.controls.u_max;
    out.feedback.slices.resize(M / options.time_stride);
    if (options.keep_value) out.value.slices.resize(M + 1);

    Slice2D next = Slice2D::Zero(n, n);
    Slice2D current(n, n);
    Slice2D control(n, n);
    if (options.keep_value) out.value.slices[M] = next;

    for (int m = M - 1; m >= 0; --m) {
        parallel_for(n, options.threads, [&](int begin, int end) {
            std::vector<Foot> fx(ctx.u.size());
            std::vector<Foot> fy(ctx.u.size());
            for (int i = begin; i < end; ++i) {
                for (int j = 0; j < n; ++j) {
                    const NodeResult r = minimize_node(ctx, next, i, j, fx, fy);
                    current(i, j) = r.value;
                    control(i, j) = ctx.u[r.k];
                }
            }
        });
        if (m % options.time_stride == 0) out.feedback.slices[m / options.time_stride] = control;
        if (options.keep_value) out.value.slices[m] = current;
        std::swap(next, current);
    }
    if (!options.keep_value) {
        out.value.slices = {next, Slice2D::Zero(n, n)};
        out.value.dt = cfg.T;
    }
    return out;
}

} // namespace mfc
