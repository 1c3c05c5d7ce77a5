#include "mfc/fokker_planck.hpp"

#include "mfc/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace mfc {

double exp_fitting_weight(double w)
{
    if (std::abs(w) < 1e-3) {
        const double w2 = w * w;
        return 0.5 - w / 12.0 + w * w2 / 720.0;
    }
    if (w > 700.0) return 1.0 / w;
    return 1.0 / w - 1.0 / std::expm1(w);
}

double cc_weight(double F, double sigma, double dx)
{
    if (sigma == 0.0) return F > 0.0 ? 1.0 : 0.0;
    return exp_fitting_weight(-dx * F / sigma);
}

ArrayXd interface_drift(const ArrayXd& mu, const ArrayXd& f, const Grid1D& grid, const InteractionKernel& kernel)
{
    ArrayXd d = mean_field_drift_interfaces(mu, grid, kernel);
    for (int k = 1; k < grid.n; ++k) d[k - 1] += 0.5 * (f[k - 1] + f[k]);
    return d;
}

namespace {

// Outflow rate of cell i in units of 1/dx: the explicit update keeps mu_i >= 0 iff dt * rate / dx <= 1.
double outflow_rate(const ArrayXd& drift, double sigma, double dx, int i, int n)
{
    double rate = 0.0;
    if (i < n - 1) {
        const double F = drift[i];
        rate += cc_weight(F, sigma, dx) * F + sigma / dx;
    }
    if (i > 0) {
        const double F = drift[i - 1];
        rate += sigma / dx - (1.0 - cc_weight(F, sigma, dx)) * F;
    }
    return rate;
}

} // namespace

double max_stable_dt(const ArrayXd& drift, double sigma, double dx)
{
    const int n = static_cast<int>(drift.size()) + 1;
    double worst = 0.0;
    for (int i = 0; i < n; ++i) worst = std::max(worst, outflow_rate(drift, sigma, dx, i, n));
    return worst > 0.0 ? dx / worst : std::numeric_limits<double>::infinity();
}

ArrayXd fp_step_with_drift(const ArrayXd& mu, const ArrayXd& drift, double sigma, double dx, double dt)
{
    const Eigen::Index n = mu.size();
    if (!drift.allFinite()) throw NumericalError("fp_step: non-finite drift");
    const double limit = max_stable_dt(drift, sigma, dx);
    if (dt > limit * (1.0 + 1e-12)) {
        std::ostringstream os;
        os.precision(17);
        os << "fp_step: CFL violated, dt = " << dt << " exceeds the maximal admissible dt = " << limit;
        throw NumericalError(os.str());
    }
    ArrayXd G = ArrayXd::Zero(n + 1);
    for (Eigen::Index k = 1; k < n; ++k) {
        const double F = drift[k - 1];
        G[k] = cc_flux(mu[k - 1], mu[k], F, cc_weight(F, sigma, dx), sigma, dx);
    }
    ArrayXd next = mu + (dt / dx) * (G.tail(n) - G.head(n));

    const double scale = std::max(mu.maxCoeff(), 1e-300);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (next[i] < 0.0) {
            if (next[i] < -1e-12 * scale) throw NumericalError("fp_step: negative density at cell " + std::to_string(i));
            next[i] = 0.0;
        }
    }
    return next;
}

ArrayXd fp_step(const ArrayXd& mu, const ArrayXd& f, const InteractionKernel& kernel, const SimulationConfig& cfg)
{
    const Grid1D grid = Grid1D::from_config(cfg);
    if (mu.size() != grid.n || f.size() != grid.n) throw ConfigError("fp_step: slice length does not match the grid");
    return fp_step_with_drift(mu, interface_drift(mu, f, grid, kernel), cfg.sigma, grid.dx(), cfg.dt);
}

DensityField fp_solve(const ArrayXd& mu0, const ControlField& f, const InteractionKernel& kernel,
                      const SimulationConfig& cfg)
{
    cfg.validate();
    const Grid1D grid = Grid1D::from_config(cfg);
    const int M = cfg.steps();
    if (f.steps() < M || !(f.grid == grid)) throw ConfigError("control: field does not cover the simulation mesh");
    if (mu0.size() != grid.n) throw ConfigError("initial density: length does not match the grid");

    DensityField out;
    out.grid = grid;
    out.times.reserve(M + 1);
    out.slices.reserve(M + 1);
    out.times.push_back(0.0);
    out.slices.push_back(mu0);
    for (int m = 0; m < M; ++m) {
        out.slices.push_back(fp_step_with_drift(out.slices.back(), interface_drift(out.slices.back(), f.slices[m], grid, kernel),
                                                cfg.sigma, grid.dx(), cfg.dt));
        out.times.push_back(cfg.time(m + 1));
    }
    return out;
}

} // namespace mfc
