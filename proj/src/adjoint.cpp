#include "mfc/adjoint.hpp"

#include "mfc/error.hpp"
#include "mfc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mfc {

ArrayXd gradient(const ArrayXd& psi, double dx)
{
    const Eigen::Index n = psi.size();
    ArrayXd g = ArrayXd::Zero(n);
    if (n < 2) return g;
    g[0] = (psi[1] - psi[0]) / dx;
    g[n - 1] = (psi[n - 1] - psi[n - 2]) / dx;
    for (Eigen::Index i = 1; i + 1 < n; ++i) g[i] = (psi[i + 1] - psi[i - 1]) / (2.0 * dx);
    return g;
}

namespace {

// Linear interpolation between cell centres, constant beyond the outer centres.
double interp_centers(const ArrayXd& v, const Grid1D& grid, double x)
{
    const double pos = (x + grid.L) / grid.dx() - 0.5;
    if (pos <= 0.0) return v[0];
    if (pos >= grid.n - 1) return v[grid.n - 1];
    const int i = static_cast<int>(pos);
    const double w = pos - i;
    return (1.0 - w) * v[i] + w * v[i + 1];
}

NonlocalTerms quadrature_terms(const ArrayXd& grad, const ArrayXd& mu, const Grid1D& grid,
                               const InteractionKernel& kernel)
{
    const int n = grid.n;
    const double h = grid.dx();
    NonlocalTerms t{mean_field_drift_centers(mu, grid, kernel), ArrayXd::Zero(n)};
    if (kernel.ignores_partner()) {
        // P(y, x) = p(y): reaction(x) = x S0 - S1.
        double s0 = 0.0;
        double s1 = 0.0;
        for (int j = 0; j < n; ++j) {
            const double y = grid.center(j);
            const double w = kernel(y, y) * grad[j] * mu[j] * h;
            s0 += w;
            s1 += y * w;
        }
        for (int i = 0; i < n; ++i) t.reaction[i] = grid.center(i) * s0 - s1;
        return t;
    }
    for (int i = 0; i < n; ++i) {
        const double x = grid.center(i);
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
            if (mu[j] == 0.0) continue;
            const double y = grid.center(j);
            acc += kernel(y, x) * (x - y) * grad[j] * mu[j];
        }
        t.reaction[i] = acc * h;
    }
    return t;
}

NonlocalTerms sampled_terms(const ArrayXd& grad, const ArrayXd& mu, const Grid1D& grid,
                            const InteractionKernel& kernel, const SimulationConfig& cfg, int slice)
{
    const std::size_t ms = cfg.m_samples;
    if (ms == 0) throw ConfigError("m_samples: must be positive in Monte Carlo adjoint mode");
    const int n = grid.n;
    const double h = grid.dx();

    std::vector<double> cdf(n);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        acc += std::max(mu[i], 0.0);
        cdf[i] = acc;
    }
    NonlocalTerms t{ArrayXd::Zero(n), ArrayXd::Zero(n)};
    if (!(acc > 0.0)) return t;
    const double mass = acc * h;

    std::vector<double> y(ms);
    std::vector<double> gy(ms);
    for (std::size_t k = 0; k < ms; ++k) {
        CounterRng rng(cfg.seed, CounterRng::Adjoint, static_cast<std::uint64_t>(slice), k);
        const double u = rng.uniform() * acc;
        const int c = std::min(static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin()), n - 1);
        const double lo = c == 0 ? 0.0 : cdf[c - 1];
        const double w = mu[c] > 0.0 ? std::clamp((u - lo) / mu[c], 0.0, 1.0) : 0.5;
        y[k] = grid.interface(c) + w * h;
        gy[k] = interp_centers(grad, grid, y[k]);
    }

    const double scale = mass / static_cast<double>(ms);
    if (kernel.ignores_partner()) {
        double ybar = 0.0;
        double s0 = 0.0;
        double s1 = 0.0;
        for (std::size_t k = 0; k < ms; ++k) {
            const double w = kernel(y[k], y[k]) * gy[k];
            ybar += y[k];
            s0 += w;
            s1 += y[k] * w;
        }
        for (int i = 0; i < n; ++i) {
            const double x = grid.center(i);
            t.drift_correction[i] = kernel(x, x) * (ybar * scale - mass * x);
            t.reaction[i] = scale * (x * s0 - s1);
        }
        return t;
    }
    for (int i = 0; i < n; ++i) {
        const double x = grid.center(i);
        double d = 0.0;
        double r = 0.0;
        for (std::size_t k = 0; k < ms; ++k) {
            d += kernel(x, y[k]) * (y[k] - x);
            r += kernel(y[k], x) * (x - y[k]) * gy[k];
        }
        t.drift_correction[i] = scale * d;
        t.reaction[i] = scale * r;
    }
    return t;
}

} // namespace

NonlocalTerms nonlocal_terms(const ArrayXd& psi, const ArrayXd& mu, const Grid1D& grid,
                             const InteractionKernel& kernel, const SimulationConfig& cfg,
                             const AdjointOptions& options, int slice)
{
    if (psi.size() != grid.n || mu.size() != grid.n) throw ConfigError("adjoint: slice length does not match the grid");
    if (options.mode == IntegralMode::MonteCarlo && cfg.m_samples == 0)
        throw ConfigError("m_samples: must be positive in Monte Carlo adjoint mode");
    if (kernel.is_zero()) return {ArrayXd::Zero(grid.n), ArrayXd::Zero(grid.n)};

    const ArrayXd grad = gradient(psi, grid.dx());
    NonlocalTerms t = options.mode == IntegralMode::Quadrature ? quadrature_terms(grad, mu, grid, kernel)
                                                               : sampled_terms(grad, mu, grid, kernel, cfg, slice);
    if (options.form == AdjointForm::AsPrinted) {
        t.drift_correction *= -0.5;
        t.reaction *= -0.5;
    }
    return t;
}

double adjoint_max_dt(const ArrayXd& velocity, double sigma, double dx)
{
    const double v = velocity.size() ? velocity.abs().maxCoeff() : 0.0;
    const double denom = 2.0 * sigma + dx * v;
    return denom > 0.0 ? dx * dx / denom : std::numeric_limits<double>::infinity();
}

namespace {

struct StepParts {
    ArrayXd psi;
    double source_max;
    double reaction_max;
};

StepParts step_impl(const ArrayXd& psi1, const ArrayXd& mu1, const ArrayXd& f1, const SimulationConfig& cfg,
                    const InteractionKernel& kernel, const AdjointOptions& options, int slice,
                    const ControlPenalty& penalty)
{
    const Grid1D grid = Grid1D::from_config(cfg);
    const int n = grid.n;
    if (psi1.size() != n || mu1.size() != n || f1.size() != n)
        throw ConfigError("adjoint: slice length does not match the grid");
    const double h = grid.dx();
    const bool neumann = options.boundary == AdjointBoundary::Neumann;
    if (!neumann && n < 4) throw ConfigError("dx: one-sided adjoint closure needs at least four cells");

    const NonlocalTerms nl = nonlocal_terms(psi1, mu1, grid, kernel, cfg, options, slice);
    const ArrayXd v = f1 + nl.drift_correction;
    if (!v.allFinite() || !nl.reaction.allFinite()) throw NumericalError("adjoint: non-finite coefficients");
    const double limit = adjoint_max_dt(v, cfg.sigma, h);
    if (cfg.dt > limit * (1.0 + 1e-12)) {
        std::ostringstream os;
        os.precision(17);
        os << "adjoint: CFL violated, dt = " << cfg.dt << " exceeds the maximal admissible dt = " << limit;
        throw NumericalError(os.str());
    }

    StepParts out{ArrayXd(n), 0.0, nl.reaction.abs().maxCoeff()};
    const double inv_h = 1.0 / h;
    const double inv_h2 = inv_h * inv_h;
    for (int i = 0; i < n; ++i) {
        const double x = grid.center(i);
        const double d = x - cfg.x_d;
        const double src = 0.5 * d * d + cfg.gamma * penalty.value(f1[i]);
        out.source_max = std::max(out.source_max, std::abs(src));

        double adv;
        if (v[i] > 0.0) {
            if (i + 1 < n) adv = (psi1[i + 1] - psi1[i]) * inv_h;
            else adv = neumann ? 0.0 : (psi1[i] - psi1[i - 1]) * inv_h;
        } else {
            if (i > 0) adv = (psi1[i] - psi1[i - 1]) * inv_h;
            else adv = neumann ? 0.0 : (psi1[1] - psi1[0]) * inv_h;
        }

        double lap;
        if (i > 0 && i + 1 < n) lap = (psi1[i + 1] - 2.0 * psi1[i] + psi1[i - 1]) * inv_h2;
        else if (neumann) lap = (i == 0 ? psi1[1] - psi1[0] : psi1[n - 2] - psi1[n - 1]) * inv_h2;
        else if (i == 0) lap = (2.0 * psi1[0] - 5.0 * psi1[1] + 4.0 * psi1[2] - psi1[3]) * inv_h2;
        else lap = (2.0 * psi1[n - 1] - 5.0 * psi1[n - 2] + 4.0 * psi1[n - 3] - psi1[n - 4]) * inv_h2;

        out.psi[i] = psi1[i] + cfg.dt * (src + v[i] * adv + cfg.sigma * lap + nl.reaction[i]);
    }
    if (!out.psi.allFinite()) throw NumericalError("adjoint: non-finite values");
    return out;
}

} // namespace

ArrayXd adjoint_step(const ArrayXd& psi_next, const ArrayXd& mu_next, const ArrayXd& f_next,
                     const SimulationConfig& cfg, const InteractionKernel& kernel, const AdjointOptions& options,
                     int slice, const ControlPenalty& penalty)
{
    return step_impl(psi_next, mu_next, f_next, cfg, kernel, options, slice, penalty).psi;
}

AdjointField adjoint_solve(const DensityField& mu, const ControlField& f, const SimulationConfig& cfg,
                           const InteractionKernel& kernel, const AdjointOptions& options,
                           const ControlPenalty& penalty)
{
    cfg.validate();
    const Grid1D grid = Grid1D::from_config(cfg);
    const int M = cfg.steps();
    if (static_cast<int>(mu.slices.size()) != M + 1) throw ConfigError("adjoint: the density trajectory needs M + 1 slices");
    if (f.steps() != M || !(f.grid == grid) || !(mu.grid == grid))
        throw ConfigError("adjoint: control or density does not match the simulation mesh");

    AdjointField out;
    out.grid = grid;
    out.dt = cfg.dt;
    out.slices.resize(M + 1);
    out.slices[M] = ArrayXd::Zero(grid.n);
    const bool check = options.check_bound && options.boundary == AdjointBoundary::Neumann;
    double bound = 0.0;
    for (int m = M - 1; m >= 0; --m) {
        StepParts s = step_impl(out.slices[m + 1], mu.slices[m + 1], f.slices[m + 1], cfg, kernel, options, m, penalty);
        bound += cfg.dt * (s.source_max + s.reaction_max);
        const double peak = s.psi.abs().maxCoeff();
        if (check && peak > bound * (1.0 + 1e-9) + 1e-300) {
            std::ostringstream os;
            os.precision(17);
            os << "adjoint: |psi| = " << peak << " exceeds the a priori bound " << bound << " at step " << m;
            throw NumericalError(os.str());
        }
        out.slices[m] = std::move(s.psi);
    }
    return out;
}

} // namespace mfc
