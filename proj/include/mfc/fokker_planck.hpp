#pragma once

/**
 * @file fokker_planck.hpp
 * @brief Chang-Cooper finite volumes with explicit Euler for
 *        d_t mu = -d_x((P[mu] + f) mu) + sigma d_xx mu, no-flux walls.
 */

#include "mfc/model.hpp"

namespace mfc {

/// 1/w - 1/(e^w - 1); 1/2 at w = 0, 1 as w -> -inf, 0 as w -> +inf.
double exp_fitting_weight(double w);

/// Chang-Cooper weight for drift F: exp_fitting_weight(-dx F / sigma).
/// For sigma = 0 this is the upwind limit, 1 for F > 0 and 0 otherwise.
double cc_weight(double F, double sigma, double dx);

/// G = -[(1 - theta) mu_{i+1} + theta mu_i] F + sigma (mu_{i+1} - mu_i) / dx.
inline double cc_flux(double mu_i, double mu_ip1, double F, double theta, double sigma, double dx)
{
    return -((1.0 - theta) * mu_ip1 + theta * mu_i) * F + sigma * (mu_ip1 - mu_i) / dx;
}

/// P[mu] + f at the interior interfaces k = 1..n-1, f averaged from the adjacent cells.
ArrayXd interface_drift(const ArrayXd& mu, const ArrayXd& f, const Grid1D& grid, const InteractionKernel& kernel);

/// Largest dt keeping every diagonal coefficient of the explicit update nonnegative.
/// `drift` holds the n-1 interior interface values.
double max_stable_dt(const ArrayXd& drift, double sigma, double dx);

/// One explicit step with the interior interface drift given.
ArrayXd fp_step_with_drift(const ArrayXd& mu, const ArrayXd& drift, double sigma, double dx, double dt);

/// One explicit step. Throws NumericalError naming the admissible dt when the step is unstable.
ArrayXd fp_step(const ArrayXd& mu, const ArrayXd& f, const InteractionKernel& kernel, const SimulationConfig& cfg);

/// M steps from mu0 with f^m used on [t_m, t_{m+1}); returns all M + 1 slices.
DensityField fp_solve(const ArrayXd& mu0, const ControlField& f, const InteractionKernel& kernel,
                      const SimulationConfig& cfg);

} // namespace mfc
