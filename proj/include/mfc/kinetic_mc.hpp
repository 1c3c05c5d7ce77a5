#pragma once

/**
 * @file kinetic_mc.hpp
 * @brief Binary-collision Monte Carlo for the controlled Boltzmann dynamics
 *        under the quasi-invariant scaling alpha = eps, eta = 1/eps.
 */

#include "mfc/binary_control.hpp"
#include "mfc/model.hpp"
#include "mfc/rng.hpp"

#include <cstdint>
#include <cmath>
#include <memory>
#include <utility>
#include <variant>

namespace mfc {

struct ScalingParams {
    double alpha = 0.0025;  ///< interaction strength
    double eps = 0.0025;    ///< scaling parameter
    double eta = 400.0;     ///< interaction rate

    static ScalingParams quasi_invariant(double eps) { return {eps, eps, 1.0 / eps}; }
};

enum class BoundaryPolicy { Reflect, ResampleNoise };

/// Mirror reflection into [-L, L], iterated until inside.
double reflect_into(double x, double L);

struct NoControl {};
struct InstantaneousController {
    ICMode mode{};
};
struct FiniteHorizonController {
    std::shared_ptr<const FeedbackTable> table;
};
struct ExternalController {
    ControlField field;
};

using BinaryController = std::variant<NoControl, InstantaneousController, FiniteHorizonController, ExternalController>;

/// Controls (u_xy, u_yx) for the pair (x, y) at step m.
std::pair<double, double> evaluate_controller(const BinaryController& c, double x, double y, int m,
                                              const SimulationConfig& cfg, const InteractionKernel& kernel);

/// One collision before boundary handling. xi and zeta have variance sigma already.
inline std::pair<double, double> binary_interact(double x, double y, double u_xy, double u_yx,
                                                 const InteractionKernel& kernel, const ScalingParams& params, double xi,
                                                 double zeta)
{
    const double a = params.alpha;
    const double s = std::sqrt(2.0 * a);
    return {x + a * kernel(x, y) * (y - x) + a * u_xy + s * xi, y + a * kernel(y, x) * (x - y) + a * u_yx + s * zeta};
}

struct McOptions {
    ScalingParams params{};
    BoundaryPolicy boundary = BoundaryPolicy::Reflect;
    int threads = 1;
    int snapshot_stride = 1;     ///< record densities every stride steps (t_M always recorded)
    bool keep_particles = false; ///< also keep positions at every snapshot
    /// Scaling derived from dt (eps = dt) unless set explicitly.
    static McOptions for_config(const SimulationConfig& cfg);
};

struct Ensemble {
    ArrayXd x;
    int step = 0;
};

/// Per-agent control applied at the step (zero for agents that did not collide).
struct StepRecord {
    ArrayXd applied;
    std::int64_t collisions = 0;
};

/// Advances the ensemble by one time step dt and returns the applied controls.
/// N_c = iround(N_s dt / (2 eps)) disjoint pairs, capped at floor(N_s / 2).
StepRecord mc_step(Ensemble& ens, const BinaryController& controller, const SimulationConfig& cfg,
                   const InteractionKernel& kernel, const McOptions& options);

struct ControlSnapshots {
    Grid1D grid;
    std::vector<double> times;
    std::vector<ArrayXd> slices;  ///< cell-binned mean applied control
};

struct McResult {
    DensityField density;
    ControlSnapshots applied;
    std::vector<ArrayXd> particles;  ///< only with keep_particles
    CostBreakdown cost;
    double cost_stderr = 0.0;
    Ensemble final;
};

/// Inverse-CDF sampling from a piecewise-constant cell density.
ArrayXd sample_from_density(const ArrayXd& mu, const Grid1D& grid, std::size_t n, std::uint64_t seed);

/// count in cell / (N dx).
ArrayXd histogram(const ArrayXd& x, const Grid1D& grid);

/// Mean of values over the agents of each cell, 0 for empty cells.
ArrayXd binned_mean(const ArrayXd& x, const ArrayXd& values, const Grid1D& grid);

McResult mc_run(const InitialDataSpec& spec, const BinaryController& controller, const SimulationConfig& cfg,
                const InteractionKernel& kernel, const McOptions& options, const ControlPenalty& penalty = {});

/// Same, from an explicit starting ensemble.
McResult mc_run(Ensemble start, const BinaryController& controller, const SimulationConfig& cfg,
                const InteractionKernel& kernel, const McOptions& options, const ControlPenalty& penalty = {});

} // namespace mfc
