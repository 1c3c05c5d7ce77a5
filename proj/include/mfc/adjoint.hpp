#pragma once

/**
 * @file adjoint.hpp
 * @brief Backward solver for the adjoint psi of the forward Fokker-Planck
 *        equation: explicit in time, upwind advection, centred diffusion,
 *        nonlocal terms by quadrature or by sampling from mu.
 */

#include "mfc/model.hpp"

namespace mfc {

enum class IntegralMode { Quadrature, MonteCarlo };

/// Consistent: the adjoint of the nonlocal forward operator,
///   drift_correction(x) = int P(x,y)(y-x) mu(y) dy,
///   reaction(x)         = int P(y,x)(x-y) psi_y(y) mu(y) dy.
/// AsPrinted: both terms multiplied by -1/2.
enum class AdjointForm { Consistent, AsPrinted };

/// Neumann: mirror ghost cells (the adjoint of the no-flux finite volume scheme).
/// OneSided: one-sided upwind and a four-point one-sided second difference at the walls.
enum class AdjointBoundary { Neumann, OneSided };

struct AdjointOptions {
    IntegralMode mode = IntegralMode::Quadrature;
    AdjointForm form = AdjointForm::Consistent;
    AdjointBoundary boundary = AdjointBoundary::Neumann;
    /// Abort when |psi| exceeds the running maximum-principle bound (Neumann closure only).
    bool check_bound = true;
};

struct NonlocalTerms {
    ArrayXd drift_correction;
    ArrayXd reaction;
};

/// Central differences inside, one-sided first differences in the end cells.
ArrayXd gradient(const ArrayXd& psi, double dx);

/// `slice` keys the sample stream in MonteCarlo mode; cfg.m_samples samples are drawn.
NonlocalTerms nonlocal_terms(const ArrayXd& psi, const ArrayXd& mu, const Grid1D& grid,
                             const InteractionKernel& kernel, const SimulationConfig& cfg,
                             const AdjointOptions& options, int slice = 0);

/// Largest dt for which the explicit backward step is monotone: dx^2 / (2 sigma + dx max|v|).
double adjoint_max_dt(const ArrayXd& velocity, double sigma, double dx);

/// psi^m = psi^{m+1} + dt [1/2|x - x_d|^2 + gamma Psi(f) + v D_up psi + sigma D2 psi + reaction],
/// v = f + drift_correction, everything taken at level m+1.
ArrayXd adjoint_step(const ArrayXd& psi_next, const ArrayXd& mu_next, const ArrayXd& f_next,
                     const SimulationConfig& cfg, const InteractionKernel& kernel, const AdjointOptions& options,
                     int slice = 0, const ControlPenalty& penalty = {});

struct AdjointField {
    Grid1D grid;
    double dt = 0.0;
    std::vector<ArrayXd> slices;  ///< M + 1 slices, the last identically zero
};

AdjointField adjoint_solve(const DensityField& mu, const ControlField& f, const SimulationConfig& cfg,
                           const InteractionKernel& kernel, const AdjointOptions& options = {},
                           const ControlPenalty& penalty = {});

} // namespace mfc
