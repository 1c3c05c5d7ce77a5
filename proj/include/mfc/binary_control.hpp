#pragma once

/**
 * @file binary_control.hpp
 * @brief Feedback controllers synthesized on the two-agent problem:
 *        the closed-form instantaneous control and the finite-horizon
 *        Bellman control on a node grid over [-L, L]^2.
 */

#include "mfc/model.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mfc {

using Slice2D = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Which closed form of the single-step minimizer to use.
///
/// Unscaled        dt/(2 gamma + dt^2) ((x_d - x) -/+ dt/2 P (y - x))
/// ScaledGammaBar  1/(2 gamma + dt)    ((x_d - x) -/+ dt/2 P (y - x)),  gamma read as gamma-bar = gamma/dt
/// ScaledKinetic   1/(gamma + eps)     ((x_d - x) -/+ eps P (y - x)),   eps = dt
/// SingleStepExact dt/(gamma + dt^2)   ((x_d - x) -   dt/2 P (y - x)),  exact argmin of the one-step cost
enum class ICScaling { Unscaled, ScaledGammaBar, ScaledKinetic, SingleStepExact };

/// Sign in front of the interaction term.
enum class ICSign { Minus, Plus };

struct ICMode {
    ICScaling scaling = ICScaling::ScaledKinetic;
    ICSign sign = ICSign::Plus;
};

std::string to_string(ICScaling s);
ICScaling ic_scaling_from_string(const std::string& s);

/// L = 1/2(|x_i - x_d|^2 + |x_j - x_d|^2) + gamma (Psi(u_i) + Psi(u_j)).
double binary_stage_cost(double xi, double xj, double ui, double uj, const SimulationConfig& cfg,
                         const ControlPenalty& penalty = {});

/// One-step predictive cost dt * L(x^{m+1}, u) for agent i alone (agent j's terms are separable),
/// with x^{m+1} = x + dt/2 P(x, y)(y - x) + dt u.
double single_step_cost(double u, double xi, double xj, const SimulationConfig& cfg, const InteractionKernel& kernel,
                        const ControlPenalty& penalty = {});

/// Control acting on agent i when paired with agent j.
/// For a non-quadratic penalty the first-order system
///   dt^2 U + 2 gamma Psi'(U) + dt (x_i - x_d) + dt^2/2 P (x_j - x_i) = 0
/// is solved by Newton's method (at most 50 iterations, then NumericalError).
double instantaneous_control(double xi, double xj, double t, const SimulationConfig& cfg,
                             const InteractionKernel& kernel, ICMode mode, const ControlPenalty& penalty = {});

/// Residual of the first-order system above at u.
double ic_first_order_residual(double u, double xi, double xj, const SimulationConfig& cfg,
                               const InteractionKernel& kernel, const ControlPenalty& penalty = {});

/// Small-eps limit K(x) of the instantaneous control, so the limiting drift is P[mu] + K.
double ic_limit_control(double x, const SimulationConfig& cfg, ICMode mode);

/// Node grid {-L + i dx : i = 0..n_cells} on each axis.
struct Grid2D {
    double L = 1.0;
    int n_nodes = 0;

    Grid2D() = default;
    Grid2D(double half_width, int cells) : L(half_width), n_nodes(cells + 1) {}
    static Grid2D from_config(const SimulationConfig& cfg) { return {cfg.L, cfg.cells()}; }

    double dx() const { return 2.0 * L / (n_nodes - 1); }
    double node(int i) const { return -L + i * dx(); }
    bool operator==(const Grid2D& o) const { return L == o.L && n_nodes == o.n_nodes; }
};

/// Bilinear interpolation of a node slice, arguments clamped to the box.
double bilinear(const Slice2D& v, const Grid2D& grid, double x, double y);

/// Uniform control grid on [-u_max, u_max].
struct ControlSet {
    double u_max = 2.0;
    int n_u = 21;

    void validate() const;
    /// Exactly 0 at the middle index and exactly antisymmetric about it.
    double value(int k) const { return n_u == 1 ? 0.0 : u_max * (2 * k - (n_u - 1)) / (n_u - 1); }
    /// Control values sorted by (|u|, u): the tie-break priority of the argmin.
    std::vector<double> priority_order() const;
};

/// V(x_i, x_j, t_m) for the stored slices. slice(M) is the terminal zero slice.
struct ValueFunction {
    Grid2D grid;
    double dt = 0.0;
    std::vector<Slice2D> slices;
};

/// Argmin control U(x_i, x_j, t_m) acting on the first agent, one slice per step.
/// With time subsampling, slice k holds step k * stride and dt is the stride length.
struct FeedbackTable {
    Grid2D grid;
    double dt = 0.0;
    double u_max = 0.0;
    std::vector<Slice2D> slices;

    int steps() const { return static_cast<int>(slices.size()); }
    /// Bilinear in (x_i, x_j) at the nearest-below slice; t is clamped into [0, T).
    double lookup(double xi, double xj, double t) const;
    double lookup_slice(double xi, double xj, int slice) const { return bilinear(slices.at(slice), grid, xi, xj); }
    /// Slice used at simulation step m when the simulation step is sim_dt.
    int slice_for_step(int m, double sim_dt) const;
};

struct HjbOptions {
    ControlSet controls{};
    bool keep_value = true;  ///< store every value slice (otherwise only t_0 and t_M)
    int time_stride = 1;     ///< store every stride-th feedback slice
    int threads = 1;
};

struct HjbResult {
    ValueFunction value;
    FeedbackTable feedback;
    std::vector<std::string> warnings;
};

/// Backward semi-Lagrangian Bellman recursion for the binary system
///   x^{m+1} = x^m + dt (F(x^m) + u),  F = (P(x_i,x_j)(x_j - x_i), P(x_j,x_i)(x_i - x_j)),
/// minimizing over the full product control grid at every node.
HjbResult hjb_solve(const SimulationConfig& cfg, const InteractionKernel& kernel, const HjbOptions& options,
                    const ControlPenalty& penalty = {});

/// Bellman right-hand side at node (i, j) for a given next slice, with its argmin.
struct BellmanMin {
    double value;
    double u_first;
    double u_second;
};
BellmanMin bellman_min(const Slice2D& next, const Grid2D& grid, int i, int j, const SimulationConfig& cfg,
                       const InteractionKernel& kernel, const ControlSet& controls,
                       const ControlPenalty& penalty = {});

/// Binary table file: "MFCH", version byte, then N_per_axis, M, dx, dt, L, u_max as
/// little-endian 64-bit fields, then M row-major slices of little-endian doubles.
inline constexpr unsigned char kTableVersion = 1;
void write_feedback_table(const std::filesystem::path& path, const FeedbackTable& table);
FeedbackTable read_feedback_table(const std::filesystem::path& path);
void write_value_function(const std::filesystem::path& path, const ValueFunction& value, double u_max);

} // namespace mfc
