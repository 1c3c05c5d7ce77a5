#pragma once

/**
 * @file model.hpp
 * @brief Problem data shared by every solver: parameters, interaction kernels,
 *        the control penalty, the cell-centred grid, grid functions, initial
 *        densities and the tracking cost.
 */

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace mfc {

using Eigen::ArrayXd;

/// Scalar problem and discretization parameters.
struct SimulationConfig {
    double sigma = 0.0;  ///< diffusion coefficient, >= 0
    double gamma = 1.0;  ///< control penalty weight, > 0
    double x_d = 0.0;    ///< desired state
    double T = 1.0;      ///< horizon
    double dt = 0.01;    ///< time step
    double L = 1.0;      ///< domain is [-L, L]
    double dx = 0.025;   ///< cell width
    std::uint64_t seed = 0;
    std::size_t n_samples = 1000;  ///< Monte Carlo particles
    std::size_t m_samples = 10000; ///< samples for the adjoint nonlocal integrals

    /// Throws ConfigError naming the first violated invariant.
    void validate() const;

    int steps() const;  ///< M = T / dt
    int cells() const;  ///< N = 2L / dx
    double time(int m) const { return m * dt; }
};

/// Pairwise communication strength P(x, y).
class InteractionKernel {
public:
    enum class Kind { Sznajd, BoundedConfidence, Constant, Zero };

    static InteractionKernel sznajd(double beta);
    static InteractionKernel bounded_confidence(double kappa);
    static InteractionKernel constant(double c);
    static InteractionKernel zero();

    double operator()(double x, double y) const
    {
        switch (kind_) {
        case Kind::Sznajd: return param_ * (1.0 - x * x);
        case Kind::BoundedConfidence: return std::abs(x - y) <= param_ ? 1.0 : 0.0;
        case Kind::Constant: return param_;
        case Kind::Zero: break;
        }
        return 0.0;
    }

    Kind kind() const { return kind_; }
    double parameter() const { return param_; }
    bool is_zero() const { return kind_ == Kind::Zero || (kind_ != Kind::BoundedConfidence && param_ == 0.0); }
    /// True when P(x, y) does not depend on y.
    bool ignores_partner() const { return kind_ != Kind::BoundedConfidence; }
    std::string name() const;

private:
    InteractionKernel(Kind k, double p) : kind_(k), param_(p) {}
    Kind kind_;
    double param_;
};

/// Convex control cost Psi with Psi(0) = 0.
///
/// QuadraticQuartic (c^2/2 + c^4/4) exists to exercise the non-closed-form
/// code paths; every benchmark uses Quadratic.
class ControlPenalty {
public:
    enum class Kind { Quadratic, QuadraticQuartic };

    ControlPenalty() = default;
    explicit ControlPenalty(Kind k) : kind_(k) {}

    double value(double c) const;
    double gradient(double c) const;
    double curvature(double c) const;
    /// Solves gradient(c) = g by Newton's method. Throws NumericalError on failure.
    double invert_gradient(double g) const;

    Kind kind() const { return kind_; }
    bool is_quadratic() const { return kind_ == Kind::Quadratic; }

private:
    Kind kind_ = Kind::Quadratic;
};

/// Uniform cell-centred grid on [-L, L] with n cells.
struct Grid1D {
    double L = 1.0;
    int n = 0;

    Grid1D() = default;
    Grid1D(double half_width, int cells);
    static Grid1D from_config(const SimulationConfig& cfg);

    double dx() const { return 2.0 * L / n; }
    double center(int i) const { return -L + (i + 0.5) * dx(); }
    /// Interface k sits between cells k-1 and k; k = 0 and k = n are the walls.
    double interface(int k) const { return -L + k * dx(); }
    ArrayXd centers() const;
    /// Index of the cell containing x, clamped to [0, n-1].
    int cell_of(double x) const;

    bool operator==(const Grid1D& o) const { return L == o.L && n == o.n; }
};

/// Cell averages of a density at a sequence of instants.
struct DensityField {
    Grid1D grid;
    std::vector<double> times;
    std::vector<ArrayXd> slices;

    double mass(std::size_t k) const { return grid.dx() * slices.at(k).sum(); }
};

/// Control values f(x_i, t_m) for m = 0..M (M + 1 slices).
struct ControlField {
    Grid1D grid;
    double dt = 0.0;
    std::vector<ArrayXd> slices;

    static ControlField zeros(const Grid1D& grid, int steps, double dt);
    int steps() const { return static_cast<int>(slices.size()) - 1; }
    /// Linear interpolation between cell centres at slice m, constant beyond the outer centres.
    double at(double x, int m) const;
};

/// Initial data recipes. Every recipe is normalized to unit mass on the grid.
namespace initial {

/// Quadratic bump rho(y; a, b) evaluated at y = x + shift.
struct Bump {
    double shift;
    double a;
    double b;
};

/// Concave:  max{a - (y/b)^2, 0}, a bump of half-width b*sqrt(a).
/// Literal:  max{(y/b)^2 - a, 0}, increasing away from the centre.
enum class BumpForm { Concave, Literal };

struct SznajdBivariate {
    Bump first{0.75, 0.05, 0.5};
    Bump second{-0.5, 0.15, 1.0};
    BumpForm form = BumpForm::Concave;
};

/// Proportional to 0.5 + eps (1 - x^2).
struct HKPerturbedUniform {
    double eps = 0.01;
};

struct Uniform {};

/// Raw cell values, one per cell.
struct Custom {
    std::vector<double> values;
};

double bump(const Bump& b, BumpForm form, double x);

} // namespace initial

using InitialDataSpec =
    std::variant<initial::SznajdBivariate, initial::HKPerturbedUniform, initial::Uniform, initial::Custom>;

/// Evaluates the recipe at cell centres, clips negatives and rescales to unit mass.
/// Throws NumericalError("degenerate initial data") when nothing positive remains.
ArrayXd build_initial_density(const InitialDataSpec& spec, const Grid1D& grid);

/// P[mu](x) = sum_j P(x, x_j)(x_j - x) mu_j dx, midpoint quadrature over cells.
double mean_field_drift(const ArrayXd& mu, const Grid1D& grid, const InteractionKernel& kernel, double x);

/// mean_field_drift evaluated at every interior interface k = 1..n-1 (index k-1 in the result).
ArrayXd mean_field_drift_interfaces(const ArrayXd& mu, const Grid1D& grid, const InteractionKernel& kernel);

/// mean_field_drift evaluated at every cell centre.
ArrayXd mean_field_drift_centers(const ArrayXd& mu, const Grid1D& grid, const InteractionKernel& kernel);

struct CostBreakdown {
    double J = 0.0;
    double state_term = 0.0;    ///< int int 1/2 |x - x_d|^2 mu
    double control_term = 0.0;  ///< gamma int int Psi(f) mu
};

/// Left-endpoint rule in time over m = 0..M-1, midpoint rule in space.
CostBreakdown cost_functional(const DensityField& mu, const ControlField& f, const SimulationConfig& cfg,
                              const ControlPenalty& penalty = {});

/// Empirical cost of a recorded particle trajectory: positions[m] and controls[m] for m = 0..M-1.
CostBreakdown cost_from_particles(const std::vector<ArrayXd>& positions, const std::vector<ArrayXd>& controls,
                                  const SimulationConfig& cfg, const ControlPenalty& penalty = {});

/// Streaming form of cost_from_particles that also tracks per-agent path costs,
/// from which a standard error of J is estimated.
class ParticleCostAccumulator {
public:
    ParticleCostAccumulator(std::size_t agents, const SimulationConfig& cfg, ControlPenalty penalty = {});

    void add_state(const ArrayXd& positions);
    void add_control(const ArrayXd& controls);

    CostBreakdown total() const;
    /// Sample standard deviation of the per-agent path costs divided by sqrt(N).
    double standard_error() const;

private:
    double dt_;
    double x_d_;
    double gamma_;
    ControlPenalty penalty_;
    ArrayXd state_;
    ArrayXd control_;
};

} // namespace mfc
