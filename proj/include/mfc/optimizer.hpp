#pragma once

/**
 * @file optimizer.hpp
 * @brief Mean field optimal control by forward-backward sweeping, and the
 *        dispatcher that evaluates every controller on a problem.
 */

#include "mfc/adjoint.hpp"
#include "mfc/binary_control.hpp"
#include "mfc/kinetic_mc.hpp"
#include "mfc/model.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace mfc {

struct SweepConfig {
    double tol = 1e-5;
    int max_iter = 500;
    double relaxation = 1.0;       ///< largest step omega in f <- f + omega (update - f)
    bool backtrack = true;         ///< halve omega on a failed solve or an increase of J
    double min_relaxation = 1e-6;  ///< smallest omega tried before giving up

    void validate() const;
};

struct SweepIteration {
    int iter = 0;
    CostBreakdown cost;         ///< cost of the iterate after this iteration
    double increment_norm = 0;  ///< ||f_{i+1} - f_i||
    double residual = 0;        ///< ||update(f_i) - f_i||, the undamped fixed-point residual
    double relaxation = 1;      ///< omega actually used
};

struct SweepReport {
    int iterations = 0;
    std::vector<SweepIteration> history;
    double final_increment = 0.0;
    bool converged = false;
};

/// Pointwise solution of gamma Psi'(f) = -psi_x, with psi_x from `gradient`.
ControlField control_update(const AdjointField& psi, const SimulationConfig& cfg, const ControlPenalty& penalty = {});

/// (1 - omega) f_old + omega f_update.
ControlField blend(const ControlField& f_old, const ControlField& f_update, double omega);

/// Discrete L2 norm of a - b over all slices with weight dx dt.
double control_distance(const ControlField& a, const ControlField& b);

struct SweepResult {
    DensityField mu;
    ControlField f;
    AdjointField psi;
    CostBreakdown cost;
    SweepReport report;
};

using SweepObserver = std::function<void(const SweepIteration&)>;

/// Repeats {forward solve, backward solve, control update} until the
/// undamped residual is at most tol. Non-convergence is reported, not thrown.
SweepResult sweep(const ArrayXd& mu0, const ControlField& f0, const SimulationConfig& cfg,
                  const InteractionKernel& kernel, const SweepConfig& sc, const AdjointOptions& adjoint = {},
                  const ControlPenalty& penalty = {}, const SweepObserver& observer = {});

/// One JSON object per line: {"iter", "J", "state_term", "control_term", "increment_norm"}.
std::string to_json_line(const SweepIteration& it);

enum class Method { Uncontrolled, IC, FH, OC };
std::string to_string(Method m);
Method method_from_string(const std::string& s);

/// Everything needed to run any method on one benchmark.
struct Problem {
    std::string preset;
    SimulationConfig cfg;
    InteractionKernel kernel = InteractionKernel::zero();
    InitialDataSpec initial = initial::Uniform{};
    ControlPenalty penalty{};
    ICMode ic_mode{};
    ControlSet controls{};
    int hjb_time_stride = 1;
    SweepConfig sweep{};
    AdjointOptions adjoint{};
    BoundaryPolicy boundary = BoundaryPolicy::Reflect;
    int threads = 1;
    int snapshot_stride = 1;
};

struct MethodResult {
    Method method = Method::Uncontrolled;
    DensityField density;
    std::optional<ControlField> control;       ///< grid methods
    std::optional<ControlSnapshots> applied;   ///< particle methods
    CostBreakdown cost;
    double cost_stderr = 0.0;                  ///< 0 for deterministic methods
    std::optional<SweepReport> report;
};

/// Uncontrolled: Fokker-Planck with f = 0. IC, FH: Monte Carlo with the binary controller.
/// OC: sweeping. FH needs a feedback table; without one a ConfigError asks for the hjb precompute.
MethodResult evaluate_method(Method method, const Problem& problem,
                             std::shared_ptr<const FeedbackTable> table = nullptr,
                             const SweepObserver& observer = {});

/// J_OC <= J_FH <= J_IC, each comparison relaxed by two combined standard errors.
struct HierarchyCheck {
    bool oc_le_fh = false;
    bool fh_le_ic = false;
    bool holds() const { return oc_le_fh && fh_le_ic; }
};
HierarchyCheck check_hierarchy(const MethodResult& oc, const MethodResult& fh, const MethodResult& ic);

} // namespace mfc
