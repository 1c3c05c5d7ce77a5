#pragma once

#include "mfc/optimizer.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mfc {

/// Benchmark problems. Shared numerics: dt = eps = 2.5e-3, dx = 2.5e-2, N_s = 5e5, L = 1, tol = 1e-5.
///
/// sznajd  P = -(1 - x^2), T = 8, sigma = 0.01, x_d = -0.5, gamma = 0.5 unless given, bivariate initial data
/// hk      bounded confidence kappa = 0.15, T = 20, sigma = 1e-5, x_d = 0, gamma = 2.5, perturbed uniform data
Problem make_preset(const std::string& name, std::optional<double> gamma = std::nullopt);

std::vector<std::string> preset_names();

/// Control grid for the Bellman precompute, wide enough for the unconstrained optimum at this gamma.
ControlSet default_controls(double gamma);

} // namespace mfc
