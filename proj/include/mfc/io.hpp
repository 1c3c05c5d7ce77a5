#pragma once

/**
 * @file io.hpp
 * @brief Plot-ready text outputs. Every floating-point value has 17 significant digits.
 */

#include "mfc/adjoint.hpp"
#include "mfc/kinetic_mc.hpp"
#include "mfc/model.hpp"

#include <filesystem>

namespace mfc {

/// Rows (t, x_center, mu).
void write_density_csv(const std::filesystem::path& path, const DensityField& mu);
/// Rows (t, x_center, f) for every stride-th slice and the last one.
void write_control_csv(const std::filesystem::path& path, const ControlField& f, int stride = 1);
/// Rows (t, x_center, u): cell-binned mean of the controls applied to agents.
void write_applied_csv(const std::filesystem::path& path, const ControlSnapshots& u);
/// Rows (t, x_center, psi) for every stride-th slice and the last one.
void write_adjoint_csv(const std::filesystem::path& path, const AdjointField& psi, int stride = 1);
/// Rows (t, particle_index, x).
void write_ensemble_csv(const std::filesystem::path& path, const std::vector<double>& times,
                        const std::vector<ArrayXd>& particles);
/// {"J", "state_term", "control_term"}; the key set is fixed.
void write_cost_json(const std::filesystem::path& path, const CostBreakdown& c);

} // namespace mfc
