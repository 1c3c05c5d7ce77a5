#include "mfc/presets.hpp"

#include "mfc/error.hpp"

#include <algorithm>
#include <cmath>

namespace mfc {

std::vector<std::string> preset_names() { return {"sznajd", "hk"}; }

ControlSet default_controls(double gamma)
{
    // The one-agent linear-quadratic feedback gain is about 1/sqrt(gamma) and |x - x_d| <= 1.5.
    ControlSet c;
    c.u_max = std::clamp(std::ceil(1.5 / std::sqrt(gamma)), 2.0, 8.0);
    c.n_u = std::min(2 * static_cast<int>(std::lround(5.0 * c.u_max)) + 1, 41);
    return c;
}

Problem make_preset(const std::string& name, std::optional<double> gamma)
{
    Problem p;
    p.preset = name;
    SimulationConfig& c = p.cfg;
    c.dt = 2.5e-3;
    c.dx = 2.5e-2;
    c.L = 1.0;
    c.n_samples = 500000;
    c.m_samples = 10000;
    c.seed = 1;
    p.sweep.tol = 1e-5;

    if (name == "sznajd") {
        p.kernel = InteractionKernel::sznajd(-1.0);
        c.T = 8.0;
        c.sigma = 0.01;
        c.x_d = -0.5;
        c.gamma = gamma.value_or(0.5);
        p.initial = initial::SznajdBivariate{};
    } else if (name == "hk") {
        p.kernel = InteractionKernel::bounded_confidence(0.15);
        c.T = 20.0;
        c.sigma = 1e-5;
        c.x_d = 0.0;
        c.gamma = gamma.value_or(2.5);
        p.initial = initial::HKPerturbedUniform{0.01};
    } else {
        throw ConfigError("preset: unknown value '" + name + "' (expected sznajd or hk)");
    }
    p.controls = default_controls(c.gamma);
    p.snapshot_stride = 40;
    c.validate();
    return p;
}

} // namespace mfc
