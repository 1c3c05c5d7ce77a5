#include "mfc/model.hpp"

#include "mfc/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mfc {

namespace {

bool is_whole(double ratio)
{
    return std::abs(ratio - std::round(ratio)) <= 1e-9 * std::max(1.0, std::abs(ratio));
}

} // namespace

void SimulationConfig::validate() const
{
    auto fail = [](const std::string& key, const std::string& what) { throw ConfigError(key + ": " + what); };
    if (!std::isfinite(sigma) || sigma < 0.0) fail("sigma", "must be finite and >= 0");
    if (!std::isfinite(gamma) || gamma <= 0.0) fail("gamma", "must be > 0");
    if (!std::isfinite(x_d)) fail("x_d", "must be finite");
    if (!std::isfinite(T) || T <= 0.0) fail("T", "must be > 0");
    if (!std::isfinite(dt) || dt <= 0.0) fail("dt", "must be > 0");
    if (!std::isfinite(L) || L <= 0.0) fail("L", "must be > 0");
    if (!std::isfinite(dx) || dx <= 0.0) fail("dx", "must be > 0");
    if (!is_whole(T / dt)) fail("dt", "T/dt must be an integer");
    if (!is_whole(2.0 * L / dx)) fail("dx", "2L/dx must be an integer");
    if (n_samples < 2) fail("n_samples", "must be >= 2");
    if (m_samples < 1) fail("m_samples", "must be >= 1");
}

int SimulationConfig::steps() const { return static_cast<int>(std::lround(T / dt)); }
int SimulationConfig::cells() const { return static_cast<int>(std::lround(2.0 * L / dx)); }

InteractionKernel InteractionKernel::sznajd(double beta) { return {Kind::Sznajd, beta}; }

InteractionKernel InteractionKernel::bounded_confidence(double kappa)
{
    if (!(kappa > 0.0)) throw ConfigError("kappa: must be > 0");
    return {Kind::BoundedConfidence, kappa};
}

InteractionKernel InteractionKernel::constant(double c) { return {Kind::Constant, c}; }
InteractionKernel InteractionKernel::zero() { return {Kind::Zero, 0.0}; }

std::string InteractionKernel::name() const
{
    std::ostringstream os;
    switch (kind_) {
    case Kind::Sznajd: os << "sznajd(beta=" << param_ << ")"; break;
    case Kind::BoundedConfidence: os << "bounded_confidence(kappa=" << param_ << ")"; break;
    case Kind::Constant: os << "constant(" << param_ << ")"; break;
    case Kind::Zero: os << "zero"; break;
    }
    return os.str();
}

double ControlPenalty::value(double c) const
{
    const double q = 0.5 * c * c;
    return kind_ == Kind::Quadratic ? q : q + 0.25 * c * c * c * c;
}

double ControlPenalty::gradient(double c) const
{
    return kind_ == Kind::Quadratic ? c : c + c * c * c;
}

double ControlPenalty::curvature(double c) const
{
    return kind_ == Kind::Quadratic ? 1.0 : 1.0 + 3.0 * c * c;
}

double ControlPenalty::invert_gradient(double g) const
{
    if (kind_ == Kind::Quadratic) return g;
    double c = std::abs(g) > 1.0 ? std::cbrt(g) : g;
    for (int it = 0; it < 50; ++it) {
        const double r = gradient(c) - g;
        if (std::abs(r) <= 1e-14 * std::max(1.0, std::abs(g))) return c;
        c -= r / curvature(c);
    }
    throw NumericalError("penalty gradient inversion did not converge for g = " + std::to_string(g));
}

Grid1D::Grid1D(double half_width, int cells) : L(half_width), n(cells)
{
    if (!(half_width > 0.0) || cells < 1) throw ConfigError("grid: need L > 0 and at least one cell");
}

Grid1D Grid1D::from_config(const SimulationConfig& cfg) { return Grid1D(cfg.L, cfg.cells()); }

ArrayXd Grid1D::centers() const
{
    ArrayXd c(n);
    for (int i = 0; i < n; ++i) c[i] = center(i);
    return c;
}

int Grid1D::cell_of(double x) const
{
    const int i = static_cast<int>(std::floor((x + L) / dx()));
    return std::clamp(i, 0, n - 1);
}

ControlField ControlField::zeros(const Grid1D& grid, int steps, double dt)
{
    ControlField f;
    f.grid = grid;
    f.dt = dt;
    f.slices.assign(steps + 1, ArrayXd::Zero(grid.n));
    return f;
}

double ControlField::at(double x, int m) const
{
    const ArrayXd& s = slices.at(m);
    const double h = grid.dx();
    const double pos = (x + grid.L) / h - 0.5;
    if (pos <= 0.0) return s[0];
    if (pos >= grid.n - 1) return s[grid.n - 1];
    const int i = static_cast<int>(pos);
    const double w = pos - i;
    return (1.0 - w) * s[i] + w * s[i + 1];
}

namespace initial {

double bump(const Bump& b, BumpForm form, double x)
{
    const double y = (x + b.shift) / b.b;
    return form == BumpForm::Concave ? std::max(b.a - y * y, 0.0) : std::max(y * y - b.a, 0.0);
}

} // namespace initial

ArrayXd build_initial_density(const InitialDataSpec& spec, const Grid1D& grid)
{
    ArrayXd mu(grid.n);
    const ArrayXd x = grid.centers();
    std::visit(
        [&](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, initial::SznajdBivariate>) {
                for (int i = 0; i < grid.n; ++i)
                    mu[i] = initial::bump(s.first, s.form, x[i]) + initial::bump(s.second, s.form, x[i]);
            } else if constexpr (std::is_same_v<S, initial::HKPerturbedUniform>) {
                mu = 0.5 + s.eps * (1.0 - x.square());
            } else if constexpr (std::is_same_v<S, initial::Uniform>) {
                mu.setOnes();
            } else {
                if (static_cast<int>(s.values.size()) != grid.n)
                    throw ConfigError("initial data: custom table has " + std::to_string(s.values.size()) +
                                      " values, grid has " + std::to_string(grid.n) + " cells");
                mu = Eigen::Map<const ArrayXd>(s.values.data(), grid.n);
            }
        },
        spec);
    mu = mu.unaryExpr([](double v) { return std::isfinite(v) ? std::max(v, 0.0) : 0.0; });
    const double mass = grid.dx() * mu.sum();
    if (!(mass > 0.0)) throw NumericalError("degenerate initial data");
    return mu / mass;
}

double mean_field_drift(const ArrayXd& mu, const Grid1D& grid, const InteractionKernel& kernel, double x)
{
    if (kernel.is_zero()) return 0.0;
    double acc = 0.0;
    for (int j = 0; j < grid.n; ++j) {
        if (mu[j] == 0.0) continue;
        const double y = grid.center(j);
        acc += kernel(x, y) * (y - x) * mu[j];
    }
    return acc * grid.dx();
}

ArrayXd mean_field_drift_interfaces(const ArrayXd& mu, const Grid1D& grid, const InteractionKernel& kernel)
{
    ArrayXd out(std::max(grid.n - 1, 0));
    for (int k = 1; k < grid.n; ++k) out[k - 1] = mean_field_drift(mu, grid, kernel, grid.interface(k));
    return out;
}

ArrayXd mean_field_drift_centers(const ArrayXd& mu, const Grid1D& grid, const InteractionKernel& kernel)
{
    ArrayXd out(grid.n);
    for (int i = 0; i < grid.n; ++i) out[i] = mean_field_drift(mu, grid, kernel, grid.center(i));
    return out;
}

CostBreakdown cost_functional(const DensityField& mu, const ControlField& f, const SimulationConfig& cfg,
                              const ControlPenalty& penalty)
{
    const int M = cfg.steps();
    if (!(mu.grid == f.grid)) throw ConfigError("cost: density and control live on different grids");
    if (static_cast<int>(mu.slices.size()) < M || static_cast<int>(f.slices.size()) < M)
        throw ConfigError("cost: need " + std::to_string(M) + " density and control slices, got " +
                          std::to_string(mu.slices.size()) + " and " + std::to_string(f.slices.size()));
    if (mu.grid.n != cfg.cells()) throw ConfigError("cost: grid does not match dx");

    const ArrayXd track = 0.5 * (mu.grid.centers() - cfg.x_d).square();
    const double w = cfg.dt * mu.grid.dx();
    CostBreakdown c;
    for (int m = 0; m < M; ++m) {
        const ArrayXd& density = mu.slices[m];
        if (density.size() != mu.grid.n || f.slices[m].size() != mu.grid.n)
            throw ConfigError("cost: slice " + std::to_string(m) + " has the wrong length");
        c.state_term += w * (track * density).sum();
        const ArrayXd psi = f.slices[m].unaryExpr([&](double v) { return penalty.value(v); });
        c.control_term += w * cfg.gamma * (psi * density).sum();
    }
    c.J = c.state_term + c.control_term;
    return c;
}

CostBreakdown cost_from_particles(const std::vector<ArrayXd>& positions, const std::vector<ArrayXd>& controls,
                                  const SimulationConfig& cfg, const ControlPenalty& penalty)
{
    if (positions.size() != controls.size())
        throw ConfigError("cost: " + std::to_string(positions.size()) + " position records vs " +
                          std::to_string(controls.size()) + " control records");
    if (positions.empty()) return {};
    ParticleCostAccumulator acc(positions.front().size(), cfg, penalty);
    for (std::size_t m = 0; m < positions.size(); ++m) {
        if (positions[m].size() != positions.front().size() || controls[m].size() != positions[m].size())
            throw ConfigError("cost: record " + std::to_string(m) + " has a mismatched length");
        acc.add_state(positions[m]);
        acc.add_control(controls[m]);
    }
    return acc.total();
}

ParticleCostAccumulator::ParticleCostAccumulator(std::size_t agents, const SimulationConfig& cfg,
                                                 ControlPenalty penalty)
    : dt_(cfg.dt), x_d_(cfg.x_d), gamma_(cfg.gamma), penalty_(penalty),
      state_(ArrayXd::Zero(static_cast<Eigen::Index>(agents))),
      control_(ArrayXd::Zero(static_cast<Eigen::Index>(agents)))
{
}

void ParticleCostAccumulator::add_state(const ArrayXd& positions)
{
    state_ += dt_ * 0.5 * (positions - x_d_).square();
}

void ParticleCostAccumulator::add_control(const ArrayXd& controls)
{
    if (penalty_.is_quadratic())
        control_ += dt_ * gamma_ * 0.5 * controls.square();
    else
        control_ += dt_ * gamma_ * controls.unaryExpr([this](double u) { return penalty_.value(u); });
}

CostBreakdown ParticleCostAccumulator::total() const
{
    CostBreakdown c;
    if (state_.size() == 0) return c;
    c.state_term = state_.mean();
    c.control_term = control_.mean();
    c.J = c.state_term + c.control_term;
    return c;
}

double ParticleCostAccumulator::standard_error() const
{
    const auto n = state_.size();
    if (n < 2) return 0.0;
    const ArrayXd path = state_ + control_;
    const double mean = path.mean();
    const double var = (path - mean).square().sum() / static_cast<double>(n - 1);
    return std::sqrt(var / static_cast<double>(n));
}

} // namespace mfc
