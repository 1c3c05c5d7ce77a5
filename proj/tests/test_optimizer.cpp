#include "mfc/error.hpp"
#include "mfc/fokker_planck.hpp"
#include "mfc/optimizer.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>

using namespace mfc;

namespace {

SimulationConfig lq_config()
{
    SimulationConfig c;
    c.T = 1.0;
    c.dt = 0.005;
    c.dx = 0.025;
    c.sigma = 0.001;
    c.gamma = 0.5;
    c.x_d = 0.1;
    return c;
}

ControlField field_of(const Grid1D& g, int steps, double dt, double slope)
{
    ControlField f = ControlField::zeros(g, steps, dt);
    for (auto& s : f.slices) s = slope * g.centers();
    return f;
}

MethodResult fake(double J, double se)
{
    MethodResult r;
    r.cost.J = J;
    r.cost_stderr = se;
    return r;
}

} // namespace

TEST_CASE("blend and distance")
{
    const Grid1D g(1.0, 16);
    const ControlField a = field_of(g, 4, 0.25, 1.0);
    const ControlField b = field_of(g, 4, 0.25, -3.0);
    CHECK(blend(a, b, 0.0).slices[2].matrix() == a.slices[2].matrix());
    CHECK(blend(a, b, 1.0).slices[2].matrix() == b.slices[2].matrix());
    CHECK((blend(a, b, 0.25).slices[3] - (-0.0 * g.centers())).abs().maxCoeff() < 1e-15);
    CHECK(control_distance(a, a) == 0.0);
    // sqrt(sum_m sum_i (4 x_i)^2 dx dt) with 5 slices.
    const double expect = std::sqrt(5 * 0.25 * 16.0 * g.centers().square().sum() * g.dx());
    CHECK(control_distance(a, b) == doctest::Approx(expect).epsilon(1e-14));
    CHECK_THROWS_AS(blend(a, field_of(g, 3, 0.25, 0.0), 0.5), ConfigError);
    CHECK_THROWS_AS(control_distance(a, field_of(g, 3, 0.25, 0.0)), ConfigError);
}

TEST_CASE("control update is minus the adjoint gradient over gamma")
{
    SimulationConfig c;
    c.gamma = 2.0;
    const Grid1D g(1.0, 40);
    AdjointField psi;
    psi.grid = g;
    psi.dt = 0.1;
    psi.slices.assign(3, g.centers().square());
    const ControlField f = control_update(psi, c);
    REQUIRE(f.slices.size() == 3);
    for (int i = 1; i + 1 < g.n; ++i) CHECK(f.slices[1][i] == doctest::Approx(-g.center(i)).epsilon(1e-12));
}

TEST_CASE("sweep configuration checks")
{
    SweepConfig s;
    CHECK_NOTHROW(s.validate());
    s.tol = 0.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = {};
    s.relaxation = 1.5;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = {};
    s.max_iter = 0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("sweep matches the Riccati feedback without interaction")
{
    // P = 0 and quadratic costs: psi = p(t)/2 (x - x_d)^2 + r(t), p' = p^2/gamma - 1, p(T) = 0,
    // so p(t) = sqrt(gamma) tanh((T - t)/sqrt(gamma)) and f = -p (x - x_d)/gamma.
    const SimulationConfig c = lq_config();
    const Grid1D g = Grid1D::from_config(c);
    const ArrayXd mu0 = build_initial_density(initial::Uniform{}, g);
    SweepConfig sc;
    sc.tol = 1e-9;
    sc.max_iter = 200;
    std::vector<SweepIteration> seen;
    const SweepResult r = sweep(mu0, ControlField::zeros(g, c.steps(), c.dt), c, InteractionKernel::zero(), sc, {}, {},
                                [&](const SweepIteration& it) { seen.push_back(it); });
    REQUIRE(r.report.converged);
    CHECK(seen.size() == r.report.history.size());
    CHECK(r.report.history.back().residual <= sc.tol);
    const double sg = std::sqrt(c.gamma);
    for (int m : {0, c.steps() / 2}) {
        const double p = sg * std::tanh((c.T - c.time(m)) / sg);
        for (int i = 0; i < g.n; ++i) {
            const double x = g.center(i);
            if (std::abs(x) > 0.7) continue;
            CHECK(r.f.slices[m][i] == doctest::Approx(-p * (x - c.x_d) / c.gamma).epsilon(0.01).scale(1.0));
        }
    }
    // The controlled cost is below the uncontrolled one.
    const DensityField free = fp_solve(mu0, ControlField::zeros(g, c.steps(), c.dt), InteractionKernel::zero(), c);
    CHECK(r.cost.J < cost_functional(free, ControlField::zeros(g, c.steps(), c.dt), c).J);
}

TEST_CASE("sweep stops at the iteration cap or on a fixed point")
{
    SimulationConfig c = lq_config();
    c.T = 0.2;
    const Grid1D g = Grid1D::from_config(c);
    const ArrayXd mu0 = build_initial_density(initial::Uniform{}, g);
    SweepConfig sc;
    sc.max_iter = 1;
    sc.tol = 1e-14;
    const SweepResult capped = sweep(mu0, ControlField::zeros(g, c.steps(), c.dt), c, InteractionKernel::zero(), sc);
    CHECK_FALSE(capped.report.converged);
    CHECK(capped.report.iterations == 1);

    sc.max_iter = 50;
    sc.tol = 1e-9;
    const SweepResult done = sweep(mu0, ControlField::zeros(g, c.steps(), c.dt), c, InteractionKernel::zero(), sc);
    REQUIRE(done.report.converged);
    // Restarting from the fixed point returns at once.
    const SweepResult again = sweep(mu0, done.f, c, InteractionKernel::zero(), sc);
    CHECK(again.report.converged);
    CHECK(again.report.iterations == 1);
    CHECK(again.cost.J == doctest::Approx(done.cost.J).epsilon(1e-12));

    ControlField bad = ControlField::zeros(g, c.steps(), c.dt);
    bad.slices[0][0] = std::nan("");
    CHECK_THROWS_AS(sweep(mu0, bad, c, InteractionKernel::zero(), sc), ConfigError);
}

TEST_CASE("sweep with interaction lowers the cost and stays a density")
{
    SimulationConfig c = lq_config();
    c.T = 0.5;
    c.sigma = 0.01;
    c.x_d = -0.5;
    const Grid1D g = Grid1D::from_config(c);
    const ArrayXd mu0 = build_initial_density(initial::SznajdBivariate{}, g);
    SweepConfig sc;
    sc.max_iter = 100;
    const auto k = InteractionKernel::sznajd(-1.0);
    const SweepResult r = sweep(mu0, ControlField::zeros(g, c.steps(), c.dt), c, k, sc);
    CHECK(r.report.converged);
    CHECK(r.cost.J < r.report.history.front().cost.J + 1e-12);
    for (const ArrayXd& s : r.mu.slices) {
        CHECK(s.minCoeff() >= 0.0);
        CHECK(s.sum() * g.dx() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("iteration log line")
{
    SweepIteration it;
    it.iter = 3;
    it.cost = {0.5, 0.25, 0.25};
    it.increment_norm = 1e-3;
    const std::string line = to_json_line(it);
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("iter") == 3);
    CHECK(j.at("J") == 0.5);
    CHECK(j.contains("state_term"));
    CHECK(j.contains("control_term"));
    CHECK(j.at("increment_norm") == 1e-3);
}

TEST_CASE("method names and dispatch")
{
    for (Method m : {Method::Uncontrolled, Method::IC, Method::FH, Method::OC}) CHECK(method_from_string(to_string(m)) == m);
    CHECK_THROWS_AS(method_from_string("mpc"), ConfigError);

    Problem p;
    p.cfg = lq_config();
    p.cfg.T = 0.1;
    p.cfg.n_samples = 200;
    CHECK_THROWS_AS(evaluate_method(Method::FH, p), ConfigError);
    const MethodResult u = evaluate_method(Method::Uncontrolled, p);
    CHECK(u.cost_stderr == 0.0);
    REQUIRE(u.control);
    CHECK(u.control->slices[0].abs().maxCoeff() == 0.0);
    CHECK(u.cost.control_term == 0.0);
    const MethodResult ic = evaluate_method(Method::IC, p);
    CHECK(ic.applied.has_value());
    CHECK(ic.cost_stderr > 0.0);
}

TEST_CASE("ordering check uses two combined standard errors")
{
    CHECK(check_hierarchy(fake(0.4, 0), fake(0.5, 0.01), fake(0.6, 0.01)).holds());
    // 0.52 <= 0.5 + 2 hypot(0.01, 0.01) = 0.5283
    CHECK(check_hierarchy(fake(0.4, 0), fake(0.52, 0.01), fake(0.5, 0.01)).holds());
    const HierarchyCheck h = check_hierarchy(fake(0.4, 0), fake(0.54, 0.01), fake(0.5, 0.01));
    CHECK(h.oc_le_fh);
    CHECK_FALSE(h.fh_le_ic);
    CHECK_FALSE(check_hierarchy(fake(0.6, 0), fake(0.5, 0.01), fake(0.7, 0)).oc_le_fh);
}
