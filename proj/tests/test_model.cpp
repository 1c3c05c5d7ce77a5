#include "mfc/error.hpp"
#include "mfc/model.hpp"

#include <doctest.h>

#include <cmath>

using namespace mfc;

namespace {

SimulationConfig unit_config()
{
    SimulationConfig c;
    c.T = 1.0;
    c.dt = 0.01;
    c.dx = 0.025;
    c.L = 1.0;
    c.gamma = 0.5;
    return c;
}

} // namespace

TEST_CASE("config validation names the offending key")
{
    SimulationConfig c = unit_config();
    CHECK_NOTHROW(c.validate());
    c.dt = 0.03;
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("T/dt must be an integer"), ConfigError);
    c = unit_config();
    c.gamma = 0.0;
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("gamma"), ConfigError);
    c = unit_config();
    c.sigma = -1.0;
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("sigma"), ConfigError);
    c = unit_config();
    c.dx = 0.3;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK(unit_config().steps() == 100);
    CHECK(unit_config().cells() == 80);
}

TEST_CASE("kernels")
{
    const auto sz = InteractionKernel::sznajd(-1.0);
    CHECK(sz(1.0, 0.3) == 0.0);
    CHECK(sz(-1.0, 0.3) == 0.0);
    CHECK(sz(0.0, 0.7) == doctest::Approx(-1.0));
    const auto hk = InteractionKernel::bounded_confidence(0.15);
    CHECK(hk(0.0, 0.2) == 0.0);
    CHECK(hk(0.0, 0.1) == 1.0);
    CHECK(hk(0.1, 0.0) == 1.0);
    CHECK(InteractionKernel::constant(2.0)(0.3, -0.9) == 2.0);
    CHECK(InteractionKernel::zero()(0.3, -0.9) == 0.0);
}

TEST_CASE("penalty and its inverse gradient")
{
    const ControlPenalty q;
    CHECK(q.value(2.0) == 2.0);
    CHECK(q.gradient(-3.0) == -3.0);
    CHECK(q.invert_gradient(0.7) == doctest::Approx(0.7));
    const ControlPenalty qq(ControlPenalty::Kind::QuadraticQuartic);
    for (double c : {-1.5, -0.2, 0.0, 0.4, 2.0}) {
        CHECK(qq.value(c) == doctest::Approx(c * c / 2 + c * c * c * c / 4));
        CHECK(qq.invert_gradient(qq.gradient(c)) == doctest::Approx(c).epsilon(1e-12));
    }
}

TEST_CASE("grid geometry")
{
    const Grid1D g(1.0, 80);
    CHECK(g.dx() == doctest::Approx(0.025));
    CHECK(g.center(0) == doctest::Approx(-0.9875));
    CHECK(g.interface(80) == doctest::Approx(1.0));
    CHECK(g.cell_of(-1.0) == 0);
    CHECK(g.cell_of(1.0) == 79);
    CHECK(g.cell_of(0.0) == 40);
}

TEST_CASE("uniform initial data is one half everywhere")
{
    const Grid1D g(1.0, 80);
    const ArrayXd mu = build_initial_density(initial::Uniform{}, g);
    CHECK((mu - 0.5).abs().maxCoeff() < 1e-14);
}

TEST_CASE("bivariate initial data has two disjoint unit-mass bumps")
{
    const Grid1D g(1.0, 80);
    const ArrayXd mu = build_initial_density(initial::SznajdBivariate{}, g);
    CHECK(mu.sum() * g.dx() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK((mu >= 0.0).all());
    // Concave bump max{a - (y/b)^2, 0}: support |x + shift| <= b sqrt(a).
    const double r1 = 0.5 * std::sqrt(0.05);
    const double r2 = 1.0 * std::sqrt(0.15);
    double left = 0.0, right = 0.0, first_moment_left = 0.0;
    for (int i = 0; i < g.n; ++i) {
        const double x = g.center(i);
        if (mu[i] == 0.0) continue;
        const bool in_left = std::abs(x + 0.75) <= r1 + g.dx();
        const bool in_right = std::abs(x - 0.5) <= r2 + g.dx();
        CHECK((in_left || in_right));
        if (in_left) {
            left += mu[i] * g.dx();
            first_moment_left += x * mu[i] * g.dx();
        } else {
            right += mu[i] * g.dx();
        }
    }
    CHECK(left > 0.0);
    CHECK(right > 0.0);
    CHECK(first_moment_left / left == doctest::Approx(-0.75).epsilon(1e-3));
    // Ratio of bump masses: integral of (a - y^2/b^2) over its support is (4/3) a^{3/2} b.
    const double m1 = 4.0 / 3.0 * std::pow(0.05, 1.5) * 0.5;
    const double m2 = 4.0 / 3.0 * std::pow(0.15, 1.5) * 1.0;
    CHECK(left == doctest::Approx(m1 / (m1 + m2)).epsilon(0.03));
}

TEST_CASE("perturbed uniform initial data")
{
    const Grid1D g(1.0, 80);
    const ArrayXd mu = build_initial_density(initial::HKPerturbedUniform{0.01}, g);
    CHECK(mu.sum() * g.dx() == doctest::Approx(1.0));
    // Peak at the centre, symmetric.
    for (int i = 0; i < g.n / 2; ++i) CHECK(mu[i] == doctest::Approx(mu[g.n - 1 - i]).epsilon(1e-14));
    CHECK(mu[40] > mu[0]);
}

TEST_CASE("degenerate initial data")
{
    const Grid1D g(1.0, 4);
    CHECK_THROWS_WITH_AS(build_initial_density(initial::Custom{{0.0, -1.0, 0.0, 0.0}}, g),
                         "degenerate initial data", NumericalError);
    CHECK_THROWS_AS(build_initial_density(initial::Custom{{1.0, 1.0}}, g), ConfigError);
}

TEST_CASE("mean-field drift against closed-form integrals")
{
    const Grid1D g(1.0, 80);
    SUBCASE("symmetric density, constant kernel, centre")
    {
        const ArrayXd mu = build_initial_density(initial::Uniform{}, g);
        CHECK(std::abs(mean_field_drift(mu, g, InteractionKernel::constant(1.0), 0.0)) < 1e-14);
    }
    SUBCASE("constant kernel gives mean minus x")
    {
        ArrayXd mu(g.n);
        for (int i = 0; i < g.n; ++i) mu[i] = 1.0 + 0.8 * std::sin(3.0 * g.center(i)) + g.center(i);
        mu /= mu.sum() * g.dx();
        double mean = 0.0;
        for (int i = 0; i < g.n; ++i) mean += g.center(i) * mu[i] * g.dx();
        for (double x : {-0.9, -0.3, 0.0, 0.55}) {
            CHECK(mean_field_drift(mu, g, InteractionKernel::constant(1.0), x) == doctest::Approx(mean - x).epsilon(1e-12));
        }
    }
    SUBCASE("sznajd kernel vanishes at the walls")
    {
        const ArrayXd mu = build_initial_density(initial::SznajdBivariate{}, g);
        CHECK(mean_field_drift(mu, g, InteractionKernel::sznajd(-1.0), 1.0) == 0.0);
        CHECK(mean_field_drift(mu, g, InteractionKernel::sznajd(-1.0), -1.0) == 0.0);
    }
    SUBCASE("interface and centre variants agree with the pointwise form")
    {
        const ArrayXd mu = build_initial_density(initial::HKPerturbedUniform{0.01}, g);
        const auto k = InteractionKernel::bounded_confidence(0.15);
        const ArrayXd fi = mean_field_drift_interfaces(mu, g, k);
        const ArrayXd fc = mean_field_drift_centers(mu, g, k);
        REQUIRE(fi.size() == g.n - 1);
        for (int i = 1; i < g.n; ++i) CHECK(fi[i - 1] == doctest::Approx(mean_field_drift(mu, g, k, g.interface(i))));
        for (int i = 0; i < g.n; ++i) CHECK(fc[i] == doctest::Approx(mean_field_drift(mu, g, k, g.center(i))));
    }
}

TEST_CASE("cost functional")
{
    SimulationConfig c = unit_config();
    const Grid1D g = Grid1D::from_config(c);
    DensityField mu;
    mu.grid = g;
    for (int m = 0; m <= c.steps(); ++m) {
        mu.times.push_back(c.time(m));
        mu.slices.push_back(ArrayXd::Constant(g.n, 0.5));
    }
    SUBCASE("uniform density, zero control: int_0^1 int 1/2 x^2 (1/2) dx dt = 1/6")
    {
        const auto cost = cost_functional(mu, ControlField::zeros(g, c.steps(), c.dt), c);
        CHECK(cost.control_term == 0.0);
        // Midpoint rule error is -(dx^2/24) * int x^2/2 * ... : O(dx^2).
        CHECK(cost.J == doctest::Approx(1.0 / 6.0).epsilon(1e-3));
    }
    SUBCASE("constant control gives gamma c^2/2 T")
    {
        ControlField f = ControlField::zeros(g, c.steps(), c.dt);
        for (auto& s : f.slices) s.setConstant(0.8);
        const auto cost = cost_functional(mu, f, c);
        CHECK(cost.control_term == doctest::Approx(c.gamma * 0.32 * c.T).epsilon(1e-12));
        CHECK(cost.J == doctest::Approx(cost.state_term + cost.control_term));
    }
    SUBCASE("mass in the cell of x_d")
    {
        c.x_d = g.center(30);
        for (auto& s : mu.slices) {
            s.setZero();
            s[30] = 1.0 / g.dx();
        }
        const auto cost = cost_functional(mu, ControlField::zeros(g, c.steps(), c.dt), c);
        CHECK(cost.J <= 0.5 * std::pow(g.dx() / 2, 2) * c.T);
    }
}

TEST_CASE("particle cost")
{
    SimulationConfig c = unit_config();
    c.x_d = 0.0;
    SUBCASE("particles at x_d with no control")
    {
        std::vector<ArrayXd> x(c.steps(), ArrayXd::Zero(10)), u(c.steps(), ArrayXd::Zero(10));
        CHECK(cost_from_particles(x, u, c).J == 0.0);
    }
    SUBCASE("single particle, single step")
    {
        c.T = c.dt;
        std::vector<ArrayXd> x{ArrayXd::Constant(1, 1.0)}, u{ArrayXd::Zero(1)};
        CHECK(cost_from_particles(x, u, c).J == doctest::Approx(c.dt / 2));
    }
    SUBCASE("frozen ensemble matches the histogram cost within sampling error")
    {
        const Grid1D g = Grid1D::from_config(c);
        const int n = 20000;
        ArrayXd pos(n);
        for (int k = 0; k < n; ++k) pos[k] = -1.0 + 2.0 * (k + 0.5) / n;  // stratified uniform
        std::vector<ArrayXd> xs(c.steps(), pos), us(c.steps(), ArrayXd::Constant(n, 0.3));
        const auto pc = cost_from_particles(xs, us, c);
        DensityField mu;
        mu.grid = g;
        for (int m = 0; m <= c.steps(); ++m) {
            mu.times.push_back(c.time(m));
            ArrayXd h = ArrayXd::Zero(g.n);
            for (int k = 0; k < n; ++k) h[g.cell_of(pos[k])] += 1.0 / (n * g.dx());
            mu.slices.push_back(h);
        }
        ControlField f = ControlField::zeros(g, c.steps(), c.dt);
        for (auto& s : f.slices) s.setConstant(0.3);
        const auto dc = cost_functional(mu, f, c);
        CHECK(std::abs(pc.J - dc.J) < 3.0 / std::sqrt(double(n)));
        ParticleCostAccumulator acc(n, c);
        for (int m = 0; m < c.steps(); ++m) {
            acc.add_state(pos);
            acc.add_control(us[m]);
        }
        CHECK(acc.total().J == doctest::Approx(pc.J).epsilon(1e-12));
        CHECK(acc.standard_error() > 0.0);
    }
}

TEST_CASE("control field interpolation")
{
    const Grid1D g(1.0, 4);
    ControlField f = ControlField::zeros(g, 2, 0.5);
    f.slices[1] << 0.0, 1.0, 2.0, 3.0;
    CHECK(f.at(g.center(2), 1) == 2.0);
    CHECK(f.at(0.5 * (g.center(1) + g.center(2)), 1) == doctest::Approx(1.5));
    CHECK(f.at(-1.0, 1) == 0.0);
    CHECK(f.at(1.0, 1) == 3.0);
}
