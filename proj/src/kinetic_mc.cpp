#include "mfc/kinetic_mc.hpp"

#include "mfc/error.hpp"
#include "mfc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <type_traits>

namespace mfc {

double reflect_into(double x, double L)
{
    if (!std::isfinite(x)) throw NumericalError("reflect_into: non-finite position");
    for (int k = 0; k < 64 && (x > L || x < -L); ++k) x = x > L ? 2.0 * L - x : -2.0 * L - x;
    if (x > L || x < -L) {
        double y = std::fmod(x + L, 4.0 * L);
        if (y < 0.0) y += 4.0 * L;
        if (y > 2.0 * L) y = 4.0 * L - y;
        x = std::clamp(y - L, -L, L);
    }
    return x;
}

std::pair<double, double> evaluate_controller(const BinaryController& c, double x, double y, int m,
                                              const SimulationConfig& cfg, const InteractionKernel& kernel)
{
    struct Visitor {
        double x, y;
        int m;
        const SimulationConfig& cfg;
        const InteractionKernel& kernel;

        std::pair<double, double> operator()(const NoControl&) const { return {0.0, 0.0}; }
        std::pair<double, double> operator()(const InstantaneousController& ic) const
        {
            const double t = cfg.time(m);
            return {instantaneous_control(x, y, t, cfg, kernel, ic.mode),
                    instantaneous_control(y, x, t, cfg, kernel, ic.mode)};
        }
        std::pair<double, double> operator()(const FiniteHorizonController& fh) const
        {
            const int s = fh.table->slice_for_step(m, cfg.dt);
            return {fh.table->lookup_slice(x, y, s), fh.table->lookup_slice(y, x, s)};
        }
        std::pair<double, double> operator()(const ExternalController& ex) const
        {
            return {ex.field.at(x, m), ex.field.at(y, m)};
        }
    };
    return std::visit(Visitor{x, y, m, cfg, kernel}, c);
}

McOptions McOptions::for_config(const SimulationConfig& cfg)
{
    McOptions o;
    o.params = ScalingParams::quasi_invariant(cfg.dt);
    return o;
}

namespace {

// Rao-Sandelius shuffle: scatter into random buckets, then Fisher-Yates inside each.
// Uniform like a plain Fisher-Yates but every pass stays cache resident.
void random_permutation(std::uint64_t n, std::uint64_t seed, std::uint64_t step, std::vector<std::uint32_t>& order)
{
    constexpr int kBits = 9;
    constexpr std::uint64_t kBuckets = 1u << kBits;
    CounterRng rng(seed, CounterRng::Permute, step);
    static thread_local std::vector<std::uint16_t> bucket;
    bucket.resize(n);
    std::vector<std::uint64_t> start(kBuckets + 1, 0);
    for (std::uint64_t k = 0; k < n; k += 7) {
        std::uint64_t r = rng.next_u64();
        for (std::uint64_t q = k; q < std::min(n, k + 7); ++q, r >>= kBits) {
            bucket[q] = static_cast<std::uint16_t>(r & (kBuckets - 1));
            ++start[bucket[q] + 1];
        }
    }
    for (std::uint64_t b = 0; b < kBuckets; ++b) start[b + 1] += start[b];
    order.resize(n);
    std::vector<std::uint64_t> cursor(start.begin(), start.end() - 1);
    for (std::uint64_t k = 0; k < n; ++k) order[cursor[bucket[k]]++] = static_cast<std::uint32_t>(k);
    for (std::uint64_t b = 0; b < kBuckets; ++b) {
        std::uint32_t* base = order.data() + start[b];
        for (std::uint64_t k = start[b + 1] - start[b]; k > 1; --k) std::swap(base[k - 1], base[rng.below(k)]);
    }
}

inline double reflect_fast(double x, double L) { return x <= L && x >= -L ? x : reflect_into(x, L); }

void check_controller(const BinaryController& c, const SimulationConfig& cfg)
{
    if (const auto* fh = std::get_if<FiniteHorizonController>(&c)) {
        if (!fh->table || fh->table->slices.empty()) throw ConfigError("table: feedback table is empty");
        const double horizon = fh->table->dt * fh->table->steps();
        if (std::abs(horizon - cfg.T) > 1e-9 * cfg.T)
            throw ConfigError("table: horizon " + std::to_string(horizon) + " does not match T = " +
                              std::to_string(cfg.T));
        if (fh->table->grid.L != cfg.L) throw ConfigError("table: domain half-width does not match L");
    }
    if (const auto* ex = std::get_if<ExternalController>(&c)) {
        if (ex->field.steps() != cfg.steps() || !(ex->field.grid == Grid1D::from_config(cfg)))
            throw ConfigError("control: external control field does not match the simulation mesh");
    }
}

} // namespace

StepRecord mc_step(Ensemble& ens, const BinaryController& controller, const SimulationConfig& cfg,
                   const InteractionKernel& kernel, const McOptions& options)
{
    const auto n = static_cast<std::uint64_t>(ens.x.size());
    if (n < 2) throw ConfigError("n_samples: at least two agents are required");
    if (cfg.dt > options.params.eps * (1.0 + 1e-12)) throw ConfigError("dt: must not exceed eps");

    const std::uint64_t seed = cfg.seed;
    const auto step = static_cast<std::uint64_t>(ens.step);

    CounterRng round_rng(seed, CounterRng::Round, step);
    const double target = static_cast<double>(n) * cfg.dt / (2.0 * options.params.eps);
    const std::int64_t nc = std::min<std::int64_t>(iround(target, round_rng), static_cast<std::int64_t>(n / 2));

    // Scratch buffers are reused across steps to avoid page-faulting fresh memory.
    // Worker threads must see the caller's buffers, so bind plain references.
    static thread_local std::vector<std::uint32_t> order_buf;
    static thread_local std::vector<double> pos_buf;
    static thread_local std::vector<double> ctl_buf;
    std::vector<std::uint32_t>& order = order_buf;
    std::vector<double>& pos = pos_buf;
    std::vector<double>& ctl = ctl_buf;
    random_permutation(n, seed, step, order);

    StepRecord rec;
    rec.applied = ArrayXd::Zero(static_cast<Eigen::Index>(n));
    rec.collisions = nc;

    const double L = cfg.L;
    const double noise = std::sqrt(cfg.sigma);
    const double spread = std::sqrt(2.0 * options.params.alpha);
    const int m = ens.step;
    double* x = ens.x.data();
    double* applied = rec.applied.data();

    // Gather, update contiguously, scatter: keeps the random accesses in tight loops.
    const auto pairs = static_cast<std::size_t>(nc);
    pos.resize(2 * pairs);
    ctl.resize(2 * pairs);
    for (std::size_t k = 0; k < 2 * pairs; ++k) pos[k] = x[order[k]];

    const std::uint64_t pair_key = CounterRng::key(seed, CounterRng::Pair, step);
    auto run = [&](const auto& ctrl) {
        parallel_for(static_cast<int>(nc), options.threads, [&](int begin, int end) {
            for (int p = begin; p < end; ++p) {
                const auto k = 2 * static_cast<std::size_t>(p);
                const double xi0 = pos[k];
                const double xj0 = pos[k + 1];
                const auto [ui, uj] = ctrl(xi0, xj0);
                CounterRng rng = CounterRng::from_key(pair_key, static_cast<std::uint64_t>(p));
                double xi = 0.0;
                double zeta = 0.0;
                if (noise > 0.0) {
                    const auto g = rng.normal_pair();
                    xi = noise * g.first;
                    zeta = noise * g.second;
                }
                auto [a, b] = binary_interact(xi0, xj0, ui, uj, kernel, options.params, xi, zeta);
                if (options.boundary == BoundaryPolicy::ResampleNoise && noise > 0.0) {
                    const double da = a - spread * xi;
                    const double db = b - spread * zeta;
                    for (int tries = 0; tries < 1000 && (a > L || a < -L || b > L || b < -L); ++tries) {
                        const auto g = rng.normal_pair();
                        if (a > L || a < -L) a = da + spread * noise * g.first;
                        if (b > L || b < -L) b = db + spread * noise * g.second;
                    }
                }
                pos[k] = reflect_fast(a, L);
                pos[k + 1] = reflect_fast(b, L);
                ctl[k] = ui;
                ctl[k + 1] = uj;
            }
        });
    };
    std::visit(
        [&](const auto& c) {
            using C = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<C, NoControl>) {
                run([](double, double) { return std::pair<double, double>{0.0, 0.0}; });
            } else if constexpr (std::is_same_v<C, InstantaneousController>) {
                const double t = cfg.time(m);
                run([&](double xa, double xb) {
                    return std::pair<double, double>{instantaneous_control(xa, xb, t, cfg, kernel, c.mode),
                                                     instantaneous_control(xb, xa, t, cfg, kernel, c.mode)};
                });
            } else if constexpr (std::is_same_v<C, FiniteHorizonController>) {
                const int sl = c.table->slice_for_step(m, cfg.dt);
                run([&](double xa, double xb) {
                    return std::pair<double, double>{c.table->lookup_slice(xa, xb, sl), c.table->lookup_slice(xb, xa, sl)};
                });
            } else {
                run([&](double xa, double xb) { return std::pair<double, double>{c.field.at(xa, m), c.field.at(xb, m)}; });
            }
        },
        controller);

    for (std::size_t k = 0; k < 2 * pairs; ++k) {
        x[order[k]] = pos[k];
        applied[order[k]] = ctl[k];
    }
    ++ens.step;
    return rec;
}

ArrayXd sample_from_density(const ArrayXd& mu, const Grid1D& grid, std::size_t n, std::uint64_t seed)
{
    if (mu.size() != grid.n) throw ConfigError("initial density: length does not match the grid");
    std::vector<double> cdf(static_cast<std::size_t>(grid.n));
    double acc = 0.0;
    for (int i = 0; i < grid.n; ++i) {
        acc += std::max(mu[i], 0.0);
        cdf[i] = acc;
    }
    if (!(acc > 0.0)) throw NumericalError("degenerate initial data");
    const double h = grid.dx();
    ArrayXd x(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) {
        CounterRng rng(seed, CounterRng::Init, k);
        const double u = rng.uniform() * acc;
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        const int c = std::min(static_cast<int>(it - cdf.begin()), grid.n - 1);
        const double lo = c == 0 ? 0.0 : cdf[c - 1];
        const double w = mu[c] > 0.0 ? (u - lo) / std::max(mu[c], 0.0) : 0.5;
        x[static_cast<Eigen::Index>(k)] = std::clamp(grid.interface(c) + std::clamp(w, 0.0, 1.0) * h, -grid.L, grid.L);
    }
    return x;
}

ArrayXd histogram(const ArrayXd& x, const Grid1D& grid)
{
    ArrayXd h = ArrayXd::Zero(grid.n);
    for (Eigen::Index k = 0; k < x.size(); ++k) h[grid.cell_of(x[k])] += 1.0;
    return h / (static_cast<double>(x.size()) * grid.dx());
}

ArrayXd binned_mean(const ArrayXd& x, const ArrayXd& values, const Grid1D& grid)
{
    ArrayXd sum = ArrayXd::Zero(grid.n);
    ArrayXd count = ArrayXd::Zero(grid.n);
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const int c = grid.cell_of(x[k]);
        sum[c] += values[k];
        count[c] += 1.0;
    }
    return (count > 0.0).select(sum / count.max(1.0), 0.0);
}

McResult mc_run(const InitialDataSpec& spec, const BinaryController& controller, const SimulationConfig& cfg,
                const InteractionKernel& kernel, const McOptions& options, const ControlPenalty& penalty)
{
    cfg.validate();
    const Grid1D grid = Grid1D::from_config(cfg);
    Ensemble start{sample_from_density(build_initial_density(spec, grid), grid, cfg.n_samples, cfg.seed), 0};
    return mc_run(std::move(start), controller, cfg, kernel, options, penalty);
}

McResult mc_run(Ensemble start, const BinaryController& controller, const SimulationConfig& cfg,
                const InteractionKernel& kernel, const McOptions& options, const ControlPenalty& penalty)
{
    cfg.validate();
    check_controller(controller, cfg);
    if (options.snapshot_stride < 1) throw ConfigError("snapshot_stride: must be >= 1");
    if (!((start.x.abs() <= cfg.L).all())) throw ConfigError("initial ensemble: positions must lie in [-L, L]");

    const Grid1D grid = Grid1D::from_config(cfg);
    const int M = cfg.steps();
    McResult out;
    out.density.grid = grid;
    out.applied.grid = grid;
    ParticleCostAccumulator acc(static_cast<std::size_t>(start.x.size()), cfg, penalty);

    Ensemble ens = std::move(start);
    ens.step = 0;
    for (int m = 0; m < M; ++m) {
        const bool snap = m % options.snapshot_stride == 0;
        if (snap) {
            out.density.times.push_back(cfg.time(m));
            out.density.slices.push_back(histogram(ens.x, grid));
            if (options.keep_particles) out.particles.push_back(ens.x);
        }
        acc.add_state(ens.x);
        const ArrayXd before = snap ? ens.x : ArrayXd();
        StepRecord rec = mc_step(ens, controller, cfg, kernel, options);
        acc.add_control(rec.applied);
        if (snap) {
            out.applied.times.push_back(cfg.time(m));
            out.applied.slices.push_back(binned_mean(before, rec.applied, grid));
        }
    }
    out.density.times.push_back(cfg.T);
    out.density.slices.push_back(histogram(ens.x, grid));
    if (options.keep_particles) out.particles.push_back(ens.x);

    out.cost = acc.total();
    out.cost_stderr = acc.standard_error();
    out.final = std::move(ens);
    return out;
}

} // namespace mfc
