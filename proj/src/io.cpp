#include "mfc/io.hpp"

#include "mfc/error.hpp"

#include <fstream>

namespace mfc {

namespace {

std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    os.precision(17);
    return os;
}

void finish(std::ofstream& os, const std::filesystem::path& path)
{
    os.flush();
    if (!os) throw IoError("write failed for '" + path.string() + "'");
}

void write_slices(const std::filesystem::path& path, const char* column, const Grid1D& grid,
                  const std::vector<double>& times, const std::vector<ArrayXd>& slices, int stride)
{
    std::ofstream os = open_out(path);
    os << "t,x_center," << column << '\n';
    const std::size_t last = slices.empty() ? 0 : slices.size() - 1;
    for (std::size_t k = 0; k < slices.size(); ++k) {
        if (stride > 1 && k % static_cast<std::size_t>(stride) != 0 && k != last) continue;
        for (int i = 0; i < grid.n; ++i) os << times[k] << ',' << grid.center(i) << ',' << slices[k][i] << '\n';
    }
    finish(os, path);
}

std::vector<double> uniform_times(std::size_t n, double dt)
{
    std::vector<double> t(n);
    for (std::size_t k = 0; k < n; ++k) t[k] = static_cast<double>(k) * dt;
    return t;
}

} // namespace

void write_density_csv(const std::filesystem::path& path, const DensityField& mu)
{
    write_slices(path, "mu", mu.grid, mu.times, mu.slices, 1);
}

void write_control_csv(const std::filesystem::path& path, const ControlField& f, int stride)
{
    write_slices(path, "f", f.grid, uniform_times(f.slices.size(), f.dt), f.slices, stride);
}

void write_applied_csv(const std::filesystem::path& path, const ControlSnapshots& u)
{
    write_slices(path, "u", u.grid, u.times, u.slices, 1);
}

void write_adjoint_csv(const std::filesystem::path& path, const AdjointField& psi, int stride)
{
    write_slices(path, "psi", psi.grid, uniform_times(psi.slices.size(), psi.dt), psi.slices, stride);
}

void write_ensemble_csv(const std::filesystem::path& path, const std::vector<double>& times,
                        const std::vector<ArrayXd>& particles)
{
    std::ofstream os = open_out(path);
    os << "t,particle_index,x\n";
    for (std::size_t k = 0; k < particles.size() && k < times.size(); ++k)
        for (Eigen::Index p = 0; p < particles[k].size(); ++p) os << times[k] << ',' << p << ',' << particles[k][p] << '\n';
    finish(os, path);
}

void write_cost_json(const std::filesystem::path& path, const CostBreakdown& c)
{
    std::ofstream os = open_out(path);
    os << "{\n  \"J\": " << c.J << ",\n  \"state_term\": " << c.state_term << ",\n  \"control_term\": " << c.control_term;
    os << "\n}\n";
    finish(os, path);
}

} // namespace mfc
