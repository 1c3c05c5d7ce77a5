#include "mfc/binary_control.hpp"

#include "mfc/error.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace mfc {

namespace {

constexpr std::array<char, 4> kMagic{'M', 'F', 'C', 'H'};
constexpr std::size_t kHeaderBytes = 4 + 1 + 6 * 8;

void put_u64(std::ostream& os, std::uint64_t v)
{
    std::array<unsigned char, 8> b{};
    for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>((v >> (8 * k)) & 0xffu);
    os.write(reinterpret_cast<const char*>(b.data()), 8);
}

void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::istream& is)
{
    std::array<unsigned char, 8> b{};
    is.read(reinterpret_cast<char*>(b.data()), 8);
    if (!is) throw IoError("table: truncated file");
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
    return v;
}

double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

struct Header {
    std::uint64_t n_nodes;
    std::uint64_t steps;
    double dx;
    double dt;
    double L;
    double u_max;
};

void write_table(const std::filesystem::path& path, const Header& h, const std::vector<Slice2D>& slices)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    os.write(kMagic.data(), kMagic.size());
    os.put(static_cast<char>(kTableVersion));
    put_u64(os, h.n_nodes);
    put_u64(os, h.steps);
    put_f64(os, h.dx);
    put_f64(os, h.dt);
    put_f64(os, h.L);
    put_f64(os, h.u_max);
    for (const Slice2D& s : slices) {
        if (static_cast<std::uint64_t>(s.rows()) != h.n_nodes || s.rows() != s.cols())
            throw IoError("table: slice shape does not match the header");
        if constexpr (std::endian::native == std::endian::little) {
            os.write(reinterpret_cast<const char*>(s.data()), static_cast<std::streamsize>(s.size() * sizeof(double)));
        } else {
            for (Eigen::Index k = 0; k < s.size(); ++k) put_f64(os, s.data()[k]);
        }
    }
    os.flush();
    if (!os) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<Slice2D> read_table(const std::filesystem::path& path, Header& h, std::uint64_t extra_slices)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path.string() + "'");
    std::array<char, 4> magic{};
    is.read(magic.data(), magic.size());
    if (!is || magic != kMagic) throw IoError("'" + path.string() + "' is not an MFCH table");
    const int version = is.get();
    if (version != kTableVersion) throw IoError("unsupported MFCH version " + std::to_string(version));
    h.n_nodes = get_u64(is);
    h.steps = get_u64(is);
    h.dx = get_f64(is);
    h.dt = get_f64(is);
    h.L = get_f64(is);
    h.u_max = get_f64(is);

    const std::uint64_t count = h.steps + extra_slices;
    const std::uint64_t expected = kHeaderBytes + count * h.n_nodes * h.n_nodes * 8;
    if (h.n_nodes < 2 || std::filesystem::file_size(path) != expected)
        throw IoError("'" + path.string() + "' has the wrong size for its header");

    std::vector<Slice2D> slices(count);
    const auto n = static_cast<Eigen::Index>(h.n_nodes);
    for (Slice2D& s : slices) {
        s.resize(n, n);
        if constexpr (std::endian::native == std::endian::little) {
            is.read(reinterpret_cast<char*>(s.data()), static_cast<std::streamsize>(s.size() * sizeof(double)));
            if (!is) throw IoError("table: truncated file");
        } else {
            for (Eigen::Index k = 0; k < s.size(); ++k) s.data()[k] = get_f64(is);
        }
    }
    return slices;
}

} // namespace

void write_feedback_table(const std::filesystem::path& path, const FeedbackTable& table)
{
    const Header h{static_cast<std::uint64_t>(table.grid.n_nodes), static_cast<std::uint64_t>(table.steps()),
                   table.grid.dx(), table.dt, table.grid.L, table.u_max};
    write_table(path, h, table.slices);
}

FeedbackTable read_feedback_table(const std::filesystem::path& path)
{
    Header h{};
    FeedbackTable t;
    t.slices = read_table(path, h, 0);
    t.grid = Grid2D(h.L, static_cast<int>(h.n_nodes) - 1);
    t.dt = h.dt;
    t.u_max = h.u_max;
    return t;
}

void write_value_function(const std::filesystem::path& path, const ValueFunction& value, double u_max)
{
    if (value.slices.empty()) throw IoError("value function has no slices");
    const Header h{static_cast<std::uint64_t>(value.grid.n_nodes), value.slices.size() - 1, value.grid.dx(),
                   value.dt, value.grid.L, u_max};
    write_table(path, h, value.slices);
}

} // namespace mfc
