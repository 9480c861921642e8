#include "scbf/field_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "snapshot i/o assumes a little-endian host");

namespace scbf {

namespace {

template <typename T>
void put(std::ofstream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("snapshot read: truncated file");
    return v;
}

} // namespace

void write_snapshot(const std::string& path, const VelocityField& v) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("snapshot write: cannot open " + path);
    os.write("SCBF", 4);
    put<std::uint16_t>(os, snapshot_version);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(v.domain.nx));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(v.domain.ny));
    put<double>(os, v.domain.spacing);
    put<double>(os, v.domain.half_width);
    put<double>(os, v.domain.height);
    os.write(reinterpret_cast<const char*>(v.ux.data()),
             static_cast<std::streamsize>(v.ux.size() * sizeof(double)));
    os.write(reinterpret_cast<const char*>(v.uy.data()),
             static_cast<std::streamsize>(v.uy.size() * sizeof(double)));
    if (!os) throw std::runtime_error("snapshot write: i/o error on " + path);
}

VelocityField read_snapshot(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("snapshot read: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "SCBF", 4) != 0)
        throw std::runtime_error("snapshot read: bad magic in " + path);
    const auto version = get<std::uint16_t>(is);
    if (version != snapshot_version)
        throw std::runtime_error("snapshot read: unsupported version");
    DomainSpec d;
    d.nx = static_cast<int>(get<std::uint32_t>(is));
    d.ny = static_cast<int>(get<std::uint32_t>(is));
    d.spacing = get<double>(is);
    d.half_width = get<double>(is);
    d.height = get<double>(is);
    VelocityField v(d);
    is.read(reinterpret_cast<char*>(v.ux.data()),
            static_cast<std::streamsize>(v.ux.size() * sizeof(double)));
    is.read(reinterpret_cast<char*>(v.uy.data()),
            static_cast<std::streamsize>(v.uy.size() * sizeof(double)));
    if (!is) throw std::runtime_error("snapshot read: truncated payload in " + path);
    return v;
}

} // namespace scbf
