#include <cstdint>
#include <cstring>
#include <fstream>

#include "hitchin/errors.hpp"
#include "hitchin/surface.hpp"

namespace hitchin {

namespace {

constexpr char kMagic[8] = {'H', 'T', 'C', 'H', 'M', 'E', 'S', 'H'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw MeshFormatError("truncated mesh file");
  return v;
}

}  // namespace

void save_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw MeshFormatError("cannot open " + path + " for writing");
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::int32_t>(out, mesh.level);
  put<std::uint64_t>(out, mesh.z.size());
  for (const auto& p : mesh.z) {
    put<double>(out, p.real());
    put<double>(out, p.imag());
  }
  put<std::uint64_t>(out, mesh.triangles.size());
  for (const auto& t : mesh.triangles)
    for (int i : t) put<std::int32_t>(out, i);
  put<std::uint64_t>(out, mesh.boundary.size());
  for (const auto& e : mesh.boundary) {
    put<std::int32_t>(out, e.v0);
    put<std::int32_t>(out, e.v1);
    put<std::int32_t>(out, e.side);
    put<std::int32_t>(out, e.partner);
    put<std::int32_t>(out, e.map);
  }
  if (!out) throw MeshFormatError("write failed for " + path);
}

Mesh load_mesh(const std::string& path, const FuchsianDomain& domain) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MeshFormatError("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw MeshFormatError(path + " is not a mesh cache");
  if (get<std::uint32_t>(in) != kVersion) throw MeshFormatError("unsupported mesh cache version");
  Mesh m;
  m.level = get<std::int32_t>(in);
  const auto nv = get<std::uint64_t>(in);
  if (nv > (1u << 26)) throw MeshFormatError("implausible vertex count");
  m.z.resize(nv);
  for (auto& p : m.z) {
    const double re = get<double>(in);
    const double im = get<double>(in);
    p = {re, im};
  }
  const auto nt = get<std::uint64_t>(in);
  if (nt > (1u << 28)) throw MeshFormatError("implausible triangle count");
  m.triangles.resize(nt);
  for (auto& t : m.triangles)
    for (int& i : t) i = get<std::int32_t>(in);
  const auto nb = get<std::uint64_t>(in);
  if (nb > (1u << 26)) throw MeshFormatError("implausible boundary size");
  m.boundary.resize(nb);
  for (auto& e : m.boundary) {
    e.v0 = get<std::int32_t>(in);
    e.v1 = get<std::int32_t>(in);
    e.side = get<std::int32_t>(in);
    e.partner = get<std::int32_t>(in);
    e.map = get<std::int32_t>(in);
    if (e.side < 0 || e.side >= 8) throw MeshFormatError("bad side index");
    if (e.v0 < 0 || e.v1 < 0 || static_cast<std::uint64_t>(e.v0) >= nv || static_cast<std::uint64_t>(e.v1) >= nv)
      throw MeshFormatError("boundary vertex out of range");
  }
  in.peek();
  if (!in.eof()) throw MeshFormatError("trailing data in mesh file");
  finalize_mesh(m, domain);
  return m;
}

}  // namespace hitchin
