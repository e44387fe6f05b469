#include <cstdint>
#include <cstring>
#include <fstream>

#include "rbc/boussinesq.hpp"
#include "rbc/errors.hpp"

namespace rbc {

namespace {

constexpr char kMagic[8] = {'R', 'B', 'C', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw IoError("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const State& s, const SimParams& p) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("checkpoint: cannot open " + path);
  os.write(kMagic, sizeof kMagic);
  put(os, kVersion);
  for (double v : {p.Ra, p.Pr, p.L, p.dt, p.t_end, p.transient_fraction, p.cfl_target, p.cfl_limit}) put(os, v);
  const Grid& g = *s.T.grid;
  put(os, static_cast<std::int32_t>(g.Nx));
  put(os, static_cast<std::int32_t>(g.Nz));
  put(os, g.L);
  put(os, s.t);
  for (const ModalField* f : {&s.T, &s.psi, &s.omega})
    os.write(reinterpret_cast<const char*>(f->coeffs.data()),
             static_cast<std::streamsize>(sizeof(cplx) * f->coeffs.size()));
  if (!os) throw IoError("checkpoint: write failed for " + path);
}

State load_checkpoint(const std::string& path, SimParams* p) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw IoError("checkpoint: bad magic in " + path);
  auto version = get<std::uint32_t>(is);
  if (version != kVersion) throw IoError("checkpoint: unsupported version " + std::to_string(version));
  SimParams q;
  q.Ra = get<double>(is);
  q.Pr = get<double>(is);
  q.L = get<double>(is);
  q.dt = get<double>(is);
  q.t_end = get<double>(is);
  q.transient_fraction = get<double>(is);
  q.cfl_target = get<double>(is);
  q.cfl_limit = get<double>(is);
  int nx = get<std::int32_t>(is);
  int nz = get<std::int32_t>(is);
  double L = get<double>(is);
  q.Nx = nx;
  q.Nz = nz;
  auto g = make_grid(L, nx, nz);
  State s{ModalField(g), ModalField(g), ModalField(g), get<double>(is)};
  for (ModalField* f : {&s.T, &s.psi, &s.omega}) {
    is.read(reinterpret_cast<char*>(f->coeffs.data()), static_cast<std::streamsize>(sizeof(cplx) * f->coeffs.size()));
    if (!is) throw IoError("checkpoint: truncated field data");
  }
  if (p) *p = q;
  return s;
}

}  // namespace rbc
