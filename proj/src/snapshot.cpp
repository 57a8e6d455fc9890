#include "nse_mdp/snapshot.hpp"

#include <bit>
#include <cstring>
#include <fmt/format.h>
#include <fstream>
#include <json.hpp>

#include "nse_mdp/errors.hpp"

namespace nse_mdp::io {

namespace {

static_assert(std::endian::native == std::endian::little, "snapshot IO assumes a little-endian host");

constexpr char kMagic[4] = {'N', 'S', 'E', '1'};

void put(std::ofstream& out, double x) { out.write(reinterpret_cast<const char*>(&x), sizeof x); }

double get(std::ifstream& in, const std::filesystem::path& path) {
  double x = 0.0;
  if (!in.read(reinterpret_cast<char*>(&x), sizeof x))
    throw Error(fmt::format("snapshot {}: truncated file", path.string()));
  return x;
}

SnapshotHeader read_header(std::ifstream& in, const std::filesystem::path& path) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw Error(fmt::format("snapshot {}: bad magic", path.string()));
  SnapshotHeader h;
  h.N = static_cast<int>(get(in, path));
  h.n_steps = static_cast<int>(get(in, path));
  h.dt = get(in, path);
  h.nu = get(in, path);
  if (h.N < 1 || h.n_steps < 0) throw Error(fmt::format("snapshot {}: corrupt header", path.string()));
  return h;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  return in;
}

}  // namespace

void write_trajectory(const std::filesystem::path& path, const Trajectory& traj) {
  if (traj.fields.empty()) throw InvalidArgument("write_trajectory: empty trajectory");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  const auto& basis = traj.fields.front().basis();
  out.write(kMagic, 4);
  put(out, basis.N());
  put(out, static_cast<double>(traj.size() - 1));
  put(out, traj.dt);
  put(out, basis.nu());
  for (const auto& f : traj.fields) {
    spectral::require_same_basis(traj.fields.front(), f);
    for (std::size_t i = 0; i < f.size(); ++i) {
      put(out, f[i].real());
      put(out, f[i].imag());
    }
  }
  if (!out) throw Error(fmt::format("write failed for {}", path.string()));
}

SnapshotHeader read_snapshot_header(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_header(in, path);
}

Trajectory read_trajectory(const std::filesystem::path& path, const spectral::BasisPtr& basis) {
  auto in = open_in(path);
  const auto h = read_header(in, path);
  if (h.N != basis->N() || h.nu != basis->nu())
    throw BasisMismatch(fmt::format("snapshot {}: N={} nu={} but the config has N={} nu={}", path.string(), h.N,
                                    h.nu, basis->N(), basis->nu()));
  Trajectory traj{0.0, h.dt, {}};
  traj.fields.reserve(static_cast<std::size_t>(h.n_steps) + 1);
  for (int n = 0; n <= h.n_steps; ++n) {
    spectral::SpectralField f(basis);
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double re = get(in, path);
      const double im = get(in, path);
      f[i] = {re, im};
    }
    traj.fields.push_back(std::move(f));
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw Error(fmt::format("snapshot {}: trailing bytes after {} nodes", path.string(), h.n_steps + 1));
  return traj;
}

std::string format_double(double x) { return fmt::format("{}", x); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << text;
  if (!out) throw Error(fmt::format("write failed for {}", path.string()));
}

void write_jumps_csv(const std::filesystem::path& path, const noise::JumpStream& jumps, bool finite_marks) {
  std::string text = finite_marks ? "t,mark_index,r\n" : "t,y,r\n";
  for (const auto& e : jumps.events) {
    text += format_double(e.t);
    text += ',';
    text += finite_marks ? std::to_string(e.mark) : format_double(e.y);
    text += ',';
    text += format_double(e.r);
    text += '\n';
  }
  write_text(path, text);
}

void write_control_csv(const std::filesystem::path& path, const noise::ControlField& c) {
  std::string text = "mark_index,step,value\n";
  for (std::size_t i = 0; i < c.n_marks(); ++i)
    for (std::size_t n = 0; n < c.n_nodes(); ++n) text += fmt::format("{},{},{}\n", i, n, format_double(c(i, n)));
  write_text(path, text);
}

std::string rate_result_json(const rate::RateResult& res) {
  nlohmann::ordered_json j;
  j["I"] = res.I;
  j["residual"] = res.residual;
  j["rel_residual"] = res.rel_residual;
  j["iterations"] = res.iterations;
  j["regularized"] = res.regularized;
  return j.dump(2) + "\n";
}

}  // namespace nse_mdp::io
