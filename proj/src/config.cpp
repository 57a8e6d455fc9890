#include "nse_mdp/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fmt/format.h>
#include <fstream>
#include <functional>
#include <sstream>

#include "nse_mdp/errors.hpp"

namespace nse_mdp::config {

namespace {

double to_double(const std::string& key, const std::string& v) {
  const std::string s = boost::trim_copy(v);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ConfigError(fmt::format("{}: '{}' is not a number", key, v));
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != static_cast<double>(static_cast<long long>(d))) throw ConfigError(fmt::format("{}: '{}' is not an integer", key, v));
  return static_cast<long long>(d);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  const std::string s = boost::trim_copy(v);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ConfigError(fmt::format("{}: '{}' is not an unsigned integer", key, v));
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

template <class T>
Setter num(T ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, const std::string& k, const std::string& v) {
    if constexpr (std::is_same_v<T, double>)
      c.*field = to_double(k, v);
    else
      c.*field = static_cast<T>(to_int(k, v));
  };
}

Setter text(std::string ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, const std::string&, const std::string& v) { c.*field = boost::trim_copy(v); };
}

Setter list(std::vector<double> ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, const std::string& k, const std::string& v) {
    try {
      c.*field = parse_list(v);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}: {}", k, e.what()));
    }
  };
}

const std::map<std::string, std::map<std::string, Setter>>& schema() {
  static const std::map<std::string, std::map<std::string, Setter>> table = {
      {"basis",
       {{"N", num(&ExperimentConfig::N)},
        {"nu", num(&ExperimentConfig::nu)},
        {"L", num(&ExperimentConfig::L)},
        {"dealias", num(&ExperimentConfig::dealias)}}},
      {"grid", {{"T", num(&ExperimentConfig::T)}, {"n_steps", num(&ExperimentConfig::n_steps)}}},
      {"initial", {{"u0", text(&ExperimentConfig::u0)}}},
      {"force", {{"f", text(&ExperimentConfig::f)}, {"omega", num(&ExperimentConfig::omega)}}},
      {"noise",
       {{"weights", list(&ExperimentConfig::weights)},
        {"h", list(&ExperimentConfig::h)},
        {"g0", text(&ExperimentConfig::g0)},
        {"c", num(&ExperimentConfig::c)},
        {"m", num(&ExperimentConfig::m)},
        {"event_budget", num(&ExperimentConfig::event_budget)}}},
      {"scaling", {{"gamma", num(&ExperimentConfig::gamma)}, {"eps", list(&ExperimentConfig::eps)}}},
      {"experiment",
       {{"replicas", num(&ExperimentConfig::replicas)},
        {"seed",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.seed = to_u64(k, v); }},
        {"psi", list(&ExperimentConfig::psi)},
        {"oscillation", list(&ExperimentConfig::oscillation)},
        {"fine_steps", num(&ExperimentConfig::fine_steps)},
        {"radius", num(&ExperimentConfig::radius)},
        {"samples", num(&ExperimentConfig::samples)},
        {"stokes_samples", num(&ExperimentConfig::stokes_samples)},
        {"control_bound", num(&ExperimentConfig::control_bound)},
        {"directions", num(&ExperimentConfig::directions)}}},
      {"tolerances",
       {{"identity", num(&ExperimentConfig::identity_tol)},
        {"cg", num(&ExperimentConfig::cg_tol)},
        {"tikhonov", num(&ExperimentConfig::tikhonov)},
        {"cg_max_iter", num(&ExperimentConfig::cg_max_iter)},
        {"tail_factor", num(&ExperimentConfig::tail_factor)},
        {"order_lo", num(&ExperimentConfig::order_lo)},
        {"order_hi", num(&ExperimentConfig::order_hi)}}},
  };
  return table;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

void validate(const ExperimentConfig& c) {
  require(c.N >= 1, "basis.N must be >= 1");
  require(c.nu > 0.0, "basis.nu must be positive");
  require(c.L > 0.0, "basis.L must be positive");
  require(c.dealias >= 1.5, "basis.dealias must be >= 1.5");
  require(c.T > 0.0, "grid.T must be positive");
  require(c.n_steps >= 1, "grid.n_steps must be >= 1");
  for (double w : c.weights) require(w > 0.0, "noise.weights must be positive");
  require(c.h.empty() || c.h.size() == c.weights.size(), "noise.h must have one entry per mark");
  require(c.event_budget > 0.0, "noise.event_budget must be positive");
  require(c.gamma > 0.0 && c.gamma < 0.5, "scaling.gamma must lie in (0, 0.5)");
  require(!c.eps.empty(), "scaling.eps must not be empty");
  for (std::size_t i = 0; i < c.eps.size(); ++i) {
    require(c.eps[i] > 0.0 && c.eps[i] <= 1.0, "scaling.eps entries must lie in (0, 1]");
    if (i > 0) require(c.eps[i] < c.eps[i - 1], "scaling.eps must be strictly decreasing");
  }
  require(c.replicas >= 1, "experiment.replicas must be >= 1");
  require(c.psi.empty() || c.psi.size() == c.weights.size(), "experiment.psi must have one entry per mark");
  require(c.oscillation.empty() || c.oscillation.size() == c.weights.size(),
          "experiment.oscillation must have one entry per mark");
  require(c.fine_steps >= 1, "experiment.fine_steps must be >= 1");
  require(c.radius >= 0.0, "experiment.radius must be nonnegative");
  require(c.samples >= 1 && c.stokes_samples >= 1, "experiment.samples must be >= 1");
  require(c.control_bound > 0.0, "experiment.control_bound must be positive");
  require(c.directions >= 0, "experiment.directions must be >= 0");
  require(c.identity_tol > 0.0 && c.cg_tol > 0.0, "tolerances must be positive");
  require(c.tikhonov >= 0.0, "tolerances.tikhonov must be nonnegative");
  require(c.tail_factor >= 1.0, "tolerances.tail_factor must be >= 1");
  require(c.order_lo < c.order_hi, "tolerances.order_lo must be below order_hi");
}

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace

std::vector<double> parse_list(const std::string& text) {
  std::vector<std::string> parts;
  const std::string trimmed = boost::trim_copy(text);
  if (trimmed.empty()) return {};
  boost::split(parts, trimmed, boost::is_any_of(" \t,"), boost::token_compress_on);
  std::vector<double> out;
  for (const auto& p : parts) out.push_back(to_double("list", p));
  return out;
}

spectral::SpectralField parse_field(const std::string& spec, const spectral::BasisPtr& basis) {
  spectral::SpectralField u(basis);
  std::vector<std::string> entries;
  boost::split(entries, spec, boost::is_any_of(";"));
  for (const auto& raw : entries) {
    if (boost::trim_copy(raw).empty()) continue;
    const auto v = parse_list(raw);
    if (v.size() != 4) throw ConfigError(fmt::format("field entry '{}' must be 'k1 k2 re im'", raw));
    const int k1 = static_cast<int>(v[0]), k2 = static_cast<int>(v[1]);
    if (k1 != v[0] || k2 != v[1]) throw ConfigError(fmt::format("field entry '{}': wavenumbers must be integers", raw));
    if (k1 == 0 && k2 == 0) throw ConfigError("field entry: the mean mode (0,0) is not part of the basis");
    if (std::abs(k1) > basis->N() || std::abs(k2) > basis->N())
      throw ConfigError(fmt::format("field entry ({},{}) lies outside the basis N={}", k1, k2, basis->N()));
    u.set_coefficient(k1, k2, {v[2], v[3]});
  }
  return u;
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  boost::property_tree::ptree pt;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(fmt::format("{}: line {}: {}", origin, e.line(), e.message()));
  }
  ExperimentConfig cfg;
  const auto& table = schema();
  for (const auto& [section, body] : pt) {
    const auto sec = table.find(section);
    if (sec == table.end()) throw ConfigError(fmt::format("{}: unknown section [{}]", origin, section));
    if (!body.data().empty()) throw ConfigError(fmt::format("{}: key '{}' outside any section", origin, section));
    for (const auto& [key, node] : body) {
      const auto it = sec->second.find(key);
      if (it == sec->second.end()) throw ConfigError(fmt::format("{}: unknown key {}.{}", origin, section, key));
      const std::string value = node.data();
      it->second(cfg, section + "." + key, value);
      cfg.raw[section][key] = boost::trim_copy(value);
    }
  }
  validate(cfg);
  cfg.hash = fnv1a_hex(canonical_text(cfg));
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string canonical_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [section, keys] : cfg.raw)
    for (const auto& [key, value] : keys) out += fmt::format("{}.{}={}\n", section, key, value);
  return out;
}

spectral::BasisPtr build_basis(const ExperimentConfig& cfg) {
  return spectral::make_basis(cfg.N, cfg.nu, cfg.L, cfg.dealias);
}

TimeGrid build_grid(const ExperimentConfig& cfg) { return TimeGrid(cfg.T, cfg.n_steps); }
TimeGrid build_grid(const ExperimentConfig& cfg, int n_steps) { return TimeGrid(cfg.T, n_steps); }

spectral::SpectralField build_u0(const ExperimentConfig& cfg, const spectral::BasisPtr& basis) {
  return parse_field(cfg.u0, basis);
}

ForceSpec build_force(const ExperimentConfig& cfg, const spectral::BasisPtr& basis) {
  if (boost::trim_copy(cfg.f).empty()) return ForceSpec::zero();
  auto f0 = parse_field(cfg.f, basis);
  if (cfg.omega == 0.0) return ForceSpec::constant(std::move(f0));
  return ForceSpec::modulated(std::move(f0), cfg.omega);
}

noise::NoiseModel build_noise(const ExperimentConfig& cfg, const spectral::BasisPtr& basis) {
  const std::size_t m = cfg.n_marks();
  if (m == 0) {
    noise::NoiseModel model;
    model.f = build_force(cfg, basis);
    return model;
  }
  std::vector<double> h = cfg.h.empty() ? std::vector<double>(m, 1.0) : cfg.h;
  const auto g0 = parse_field(cfg.g0, basis);
  return noise::make_affine_noise(cfg.weights, std::move(h), std::vector<spectral::SpectralField>(m, g0), cfg.c,
                                  cfg.m, build_force(cfg, basis));
}

noise::ControlField build_psi(const ExperimentConfig& cfg, const TimeGrid& grid) {
  auto psi = noise::ControlField::zero_psi(cfg.n_marks(), grid.n_nodes());
  if (cfg.psi.empty()) return psi;
  for (std::size_t i = 0; i < cfg.n_marks(); ++i)
    for (std::size_t n = 0; n < grid.n_nodes(); ++n) psi(i, n) = cfg.psi[i];
  return psi;
}

}  // namespace nse_mdp::config
