#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "nse_mdp/config.hpp"
#include "nse_mdp/dynamics.hpp"
#include "nse_mdp/experiment.hpp"
#include "nse_mdp/noise.hpp"
#include "nse_mdp/rate.hpp"
#include "nse_mdp/snapshot.hpp"
#include "nse_mdp/spectral.hpp"
#include "nse_mdp/stochastic.hpp"

namespace py = pybind11;
using namespace nse_mdp;
using spectral::SpectralField;
using BasisHandle = std::shared_ptr<spectral::Basis>;

namespace {

using CArray = py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>;

CArray to_numpy(const SpectralField& u) {
  CArray out(static_cast<py::ssize_t>(u.size()));
  auto v = out.mutable_unchecked<1>();
  for (std::size_t i = 0; i < u.size(); ++i) v(i) = u[i];
  return out;
}

SpectralField from_numpy(const spectral::BasisPtr& basis, const CArray& a) {
  if (a.ndim() != 1 || static_cast<std::size_t>(a.shape(0)) != basis->mode_count())
    throw InvalidArgument("coefficient array must have one entry per basis mode");
  SpectralField u(basis);
  auto v = a.unchecked<1>();
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = v(i);
  return u;
}

CArray trajectory_array(const Trajectory& t) {
  const std::size_t n = t.fields.size(), m = t.fields.empty() ? 0 : t.fields.front().size();
  CArray out({static_cast<py::ssize_t>(n), static_cast<py::ssize_t>(m)});
  auto v = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) v(i, j) = t.fields[i][j];
  return out;
}

py::list rows_list(const std::vector<experiment::CsvRow>& rows) {
  py::list out;
  for (const auto& r : rows) {
    py::dict d;
    d["eps"] = r.eps;
    d["a_eps"] = r.a_eps;
    d["replicas"] = r.replicas;
    d["metric_name"] = r.metric;
    d["estimate"] = r.estimate;
    d["ci_low"] = r.ci_low;
    d["ci_high"] = r.ci_high;
    d["verdict"] = r.verdict;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spectral 2-D Navier-Stokes with Poisson noise: solvers, rate function and experiments";
  m.attr("__version__") = NSE_MDP_VERSION;

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  py::class_<spectral::Basis, std::shared_ptr<spectral::Basis>>(m, "Basis")
      .def(py::init([](int N, double nu, double L) {
             return std::const_pointer_cast<spectral::Basis>(spectral::make_basis(N, nu, L));
           }),
           py::arg("N"), py::arg("nu"), py::arg("L") = 2.0 * 3.14159265358979323846)
      .def_property_readonly("N", &spectral::Basis::N)
      .def_property_readonly("nu", &spectral::Basis::nu)
      .def_property_readonly("L", &spectral::Basis::L)
      .def_property_readonly("mode_count", &spectral::Basis::mode_count)
      .def_property_readonly("grid_size", &spectral::Basis::grid_size)
      .def("wavenumbers", [](const spectral::Basis& b) {
        std::vector<std::pair<int, int>> out;
        for (const auto& md : b.modes()) out.emplace_back(md.k1, md.k2);
        return out;
      });

  m.def("random_field", [](const BasisHandle& b, std::uint64_t seed, double amplitude) {
    Rng rng = make_rng(seed);
    RandomFieldOptions o;
    o.amplitude = amplitude;
    return to_numpy(random_field(b, rng, o));
  }, py::arg("basis"), py::arg("seed"), py::arg("amplitude") = 1.0);

  m.def("norms", [](const BasisHandle& b, const CArray& c) {
    const auto n = spectral::norms(from_numpy(b, c));
    return py::make_tuple(n.h, n.v, n.l4);
  }, "(|u|_H, ||u||_V, ||u||_L4)");
  m.def("inner_h", [](const BasisHandle& b, const CArray& u, const CArray& w) {
    return spectral::inner_h(from_numpy(b, u), from_numpy(b, w));
  });
  m.def("nonlinear_B", [](const BasisHandle& b, const CArray& u, const CArray& v) {
    return to_numpy(spectral::nonlinear_B(from_numpy(b, u), from_numpy(b, v)));
  });
  m.def("trilinear_b", [](const BasisHandle& b, const CArray& u, const CArray& v, const CArray& w) {
    return spectral::trilinear_b(from_numpy(b, u), from_numpy(b, v), from_numpy(b, w));
  });
  m.def("to_physical", [](const BasisHandle& b, const CArray& u, int M) {
    const auto p = spectral::to_physical(from_numpy(b, u), M);
    py::array_t<double> ux({M, M}), uy({M, M});
    std::copy(p.ux.begin(), p.ux.end(), ux.mutable_data());
    std::copy(p.uy.begin(), p.uy.end(), uy.mutable_data());
    return py::make_tuple(ux, uy);
  }, "velocity components sampled on an M x M grid, index [i, j] at (i L/M, j L/M)");

  m.def("solve_nse", [](const BasisHandle& b, const CArray& u0, double T, int n_steps) {
    return trajectory_array(dynamics::solve_nse(from_numpy(b, u0), ForceSpec::zero(), TimeGrid(T, n_steps)));
  }, py::arg("basis"), py::arg("u0"), py::arg("T"), py::arg("n_steps"), "unforced solve; returns (nodes, modes)");

  m.def("entropy_l", &noise::entropy_l);
  m.def("wilson_interval", &experiment::wilson_interval, py::arg("hits"), py::arg("n"), py::arg("z") = 2.0);

  m.def("read_trajectory", [](const std::filesystem::path& p, const BasisHandle& b) {
    return trajectory_array(io::read_trajectory(p, b));
  });
  m.def("snapshot_header", [](const std::filesystem::path& p) {
    const auto h = io::read_snapshot_header(p);
    py::dict d;
    d["N"] = h.N;
    d["n_steps"] = h.n_steps;
    d["dt"] = h.dt;
    d["nu"] = h.nu;
    return d;
  });

  m.def("config_hash", [](const std::filesystem::path& p) { return config::load_config(p).hash; });

  m.def("rate_terminal", [](const std::filesystem::path& cfg_path, const CArray& target) {
    const auto cfg = config::load_config(cfg_path);
    const auto basis = config::build_basis(cfg);
    const auto grid = config::build_grid(cfg);
    const auto noise = config::build_noise(cfg, basis);
    const auto limit = dynamics::solve_nse(config::build_u0(cfg, basis), noise.f, grid);
    const rate::SkeletonOperator op(limit, noise, grid);
    rate::RateOptions ro;
    ro.tol = cfg.cg_tol;
    ro.tikhonov = cfg.tikhonov;
    const auto res = rate::rate_terminal(op, from_numpy(basis, target), ro);
    py::dict d;
    d["I"] = res.I;
    d["residual"] = res.residual;
    d["iterations"] = res.iterations;
    d["psi_star"] = py::array_t<double>({static_cast<py::ssize_t>(res.psi_star.n_marks()),
                                         static_cast<py::ssize_t>(res.psi_star.n_nodes())},
                                        res.psi_star.values().data());
    return d;
  }, py::arg("config"), py::arg("target"), "least-norm control reaching `target` at time T");

  m.def("run_experiment", [](const std::string& name, const std::filesystem::path& cfg_path, std::uint64_t seed,
                             int replicas) {
    const auto cfg = config::load_config(cfg_path);
    experiment::RunOptions o;
    o.seed = seed;
    o.replicas = replicas;
    experiment::ExperimentRecord rec;
    {
      py::gil_scoped_release release;
      if (name == "verify-core") rec = experiment::run_estimates_suite(cfg, o);
      else if (name == "thm35") rec = experiment::run_thm35(cfg, o);
      else if (name == "prop33") rec = experiment::run_prop33(cfg, o);
      else if (name == "prop36") rec = experiment::run_prop36(cfg, o);
      else if (name == "mdp-tail") rec = experiment::run_mdp_tail(cfg, o);
      else throw InvalidArgument("unknown experiment " + name);
    }
    return py::make_tuple(rec.passed, rows_list(rec.rows));
  }, py::arg("name"), py::arg("config"), py::arg("seed") = 0, py::arg("replicas") = 0);

  m.def("recompute_verdicts", [](const std::string& name, const std::string& csv) {
    auto rows = experiment::parse_csv(csv);
    const bool ok = experiment::recompute_verdicts(name, rows);
    return py::make_tuple(ok, rows_list(rows));
  });
}
