#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "msee/analysis.hpp"
#include "msee/bsde.hpp"
#include "msee/config.hpp"
#include "msee/errors.hpp"
#include "msee/functional.hpp"
#include "msee/galerkin.hpp"
#include "msee/harness.hpp"
#include "msee/hypotheses.hpp"
#include "msee/resolvent.hpp"

namespace py = pybind11;
using namespace msee;

namespace {

Flavor parse_flavor(const std::string& s) {
  if (s == "porous_medium") return Flavor::PorousMedium;
  if (s == "reaction_diffusion") return Flavor::ReactionDiffusion;
  throw ConfigError("flavor must be porous_medium or reaction_diffusion");
}

MonotoneMap named_map(const std::string& name, std::size_t dim) {
  if (name == "linear") return MonotoneMap::linear(-Eigen::MatrixXd::Identity(dim, dim));
  if (name == "cubic") return MonotoneMap::cubic();
  if (name == "sine") return MonotoneMap::sine();
  if (name == "zero") return MonotoneMap::zero();
  throw ConfigError("map must be linear, cubic, sine or zero");
}

py::dict path_dict(const SolutionPath& p) {
  Eigen::MatrixXd coords(p.coords.size(), p.coords.empty() ? 0 : p.coords[0].size());
  for (std::size_t k = 0; k < p.coords.size(); ++k) coords.row(static_cast<Eigen::Index>(k)) = p.coords[k];
  py::dict d;
  d["times"] = p.times;
  d["w"] = p.w;
  d["coords"] = coords;
  d["h_norm2"] = p.h_norm2;
  d["energy_residual"] = p.energy_residual;
  return d;
}

py::dict outcome_dict(const RunOutcome& r) {
  py::list checks;
  for (const auto& a : r.assertions) checks.append(py::make_tuple(a.name, a.passed, a.detail));
  py::dict d;
  d["status"] = static_cast<int>(r.status);
  d["error"] = r.error;
  d["assertions"] = checks;
  d["files"] = r.files;
  d["manifest"] = r.manifest.string();
  return d;
}

}  // namespace

PYBIND11_MODULE(_msee, m) {
  m.doc() = "Monotone stochastic evolution equations: Galerkin solvers, BSDEs and Bihari bounds";

  // later registrations are tried first: the base class goes first
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);

  py::class_<DiscreteTriple, std::shared_ptr<DiscreteTriple>>(m, "Triple")
      .def(py::init([](const std::string& flavor, std::size_t n, double q1, double q2) {
             return std::make_shared<DiscreteTriple>(parse_flavor(flavor), n, q1, q2);
           }),
           py::arg("flavor"), py::arg("n_grid"), py::arg("q1") = 2.0, py::arg("q2") = 2.0)
      .def_property_readonly("n_grid", &DiscreteTriple::n_grid)
      .def_property_readonly("h", &DiscreteTriple::h)
      .def_property_readonly("nodes", &DiscreteTriple::nodes)
      .def_property_readonly("eigenvalues", &DiscreteTriple::eigenvalues)
      .def_property_readonly("basis", &DiscreteTriple::basis)
      .def("inner", &DiscreteTriple::inner)
      .def("pairing", &DiscreteTriple::pairing)
      .def("coordinates", &DiscreteTriple::coordinates)
      .def("synthesize", &DiscreteTriple::synthesize);

  py::class_<NoisePath>(m, "NoisePath")
      .def_readonly("seed", &NoisePath::seed)
      .def_readonly("T", &NoisePath::T)
      .def_readonly("times", &NoisePath::times)
      .def_readonly("increments", &NoisePath::increments)
      .def_readonly("scalar_path", &NoisePath::scalar_path)
      .def_property_readonly("dt", &NoisePath::dt)
      .def_property_readonly("steps", &NoisePath::steps);

  m.def("sample_path", &sample_path, py::arg("seed"), py::arg("T"), py::arg("N"),
        py::arg("n_modes") = 1, py::arg("replica") = 0);
  m.def("refine_path", &refine_path);

  m.def(
      "solve_builtin",
      [](const std::string& name, std::size_t n_grid, double p, std::size_t n_modes, double T,
         std::size_t N, std::uint64_t seed) {
        const BuiltinProblem prob = name == "porous_medium" ? make_porous_medium_problem(n_grid, p)
                                    : name == "reaction_diffusion"
                                        ? make_reaction_diffusion_problem(n_grid, p)
                                        : throw ConfigError("unknown built-in " + name);
        const auto& t = prob.drift->triple();
        Eigen::VectorXd u0(n_grid);
        for (Eigen::Index i = 0; i < u0.size(); ++i) u0[i] = 2.0 * std::min(t.nodes()[i], 1.0 - t.nodes()[i]);
        SolverConfig cfg;
        cfg.n_modes_galerkin = n_modes;
        const NoisePath noise = sample_path(seed, T, N, prob.diffusion->n_modes());
        return path_dict(solve_forward(cfg, prob.drift, prob.diffusion, noise, make_grid_function(t, u0)));
      },
      py::arg("name"), py::arg("n_grid") = 16, py::arg("p") = 3.0, py::arg("n_modes") = 8,
      py::arg("T") = 1.0, py::arg("N") = 200, py::arg("seed") = 1);

  m.def(
      "resolvent",
      [](const std::string& map, double eps, const Eigen::VectorXd& x) {
        return resolvent(named_map(map, static_cast<std::size_t>(x.size())), 0.0, eps, x);
      },
      py::arg("map"), py::arg("eps"), py::arg("x"));
  m.def(
      "yosida",
      [](const std::string& map, double eps, const Eigen::VectorXd& x) {
        return yosida(named_map(map, static_cast<std::size_t>(x.size())), 0.0, eps, x);
      },
      py::arg("map"), py::arg("eps"), py::arg("x"));

  py::class_<ModulusSpec>(m, "ModulusSpec")
      .def_static("linear", &ModulusSpec::linear)
      .def_static("rho_k", &ModulusSpec::rho_k, py::arg("k"), py::arg("c0"), py::arg("eta"))
      .def_static("power", &ModulusSpec::power, py::arg("c"), py::arg("alpha"))
      .def("osgood", &ModulusSpec::osgood)
      .def("__repr__", &ModulusSpec::name);
  m.def("rho", &rho_eval, py::arg("x"), py::arg("spec"));
  m.def(
      "bihari_bound",
      [](double g0, const std::vector<double>& times, const std::vector<double>& lambda,
         const ModulusSpec& spec) {
        const BihariBound b = bihari_bound(g0, times, lambda, spec);
        py::dict d;
        d["times"] = b.times;
        d["Lambda"] = b.Lambda;
        d["bound"] = b.bound;
        d["blowup_time"] = b.blowup_time ? py::cast(*b.blowup_time) : py::none();
        return d;
      },
      py::arg("g0"), py::arg("times"), py::arg("lambda_"), py::arg("spec"));

  m.def(
      "bsde_linear",
      [](double T, std::size_t N, std::size_t paths, std::uint64_t seed, int degree) {
        BsdeProblem bp;
        bp.drift = MonotoneMap::linear(Eigen::MatrixXd::Constant(1, 1, -1.0));
        bp.terminal = [](const Eigen::VectorXd& w) { return Eigen::VectorXd(w.head(1)); };
        bp.T = T;
        const BsdePaths p = simulate_bsde_paths(seed, T, N, 1, paths);
        const BsdeSolution s = solve_bsde_autonomous_C(bp, p, degree);
        std::vector<double> mean_x;
        for (std::size_t k = 0; k <= N; ++k) mean_x.push_back(s.mean_x(k));
        py::dict d;
        d["times"] = s.times;
        d["mean_x"] = mean_x;
        d["regression_error"] = s.regression_error;
        d["x_values"] = s.x_values;
        d["W"] = p.W;
        return d;
      },
      py::arg("T") = 1.0, py::arg("N") = 32, py::arg("paths") = 2000, py::arg("seed") = 1,
      py::arg("degree") = 2);

  m.def("experiments", [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : experiment_registry()) out.emplace_back(e.name, e.description);
    return out;
  });
  m.def(
      "validate_config",
      [](const std::string& text, const std::vector<std::string>& overrides) {
        ExperimentConfig c = ExperimentConfig::parse_string(text);
        for (const auto& o : overrides) c.set(o);
        return validate_config(c);
      },
      py::arg("text"), py::arg("overrides") = std::vector<std::string>{});
  m.def(
      "run_experiment",
      [](const std::string& text, const std::vector<std::string>& overrides) {
        ExperimentConfig c = ExperimentConfig::parse_string(text);
        for (const auto& o : overrides) c.set(o);
        RunOutcome r;
        {
          py::gil_scoped_release release;
          r = run_experiment(c);
        }
        return outcome_dict(r);
      },
      py::arg("text"), py::arg("overrides") = std::vector<std::string>{});
  m.attr("__version__") = code_version();
}
