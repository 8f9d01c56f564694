#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <limits>

#include "allelo/blocks.hpp"
#include "allelo/commands.hpp"
#include "allelo/coupling.hpp"
#include "allelo/dual.hpp"
#include "allelo/meanfield.hpp"

namespace py = pybind11;
using namespace allelo;

namespace {

Params make_params(double lambda1, double lambda2, double gamma, int dim, double radius, const std::string& norm) {
  Params p;
  p.lambda1 = lambda1;
  p.lambda2 = lambda2;
  p.gamma_infinite = std::isinf(gamma);
  p.gamma = p.gamma_infinite ? 1.0 : gamma;
  p.neighborhood = {radius, norm_from_string(norm), dim};
  p.validate();
  return p;
}

InitialSpec product(const std::array<double, 4>& densities) {
  InitialSpec s;
  s.densities = densities;
  s.validate();
  return s;
}

py::array_t<std::uint8_t> to_array(const Configuration& xi) {
  std::vector<py::ssize_t> shape(xi.domain().torus().sides().begin(), xi.domain().torus().sides().end());
  py::array_t<std::uint8_t> a(shape);
  auto* out = a.mutable_data();
  for (std::size_t i = 0; i < xi.size(); ++i) out[i] = static_cast<std::uint8_t>(xi[static_cast<Site>(i)]);
  return a;
}

py::dict simulate(const Params& p, const std::vector<int>& sides, double horizon, std::uint64_t seed,
                  const std::array<double, 4>& densities, std::vector<double> sample_times) {
  const DomainPtr dom = make_domain(sides, p.neighborhood);
  const GraphicalRep rep = build_events(seed, p, dom, horizon);
  RunOptions opt;
  if (sample_times.empty()) sample_times = {horizon};
  opt.sample_times = sample_times;
  opt.snapshot_times = {sample_times.back()};
  Trajectory tr;
  {
    py::gil_scoped_release release;
    tr = run(make_initial(product(densities), seed, dom), rep, p, opt);
  }
  py::array_t<double> dens({static_cast<py::ssize_t>(tr.samples.size()), py::ssize_t{4}});
  auto d = dens.mutable_unchecked<2>();
  std::vector<double> times;
  for (std::size_t i = 0; i < tr.samples.size(); ++i) {
    times.push_back(tr.samples[i].time);
    for (int s = 0; s < 4; ++s) d(static_cast<py::ssize_t>(i), s) = tr.samples[i].density[static_cast<std::size_t>(s)];
  }
  py::dict out;
  out["times"] = times;
  out["densities"] = dens;
  out["final"] = to_array(tr.snapshots.back());
  out["blue_survived"] = tr.blue_survived;
  out["red_survived"] = tr.red_survived;
  out["events"] = tr.events_processed;
  return out;
}

}  // namespace

PYBIND11_MODULE(allelopathy, m) {
  m.doc() = "Multitype contact process with frozen sites";

  py::class_<Params>(m, "Params")
      .def(py::init(&make_params), py::arg("lambda1") = 1.0, py::arg("lambda2") = 1.0, py::arg("gamma") = 1.0,
           py::arg("dim") = 2, py::arg("radius") = 1.0, py::arg("norm") = "l1")
      .def_readonly("lambda1", &Params::lambda1)
      .def_readonly("lambda2", &Params::lambda2)
      .def_property_readonly("gamma",
                             [](const Params& p) { return p.gamma_infinite ? std::numeric_limits<double>::infinity() : p.gamma; })
      .def_property_readonly("dim", [](const Params& p) { return p.neighborhood.dim; })
      .def("__repr__", [](const Params& p) {
        return "Params(lambda1=" + format_number(p.lambda1) + ", lambda2=" + format_number(p.lambda2) +
               ", gamma=" + (p.gamma_infinite ? std::string("inf") : format_number(p.gamma)) + ")";
      });

  m.def("simulate", &simulate, py::arg("params"), py::arg("sides"), py::arg("horizon"), py::arg("seed") = 0,
        py::arg("densities") = std::array<double, 4>{0.0, 0.5, 0.5, 0.0}, py::arg("sample_times") = std::vector<double>{},
        "Forward run; returns sample times, densities (n x 4) and the final configuration.");

  m.def(
      "determine_color",
      [](const Params& p, const std::vector<int>& sides, double horizon, std::uint64_t seed,
         const std::array<double, 4>& densities, Site x, double t) {
        const DomainPtr dom = make_domain(sides, p.neighborhood);
        const GraphicalRep rep = build_events(seed, p, dom, horizon);
        return index_of(determine_color(rep, p, make_initial(product(densities), seed, dom), x, t));
      },
      py::arg("params"), py::arg("sides"), py::arg("horizon"), py::arg("seed"), py::arg("densities"), py::arg("site"),
      py::arg("t"), "State of (site, t) read off the dual.");

  m.def(
      "couple_holds",
      [](const std::vector<Params>& variants, const std::vector<int>& sides, double horizon, std::uint64_t seed) {
        const DomainPtr dom = make_domain(sides, variants.at(0).neighborhood);
        CoupleOptions opt;
        for (double t = 0; t <= horizon; t += 1.0) opt.sample_times.push_back(t);
        return couple(seed, variants, make_initial(InitialSpec{}, seed, dom), horizon, opt).all_hold();
      },
      py::arg("variants"), py::arg("sides"), py::arg("horizon"), py::arg("seed") = 0,
      "True iff every comparable pair keeps its domination order at every integer time.");

  m.def(
      "favorability_rate_check",
      [](double lambda, double gamma, std::size_t samples, std::uint64_t seed) {
        const FavorabilityCheck c = favorability_rate_check(lambda, gamma, samples, seed);
        return py::dict(py::arg("empirical") = c.empirical.value, py::arg("ci") = py::make_tuple(c.empirical.lo, c.empirical.hi),
                        py::arg("cross_first") = c.cross_first, py::arg("birth_first") = c.birth_first,
                        py::arg("printed") = c.printed);
      },
      py::arg("lambda_"), py::arg("gamma"), py::arg("samples") = 10000, py::arg("seed") = 0);

  auto mf = m.def_submodule("meanfield", "Mean-field ODE");
  mf.def(
      "rhs", [](const meanfield::State& u, const Params& p, const std::string& form) {
        return meanfield::rhs(u, p, meanfield::form_from_string(form));
      },
      py::arg("u"), py::arg("params"), py::arg("form") = "corrected");
  mf.def("jacobian", [](const meanfield::State& u, const Params& p) { return meanfield::jacobian(u, p); });
  mf.def("ubar", &meanfield::boundary_fixed_point_blue);
  mf.def("vbar", &meanfield::boundary_fixed_point_red);
  mf.def("interior", [](const Params& p) { return meanfield::interior_fixed_point(p).point; });
  mf.def("classify_region", [](double l1, double l2, double g) {
    const auto r = meanfield::classify_region(l1, l2, g);
    return py::dict(py::arg("in_w1") = r.in_w1, py::arg("in_w2") = r.in_w2, py::arg("coexist") = r.coexistence);
  });
  mf.def("stability", [](const meanfield::State& u, const Params& p) {
    return std::string(meanfield::to_string(meanfield::stability(u, p).stability));
  });
  mf.def(
      "integrate",
      [](const meanfield::State& u0, const Params& p, double dt, double T, double record_every) {
        const auto run = meanfield::integrate(u0, p, meanfield::Form::corrected, dt, T, record_every);
        py::array_t<double> out({static_cast<py::ssize_t>(run.points.size()), py::ssize_t{5}});
        auto o = out.mutable_unchecked<2>();
        for (std::size_t i = 0; i < run.points.size(); ++i) {
          o(static_cast<py::ssize_t>(i), 0) = run.points[i].t;
          for (int c = 0; c < 4; ++c) o(static_cast<py::ssize_t>(i), c + 1) = run.points[i].u[c];
        }
        return out;
      },
      py::arg("u0"), py::arg("params"), py::arg("dt") = 0.01, py::arg("T") = 100.0, py::arg("record_every") = 1.0,
      "Rows of (t, u0, u1, u2, u3).");

  m.def(
      "blocking_fraction",
      [](const Params& p, int L, int M, int ell, std::size_t replicas, std::uint64_t seed) {
        blocks::ExperimentOptions opt;
        opt.replicas = replicas;
        opt.base_seed = seed;
        py::gil_scoped_release release;
        return blocks::blocking_experiment(p, blocks::BlockGeometry::make(L, M, std::nullopt, ell), opt).blocked.value;
      },
      py::arg("params"), py::arg("L") = 20, py::arg("M") = 3, py::arg("ell") = 4, py::arg("replicas") = 30,
      py::arg("seed") = 0);

  m.def(
      "run_config",
      [](const std::string& text, const std::map<std::string, std::string>& overrides, unsigned threads) {
        Overrides ov(overrides.begin(), overrides.end());
        const RunReport r = execute(parse_config_string(text, ov), threads);
        return py::dict(py::arg("dir") = r.dir.string(), py::arg("files") = r.files,
                        py::arg("manifest") = r.manifest.string(), py::arg("summary") = r.summary);
      },
      py::arg("text"), py::arg("overrides") = std::map<std::string, std::string>{}, py::arg("threads") = 1,
      "Runs a configuration in the key-value tree format and writes its outputs.");
  m.def(
      "resolved_config",
      [](const std::string& text, const std::map<std::string, std::string>& overrides) {
        return resolved_config(parse_config_string(text, Overrides(overrides.begin(), overrides.end())));
      },
      py::arg("text"), py::arg("overrides") = std::map<std::string, std::string>{});

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
}
