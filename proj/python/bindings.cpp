#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gradplan/baselines.hpp"
#include "gradplan/config.hpp"
#include "gradplan/domains.hpp"
#include "gradplan/errors.hpp"
#include "gradplan/harness.hpp"
#include "gradplan/optimizer.hpp"
#include "gradplan/planner.hpp"

namespace py = pybind11;
using namespace gradplan;

namespace {

// A benchmark domain with its parameters, so heuristics stay available.
struct Domain {
  domains::DomainParams params;
  domains::DomainSpec spec;
};

Domain make(const std::string& name, const std::map<std::string, std::string>& overrides) {
  auto params = domains::default_params(name);
  const std::string prefix(domains::override_prefix(params));
  for (const auto& [key, value] : overrides) {
    domains::apply_override(params, key.find('.') == std::string::npos ? prefix + "." + key : key,
                            value);
  }
  auto spec = domains::make_domain(params);
  return {std::move(params), std::move(spec)};
}

std::vector<double> flatten(const std::vector<std::vector<double>>& rows, std::size_t dim) {
  std::vector<double> out;
  out.reserve(rows.size() * dim);
  for (const auto& row : rows) {
    if (row.size() != dim) {
      throw ConfigError("every action row needs " + std::to_string(dim) + " entries",
                        "actions");
    }
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

std::vector<std::vector<double>> rows_of(std::span<const double> flat, std::size_t dim) {
  std::vector<std::vector<double>> out;
  for (std::size_t k = 0; k + dim <= flat.size(); k += dim) {
    out.emplace_back(flat.begin() + k, flat.begin() + k + dim);
  }
  return out;
}

py::dict rollout(const Domain& d, const std::vector<std::vector<double>>& actions) {
  planner::ActionTensor acts;
  acts.instances = 1;
  acts.horizon = actions.size();
  acts.dim = d.spec.action_dim;
  acts.data = flatten(actions, acts.dim);
  acts.bounds = d.spec.action_bounds;
  const auto traj = planner::rollout(d.spec, acts);
  py::dict out;
  out["states"] = rows_of(traj.states, traj.state_dim);
  out["rewards"] = traj.rewards;
  out["value"] = traj.values.at(0);
  return out;
}

py::tuple value_and_gradient(const Domain& d, const std::vector<std::vector<double>>& actions) {
  planner::BatchEvaluator eval(d.spec, actions.size());
  const auto flat = flatten(actions, d.spec.action_dim);
  std::vector<double> grad(flat.size());
  const double v = eval.instance_gradient(flat, grad);
  return py::make_tuple(v, rows_of(grad, d.spec.action_dim));
}

py::dict heuristic(const Domain& d, std::size_t horizon) {
  const auto r = baselines::rollout_heuristic(
      d.spec, baselines::make_heuristic(d.params), horizon ? horizon : d.spec.default_horizon);
  py::dict out;
  out["states"] = rows_of(r.states, d.spec.state_dim);
  out["actions"] = rows_of(r.actions, d.spec.action_dim);
  out["rewards"] = r.rewards;
  out["value"] = r.value;
  return out;
}

py::dict plan_result(const planner::PlanResult& r) {
  py::list history;
  for (const auto& e : r.history) {
    py::dict row;
    row["epoch"] = e.epoch;
    row["loss"] = e.loss;
    row["best_value"] = e.best_value;
    row["wall_ms"] = e.wall_ms;
    history.append(row);
  }
  py::dict out;
  out["best_instance"] = r.best_instance;
  out["best_value"] = r.best_value;
  out["best_epoch"] = r.best_epoch;
  out["epochs_run"] = r.epochs_run;
  out["actions"] = rows_of(r.best_actions, r.action_dim);
  out["history"] = history;
  return out;
}

py::dict plan(const Domain& d, std::size_t instances, std::size_t horizon, std::size_t epochs,
              const std::string& optimizer, double rate, std::optional<double> epsilon,
              std::uint64_t seed, double tol, std::size_t patience, std::size_t workers) {
  planner::PlannerConfig c;
  c.instances = instances;
  c.horizon = horizon;
  c.epochs = epochs;
  c.optimizer = planner::parse_algorithm(optimizer);
  c.rate = rate;
  c.epsilon = epsilon;
  c.seed = seed;
  c.tol = tol;
  c.patience = patience;
  c.workers = workers;
  planner::PlanResult r;
  {
    py::gil_scoped_release release;
    r = planner::plan(d.spec, c);
  }
  return plan_result(r);
}

py::dict run(const std::vector<std::pair<std::string, std::string>>& entries) {
  const auto config = cli::parse_config(entries);
  cli::RunOutputs out;
  {
    py::gil_scoped_release release;
    out = cli::run(config);
  }
  py::dict d;
  d["curve"] = out.curve;
  d["plan"] = out.plan;
  d["summary"] = out.summary;
  d["best_value"] = out.result.best_value;
  d["epochs_run"] = out.result.epochs_run;
  if (out.heuristic_value) d["heuristic_value"] = *out.heuristic_value;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Planning by backpropagation through unrolled domain dynamics";

  // Exception types live for the lifetime of the interpreter.
  const auto make_error = [&m](const char* name, PyObject* parent) {
    PyObject* type = PyErr_NewException((std::string("gradplan._core.") + name).c_str(),
                                        parent, nullptr);
    m.attr(name) = py::handle(type);
    return type;
  };
  static PyObject* base = make_error("GradplanError", PyExc_RuntimeError);
  static PyObject* config_error = make_error("ConfigError", base);
  static PyObject* numerical_error = make_error("NumericalError", base);
  static PyObject* io_error = make_error("IoError", base);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      PyErr_SetString(config_error, e.what());
    } catch (const NumericalError& e) {
      PyErr_SetString(numerical_error, e.what());
    } catch (const IoError& e) {
      PyErr_SetString(io_error, e.what());
    } catch (const Error& e) {
      PyErr_SetString(base, e.what());
    }
  });

  m.def("domain_names", &domains::domain_names);
  m.def(
      "nav_lambda",
      [](double d, const std::string& variant) {
        if (variant == "nonlinear") return domains::nav_lambda(d, domains::NavVariant::kNonlinear);
        if (variant == "bilinear") return domains::nav_lambda(d, domains::NavVariant::kBilinear);
        if (variant == "linear") return domains::nav_lambda(d, domains::NavVariant::kLinear);
        throw ConfigError("expected nonlinear, bilinear or linear", "variant");
      },
      py::arg("d"), py::arg("variant"));

  py::class_<Domain>(m, "Domain")
      .def(py::init(&make), py::arg("name"),
           py::arg("overrides") = std::map<std::string, std::string>{})
      .def_property_readonly("name", [](const Domain& d) { return d.spec.name; })
      .def_property_readonly("state_dim", [](const Domain& d) { return d.spec.state_dim; })
      .def_property_readonly("action_dim", [](const Domain& d) { return d.spec.action_dim; })
      .def_property_readonly("default_horizon",
                             [](const Domain& d) { return d.spec.default_horizon; })
      .def_property_readonly("initial_state",
                             [](const Domain& d) { return d.spec.initial_state; })
      .def_property_readonly("action_bounds",
                             [](const Domain& d) {
                               return py::make_tuple(d.spec.action_bounds.lower,
                                                     d.spec.action_bounds.upper);
                             })
      .def("rollout", &rollout, py::arg("actions"))
      .def("value_and_gradient", &value_and_gradient, py::arg("actions"))
      .def("heuristic", &heuristic, py::arg("horizon") = 0);

  py::class_<planner::OptimizerState>(m, "Optimizer")
      .def(py::init([](const std::string& algorithm, double rate, std::size_t size,
                       std::optional<double> epsilon) {
             return planner::OptimizerState(planner::parse_algorithm(algorithm), rate, size,
                                            epsilon);
           }),
           py::arg("algorithm"), py::arg("rate"), py::arg("size"),
           py::arg("epsilon") = py::none())
      .def(
          "step",
          [](planner::OptimizerState& opt, std::vector<double> actions,
             const std::vector<double>& grads) {
            opt.step(actions, grads);
            return actions;
          },
          py::arg("actions"), py::arg("grads"))
      .def_property_readonly("epsilon", &planner::OptimizerState::epsilon)
      .def_property_readonly("step_count", &planner::OptimizerState::step_count)
      .def_property_readonly("second_moment", [](const planner::OptimizerState& opt) {
        return std::vector<double>(opt.second_moment().begin(), opt.second_moment().end());
      });

  m.def("plan", &plan, py::arg("domain"), py::arg("instances") = 100, py::arg("horizon") = 0,
        py::arg("epochs") = 1000, py::arg("optimizer") = "rmsprop", py::arg("rate") = 0.01,
        py::arg("epsilon") = py::none(), py::arg("seed") = 0, py::arg("tol") = 1e-6,
        py::arg("patience") = 200, py::arg("workers") = 1);

  m.def("run", &run, py::arg("entries"),
        "Runs the harness from (key, value) settings and writes curve.csv, plan.json and "
        "summary.json.");
}
