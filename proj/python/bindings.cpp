#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pcbf/concentration.hpp"
#include "pcbf/cvar.hpp"
#include "pcbf/error.hpp"
#include "pcbf/experiment.hpp"
#include "pcbf/filter.hpp"

namespace py = pybind11;
using namespace pcbf;

namespace {

SampleVector samples_of(const std::vector<double>& w) { return SampleVector(w); }

ControlBox box_of(const VectorXd& lower, const VectorXd& upper) {
    ControlBox box{lower, upper};
    box.validate();
    return box;
}

py::dict certificate_dict(const CvarCertificate& c) {
    py::dict d;
    d["bound"] = c.bound;
    d["empirical_cvar"] = c.empirical_cvar;
    d["tail_term"] = c.tail_term;
    d["band_term"] = c.band_term;
    d["alpha"] = c.alpha;
    d["delta"] = c.delta;
    d["n"] = c.n;
    d["sigma_bar"] = c.sigma_bar;
    return d;
}

py::dict outcome_dict(const FilterOutcome& o) {
    py::dict d;
    d["u"] = o.u;
    d["feasible"] = o.feasible;
    d["fallback_used"] = o.fallback_used;
    d["bound_at_desired"] = o.bound_at_desired;
    d["certificate"] = certificate_dict(o.certificate);
    return d;
}

py::dict trial_dict(const TrialLog& log) {
    py::dict d;
    d["method"] = to_string(log.method);
    d["trial"] = log.trial;
    d["seed"] = log.seed;
    d["outcome"] = to_string(log.outcome);
    d["reached"] = log.reached;
    d["violated"] = log.violated;
    d["steps"] = log.steps.size();
    d["final_state"] = log.final_state;
    std::vector<double> h, t;
    for (const auto& r : log.steps) {
        t.push_back(r.time);
        h.push_back(r.h_true);
    }
    d["time"] = t;
    d["h_true"] = h;
    d["error"] = log.error;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Probabilistic CBF safety filter with sample-based CVaR certificates";

    py::register_exception<Error>(m, "PcbfError", PyExc_ValueError);

    m.def("dkw_epsilon", &dkw_epsilon, py::arg("n"), py::arg("delta"));
    m.def("tail_correction", &tail_correction, py::arg("sigma_bar"), py::arg("n"), py::arg("delta"),
          py::arg("alpha"));
    m.def("per_step_alpha", &per_step_alpha, py::arg("epsilon"), py::arg("horizon"));

    m.def("empirical_cvar", [](const std::vector<double>& w, double alpha) { return empirical_cvar(samples_of(w), alpha); },
          py::arg("samples"), py::arg("alpha"));
    m.def("order_statistic_cvar",
          [](const std::vector<double>& w, double alpha, double shift) {
              return order_statistic_cvar(samples_of(w), alpha, shift);
          },
          py::arg("samples"), py::arg("alpha"), py::arg("shift") = 0.0);
    m.def("shifted_cvar",
          [](const std::vector<double>& w, double alpha, double shift) { return shifted_cvar(samples_of(w), alpha, shift); },
          py::arg("samples"), py::arg("alpha"), py::arg("shift"));
    m.def("gaussian_cvar_closed_form", &gaussian_cvar_closed_form, py::arg("mu"), py::arg("sigma"), py::arg("alpha"));
    m.def("certified_cvar_bound",
          [](const std::vector<double>& w, double alpha, double delta, double sigma_bar) {
              return certificate_dict(certified_cvar_bound(samples_of(w), RiskConfig(alpha, delta, w.size()), sigma_bar));
          },
          py::arg("samples"), py::arg("alpha"), py::arg("delta"), py::arg("sigma_bar"));
    m.def("dkw_truncation_bound",
          [](const std::vector<double>& w, double alpha, double delta, double support_max) {
              return dkw_truncation_bound(samples_of(w), alpha, delta, support_max);
          },
          py::arg("samples"), py::arg("alpha"), py::arg("delta"), py::arg("support_max"));

    m.def("filter_control",
          [](const VectorXd& a, const MatrixXd& b, const VectorXd& u_des, double alpha, double delta, double sigma_bar,
             const VectorXd& lower, const VectorXd& upper) {
              const AffineIncrementSet inc{a, b};
              return outcome_dict(filter_control(inc, u_des, RiskConfig(alpha, delta, static_cast<std::size_t>(a.size())),
                                                 sigma_bar, box_of(lower, upper)));
          },
          py::arg("a"), py::arg("b"), py::arg("u_des"), py::arg("alpha"), py::arg("delta"), py::arg("sigma_bar"),
          py::arg("lower"), py::arg("upper"),
          "Certified filter over increments a_i + b_i.u inside the box [lower, upper].");

    m.def("default_config_json", [] { return experiment_config_json(ExperimentConfig{}); });
    m.def("run_trial",
          [](const std::string& config_json, const std::string& method, std::uint64_t seed, std::size_t trial) {
              const ExperimentConfig cfg = parse_experiment_config(config_json);
              TrialLog log;
              {
                  py::gil_scoped_release release;
                  log = run_trial(cfg.scenario, parse_method(method), seed, trial);
              }
              return trial_dict(log);
          },
          py::arg("config_json"), py::arg("method"), py::arg("seed"), py::arg("trial"));
    m.def("run_montecarlo",
          [](const std::string& config_json) {
              const ExperimentConfig cfg = parse_experiment_config(config_json);
              MonteCarloRun run;
              {
                  py::gil_scoped_release release;
                  run = run_montecarlo(cfg);
              }
              return summary_json(run, cfg);
          },
          py::arg("config_json"), "Runs the study and returns the summary as JSON text.");
}
