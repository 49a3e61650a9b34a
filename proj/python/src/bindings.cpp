// Copyright 2026 The choicefn Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Python bindings. Long-running calls release the GIL.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "choicefn/dataset.hpp"
#include "choicefn/errors.hpp"
#include "choicefn/evaluation.hpp"
#include "choicefn/likelihood.hpp"
#include "choicefn/model_io.hpp"
#include "choicefn/model_selection.hpp"
#include "choicefn/prediction.hpp"
#include "choicefn/synthetic.hpp"
#include "choicefn/variational.hpp"

namespace py = pybind11;
using namespace choicefn;

namespace {

using Observation = std::pair<std::vector<Index>, std::vector<Index>>;

ChoiceDataset make_dataset(const Eigen::MatrixXd& features,
                           const std::vector<Observation>& observations) {
  ChoiceDataset ds;
  ds.objects.features = features;
  for (const auto& [set, chosen] : observations) ds.observations.push_back({set, chosen});
  return ds;
}

std::vector<Observation> observations_of(const ChoiceDataset& ds) {
  std::vector<Observation> out;
  out.reserve(ds.observations.size());
  for (const auto& o : ds.observations) out.emplace_back(o.set, o.chosen);
  return out;
}

SetPredictionMode parse_mode(const std::string& mode) {
  if (mode == "marginal") return SetPredictionMode::kMarginal;
  if (mode == "exact") return SetPredictionMode::kExact;
  throw Error(ErrorCode::kInvalidArgument, "mode must be 'marginal' or 'exact'");
}

ProbabilitySemantics parse_semantics(const std::string& semantics) {
  if (semantics == "indicator") return ProbabilitySemantics::kIndicator;
  if (semantics == "relaxed") return ProbabilitySemantics::kRelaxed;
  throw Error(ErrorCode::kInvalidArgument, "semantics must be 'indicator' or 'relaxed'");
}

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["a_mean"] = r.a_mean;
  d["accuracy"] = r.accuracy;
  d["tpr"] = r.tpr;
  d["tnr"] = r.tnr;
  d["tp"] = r.tp;
  d["tn"] = r.tn;
  d["fp"] = r.fp;
  d["fn"] = r.fn;
  return d;
}

}  // namespace

PYBIND11_MODULE(_choicefn, m) {
  m.doc() = "Gaussian-process choice functions with Pareto rationalization";

  static py::exception<Error> choice_error(m, "ChoicefnError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const auto type = py::reinterpret_borrow<py::object>(choice_error.ptr());
      py::object inst = type(std::string(error_code_name(e.code())) + ": " + e.what());
      inst.attr("code") = error_code_name(e.code());
      PyErr_SetObject(choice_error.ptr(), inst.ptr());
    }
  });

  py::class_<ChoiceDataset>(m, "ChoiceDataset")
      .def(py::init(&make_dataset), py::arg("features"), py::arg("observations"),
           "features: t x c array; observations: list of (set, chosen) index lists")
      .def_property_readonly("features", [](const ChoiceDataset& d) { return d.objects.features; })
      .def_property_readonly("observations", &observations_of)
      .def_property_readonly("n_objects", [](const ChoiceDataset& d) { return d.objects.size(); })
      .def("__len__", [](const ChoiceDataset& d) { return d.observations.size(); })
      .def("validate", [](const ChoiceDataset& d) { validate_dataset(d); })
      .def("to_json", [](const ChoiceDataset& d) { return dataset_to_json(d).dump(); })
      .def_static("from_json",
                  [](const std::string& s) { return dataset_from_json(nlohmann::json::parse(s)); })
      .def("save", [](const ChoiceDataset& d, const std::string& path) { save_dataset(d, path); })
      .def_static("load", &load_dataset, py::arg("path"));

  m.def(
      "gen_example1",
      [](int n_points, int m_sets, int set_size, double lower, double upper, std::uint64_t seed) {
        const auto g = gen_example1({n_points, m_sets, set_size, lower, upper, seed});
        return std::make_pair(g.dataset, g.true_utilities);
      },
      py::arg("n_points") = 200, py::arg("m") = 50, py::arg("set_size") = 3,
      py::arg("lower") = -4.5, py::arg("upper") = 4.5, py::arg("seed") = 0,
      "Example-1 dataset and its true utilities [cos 2x, -sin 2x].");
  m.def(
      "pareto_choice", [](const Eigen::MatrixXd& u) { return pareto_choice(u).chosen; },
      py::arg("utilities"), "Undominated rows of an n x d utility matrix.");

  m.def(
      "log_lik",
      [](const ChoiceDataset& d, const Eigen::MatrixXd& u, double sigma, bool clamp) {
        return log_lik_dataset(d, u, sigma, {.clamp = clamp});
      },
      py::arg("dataset"), py::arg("u"), py::arg("sigma"), py::arg("clamp") = true);
  m.def(
      "grad_log_lik",
      [](const ChoiceDataset& d, const Eigen::MatrixXd& u, double sigma) {
        const auto g = grad_log_lik(encode_pairs(d), u, sigma);
        return py::make_tuple(g.value, g.d_u, g.d_sigma);
      },
      py::arg("dataset"), py::arg("u"), py::arg("sigma"),
      "Returns (value, d/du, d/dsigma) of the clamped log-likelihood.");

  py::class_<FitConfig>(m, "FitConfig")
      .def(py::init<>())
      .def_readwrite("iters", &FitConfig::iters)
      .def_readwrite("learning_rate", &FitConfig::learning_rate)
      .def_readwrite("mc_samples", &FitConfig::mc_samples)
      .def_readwrite("seed", &FitConfig::seed)
      .def_readwrite("shared_lengthscales", &FitConfig::shared_lengthscales)
      .def_readwrite("jitter", &FitConfig::jitter)
      .def_readwrite("map_iters", &FitConfig::map_iters)
      .def_readwrite("init_lengthscale", &FitConfig::init_lengthscale)
      .def_readwrite("init_sigma", &FitConfig::init_sigma)
      .def_readwrite("final_elbo_samples", &FitConfig::final_elbo_samples)
      .def_readwrite("threads", &FitConfig::threads);

  py::class_<FitReport>(m, "FitReport")
      .def_readonly("final_elbo", &FitReport::final_elbo)
      .def_readonly("elbo_trace", &FitReport::elbo_trace)
      .def_readonly("iterations", &FitReport::iterations)
      .def_readonly("converged", &FitReport::converged)
      .def_readonly("seed", &FitReport::seed);

  py::class_<FittedModel>(m, "FittedModel")
      .def_property_readonly("latent_dim", &FittedModel::latent_dim)
      .def_property_readonly("sigma", &FittedModel::sigma)
      .def_property_readonly("features", &FittedModel::features)
      .def_property_readonly("posterior_mean", &FittedModel::posterior_mean)
      .def("lengthscales", [](const FittedModel& f, int dim) { return f.kernel(dim).lengthscales; })
      .def(
          "predict_latent",
          [](const FittedModel& f, const Eigen::MatrixXd& x) {
            const auto p = predict_latent(f, x);
            Eigen::MatrixXd mean(x.rows(), p.latent_dim()), var(x.rows(), p.latent_dim());
            for (int i = 0; i < p.latent_dim(); ++i) {
              mean.col(i) = p.mean[static_cast<std::size_t>(i)];
              var.col(i) = p.covariance[static_cast<std::size_t>(i)].diagonal();
            }
            return std::make_pair(mean, var);
          },
          py::arg("x"), "Predictive means and variances, each p x d.")
      .def(
          "predict_set",
          [](const FittedModel& f, const Eigen::MatrixXd& x, const std::vector<Index>& a_star,
             int n_samples, std::uint64_t seed, const std::string& mode) {
            SetPredictionOptions o;
            o.n_samples = n_samples;
            o.seed = seed;
            o.mode = parse_mode(mode);
            const auto p = predict_set(f, x, a_star, o);
            return std::make_pair(p.chosen, p.marginal);
          },
          py::arg("x"), py::arg("set"), py::arg("n_samples") = kDefaultPredictiveSamples,
          py::arg("seed") = 0, py::arg("mode") = "marginal",
          "Predicted choice set and per-member probability of being undominated.")
      .def(
          "choice_probability",
          [](const FittedModel& f, const Eigen::MatrixXd& x, const std::vector<Index>& a_star,
             const std::vector<Index>& c_star, int n_samples, std::uint64_t seed,
             const std::string& semantics) {
            return choice_probability(f, x, a_star, c_star, n_samples, seed,
                                      parse_semantics(semantics));
          },
          py::arg("x"), py::arg("set"), py::arg("chosen"),
          py::arg("n_samples") = kDefaultPredictiveSamples, py::arg("seed") = 0,
          py::arg("semantics") = "indicator")
      .def(
          "save",
          [](const FittedModel& f, const std::string& path) { save_model(f, FitMetadata{}, path); },
          py::arg("path"))
      .def_static(
          "load", [](const std::string& path) { return load_model(path); }, py::arg("path"));

  m.def(
      "fit",
      [](const ChoiceDataset& d, int latent_dim, const FitConfig& config) {
        py::gil_scoped_release release;
        return fit(d, latent_dim, config);
      },
      py::arg("dataset"), py::arg("latent_dim"), py::arg("config") = FitConfig{},
      "Variational fit; returns (FittedModel, FitReport).");

  py::class_<LooResult>(m, "LooResult")
      .def_readonly("phi", &LooResult::phi)
      .def_readonly("elpd", &LooResult::elpd)
      .def_readonly("khat", &LooResult::khat)
      .def_readonly("n_samples", &LooResult::n_samples)
      .def_readonly("unreliable", &LooResult::unreliable)
      .def_readonly("degenerate", &LooResult::degenerate)
      .def_property_readonly("max_khat", &LooResult::max_khat);

  m.def(
      "psis_loo",
      [](const FittedModel& f, const ChoiceDataset& d, int n_samples, std::uint64_t seed,
         int threads) {
        py::gil_scoped_release release;
        return psis_loo(f, d, n_samples, seed, threads);
      },
      py::arg("model"), py::arg("dataset"), py::arg("n_samples") = kDefaultLooSamples,
      py::arg("seed") = 0, py::arg("threads") = 1);
  m.def(
      "psis_loo_from_log_lik", &psis_loo_from_log_lik, py::arg("log_lik"),
      "PSIS-LOO from an m x S matrix of pointwise log-likelihoods.");
  m.def(
      "fit_gpd_tail",
      [](const std::vector<double>& log_weights) {
        const auto f = fit_gpd_tail(log_weights);
        return py::make_tuple(f.khat, f.sigma, f.log_weights);
      },
      py::arg("log_weights"), "Returns (khat, scale, smoothed log weights).");

  m.def(
      "select_latent_dim",
      [](const ChoiceDataset& d, int d_max, int loo_samples, bool early_stop,
         const FitConfig& config) {
        SelectionConfig c{config, d_max, loo_samples, early_stop};
        SelectionResult r;
        {
          py::gil_scoped_release release;
          r = select_latent_dim(d, c);
        }
        py::list rows;
        for (const auto& row : r.rows) {
          py::dict e;
          e["d"] = row.d;
          e["failed"] = row.failed;
          e["phi"] = row.phi;
          e["max_khat"] = row.max_khat;
          e["n_bad_khat"] = row.n_bad_khat;
          if (row.failed) e["error"] = row.error;
          rows.append(e);
        }
        return py::make_tuple(r.best_d, rows, *r.best_model);
      },
      py::arg("dataset"), py::arg("d_max") = 5, py::arg("loo_samples") = kDefaultLooSamples,
      py::arg("early_stop") = false, py::arg("config") = FitConfig{},
      "Forward selection of the latent dimension; returns (best_d, rows, best_model).");

  m.def(
      "a_mean",
      [](const std::vector<std::vector<Index>>& predicted, const ChoiceDataset& truth) {
        return report_dict(a_mean(predicted, truth));
      },
      py::arg("predicted"), py::arg("truth"));
  m.def("pairwise_accuracy", &pairwise_accuracy, py::arg("predicted"), py::arg("truth"));
  m.def(
      "split_dataset",
      [](const ChoiceDataset& d, double train_fraction, std::uint64_t seed) {
        auto s = split_dataset(d, train_fraction, seed);
        return std::make_pair(std::move(s.train), std::move(s.test));
      },
      py::arg("dataset"), py::arg("train_fraction"), py::arg("seed") = 0);
}
