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

#include "choicefn/model_io.hpp"

#include <fstream>
#include <vector>

#include "choicefn/errors.hpp"

namespace choicefn {

namespace {

using nlohmann::json;

json vec(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd to_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json matrix_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec(m.row(i).transpose()));
  return rows;
}

Eigen::MatrixXd from_rows(const json& rows, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Eigen::VectorXd r = to_vec(rows[i]);
    if (r.size() != cols) {
      throw Error(ErrorCode::kSchemaMismatch, "ragged feature matrix in model file");
    }
    m.row(static_cast<Eigen::Index>(i)) = r.transpose();
  }
  return m;
}

}  // namespace

FitMetadata metadata_of(const FitReport& report) {
  return FitMetadata{report.seed, report.iterations, report.final_elbo,
                     report.converged};
}

json model_to_json(const FittedModel& model, const FitMetadata& meta) {
  const VariationalState& s = model.state();
  json dims = json::array();
  for (int i = 0; i < model.latent_dim(); ++i) {
    const auto iz = static_cast<std::size_t>(i);
    dims.push_back({{"nu", vec(s.nu[iz])},
                    {"log_lambda", vec(s.log_lambda[iz])},
                    {"lambda", vec(s.log_lambda[iz].array().exp().matrix())}});
  }
  json kernels = json::array();
  for (const auto& ls : s.log_lengthscales) {
    kernels.push_back({{"log_lengthscales", vec(ls)},
                       {"lengthscales", vec(ls.array().exp().matrix())}});
  }
  return {{"schema_version", kModelSchemaVersion},
          {"latent_dim", model.latent_dim()},
          {"features", matrix_rows(model.features())},
          {"training_index", model.training_index()},
          {"jitter", model.jitter()},
          {"shared_lengthscales", s.shared_lengthscales()},
          {"kernels", std::move(kernels)},
          {"log_sigma", s.log_sigma},
          {"sigma", s.sigma()},
          {"dimensions", std::move(dims)},
          {"fit", {{"seed", meta.seed},
                   {"iterations", meta.iterations},
                   {"final_elbo", meta.final_elbo},
                   {"converged", meta.converged}}}};
}

FittedModel model_from_json(const json& j, FitMetadata* meta) {
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kModelSchemaVersion) {
      throw Error(ErrorCode::kSchemaMismatch,
                  "unsupported model schema version " + std::to_string(version));
    }
    const auto& rows = j.at("features");
    const Eigen::Index c =
        rows.empty() ? 0 : static_cast<Eigen::Index>(rows.at(0).size());
    Eigen::MatrixXd features = from_rows(rows, c);
    VariationalState state;
    for (const auto& dim : j.at("dimensions")) {
      state.nu.push_back(to_vec(dim.at("nu")));
      state.log_lambda.push_back(to_vec(dim.at("log_lambda")));
    }
    for (const auto& k : j.at("kernels")) {
      state.log_lengthscales.push_back(to_vec(k.at("log_lengthscales")));
    }
    state.log_sigma = j.at("log_sigma").get<double>();
    if (state.latent_dim() != j.at("latent_dim").get<int>()) {
      throw Error(ErrorCode::kSchemaMismatch, "latent_dim disagrees with dimensions");
    }
    for (const auto& ls : state.log_lengthscales) {
      if (ls.size() != c) {
        throw Error(ErrorCode::kSchemaMismatch, "lengthscale count != feature count");
      }
    }
    const auto kernel_count = state.log_lengthscales.size();
    if (kernel_count != 1 && kernel_count != static_cast<std::size_t>(state.latent_dim())) {
      throw Error(ErrorCode::kSchemaMismatch, "wrong number of kernels");
    }
    if (meta != nullptr) {
      const auto& f = j.at("fit");
      meta->seed = f.at("seed").get<std::uint64_t>();
      meta->iterations = f.at("iterations").get<int>();
      meta->final_elbo = f.at("final_elbo").get<double>();
      meta->converged = f.at("converged").get<bool>();
    }
    return FittedModel(std::move(features), std::move(state),
                       j.at("jitter").get<double>(),
                       j.at("training_index").get<std::vector<Index>>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, std::string("malformed model file: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidArgument) {
      throw Error(ErrorCode::kSchemaMismatch, std::string("inconsistent model file: ") + e.what());
    }
    throw;
  }
}

void save_model(const FittedModel& model, const FitMetadata& meta,
                const std::string& path) {
  write_json_file(model_to_json(model, meta), path);
}

FittedModel load_model(const std::string& path, FitMetadata* meta) {
  return model_from_json(read_json_file(path, "model"), meta);
}

json fit_report_to_json(const FitReport& report, bool include_wall_clock) {
  json j = {{"final_elbo", report.final_elbo},
            {"elbo_trace", report.elbo_trace},
            {"iterations", report.iterations},
            {"converged", report.converged},
            {"max_iters_no_improvement", report.max_iters_no_improvement},
            {"seed", report.seed}};
  if (include_wall_clock) j["wall_seconds"] = report.wall_seconds;
  return j;
}

json read_json_file(const std::string& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, what + " not found: " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, "cannot parse " + path + ": " + e.what());
  }
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path);
}

}  // namespace choicefn
