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


#include <cstdio>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "choicefn/errors.hpp"
#include "choicefn/model_io.hpp"
#include "choicefn/prediction.hpp"
#include "choicefn/synthetic.hpp"
#include "choicefn/variational.hpp"

namespace choicefn {
namespace {

TEST(ModelIo, RoundTripPredictsBitwiseTheSame) {
  Example1Options o;
  o.n_points = 30;
  o.m_sets = 15;
  const auto data = gen_example1(o);
  FitConfig config;
  config.iters = 50;
  config.shared_lengthscales = false;
  config.final_elbo_samples = 32;
  const auto [model, report] = fit(data.dataset, 2, config);
  const auto path = (std::filesystem::temp_directory_path() / "choicefn_model_io_test.json").string();
  save_model(model, metadata_of(report), path);
  FitMetadata meta;
  const auto back = load_model(path, &meta);
  std::remove(path.c_str());
  EXPECT_EQ(meta.iterations, 50);
  EXPECT_EQ(meta.final_elbo, report.final_elbo);
  EXPECT_EQ(back.state().pack(), model.state().pack());
  EXPECT_EQ(back.training_index(), model.training_index());
  EXPECT_EQ(back.features(), model.features());
  const Eigen::MatrixXd x = Eigen::VectorXd::LinSpaced(7, -4.0, 4.0);
  const auto a = predict_latent(model, x);
  const auto b = predict_latent(back, x);
  for (int i = 0; i < 2; ++i) {
    EXPECT_EQ(a.mean[static_cast<std::size_t>(i)], b.mean[static_cast<std::size_t>(i)]);
    EXPECT_EQ(a.covariance[static_cast<std::size_t>(i)], b.covariance[static_cast<std::size_t>(i)]);
  }
  EXPECT_EQ(model_to_json(back, meta).dump(), model_to_json(model, metadata_of(report)).dump());
}

TEST(ModelIo, RejectsMalformedFiles) {
  EXPECT_THROW(model_from_json(nlohmann::json::object()), Error);
  nlohmann::json j = {{"schema_version", 99}};
  try {
    model_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchemaMismatch);
  }
  try {
    load_model("/nonexistent/model.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(FitReportJson, WallClockOnlyOnRequest) {
  FitReport r;
  r.elbo_trace = {-3.0, -2.0};
  r.wall_seconds = 1.5;
  EXPECT_FALSE(fit_report_to_json(r).contains("wall_seconds"));
  EXPECT_EQ(fit_report_to_json(r, true)["wall_seconds"], 1.5);
}

}  // namespace
}  // namespace choicefn
