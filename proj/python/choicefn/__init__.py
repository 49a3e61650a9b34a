# Copyright 2026 The choicefn Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Gaussian-process choice functions with Pareto rationalization."""

from ._choicefn import (
    ChoiceDataset,
    ChoicefnError,
    FitConfig,
    FitReport,
    FittedModel,
    LooResult,
    a_mean,
    fit,
    fit_gpd_tail,
    gen_example1,
    grad_log_lik,
    log_lik,
    pairwise_accuracy,
    pareto_choice,
    psis_loo,
    psis_loo_from_log_lik,
    select_latent_dim,
    split_dataset,
)

__all__ = [
    "ChoiceDataset",
    "ChoicefnError",
    "FitConfig",
    "FitReport",
    "FittedModel",
    "LooResult",
    "a_mean",
    "fit",
    "fit_gpd_tail",
    "gen_example1",
    "grad_log_lik",
    "log_lik",
    "pairwise_accuracy",
    "pareto_choice",
    "psis_loo",
    "psis_loo_from_log_lik",
    "select_latent_dim",
    "split_dataset",
]
