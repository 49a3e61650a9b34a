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

import itertools
import math

import numpy as np
import pytest

import choicefn as cf


def small_dataset():
    ds, utils = cf.gen_example1(n_points=30, m=20, set_size=3, seed=3)
    return ds, utils


def test_dataset_round_trip(tmp_path):
    ds, _ = small_dataset()
    path = str(tmp_path / "d.json")
    ds.save(path)
    back = cf.ChoiceDataset.load(path)
    assert back.observations == ds.observations
    np.testing.assert_array_equal(back.features, ds.features)
    assert cf.ChoiceDataset.from_json(ds.to_json()).observations == ds.observations


def test_invalid_dataset_raises_with_code():
    ds = cf.ChoiceDataset(np.zeros((3, 1)) + np.arange(3)[:, None], [([0, 1], [5])])
    with pytest.raises(cf.ChoicefnError) as info:
        ds.validate()
    assert info.value.code


def test_pareto_choice():
    u = np.array([[1.0, 0.0], [0.54, -0.84], [0.0, 1.0]])
    assert cf.pareto_choice(u) == [0, 2]


def test_log_lik_reduces_to_probit():
    rng = np.random.default_rng(0)
    x = np.linspace(0.0, 1.0, 6)[:, None]
    obs = [([a, b], [a]) for a, b in itertools.permutations(range(6), 2)][:12]
    ds = cf.ChoiceDataset(x, obs)
    u = rng.normal(size=(6, 1))
    sigma = 0.7
    expected = sum(
        math.log(0.5 * math.erfc(-(u[a, 0] - u[b, 0]) / sigma / math.sqrt(2)))
        for (a, b), _ in obs
    )
    assert cf.log_lik(ds, u, sigma, clamp=False) == pytest.approx(expected, rel=1e-12)


def test_gradient_matches_finite_difference():
    ds, _ = small_dataset()
    rng = np.random.default_rng(1)
    u = rng.normal(scale=0.5, size=(ds.n_objects, 2))
    value, d_u, _ = cf.grad_log_lik(ds, u, 0.6)
    assert value == pytest.approx(cf.log_lik(ds, u, 0.6))
    h = 1e-6
    for i, j in [(0, 0), (5, 1), (17, 0)]:
        up, down = u.copy(), u.copy()
        up[i, j] += h
        down[i, j] -= h
        fd = (cf.log_lik(ds, up, 0.6) - cf.log_lik(ds, down, 0.6)) / (2 * h)
        assert d_u[i, j] == pytest.approx(fd, rel=1e-4, abs=1e-6)


def test_fit_predict_and_loo(tmp_path):
    ds, _ = small_dataset()
    config = cf.FitConfig()
    config.iters = 300
    config.seed = 2
    model, report = cf.fit(ds, 2, config)
    assert model.latent_dim == 2
    assert report.iterations == 300
    assert len(report.elbo_trace) == 300
    mean, var = model.predict_latent(ds.features[:4])
    assert mean.shape == (4, 2) and var.shape == (4, 2)
    assert np.all(var > 0)

    chosen, marginal = model.predict_set(ds.features, [0, 1, 2], n_samples=200, seed=1)
    assert set(chosen) <= {0, 1, 2} and chosen
    assert all(0.0 <= p <= 1.0 for p in marginal)
    total = sum(
        model.choice_probability(ds.features, [0, 1, 2], list(c), n_samples=200, seed=1)
        for r in (1, 2, 3)
        for c in itertools.combinations([0, 1, 2], r)
    )
    assert total == pytest.approx(1.0)

    loo = cf.psis_loo(model, ds, n_samples=500, seed=4)
    assert loo.phi == pytest.approx(sum(loo.elpd))
    assert len(loo.khat) == len(ds)

    path = str(tmp_path / "model.json")
    model.save(path)
    again = cf.FittedModel.load(path)
    np.testing.assert_array_equal(again.predict_latent(ds.features)[0],
                                  model.predict_latent(ds.features)[0])


def test_fit_is_deterministic():
    ds, _ = small_dataset()
    config = cf.FitConfig()
    config.iters = 100
    a, _ = cf.fit(ds, 1, config)
    b, _ = cf.fit(ds, 1, config)
    np.testing.assert_array_equal(a.posterior_mean, b.posterior_mean)


def test_select_latent_dim_rows():
    ds, _ = small_dataset()
    config = cf.FitConfig()
    config.iters = 100
    best, rows, model = cf.select_latent_dim(ds, d_max=2, loo_samples=200, config=config)
    assert [r["d"] for r in rows] == [1, 2]
    assert best in (1, 2) and model.latent_dim == best


def test_gpd_shape_on_exponential_weights():
    rng = np.random.default_rng(0)
    khat, _, smoothed = cf.fit_gpd_tail(np.log(rng.exponential(size=4000)).tolist())
    assert abs(khat) < 0.15
    assert len(smoothed) == 4000


def test_metrics_and_split():
    ds, _ = small_dataset()
    truth = [chosen for _, chosen in ds.observations]
    assert cf.a_mean(truth, ds)["a_mean"] == 1.0
    train, test = cf.split_dataset(ds, 0.75, seed=1)
    assert len(train) + len(test) == len(ds)
