import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridcast.errors import InputError
from gridcast.ingest import FEATURES, split_chronological
from gridcast.pipeline import SumOfRegressions
from gridcast.regression import POLYNOMIAL, RegressionModel, fit_catalog, predict
from gridcast.schemas import validate_json
from gridcast.synth import (
    PRESETS,
    SyntheticSpec,
    generate,
    generate_full,
    planted_spec,
    response,
    truth_to_json_text,
)


def test_same_seed_identical():
    a, ta = generate(SyntheticSpec(days=60, seed=11))
    b, tb = generate(SyntheticSpec(days=60, seed=11))
    assert a == b
    assert truth_to_json_text(ta) == truth_to_json_text(tb)
    c, _ = generate(SyntheticSpec(days=60, seed=12))
    assert c != a


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10**6))
def test_generated_days_are_physical(seed):
    run = generate_full(SyntheticSpec(days=120, seed=seed))
    ds = run.dataset
    X = ds.features()
    col = {f: X[:, j] for j, f in enumerate(FEATURES)}
    assert np.all(col["t_min"] <= col["t_ave"]) and np.all(col["t_ave"] <= col["t_max"])
    assert np.all((col["t_min"] >= 38) & (col["t_max"] <= 97))
    assert np.all((col["p_rain"] >= 0) & (col["p_rain"] <= 6.5))
    assert np.all((col["lightning_l"] >= 0) & (col["lightning_l"] <= 3000))
    assert np.all(col["lightning_l"] == np.round(col["lightning_l"]))
    Y = ds.targets()
    assert np.all(Y >= 0) and np.all(Y == np.round(Y))
    assert all(isinstance(r.n_sustained, int) and isinstance(r.m_momentary, int) for r in ds)


def test_spec_guards():
    with pytest.raises(InputError):
        SyntheticSpec(days=59)
    with pytest.raises(InputError):
        SyntheticSpec(noise_n=-1.0)
    with pytest.raises(InputError):
        SyntheticSpec(responses_n={"snow": RegressionModel(POLYNOMIAL, (0.0, 1.0), "snow", 1)})
    with pytest.raises(InputError):
        SyntheticSpec.from_dict({"colour": "blue"})


def test_spec_dict_round_trip():
    spec = planted_spec(days=90, seed=4)
    back = SyntheticSpec.from_dict(json.loads(json.dumps(spec.to_dict())))
    assert generate(back)[0] == generate(spec)[0]
    assert SyntheticSpec.from_dict({"preset": "planted", "days": 90, "seed": 4}).to_dict() == spec.to_dict()
    assert set(PRESETS) == {"default", "planted"}


def test_ground_truth_validates_and_records_everything():
    _, truth = generate(SyntheticSpec(days=60, seed=1))
    doc = json.loads(truth_to_json_text(truth))
    validate_json(doc, "ground_truth")
    assert set(doc["responses"]["N"]) == set(truth.responses_n)
    assert doc["noise_sd"] == {"N": 2.0, "M": 1.0}
    assert doc["interaction"]["N"] == 3.0


def test_noise_free_counts_follow_the_responses():
    spec = SyntheticSpec(days=80, seed=2, noise_n=0.0, noise_m=0.0)
    run = generate_full(spec)
    X = run.dataset.features()
    feats = {f: X[:, j] for j, f in enumerate(FEATURES)}
    coupling = feats["p_rain"] * feats["lightning_l"] / 1000.0
    n = np.round(np.maximum(response(spec.responses_n, spec.intercept_n, feats) + 3.0 * coupling, 0.0))
    np.testing.assert_array_equal(run.dataset.column("n_sustained"), n)


def single_driver_spec(seed):
    # integer slope on an integer feature: rounding is exact, so recovery is too
    driver = {"lightning_l": RegressionModel(POLYNOMIAL, (3.0, 2.0), "lightning_l", 1)}
    return SyntheticSpec(days=200, seed=seed, intercept_n=0.0, intercept_m=0.0, responses_n=driver,
                         responses_m=driver, interaction_n=0.0, interaction_m=0.0, noise_n=0.0, noise_m=0.0)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_noise_free_linear_driver_recovered_exactly(seed):
    ds, _ = generate(single_driver_spec(seed))
    cat = fit_catalog(ds, "N")
    win = cat.winner("lightning_l")
    assert win.kind == POLYNOMIAL and win.degree == 1
    np.testing.assert_allclose(win.beta, (3.0, 2.0), rtol=1e-6)
    rebuilt = np.round(predict(win, ds.column("lightning_l")))
    np.testing.assert_array_equal(rebuilt, ds.column("n_sustained"))


def test_interaction_gap_over_oracle():
    spec = SyntheticSpec(seed=3)
    run = generate_full(spec)
    split = split_chronological(run.dataset)
    base = SumOfRegressions.fit(fit_catalog(split.train, "N"), fit_catalog(split.train, "M"), split.train)
    test = split.test
    X = test.features()
    feats = {f: X[:, j] for j, f in enumerate(FEATURES)}
    coupling = feats["p_rain"] * feats["lightning_l"] / 1000.0
    y = test.column("n_sustained")
    with_inter = np.maximum(response(spec.responses_n, spec.intercept_n, feats) + spec.interaction_n * coupling, 0)
    without = np.maximum(response(spec.responses_n, spec.intercept_n, feats), 0)
    oracle_mse = np.mean((with_inter - y) ** 2)
    assert np.mean((base.predict(test)[:, 0] - y) ** 2) > oracle_mse
    assert np.mean((without - y) ** 2) > oracle_mse


def test_planted_preset_has_dominant_lightning():
    spec = planted_spec(seed=5)
    ds, _ = generate(spec)
    effect = {f: abs(m.beta[1]) * np.std(ds.column(f)) for f, m in spec.responses_n.items()}
    assert set(effect) == set(FEATURES) and spec.interaction_n == 0 and spec.noise_n > 0
    rest = max(v for f, v in effect.items() if f != "lightning_l")
    assert effect["lightning_l"] > 2 * rest
