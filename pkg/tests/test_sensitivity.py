import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridcast.ingest import FEATURES, Dataset
from gridcast.mlp import ElmConfig, FeatureSpec, MlpNetwork, TrainedForecaster, build_features, forward
from gridcast.regression import CatalogEntry, Candidate, ModelCatalog, polynomial
from gridcast.schemas import validate_csv, validate_json
from gridcast.sensitivity import (
    PER_SD,
    RAW,
    aggregate,
    analytic_input_gradient,
    chain_to_raw,
    normalise_scores,
    raw_derivatives,
)


def catalog(target, betas):
    entries = [CatalogEntry(f, [Candidate("polynomial", 1, polynomial(b, f))], 0) for f, b in betas.items()]
    return ModelCatalog(target, entries)


def constant_catalog(target, features=FEATURES):
    return catalog(target, {f: (1.0 + i, 0.0) for i, f in enumerate(features)})


def spec_of(cat_n, cat_m, raw_features=FEATURES, rng=None):
    n = len(raw_features) + len(cat_n.entries) + 2
    rng = rng or np.random.default_rng(0)
    return FeatureSpec(tuple(raw_features), cat_n, cat_m, rng.normal(0, 2, n), rng.uniform(0.5, 3, n))


def forecaster_of(spec, net):
    return TrainedForecaster(spec, net, ElmConfig(), np.zeros(2), np.zeros(2))


def random_net(rng, n=24, m=10):
    return MlpNetwork(rng.uniform(-1, 1, (m, n)), rng.uniform(-1, 1, m), rng.normal(0, 3, (m, 2)), rng.normal(0, 1, 2))


# -- analytic gradient ------------------------------------------------------------------

def test_zero_network_has_zero_gradient():
    net = MlpNetwork(np.zeros((10, 24)), np.zeros(10), np.zeros((10, 2)), np.zeros(2))
    assert not np.any(analytic_input_gradient(net, np.ones(24)))


def test_single_unit_gradient_is_quarter_of_output_weight():
    w = np.zeros((1, 5))
    w[0, 0] = 1.0
    net = MlpNetwork(w, np.zeros(1), np.array([[3.0, -2.0]]), np.zeros(2))
    g = analytic_input_gradient(net, np.zeros(5))
    np.testing.assert_array_equal(g[0], [0.75, -0.5])
    assert not np.any(g[1:])


def fd_gradient(net, x, h=1e-5):
    out = np.empty((len(x), 2))
    for i in range(len(x)):
        e = np.zeros(len(x))
        e[i] = h
        out[i] = (forward(net, x + e) - forward(net, x - e)) / (2 * h)
    return out


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_gradient_matches_central_differences(seed):
    rng = np.random.default_rng(seed)
    net = random_net(rng)
    x = rng.normal(0, 1, 24)
    g = analytic_input_gradient(net, x)
    fd = fd_gradient(net, x)
    assert np.max(np.abs(g - fd)) <= 1e-6 * max(np.max(np.abs(g)), 1e-12)


# -- chain rule to raw parameters --------------------------------------------------------------

def test_constant_catalogs_leave_only_raw_path(small_dataset):
    spec = spec_of(constant_catalog("N"), constant_catalog("M"))
    grad = np.random.default_rng(1).normal(size=(24, 2))
    raw = chain_to_raw(grad, spec, small_dataset[0])
    np.testing.assert_allclose(raw, grad[:11] / spec.scale[:11, None], rtol=1e-15)


def test_linear_winner_derived_path(small_dataset):
    betas = {f: (0.0, 0.0) for f in FEATURES}
    betas["p_rain"] = (0.0, 2.0)
    spec = spec_of(catalog("N", betas), constant_catalog("M"))
    q = spec.input_names.index("pred_n:p_rain")
    grad = np.zeros((24, 2))
    grad[q] = [1.5, -4.0]
    raw = chain_to_raw(grad, spec, small_dataset[0])
    p = FEATURES.index("p_rain")
    np.testing.assert_allclose(raw[p], 2.0 * grad[q] / spec.scale[q], rtol=1e-15)
    assert not np.any(np.delete(raw, p, axis=0))


def fd_raw(forecaster, record, name, h):
    # fourth-order stencil: forward() has ~1e-8 relative roundoff on inputs far
    # from their data centre, so two-point differences cannot reach 1e-5
    def at(d):
        moved = dataclasses.replace(record, **{name: getattr(record, name) + d})
        return forward(forecaster.network, build_features(moved, forecaster.feature_spec))

    return (at(-2 * h) - 8 * at(-h) + 8 * at(h) - at(2 * h)) / (12 * h)


def test_end_to_end_chain_rule_matches_finite_differences(run0):
    f = run0.forecaster
    per_day = raw_derivatives(f, run0.split.test)
    for k in (0, 17, 101):
        rec = run0.split.test[k]
        for p, name in enumerate(FEATURES):
            fd = fd_raw(f, rec, name, 1e-3 * f.feature_spec.scale[p])
            scale = max(np.max(np.abs(per_day[k, p])), 1e-8)
            assert np.max(np.abs(per_day[k, p] - fd)) <= 1e-5 * scale, name


def test_batch_and_single_record_chain_agree(run0):
    f = run0.forecaster
    rec = run0.split.test[5]
    x = build_features(rec, f.feature_spec)
    single = chain_to_raw(analytic_input_gradient(f.network, x), f.feature_spec, rec)
    np.testing.assert_allclose(raw_derivatives(f, run0.split.test[5:6])[0], single, rtol=1e-12, atol=1e-15)


# -- aggregation ---------------------------------------------------------------------------

def test_single_path_network_scores_lightning_one(small_dataset):
    spec = spec_of(constant_catalog("N"), constant_catalog("M"))
    w = np.zeros((3, 24))
    w[:, FEATURES.index("lightning_l")] = [0.5, -1.0, 2.0]
    net = MlpNetwork(w, np.zeros(3), np.ones((3, 2)), np.zeros(2))
    for units in (RAW, PER_SD):
        rep = aggregate(forecaster_of(spec, net), small_dataset, units)
        assert rep.score("lightning_l", "N") == 1.0 and rep.score("lightning_l", "M") == 1.0
        assert rep.ranked("N")[0] == "lightning_l"


def test_identical_wiring_and_data_give_equal_scores(small_dataset):
    twin = Dataset(tuple(dataclasses.replace(r, w_sus=r.w_pea) for r in small_dataset))
    rng = np.random.default_rng(3)
    spec = spec_of(constant_catalog("N"), constant_catalog("M"), rng=rng)
    a, b = FEATURES.index("w_pea"), FEATURES.index("w_sus")
    spec.scale[b] = spec.scale[a]
    spec.shift[b] = spec.shift[a]
    net = random_net(rng)
    net.w[:, b] = net.w[:, a]
    rep = aggregate(forecaster_of(spec, net), twin, RAW)
    for o in ("N", "M"):
        assert rep.score("w_pea", o) == pytest.approx(rep.score("w_sus", o), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100))
def test_scores_normalised_and_scale_free(seed, c):
    rng = np.random.default_rng(seed)
    betas = {f: tuple(rng.normal(0, 1, 2)) for f in FEATURES}
    spec = spec_of(catalog("N", betas), catalog("M", betas), rng=rng)
    net = random_net(rng)
    ds = _DATA
    rep = aggregate(forecaster_of(spec, net), ds)
    assert np.all(rep.scores >= 0)
    np.testing.assert_allclose(rep.scores.sum(axis=0), 1.0, atol=1e-9)
    scaled = dataclasses.replace(net, v=net.v * c)
    rep2 = aggregate(forecaster_of(spec, scaled), ds)
    np.testing.assert_allclose(rep2.mean_abs, rep.mean_abs * c, rtol=1e-10)
    np.testing.assert_allclose(rep2.scores, rep.scores, rtol=1e-9, atol=1e-15)
    assert rep2.ranked("N") == rep.ranked("N")


def test_scores_invariant_under_feature_reordering(run0):
    f = run0.forecaster
    spec = f.feature_spec
    order = list(reversed(spec.raw_features))
    names = spec.input_names
    new_names = order + [f"pred_n:{x}" for x in order if x in spec.catalog_n.features] + names[-2:]
    idx = [names.index(n) for n in new_names]
    perm_spec = FeatureSpec(tuple(order), spec.catalog_n, spec.catalog_m, spec.shift[idx], spec.scale[idx])
    perm_net = dataclasses.replace(f.network, w=f.network.w[:, idx])
    a = aggregate(f, run0.split.test)
    b = aggregate(forecaster_of(perm_spec, perm_net), run0.split.test)
    for p in spec.raw_features:
        for o in ("N", "M"):
            assert b.score(p, o) == pytest.approx(a.score(p, o), rel=1e-10)


def test_zero_network_scores_uniform(small_dataset):
    spec = spec_of(constant_catalog("N"), constant_catalog("M"))
    net = MlpNetwork(np.zeros((2, 24)), np.zeros(2), np.zeros((2, 2)), np.zeros(2))
    rep = aggregate(forecaster_of(spec, net), small_dataset)
    np.testing.assert_allclose(rep.scores, 1 / 11)


def test_normalise_handles_mixed_columns():
    s = normalise_scores(np.array([[0.0, 1.0], [0.0, 3.0]]))
    np.testing.assert_array_equal(s, [[0.5, 0.25], [0.5, 0.75]])


def test_report_outputs_validate(run0):
    rep = aggregate(run0.forecaster, run0.split.test)
    validate_json(rep.to_json(), "sensitivity")
    assert validate_csv(rep.to_csv(), "sensitivity") == 22
    for o in ("N", "M"):
        assert sorted(rep.ranked(o)) == sorted(FEATURES)


def _data():
    from conftest import synthetic

    return synthetic(120, 7)[0]


_DATA = _data()
