import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ctxgst import datagen as dg
from ctxgst.circuits import design_last_depth
from ctxgst.gateset import ThetaLayout, build_gateset, nominal_theta
from ctxgst.spectra import PhysicalConfig

PHYS = PhysicalConfig()
GS = build_gateset(nominal_theta(ThetaLayout(), PHYS), PHYS)


def test_counts_sum_to_n_samples():
    d = design_last_depth(4, n_samples=777)
    ds = dg.sample(d, GS, seed=3)
    assert ds.counts.shape == (12, 4)
    assert (ds.totals == 777).all()


def test_sampling_is_deterministic_and_seed_dependent():
    d = design_last_depth(2, n_samples=1000)
    a, b, c = dg.sample(d, GS, seed=5), dg.sample(d, GS, seed=5), dg.sample(d, GS, seed=6)
    np.testing.assert_array_equal(a.counts, b.counts)
    assert not np.array_equal(a.counts, c.counts)


def test_circuit_streams_are_independent_of_order():
    probs = dg.model_probabilities(design_last_depth(2), GS)
    full = dg.sample_probabilities(probs, 100, seed=9)
    part = dg.sample_probabilities(probs[:3], 100, seed=9)
    np.testing.assert_array_equal(full[:3], part)


def test_frequencies_converge():
    d = design_last_depth(1, n_samples=400_000)
    ds = dg.sample(d, GS, seed=1)
    p = dg.model_probabilities(d, GS)
    assert np.abs(ds.frequencies - p).max() < 5 * np.sqrt(0.25 / 400_000)


def test_json_roundtrip(tmp_path):
    ds = dg.sample(design_last_depth(2, n_samples=50), GS, seed=2)
    path = tmp_path / "d.json"
    dg.store(ds, path)
    back = dg.load(path)
    np.testing.assert_array_equal(back.counts, ds.counts)
    assert back.circuits == ds.circuits and back.seed == 2 and back.mode == ds.mode


def test_json_errors():
    ds = dg.sample(design_last_depth(1, n_samples=10), GS, seed=0)
    obj = json.loads(ds.to_json())
    with pytest.raises(dg.DatasetError, match="version"):
        dg.Dataset.from_json(json.dumps({**obj, "schema_version": 2}))
    with pytest.raises(dg.DatasetError):
        dg.Dataset.from_json("{not json")
    with pytest.raises(dg.DatasetError):
        dg.Dataset.from_json(json.dumps({**obj, "counts": {}}))
    first = next(iter(obj["counts"]))
    obj["counts"][first]["00"] = 1.5
    with pytest.raises(dg.DatasetError, match="integer"):
        dg.Dataset.from_json(json.dumps(obj))


def test_dataset_validation():
    d = design_last_depth(1)
    with pytest.raises(dg.DatasetError):
        dg.Dataset(d.circuits, -np.ones((12, 4), dtype=int))
    with pytest.raises(dg.DatasetError):
        dg.Dataset(d.circuits, np.zeros((12, 4), dtype=int))
    with pytest.raises(dg.DatasetError):
        dg.Dataset(d.circuits, np.ones((3, 4), dtype=int))


@given(st.lists(st.floats(0, 1), min_size=4, max_size=4).filter(lambda v: sum(v) > 0.1), st.integers(1, 10_000))
def test_sample_probabilities_total(p, n):
    p = np.array(p) / sum(p)
    counts = dg.sample_probabilities(p[None], n, seed=0)
    assert counts.sum() == n and (counts >= 0).all()


def test_negative_model_probability_rejected():
    from ctxgst.channels import PhysicalityError

    with pytest.raises(PhysicalityError):
        dg.sample_probabilities(np.array([[1.1, -0.1, 0, 0]]), 10, seed=0)


def test_exact_dataset_frequencies():
    d = design_last_depth(4)
    ds = dg.exact_dataset(d, GS)
    np.testing.assert_allclose(ds.frequencies, dg.model_probabilities(d, GS), atol=1e-9)
