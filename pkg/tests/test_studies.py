import math

import numpy as np
import pytest

from llbfem.mesh import unit_square_mesh
from llbfem.presets import PRESETS
from llbfem.scheme import TimeGrid
from llbfem.studies import ErrorTable, compute_rate, eps_study, h_study, k_study, safe_rates


def test_compute_rate_exact_sequences():
    r = compute_rate([1.0, 0.25, 0.0625, 0.015625])
    np.testing.assert_allclose(r.ratios["e"], [2, 2, 2])
    assert r["e"] == 2.0
    r = compute_rate({"a": [8, 4, 2], "b": [1, 1 / 8, 1 / 64]})
    assert r["a"] == 1.0 and r["b"] == pytest.approx(3.0)


def test_compute_rate_uses_tail():
    r = compute_rate([1.0, 0.9, 0.45, 0.225])
    assert r["e"] == pytest.approx(1.0)


@pytest.mark.parametrize("bad", [[1.0], [1.0, 0.0], [1.0, math.nan], [-1.0, 0.5]])
def test_compute_rate_rejects(bad):
    with pytest.raises(ValueError):
        compute_rate(bad)


def test_safe_rates_nan_on_zero():
    t = ErrorTable("h")
    t.add(4, {"l2": 0.0, "h1": 1.0, "linf": 1.0})
    t.add(8, {"l2": 0.0, "h1": 0.5, "linf": 0.5})
    r = safe_rates(t)
    assert math.isnan(r["l2"]) and r["h1"] == 1.0
    assert list(t.rows())[1] == (8, {"l2": 0.0, "h1": 0.5, "linf": 0.5})


def test_h_study_smoke():
    p = PRESETS["sim1"]
    table, rates = h_study("unit_square", p.params, TimeGrid(0.02, 4), p.u0, levels=3, n0=2)
    assert table.params == [2, 4]
    assert all(e > 0 for e in table.errors["h1"])
    assert set(rates.summary) == {"l2", "h1", "linf"}
    with pytest.raises(ValueError):
        h_study("unit_square", p.params, TimeGrid(0.02, 4), p.u0, levels=1)


def test_k_study_smoke():
    p = PRESETS["sim3"]
    table, rates = k_study(unit_square_mesh(4), p.params, 0.1, [4, 8, 16], p.u0)
    assert table.params == pytest.approx([0.025, 0.0125])
    assert table.errors["l2"][1] < table.errors["l2"][0]
    with pytest.raises(ValueError):
        k_study(unit_square_mesh(2), p.params, 0.1, [4, 6], p.u0)


def test_eps_study_zero_difference_for_zero_eps():
    p = PRESETS["sim1"]
    table, rates = eps_study(unit_square_mesh(4), p.params, TimeGrid(0.02, 4), p.u0, [1e-2, 0.0])
    assert table.errors["l2"][1] == 0.0 and table.errors["l2"][0] > 0
    assert math.isnan(rates["l2"])
