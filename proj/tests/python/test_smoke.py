import json
import math
import pathlib

import numpy as np
import pytest

import texplore

DESK = json.loads((pathlib.Path(__file__).resolve().parents[1] / "data" / "desk_2state.json").read_text())


def test_paper_example_preset():
    cfg = texplore.paper_example_config()
    assert cfg["T"] == 10**12
    assert len(cfg["frequencies"]) == 5


def test_constants_are_deterministic():
    a = texplore.constants(preset="paper_example")
    b = texplore.constants(preset="paper_example")
    assert a == b
    assert "225" in json.dumps(a)


def test_design_and_validate():
    d = texplore.design(DESK)
    assert d["certified"]
    assert d["gamma_e"] > 0
    rep = texplore.validate(DESK, d, 20)
    assert rep["success_rate"] >= 0.9


def test_sweep_rows():
    rows = texplore.sweep(DESK, [20000, 5000], 0.02)
    assert [r["T"] for r in rows] == [5000, 20000]
    assert all(r["status"] == "certified" for r in rows)


def test_config_error():
    with pytest.raises(texplore.ConfigError):
        texplore.design({**DESK, "colour": 1})


def test_simulate_and_estimate():
    rng = np.random.default_rng(0)
    A = np.array([[0.5]])
    B = np.array([[1.0]])
    U = rng.standard_normal((200, 1))
    X = texplore.simulate(A, B, U, np.zeros((200, 1)))
    assert X.shape == (201, 1)
    theta = texplore.rls_estimate(X, U, 1e-8)
    assert np.allclose(theta, [0.5, 1.0], atol=1e-6)


def test_multisine_lines():
    u = texplore.synth_multisine(40, [0.0, 0.1], np.array([[1.0, 3.0]]))
    assert abs(texplore.spectral_amplitude(u, 0.1)[0] - 1.5) < 1e-12
    assert math.isclose(abs(texplore.spectral_amplitude(u, 0.0)[0]), 1.0)


def test_hermitian_embed():
    H = np.array([[2.0, 1j], [-1j, 2.0]])
    ev = np.linalg.eigvalsh(texplore.hermitian_embed(H))
    assert np.allclose(sorted(ev), [1, 1, 3, 3])
