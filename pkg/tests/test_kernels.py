"""The compiled kernels and the numpy reference agree on random inputs."""
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from baton import _pykernels as py
from baton import kernels
from baton.geometry import EPS_POS, link_arrays
from baton.sim import default_links

cy = pytest.importorskip("baton._kernels")

TX, RX = link_arrays(default_links(4))
seeds = st.integers(0, 2**32 - 1)


def _close(a, b):
    np.testing.assert_allclose(np.asarray(a, float), np.asarray(b, float), rtol=1e-9, atol=1e-10, equal_nan=True)


def test_backend_switch():
    before = kernels.BACKEND
    try:
        kernels.set_backend("python")
        assert kernels.dead_reckon is py.dead_reckon
        kernels.set_backend("cython")
        assert kernels.dead_reckon is cy.dead_reckon
    finally:
        kernels.set_backend(before)
    with pytest.raises(ValueError):
        kernels.set_backend("fortran")


@given(seeds)
def test_fresnel_and_solve(seed):
    rng = np.random.default_rng(seed)
    x, y = rng.uniform(-2.3, 2.3, 2)
    A1, s1 = py.fresnel_matrix(TX, RX, x, y, EPS_POS)
    A2, s2 = cy.fresnel_matrix(TX, RX, x, y, EPS_POS)
    assert s1 == s2
    _close(A1, A2)
    r = rng.normal(size=4)
    w = rng.choice([0.0, 0.1, 1.0], size=4)
    A = np.ascontiguousarray(A1)
    for reg in (0.0, 1e-3):
        out1 = py.solve_velocity(A, r, w, reg, 2.0, 1e8)
        out2 = cy.solve_velocity(A, r, w, reg, 2.0, 1e8)
        assert out1[2] == out2[2]
        _close(out1[:2], out2[:2])


@given(seeds, st.integers(1, 15))
def test_dead_reckon(seed, rows):
    rng = np.random.default_rng(seed)
    vals = rng.normal(0, 1, (rows, 4))
    w = np.ascontiguousarray(rng.choice([0.0, 0.1, 1.0], size=(rows, 4)))
    anchor = rng.uniform(-1.5, 1.5, 2)
    v0 = rng.normal(0, 0.5, 2)
    args = (anchor, vals, w, TX, RX, 0.1, 1e-3, 2.0, 1e8, 4, v0, EPS_POS)
    for a, b in zip(py.dead_reckon(*args), cy.dead_reckon(*args)):
        _close(a, b)


@given(seeds, st.integers(2, 20))
def test_offset_fit(seed, rows):
    rng = np.random.default_rng(seed)
    pos = np.ascontiguousarray(rng.uniform(-1.5, 1.5, (rows, 2)))
    vel = np.ascontiguousarray(rng.normal(0, 1, (rows, 2)))
    mask = np.ascontiguousarray(rng.random((rows, 4)) < 0.3, dtype=np.uint8)
    r = np.ascontiguousarray(np.where(mask, rng.normal(size=(rows, 4)), 0.0))
    _close(py.offset_fit(pos, vel, r, mask, TX, RX, 5.0, 3, EPS_POS),
           cy.offset_fit(pos, vel, r, mask, TX, RX, 5.0, 3, EPS_POS))


@given(seeds, st.sampled_from(range(6)), st.booleans())
def test_fill_row(seed, mode, use_model):
    rng = np.random.default_rng(seed)
    mask = np.ascontiguousarray(rng.random(4) < 0.4, dtype=np.uint8)
    obs = np.ascontiguousarray(np.where(mask, rng.normal(size=4), 0.0))
    p1_avail = np.ascontiguousarray(rng.random(4) < 0.8, dtype=np.uint8)
    p1 = np.ascontiguousarray(np.where(p1_avail, rng.normal(size=4), 0.0))
    weights = np.ascontiguousarray(rng.random(4))
    pred3 = np.ascontiguousarray(rng.normal(size=4))
    prev = np.ascontiguousarray(rng.normal(size=4))
    args = (obs, mask, p1, p1_avail, weights, pred3, prev, use_model, 0.05, 2.0, mode)
    for a, b in zip(py.fill_row(*args), cy.fill_row(*args)):
        _close(a, b)


def test_environment_forces_pure_python():
    import os
    import subprocess

    env = dict(os.environ, BATON_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from baton import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
