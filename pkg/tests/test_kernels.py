"""Backend equivalence: compiled kernels against the numpy fallback."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geocert._kernels import _numpy as np_backend
from geocert._kernels import BACKEND

try:
    from geocert._kernels import _core as c_backend
except ImportError:
    c_backend = None

needs_compiled = pytest.mark.skipif(c_backend is None,
                                    reason="compiled backend not built")

CODES = list(np_backend.SURFACE_CODES.items())


def _params(code_name):
    return np.array([np.pi / 3]) if code_name == "cone" else np.zeros(0)


def _points(code_name, rng, n=40):
    if code_name == "cone":
        return np.column_stack([rng.uniform(0.6, 5, n),
                                rng.uniform(0, 2 * np.pi, n)])
    return rng.uniform(-2.5, 2.5, size=(n, 2))


@needs_compiled
@pytest.mark.parametrize("name,code", CODES)
def test_jet_batch_agreement(name, code, rng):
    pts = _points(name, rng)
    a = np_backend.jet_batch(code, _params(name), pts)
    b = c_backend.jet_batch(code, _params(name), pts)
    for x, y in zip(a, b):
        assert np.max(np.abs(x - y)) < 1e-14


@needs_compiled
@pytest.mark.parametrize("name,code", CODES)
def test_fundamental_agreement(name, code, rng):
    pts = _points(name, rng)
    a = np_backend.surface_fundamental(code, _params(name), pts)
    b = c_backend.surface_fundamental(code, _params(name), pts)
    for key in ("g", "det_g", "chol", "alpha", "alpha_on", "norm_hs",
                "mean", "mean_norm"):
        scale = 1.0 + np.max(np.abs(a[key]))
        assert np.max(np.abs(a[key] - b[key])) < 1e-11 * scale, (name, key)


@needs_compiled
@pytest.mark.parametrize("name,code", CODES)
def test_radial_state_agreement(name, code, rng):
    pts = _points(name, rng)
    center = np.array([0.3, -0.2, 0.5])
    a = np_backend.surface_radial_state(code, _params(name), center, pts)
    b = c_backend.surface_radial_state(code, _params(name), center, pts)
    for x, y in zip(a, b):
        assert np.max(np.abs(x - y)) < 1e-11


@needs_compiled
@settings(max_examples=80, deadline=None, derandomize=True)
@given(st.floats(-2.5, 2.5), st.floats(-2.5, 2.5),
       st.floats(-0.9, 0.9), st.floats(-0.9, 0.9), st.floats(-0.9, 0.9))
def test_radial_state_fuzz(u, v, cx, cy, cz):
    pts = np.array([[u, v]])
    center = np.array([cx, cy, cz])
    code = np_backend.SURFACE_CODES["enneper"]
    a = np_backend.surface_radial_state(code, np.zeros(0), center, pts)
    b = c_backend.surface_radial_state(code, np.zeros(0), center, pts)
    for x, y in zip(a, b):
        assert np.allclose(x, y, atol=1e-10, rtol=1e-9)


@needs_compiled
def test_generic_dims_fundamental(rng):
    # the compiled chain is generic over (m, n): feed synthetic jets of a
    # 2-manifold in R^4
    b, n, m = 17, 4, 2
    jac = rng.normal(size=(b, n, m))
    hess = rng.normal(size=(b, n, m, m))
    hess = 0.5 * (hess + hess.transpose(0, 1, 3, 2))
    val = rng.normal(size=(b, n))
    a = np_backend.fundamental_batch(val, jac, hess)
    c = c_backend.fundamental_batch(val, jac, hess)
    for key in a:
        scale = 1.0 + np.max(np.abs(a[key]))
        assert np.max(np.abs(a[key] - c[key])) < 1e-10 * scale, key


def test_backend_reported():
    assert BACKEND in ("compiled", "python")


def test_sin_theta_is_exact_on_flat_cases():
    code = np_backend.SURFACE_CODES["plane"]
    pts = np.array([[3.0, 4.0], [1.0, -2.0]])
    _, psi, _, _, sin_t = np_backend.surface_radial_state(
        code, np.zeros(0), np.zeros(3), pts)
    assert np.all(sin_t == 0.0)
    assert np.all(psi ** 2 + sin_t ** 2 == pytest.approx(1.0, abs=1e-12))
