import numpy as np
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from astar import jets as J
from astar.jets import Jet

w, z = sp.symbols("w z")
FIELD_U = sp.sin(w) * z + w**2
FIELD_V = sp.exp(0.3 * w - z) + 2


def _jet_of(expr, pt):
    sub = {w: pt[0], z: pt[1]}
    d = lambda e: float(e.subs(sub))  # noqa: E731
    return Jet(d(expr), d(sp.diff(expr, w)), d(sp.diff(expr, z)), d(sp.diff(expr, w, 2)),
               d(sp.diff(expr, w, z)), d(sp.diff(expr, z, 2)))


def _close(a: Jet, b: Jet, tol=1e-12):
    return all(np.allclose(x, y, rtol=tol, atol=tol) for x, y in zip(a.parts(), b.parts()))


PT = (0.7, -0.4)


def test_product_quotient_chain_rules_match_symbolic():
    u, v = _jet_of(FIELD_U, PT), _jet_of(FIELD_V, PT)
    assert _close(u * v, _jet_of(FIELD_U * FIELD_V, PT))
    assert _close(u / v, _jet_of(FIELD_U / FIELD_V, PT))
    assert _close(J.exp(u), _jet_of(sp.exp(FIELD_U), PT))
    assert _close(J.log(v), _jet_of(sp.log(FIELD_V), PT))
    assert _close(J.sqrt(v), _jet_of(sp.sqrt(FIELD_V), PT))
    assert _close(u**3, _jet_of(FIELD_U**3, PT))
    assert _close(2 - u, _jet_of(2 - FIELD_U, PT))


def test_laplacian_and_accessors():
    u = _jet_of(FIELD_U, PT)
    lap = float((sp.diff(FIELD_U, w, 2) + sp.diff(FIELD_U, z, 2)).subs({w: PT[0], z: PT[1]}))
    assert np.isclose(u.lap, lap)
    assert u.d(1) == u.d1 and u.dd(1, 3) == u.dd(3, 1) == u.d13


def test_broadcast_and_take():
    u = Jet(np.arange(4.0), 1.0)
    t = u.take(slice(1, 3))
    assert t.v.tolist() == [1.0, 2.0] and t.d1.tolist() == [1.0, 1.0]


finite = st.floats(-2, 2, allow_nan=False)


@given(st.lists(finite, min_size=6, max_size=6), st.lists(finite, min_size=6, max_size=6))
def test_ring_identities(a, b):
    x = Jet(*a)
    y = Jet(b[0] + 3.0, *b[1:])  # keep y away from zero
    assert _close((x * y) / y, x, 1e-9)
    assert _close(x + y - y, x, 1e-12)
    assert _close(J.log(J.exp(x)), x, 1e-9)
