"""Slow, independent reference right-hand side used only by the tests.

Raw moments and the four-operator sums come from the generic set-partition
expansion in ``moments.expand_cumulants``; cumulant derivatives come from a
central difference of the raw->cumulant map.
"""

import numpy as np

from cumulant_qed.eom import Closure, expectation_rates
from cumulant_qed.moments import (
    MomentState,
    Order,
    expand_cumulants,
    from_expectations,
    to_expectations,
)

XYZ = "xyz"


def raw_moments(state):
    """Raw expectation values of every pattern the equations need."""
    n = state.n_modes
    E = lambda *ops: expand_cumulants(state, ops)  # noqa: E731
    R = range(n)
    raw = {
        "s": np.array([E(c).real for c in XYZ]),
        "a": np.array([E(("-", k)) for k in R]),
        "ads": np.array([[E(("+", k), c) for k in R] for c in XYZ]),
        "ada": np.array([[E(("+", k), ("-", m)) for m in R] for k in R]),
        "add": np.array([[E(("+", k), ("+", m)) for m in R] for k in R]),
        "adas": [np.array([[E(("+", k), ("-", m), c) for m in R] for k in R]) for c in XYZ],
        "adds": [np.array([[E(("+", k), ("+", m), c) for m in R] for k in R]) for c in XYZ],
        "adda": np.array([[[E(("+", k), ("+", m), ("-", l)) for l in R] for m in R] for k in R]),
        "addd": np.array([[[E(("+", k), ("+", m), ("+", l)) for l in R] for m in R] for k in R]),
    }
    return raw


def contractions(state, g, zero_q_y=False):
    n = state.n_modes
    E = lambda *ops: expand_cumulants(state, ops)  # noqa: E731
    R = range(n)
    T, Q, Rr = [], [], []
    for c in XYZ:
        T.append(np.array([sum(g[l] * (E(("+", l), ("+", k), c) + E(("+", k), ("-", l), c))
                               for l in R) for k in R]))
        Q.append(np.array([[sum(g[l] * (E(("+", l), ("+", k), ("-", m), c)
                                        + E(("+", k), ("-", m), ("-", l), c)) for l in R)
                             for m in R] for k in R]))
        Rr.append(np.array([[sum(g[l] * (E(("+", l), ("+", k), ("+", m), c)
                                         + E(("+", k), ("+", m), ("-", l), c)) for l in R)
                              for m in R] for k in R]))
    if zero_q_y:
        Q[1] = np.zeros_like(Q[1])
    return {"T": T, "Q": Q, "R": Rr}


def _store(raw, order, n):
    st = MomentState.zeros(n, order, kind="expectation")
    st.pauli[:] = raw["s"]
    st.a[:] = raw["a"]
    if st.ads is not None:
        st.ads[:] = raw["ads"]
        st.ada[:] = raw["ada"]
        st.add[:] = raw["add"]
    for i, c in enumerate(XYZ):
        if getattr(st, "adas_" + c) is not None:
            getattr(st, "adas_" + c)[:] = raw["adas"][i]
        if getattr(st, "adds_" + c) is not None:
            getattr(st, "adds_" + c)[:] = raw["adds"][i]
    if st.adda is not None:
        st.adda[:] = raw["adda"]
        st.addd[:] = raw["addd"]
    return st


def _rates_state(rates, order, n):
    r = dict(rates)
    r["s"] = r.pop("pauli")
    r["adas"] = [r.get("adas_" + c, np.zeros((n, n))) for c in XYZ]
    r["adds"] = [r.get("adds_" + c, np.zeros((n, n))) for c in XYZ]
    r.setdefault("adda", np.zeros((n, n, n)))
    r.setdefault("addd", np.zeros((n, n, n)))
    r.setdefault("ads", np.zeros((3, n)))
    r.setdefault("ada", np.zeros((n, n)))
    r.setdefault("add", np.zeros((n, n)))
    return _store(r, order, n)


ALL = ("pauli", "a", "ads", "ada", "add", "adas_x", "adas_y", "adas_z",
       "adds_x", "adds_y", "adds_z", "adda", "addd")


def reference_rhs(state, params, method, t, eps=1e-5):
    n = state.n_modes
    g = np.asarray(params.modes.g)
    omega = np.asarray(params.modes.omega)
    F = params.pulse.mu_field(t)
    raw = raw_moments(state)
    order = method.order
    if method.closure is Closure.ZERO_EXPECTATION:
        contr = {"T": [np.zeros(n)] * 3}
    else:
        contr = contractions(state, g, zero_q_y=order is Order.ORDER2_1B)
    if order is Order.MF:
        blocks = ("pauli", "a")
    else:
        blocks = tuple(b for b in ALL if b in ("pauli", "a") or getattr(state, b) is not None)
    rates = expectation_rates(raw, contr, params.omega0, omega, g, F, blocks)
    raw_state = to_expectations(state)
    draw = _rates_state(rates, order, n)
    if order is Order.MF:
        return draw
    plus = from_expectations(raw_state + eps * draw)
    minus = from_expectations(raw_state - eps * draw)
    return (1 / (2 * eps)) * (plus - minus)
