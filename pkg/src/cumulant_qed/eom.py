"""Heisenberg equations of motion for the truncated moment hierarchy.

Hamiltonian (hbar = 1, eV)::

    H = sum_n w_n a_n^+ a_n + W0/2 s^z + sum_n g_n (a_n^+ + a_n) s^x - F(t) s^x

with F = mu E(t).  Everything is built on the exact equations for raw
expectation values of P s^i, P a normal-ordered photon monomial
(:func:`expectation_rates`).  The four-operator sums over the bath index l
enter only through the contractions T, Q, R::

    T^i[n]   = sum_l g_l (<a_l^+ a_n^+ s^i>     + <a_n^+ a_l s^i>)
    Q^i[n,m] = sum_l g_l (<a_l^+ a_n^+ a_m s^i> + <a_n^+ a_m a_l s^i>)
    R^i[n,m] = sum_l g_l (<a_l^+ a_n^+ a_m^+ s^i> + <a_n^+ a_m^+ a_l s^i>)

A truncation level is a rule for approximating these sums (and the raw
moments above the stored order) from the stored cumulants.  Cumulant
derivatives follow from the raw ones by the product rule, except for the
photon-only blocks whose equations are linear and are written directly.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .drive import NoDrive, mu_field
from .moments import (
    Layout,
    MomentState,
    Order,
    _adas_products,
    _adds_products,
)


class Closure(enum.Enum):
    ZERO_CUMULANT = "zero_cumulant"
    ZERO_EXPECTATION = "zero_expectation"


class ShapeMismatch(ValueError):
    pass


class NonFiniteInput(ValueError):
    pass


@dataclass(frozen=True)
class Method:
    order: Order = Order.ORDER2
    closure: Closure = Closure.ZERO_CUMULANT

    def __post_init__(self):
        object.__setattr__(self, "order", Order(self.order))
        object.__setattr__(self, "closure", Closure(self.closure))
        if self.closure is Closure.ZERO_EXPECTATION and self.order is not Order.ORDER2:
            raise ValueError("the zero-expectation closure exists only at second order")

    @property
    def label(self):
        if self.closure is Closure.ZERO_EXPECTATION:
            return "2e"
        return self.order.value


@dataclass(frozen=True)
class SystemParams:
    omega0: float
    modes: object
    pulse: object = NoDrive()

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValueError("omega0 must be positive")


def drive_scalar(params, t):
    return float(mu_field(params.pulse, t))


# ---------------------------------------------------------------------------
# exact equations for raw expectation values


def _any(blocks, *prefixes):
    return any(b == p or b.startswith(p + "_") for b in blocks for p in prefixes)


def expectation_rates(raw, contr, omega0, omega, g, F, blocks):
    """Time derivatives of raw expectation values.

    ``raw`` maps names to raw moments: ``s`` (3,), ``a`` (N,), ``ads`` (3, N),
    ``ada``, ``add``, ``adas`` and ``adds`` (lists of three (N, N) arrays),
    ``adda``, ``addd``.  ``contr`` holds lists ``T``, ``Q``, ``R`` of the
    contracted four-operator sums, indexed by Pauli component.  Only the
    entries needed for the requested ``blocks`` have to be present.
    """
    s = raw["s"]
    out = {}
    if "pauli" in blocks:
        rads = raw["ads"]
        out["pauli"] = np.array(
            [
                -omega0 * s[1],
                omega0 * s[0] - 4 * np.real(g @ rads[2]) + 2 * F * s[2],
                4 * np.real(g @ rads[1]) - 2 * F * s[1],
            ]
        )
    if "a" in blocks:
        out["a"] = -1j * omega * raw["a"] - 1j * g * s[0]
    if "ads" in blocks:
        rads, T = raw["ads"], contr["T"]
        iw = 1j * omega
        d = np.empty_like(rads)
        d[0] = iw * rads[0] - omega0 * rads[1] + 1j * g
        d[1] = iw * rads[1] + omega0 * rads[0] - 2 * T[2] + 2 * F * rads[2] - g * s[2]
        d[2] = iw * rads[2] + 2 * T[1] - 2 * F * rads[1] + g * s[1]
        out["ads"] = d
    W = 1j * (omega[:, None] - omega[None, :]) if _any(blocks, "ada", "adas") else None
    S = 1j * (omega[:, None] + omega[None, :]) if _any(blocks, "add", "adds") else None
    gn = g[:, None]
    gm = g[None, :]
    if "ada" in blocks:
        rx = raw["ads"][0]
        out["ada"] = W * raw["ada"] + 1j * (gn * rx.conj()[None, :] - rx[:, None] * gm)
    if "add" in blocks:
        rx = raw["ads"][0]
        out["add"] = S * raw["add"] + 1j * (gn * rx[None, :] + rx[:, None] * gm)
    a = raw.get("a")
    rads = raw.get("ads")
    adas, adds = raw.get("adas"), raw.get("adds")
    Q, R = contr.get("Q"), contr.get("R")
    if "adas_x" in blocks:
        out["adas_x"] = (
            W * adas[0] - omega0 * adas[1] + 1j * (gn * a[None, :] - a.conj()[:, None] * gm)
        )
    if "adas_y" in blocks:
        rz = rads[2]
        out["adas_y"] = (
            W * adas[1]
            + omega0 * adas[0]
            - 2 * Q[2]
            + 2 * F * adas[2]
            - (gn * rz.conj()[None, :] + rz[:, None] * gm)
        )
    if "adas_z" in blocks:
        ry = rads[1]
        out["adas_z"] = (
            W * adas[2]
            + 2 * Q[1]
            - 2 * F * adas[1]
            + (gn * ry.conj()[None, :] + ry[:, None] * gm)
        )
    if "adds_x" in blocks:
        ac = a.conj()
        out["adds_x"] = (
            S * adds[0] - omega0 * adds[1] + 1j * (gn * ac[None, :] + ac[:, None] * gm)
        )
    if "adds_y" in blocks:
        rz = rads[2]
        out["adds_y"] = (
            S * adds[1]
            + omega0 * adds[0]
            - 2 * R[2]
            + 2 * F * adds[2]
            - (gn * rz[None, :] + rz[:, None] * gm)
        )
    if "adds_z" in blocks:
        ry = rads[1]
        out["adds_z"] = (
            S * adds[2]
            + 2 * R[1]
            - 2 * F * adds[1]
            + (gn * ry[None, :] + ry[:, None] * gm)
        )
    if "adda" in blocks:
        ax, dx = adas[0], adds[0]
        lam = 1j * (omega[:, None, None] + omega[None, :, None] - omega[None, None, :])
        out["adda"] = lam * raw["adda"] + 1j * (
            g[:, None, None] * ax[None, :, :]
            + g[None, :, None] * ax[:, None, :]
            - dx[:, :, None] * g[None, None, :]
        )
    if "addd" in blocks:
        dx = adds[0]
        lam = 1j * (omega[:, None, None] + omega[None, :, None] + omega[None, None, :])
        out["addd"] = lam * raw["addd"] + 1j * (
            g[:, None, None] * dx[None, :, :]
            + g[None, :, None] * dx[:, None, :]
            + dx[:, :, None] * g[None, None, :]
        )
    return out


# ---------------------------------------------------------------------------
# contractions from cumulants (fourth-order cumulants dropped)


def contract_T(i, g, s, a, rads, cads, cada, cadd, cadas=None, cadds=None):
    """T^i from cumulants; ``cadas``/``cadds`` are the third-order blocks of component i (or None)."""
    ac = a.conj()
    w = g @ cads[i]
    t = (g @ ac + g @ a) * rads[i] + (g @ cadd + cada @ g) * s[i] + (w + np.conj(w)) * ac
    if cadds is not None:
        t = t + g @ cadds
    if cadas is not None:
        t = t + cadas @ g
    return t


def contract_Q(i, g, s, a, rads, rada, radas_i, cads, cada, cadd, third=None):
    """Q^i[n, m] from cumulants.

    ``third`` supplies the stored third-order cumulants as a dict with keys
    ``adas`` and ``adds`` (component i) and ``adda``; missing entries are zero.
    """
    ac = a.conj()
    ri = rads[i]
    w = g @ cads[i]
    u = g @ cadd  # cadd symmetric
    v = g @ cada
    cg = cada @ g
    q = (
        (g @ ac + g @ a) * radas_i
        + np.outer(u + cg, ri.conj())
        + np.outer(ri, v + u.conj())
        + (w + np.conj(w)) * rada
    )
    third = third or {}
    cadas_i = third.get("adas")
    cadds_i = third.get("adds")
    adda = third.get("adda")
    if cadas_i is not None:
        q += np.outer(ac, g @ cadas_i) + np.outer(cadas_i @ g, a)
    if cadds_i is not None:
        gd = g @ cadds_i
        q += np.outer(gd, a) + np.outer(ac, gd.conj())
    if adda is not None:
        m1 = third["m1"] if "m1" in third else np.tensordot(g, adda, axes=(0, 0))
        q += s[i] * (m1 + m1.conj().T)
    return q


def contract_R(i, g, s, a, rads, radd, radds_i, cads, cada, cadd, third=None):
    """R^i[n, m] from cumulants (see :func:`contract_Q` for ``third``)."""
    ac = a.conj()
    ri = rads[i]
    w = g @ cads[i]
    x = g @ cadd + cada @ g
    r = (g @ ac + g @ a) * radds_i + np.outer(x, ri) + np.outer(ri, x) + (w + np.conj(w)) * radd
    third = third or {}
    cadas_i = third.get("adas")
    cadds_i = third.get("adds")
    if cadds_i is not None:
        gd = g @ cadds_i
        r += np.outer(ac, gd) + np.outer(gd, ac)
    if cadas_i is not None:
        cg = cadas_i @ g
        r += np.outer(ac, cg) + np.outer(cg, ac)
    if third.get("adda") is not None:
        m2 = third["m2"] if "m2" in third else third["adda"] @ g
        m3 = third["m3"] if "m3" in third else np.tensordot(g, third["addd"], axes=(0, 0))
        r += s[i] * (m2 + m3)
    return r


# ---------------------------------------------------------------------------
# product-rule pieces: d/dt of the disconnected parts of third-order moments


def _adas_products_rate(s, ds, a, da, cads, dcads, cada, dcada):
    ac, dac = a.conj(), da.conj()
    return (
        ds * np.outer(ac, a)
        + s * (np.outer(dac, a) + np.outer(ac, da))
        + np.outer(dac, cads.conj())
        + np.outer(ac, dcads.conj())
        + np.outer(dcads, a)
        + np.outer(cads, da)
        + ds * cada
        + s * dcada
    )


def _adds_products_rate(s, ds, a, da, cads, dcads, cadd, dcadd):
    ac, dac = a.conj(), da.conj()
    return (
        ds * np.outer(ac, ac)
        + s * (np.outer(dac, ac) + np.outer(ac, dac))
        + np.outer(dac, cads)
        + np.outer(ac, dcads)
        + np.outer(dcads, ac)
        + np.outer(cads, dac)
        + ds * cadd
        + s * dcadd
    )


# ---------------------------------------------------------------------------
# right-hand side for each truncation level


_THIRD = ("adas_x", "adas_y", "adas_z", "adds_x", "adds_y", "adds_z")


class RhsKernel:
    """Right-hand side on the flat state vector, with per-system precomputation.

    ``kernel(t, y, dy)`` writes the derivative of ``y`` into ``dy``.
    ``backend`` is "numba" (fused loops) or "numpy" (array expressions; the
    reference implementation).  With ``even_only`` the vector uses the
    parity-reduced layout and the missing blocks are taken as zero.
    """

    def __init__(self, params, method, n_modes=None, backend="numba", even_only=False):
        if backend not in ("numba", "numpy"):
            raise ValueError(f"unknown backend {backend!r}")
        if even_only and not isinstance(params.pulse, NoDrive):
            raise ValueError("the parity-reduced layout needs an undriven system")
        self.params = params
        self.method = method
        self.fused = backend == "numba"
        self.omega0 = float(params.omega0)
        self.omega = np.ascontiguousarray(params.modes.omega, dtype=float)
        self.g = np.ascontiguousarray(params.modes.g, dtype=float)
        n = self.omega.size if n_modes is None else n_modes
        if n != self.omega.size:
            raise ShapeMismatch(f"state has {n} modes, system has {self.omega.size}")
        self.layout = Layout(n, method.order, even_only)
        self.iw = 1j * self.omega
        if not self.fused:
            self.W = 1j * (self.omega[:, None] - self.omega[None, :])
            self.S = 1j * (self.omega[:, None] + self.omega[None, :])
        if method.order is Order.ORDER3 and not even_only:
            w = self.omega
            if not self.fused:
                self.L_adda = 1j * (w[:, None, None] + w[None, :, None] - w[None, None, :])
                self.L_addd = 1j * (w[:, None, None] + w[None, :, None] + w[None, None, :])
            self._m = [np.empty((n, n), complex) for _ in range(3)]
        self._vecs = np.empty((4, n), complex)
        if method.order is Order.ORDER3:
            self._zero = np.zeros((n, n), complex)
            self._scratch = np.empty((n, n), complex)
            self._third_vec = np.empty((10, n), complex)
            self._third_scal = np.empty(3, complex)
        self._empty = np.empty((0, 0), complex)
        if self.fused:
            from . import kernels

            self._k = kernels

    def __call__(self, t, y, dy):
        st = self.layout.views(y)
        d = self.layout.views(dy)
        F = float(mu_field(self.params.pulse, t))
        order = self.method.order
        if order is Order.MF:
            self._mean_field(st, d, F)
        elif self.method.closure is Closure.ZERO_EXPECTATION:
            self._zero_expectation(st, d, F)
        else:
            self._cumulant(st, d, F)
        return dy

    # -- individual levels --------------------------------------------------

    def _mean_field(self, st, d, F):
        s, a = st["pauli"], st["a"]
        g, w0 = self.g, self.omega0
        re_ga = np.real(g @ a.conj())
        d["pauli"][0] = -w0 * s[1]
        d["pauli"][1] = w0 * s[0] - 4 * s[2] * re_ga + 2 * F * s[2]
        d["pauli"][2] = 4 * s[1] * re_ga - 2 * F * s[1]
        d["a"][:] = -self.iw * a - 1j * g * s[0]

    def _singles(self, st, d, F, T, rads):
        """Pauli, a and ads derivatives (cumulant form) given the T contractions."""
        s, a = st["pauli"], st["a"]
        raw = {"s": s, "a": a, "ads": rads}
        r = expectation_rates(raw, {"T": T}, self.omega0, self.omega, self.g, F, ("pauli", "a", "ads"))
        ds, da = r["pauli"], r["a"]
        d["pauli"][:] = ds
        d["a"][:] = da
        d["ads"][:] = r["ads"] - s[:, None] * da.conj()[None, :] - ds[:, None] * a.conj()[None, :]

    def _photon_pairs(self, st, d):
        """Pair-block derivatives; returns (cada @ g, cadd @ g, g @ cada, adas_z @ g or None)."""
        g = self.g
        cx, cada, cadd = st["ads"][0], st["ada"], st["add"]
        kz = st.get("adas_z")
        if self.fused:
            cg, u, v, tz = self._vecs
            self._k.photon_pairs(
                self.omega, g, cx, cada, cadd, d["ada"], d["add"],
                self._empty if kz is None else kz, cg, u, v, tz,
            )
            return cg, u, v, (None if kz is None else tz)
        np.multiply(self.W, cada, out=d["ada"])
        d["ada"] += 1j * (g[:, None] * cx.conj()[None, :] - cx[:, None] * g[None, :])
        np.multiply(self.S, cadd, out=d["add"])
        d["add"] += 1j * (g[:, None] * cx[None, :] + cx[:, None] * g[None, :])
        return cada @ g, cadd @ g, g @ cada, (None if kz is None else kz @ g)

    def _cumulant(self, st, d, F):
        order = self.method.order
        g = self.g
        s, a = st["pauli"], st["a"]
        cads, cada, cadd = st["ads"], st["ada"], st["add"]
        ac = a.conj()
        rads = cads + s[:, None] * ac[None, :]
        stored = [name for name in _THIRD if name in st]

        third = {}
        if "adda" in st:
            third = {"adda": st["adda"], "addd": st["addd"]}
            if self.fused:
                m1, m2, m3 = self._m
                self._k.triple_photons(
                    self.omega, g, st["adas_x"], st["adds_x"], st["adda"], st["addd"],
                    d["adda"], d["addd"], m1, m2, m3,
                )
                third.update(m1=m1, m2=m2, m3=m3)
            else:
                self._triple_photons(st, d)

        cg, u, v, tz = self._photon_pairs(st, d)
        ga = 2 * np.real(g @ a)
        T = [None, None, None]
        for i in (1, 2):
            w = g @ cads[i]
            t = ga * rads[i] + (u + cg) * s[i] + (w + np.conj(w)) * ac
            c = "xyz"[i]
            if "adds_" + c in st:
                t = t + g @ st["adds_" + c]
            if i == 2 and tz is not None:
                t = t + tz
            elif "adas_" + c in st:
                t = t + st["adas_" + c] @ g
            T[i] = t
        self._singles(st, d, F, T, rads)
        if not stored:
            return

        ds, da, dcads, dcada, dcadd = d["pauli"], d["a"], d["ads"], d["ada"], d["add"]
        if order in (Order.ORDER2_1A, Order.ORDER2_1B) and self.fused:
            coef = 1.0 if order is Order.ORDER2_1A else 0.0
            self._adas_z_low_rank(st, d, F, coef, u, cg, v, ga)
            return
        if order is Order.ORDER3 and self.fused:
            self._third_fused(st, d, F, u, cg, v, ga, rads, third)
            return

        radas = [st.get("adas_" + c, 0.0) + _adas_products(s[i], a, cads[i], cada) for i, c in enumerate("xyz")]
        raw = {"s": s, "a": a, "ads": rads, "adas": radas}
        if any(name.startswith("adds") for name in stored):
            raw["adds"] = [
                st.get("adds_" + c, 0.0) + _adds_products(s[i], a, cads[i], cadd) for i, c in enumerate("xyz")
            ]
        rada = cada + np.outer(ac, a)
        radd = cadd + np.outer(ac, ac)
        Q = [None, None, None]
        R = [None, None, None]
        for i, j in ((1, 2), (2, 1)):
            # component i of Q enters the equation for adas of component j
            c = "xyz"[i]
            thr = dict(third)
            for kind in ("adas", "adds"):
                if kind + "_" + c in st:
                    thr[kind] = st[kind + "_" + c]
            if "adas_" + "xyz"[j] in st:
                if order is Order.ORDER2_1B:
                    Q[i] = 0.0
                else:
                    Q[i] = contract_Q(i, g, s, a, rads, rada, radas[i], cads, cada, cadd, thr)
            if "adds_" + "xyz"[j] in st:
                R[i] = contract_R(i, g, s, a, rads, radd, raw["adds"][i], cads, cada, cadd, thr)
        rates = expectation_rates(raw, {"Q": Q, "R": R}, self.omega0, self.omega, g, F, stored)
        for name in stored:
            i = "xyz".index(name[-1])
            if name.startswith("adas"):
                prod = _adas_products_rate(s[i], ds[i], a, da, cads[i], dcads[i], cada, dcada)
            else:
                prod = _adds_products_rate(s[i], ds[i], a, da, cads[i], dcads[i], cadd, dcadd)
            np.subtract(rates[name], prod, out=d[name])

    def _adas_z_low_rank(self, st, d, F, coef, u, cg, v, ga):
        """2+1 equation for adas_z, with the product terms grouped into six outer products.

        ``coef`` switches the cumulant-expanded four-operator sum on (1) or off (0).
        """
        g, iw = self.g, self.iw
        s, a, cads = st["pauli"], st["a"], st["ads"]
        ds, da, dcads = d["pauli"], d["a"], d["ads"]
        sy, sz = s[1], s[2]
        ac, dac = a.conj(), da.conj()
        cy, cz = cads[1], cads[2]
        ry = cy + sy * ac
        w = g @ cy
        ww = coef * 2 * np.real(w)
        beta = 2 * coef * ga - 2 * F
        X = sz * a + cz.conj()
        V1 = (beta * sy + 2 * ww - ds[2]) * a + beta * cy.conj() - sz * da - dcads[2].conj()
        P = np.empty((6, a.size), complex)
        Q = np.empty_like(P)
        P[0], Q[0] = iw * ac - dac, X
        P[1], Q[1] = ac, V1 - iw * X
        P[2], Q[2] = 2 * coef * (u + cg) + g, ry.conj()
        P[3], Q[3] = ry, 2 * coef * (v + u.conj()) + g
        P[4], Q[4] = iw * cz + beta * cy - dcads[2], a
        P[5], Q[5] = cz, -(iw * a + da)
        mu = beta * sy + 2 * ww - ds[2]
        self._k.low_rank_rate(self.omega, st["adas_z"], st["ada"], d["ada"], sz, mu, P, Q, d["adas_z"])

    def _third_fused(self, st, d, F, u, cg, v, ga, rads, third):
        g = self.g
        z = self._zero
        blocks = tuple(st.get(name, z) for name in _THIRD)
        out = tuple(d.get(name, self._scratch) for name in _THIRD)
        vec = self._third_vec
        vec[0] = u + cg
        vec[1] = v + u.conj()
        scal = self._third_scal
        scal[0] = ga
        for k, c in enumerate("yz"):
            i = 1 + k
            vec[2 + 4 * k] = rads[i]
            np.dot(g, blocks[i], out=vec[3 + 4 * k])
            np.dot(blocks[i], g, out=vec[4 + 4 * k])
            np.dot(g, blocks[3 + i], out=vec[5 + 4 * k])
            scal[i] = 2 * np.real(g @ st["ads"][i])
        m1, m2, m3 = (third["m1"], third["m2"], third["m3"]) if third else (z, z, z)
        self._k.third_pairs(
            self.omega, g, self.omega0, F, st["pauli"], d["pauli"], st["a"], d["a"],
            st["ads"], d["ads"], st["ada"], st["add"], d["ada"], d["add"],
            blocks, out, m1, m2, m3, vec, scal,
        )

    def _triple_photons(self, st, d):
        g = self.g
        ax, dx = st["adas_x"], st["adds_x"]
        out = d["adda"]
        np.multiply(self.L_adda, st["adda"], out=out)
        src = g[:, None, None] * ax[None, :, :]
        src += g[None, :, None] * ax[:, None, :]
        src -= dx[:, :, None] * g[None, None, :]
        src *= 1j
        out += src
        out = d["addd"]
        np.multiply(self.L_addd, st["addd"], out=out)
        np.multiply(g[:, None, None], dx[None, :, :], out=src)
        src += g[None, :, None] * dx[:, None, :]
        src += dx[:, :, None] * g[None, None, :]
        src *= 1j
        out += src

    def _zero_expectation(self, st, d, F):
        s, a = st["pauli"], st["a"]
        cads, cada, cadd = st["ads"], st["ada"], st["add"]
        ac = a.conj()
        raw = {
            "s": s,
            "a": a,
            "ads": cads + s[:, None] * ac[None, :],
            "ada": cada + np.outer(ac, a),
            "add": cadd + np.outer(ac, ac),
        }
        zero = np.zeros_like(a)
        r = expectation_rates(
            raw, {"T": [None, zero, zero]}, self.omega0, self.omega, self.g, F,
            ("pauli", "a", "ads", "ada", "add"),
        )
        ds, da = r["pauli"], r["a"]
        dac = da.conj()
        d["pauli"][:] = ds
        d["a"][:] = da
        d["ads"][:] = r["ads"] - s[:, None] * dac[None, :] - ds[:, None] * ac[None, :]
        d["ada"][:] = r["ada"] - np.outer(dac, a) - np.outer(ac, da)
        d["add"][:] = r["add"] - np.outer(dac, ac) - np.outer(ac, dac)


def raw_rhs_zero_expectation(raw_state, params, t):
    """Second-order equations for raw expectation values with <ABC> = 0.

    This is the linear form of the zero-expectation closure; ``raw_state``
    has ``kind == "expectation"``.
    """
    if raw_state.kind != "expectation" or raw_state.order is not Order.ORDER2:
        raise ShapeMismatch("expected a second-order state of raw expectation values")
    F = drive_scalar(params, t)
    zero = np.zeros_like(raw_state.a)
    raw = {"s": raw_state.pauli, "a": raw_state.a, "ads": raw_state.ads,
           "ada": raw_state.ada, "add": raw_state.add}
    r = expectation_rates(
        raw, {"T": [None, zero, zero]}, params.omega0,
        np.asarray(params.modes.omega), np.asarray(params.modes.g), F,
        ("pauli", "a", "ads", "ada", "add"),
    )
    out = MomentState.zeros(raw_state.n_modes, Order.ORDER2, kind="expectation")
    for name, val in r.items():
        getattr(out, name)[...] = val
    return out


def rhs(state, params, method, t, out=None):
    """Time derivative of a cumulant MomentState under ``method``."""
    if state.order is not method.order:
        raise ShapeMismatch(f"state has order {state.order.value}, method needs {method.order.value}")
    if state.kind != "cumulant":
        raise ShapeMismatch("rhs acts on cumulant states")
    n = np.asarray(params.modes.omega).size
    if state.n_modes != n:
        raise ShapeMismatch(f"state has {state.n_modes} modes, system has {n}")
    y = state.to_vector()
    if not np.all(np.isfinite(y)):
        raise NonFiniteInput("state contains non-finite values")
    kernel = RhsKernel(params, method, n)
    dy = np.zeros_like(y) if out is None else out
    kernel(t, y, dy)
    return MomentState.from_vector(dy, n, method.order)
