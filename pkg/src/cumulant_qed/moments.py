"""Truncated moment hierarchy: storage, initial states, observables, cumulant algebra.

Blocks (cumulants for everything beyond first order)::

    pauli   <s^x>, <s^y>, <s^z>                       (3,)     real
    a       <a_n>                                     (N,)
    ads     <a_n^+ s^i>_c                             (3, N)
    ada     <a_n^+ a_m>_c                             (N, N)   Hermitian
    add     <a_n^+ a_m^+>_c                           (N, N)   symmetric
    adas_z  <a_n^+ a_m s^z>_c                         (N, N)   Hermitian
    adas_x, adas_y                                    (N, N)   Hermitian
    adds_x, adds_y, adds_z  <a_n^+ a_m^+ s^i>_c        (N, N)   symmetric
    adda    <a_n^+ a_m^+ a_l>_c                       (N, N, N) symmetric in n, m
    addd    <a_n^+ a_m^+ a_l^+>_c                     (N, N, N) fully symmetric

The flat vector handed to the integrator is float64: the three Pauli values,
then every complex block in the order above as interleaved (re, im) pairs.
"""

import enum
import itertools
from dataclasses import dataclass

import numpy as np


class Order(enum.Enum):
    MF = "MF"
    ORDER2 = "2"
    ORDER2_1A = "2+1a"
    ORDER2_1B = "2+1b"
    ORDER3 = "3"


_PAIR_BLOCKS = ("ads", "ada", "add")
_THIRD_BLOCKS = ("adas_x", "adas_y", "adds_x", "adds_y", "adds_z", "adda", "addd")
COMPLEX_BLOCKS = ("a",) + _PAIR_BLOCKS + ("adas_z",) + _THIRD_BLOCKS

_BLOCKS = {
    Order.MF: ("a",),
    Order.ORDER2: ("a",) + _PAIR_BLOCKS,
    Order.ORDER2_1A: ("a",) + _PAIR_BLOCKS + ("adas_z",),
    Order.ORDER2_1B: ("a",) + _PAIR_BLOCKS + ("adas_z",),
    Order.ORDER3: COMPLEX_BLOCKS,
}


# blocks that change sign under the parity sigma^z (-1)^(photon number)
PARITY_ODD = ("adas_x", "adas_y", "adds_x", "adds_y", "adda", "addd")


def blocks_for(order, even_only=False):
    """Complex blocks stored at a truncation level, in serialization order.

    With ``even_only`` the large parity-odd blocks are left out; they stay
    exactly zero for an undriven system started in a parity eigenstate.
    """
    blocks = _BLOCKS[Order(order)]
    if even_only:
        blocks = tuple(b for b in blocks if b not in PARITY_ODD)
    return blocks


def block_shape(name, n):
    if name == "a":
        return (n,)
    if name == "ads":
        return (3, n)
    if name in ("adda", "addd"):
        return (n, n, n)
    return (n, n)


class Layout:
    """Offsets of each block inside the flat float64 state vector."""

    def __init__(self, n_modes, order, even_only=False):
        self.n_modes = n_modes
        self.order = Order(order)
        self.names = blocks_for(self.order, even_only)
        self.slices = {"pauli": slice(0, 3)}
        pos = 3
        for name in self.names:
            size = 2 * int(np.prod(block_shape(name, n_modes)))
            self.slices[name] = slice(pos, pos + size)
            pos += size
        self.size = pos

    def views(self, vec):
        """Dict of block views (no copies) into ``vec``."""
        out = {"pauli": vec[self.slices["pauli"]]}
        for name in self.names:
            out[name] = vec[self.slices[name]].view(np.complex128).reshape(
                block_shape(name, self.n_modes)
            )
        return out


@dataclass
class MomentState:
    """Moment hierarchy at one instant; absent blocks are ``None``."""

    order: Order
    pauli: np.ndarray
    a: np.ndarray
    ads: np.ndarray = None
    ada: np.ndarray = None
    add: np.ndarray = None
    adas_z: np.ndarray = None
    adas_x: np.ndarray = None
    adas_y: np.ndarray = None
    adds_x: np.ndarray = None
    adds_y: np.ndarray = None
    adds_z: np.ndarray = None
    adda: np.ndarray = None
    addd: np.ndarray = None
    # "cumulant" for the propagated form, "expectation" for raw moments
    kind: str = "cumulant"

    @property
    def n_modes(self):
        return self.a.size

    @property
    def layout(self):
        return Layout(self.n_modes, self.order)

    @classmethod
    def from_vector(cls, vec, n_modes, order, kind="cumulant"):
        """Wrap a flat vector; the blocks are views sharing its memory."""
        layout = Layout(n_modes, order)
        if vec.shape != (layout.size,):
            raise ValueError(f"state vector has shape {vec.shape}, expected ({layout.size},)")
        return cls(order=layout.order, kind=kind, **layout.views(vec))

    @classmethod
    def zeros(cls, n_modes, order, kind="cumulant"):
        layout = Layout(n_modes, order)
        return cls.from_vector(np.zeros(layout.size), n_modes, order, kind)

    def to_vector(self):
        layout = self.layout
        vec = np.empty(layout.size)
        views = layout.views(vec)
        views["pauli"][:] = self.pauli
        for name in blocks_for(self.order):
            views[name][...] = getattr(self, name)
        return vec

    def copy(self):
        return MomentState.from_vector(self.to_vector(), self.n_modes, self.order, self.kind)

    def blocks(self):
        """(name, array) for every stored block, Pauli first."""
        yield "pauli", self.pauli
        for name in blocks_for(self.order):
            yield name, getattr(self, name)

    def __add__(self, other):
        _check_compatible(self, other)
        return MomentState.from_vector(
            self.to_vector() + other.to_vector(), self.n_modes, self.order, self.kind
        )

    def __mul__(self, c):
        return MomentState.from_vector(c * self.to_vector(), self.n_modes, self.order, self.kind)

    __rmul__ = __mul__

    def __sub__(self, other):
        return self + (-1.0) * other

    def max_abs(self):
        return float(np.max(np.abs(self.to_vector())))


def _check_compatible(s1, s2):
    if s1.order != s2.order or s1.n_modes != s2.n_modes or s1.kind != s2.kind:
        raise ValueError("incompatible moment states")


class InitialState(enum.Enum):
    GROUND_VACUUM = "ground"
    EXCITED_VACUUM = "excited"


def init(kind, modes, order):
    """Product state of the bare emitter (ground or excited) with the photon vacuum."""
    n = modes.n_modes if hasattr(modes, "n_modes") else int(modes)
    state = MomentState.zeros(n, order)
    state.pauli[2] = 1.0 if InitialState(kind) is InitialState.EXCITED_VACUUM else -1.0
    return state


def population(state):
    """Excited-state population <s^+ s^->; may leave [0, 1] under truncation."""
    return 0.5 * (1.0 + state.pauli[2])


def mode_occupations(state):
    """<a_n^+ a_n> per mode (cumulant state)."""
    occ = np.abs(state.a) ** 2
    if state.ada is not None:
        occ = occ + np.real(np.diagonal(state.ada))
    return occ


def photon_total(state):
    return float(np.sum(mode_occupations(state)))


def displaced_field(state, pulse_alphas):
    """Lab-frame field <a_n> = <a_n>' + alpha_n(t)."""
    pulse_alphas = np.asarray(pulse_alphas, dtype=complex)
    if pulse_alphas.shape != state.a.shape:
        raise ValueError(
            f"got {pulse_alphas.size} field amplitudes for {state.a.size} modes"
        )
    return state.a + pulse_alphas


@dataclass
class Observables:
    population: float
    pauli: np.ndarray
    photon_total: float
    field: np.ndarray = None


def observables(state, pulse_alphas=None):
    field = None if pulse_alphas is None else displaced_field(state, pulse_alphas)
    return Observables(
        population=float(population(state)),
        pauli=np.array(state.pauli, dtype=float),
        photon_total=photon_total(state),
        field=field,
    )


def symmetry_residual(state):
    """Largest violation of the Hermiticity/symmetry of the stored blocks."""
    res = 0.0
    for name, arr in state.blocks():
        if arr is None:
            continue
        if name in ("ada", "adas_x", "adas_y", "adas_z"):
            res = max(res, float(np.max(np.abs(arr - arr.conj().T))))
        elif name in ("add", "adds_x", "adds_y", "adds_z"):
            res = max(res, float(np.max(np.abs(arr - arr.T))))
        elif name == "adda":
            res = max(res, float(np.max(np.abs(arr - arr.transpose(1, 0, 2)))))
        elif name == "addd":
            for perm in ((1, 0, 2), (0, 2, 1), (2, 1, 0)):
                res = max(res, float(np.max(np.abs(arr - arr.transpose(perm)))))
    return res


# ---------------------------------------------------------------------------
# operator-level cumulant algebra (scalar, any pattern up to four operators)
#
# An operator is ("+", n) for a_n^+, ("-", n) for a_n, or one of "x", "y", "z".
# Patterns must be normal ordered and carry at most one Pauli operator.

_PAULI = {"x": 0, "y": 1, "z": 2}


class UnsupportedPattern(ValueError):
    pass


def _normalize(ops):
    ops = tuple(ops)
    paulis = [o for o in ops if isinstance(o, str)]
    photons = [o for o in ops if not isinstance(o, str)]
    if len(paulis) > 1:
        raise UnsupportedPattern("at most one Pauli operator per moment")
    seen_annihilator = False
    for kind, _ in photons:
        if kind == "-":
            seen_annihilator = True
        elif kind == "+" and seen_annihilator:
            raise UnsupportedPattern("pattern must be normal ordered")
        elif kind not in "+-":
            raise UnsupportedPattern(f"unknown operator {kind!r}")
    return photons, (paulis[0] if paulis else None)


def cumulant(state, ops):
    """Stored cumulant of a normal-ordered operator pattern (0 if not kept)."""
    photons, p = _normalize(ops)
    k = len(photons) + (p is not None)
    if k == 0 or k > 3:
        return 0.0
    dag = [i for kind, i in photons if kind == "+"]
    ann = [i for kind, i in photons if kind == "-"]
    pi = None if p is None else _PAULI[p]

    def blk(name):
        return getattr(state, name)

    if k == 1:
        if pi is not None:
            return complex(state.pauli[pi])
        return complex(np.conj(state.a[dag[0]]) if dag else state.a[ann[0]])
    if k == 2:
        if pi is not None:
            if state.ads is None:
                return 0.0
            return complex(state.ads[pi, dag[0]] if dag else np.conj(state.ads[pi, ann[0]]))
        if len(dag) == 1:
            return 0.0 if state.ada is None else complex(state.ada[dag[0], ann[0]])
        if len(dag) == 2:
            return 0.0 if state.add is None else complex(state.add[dag[0], dag[1]])
        return 0.0 if state.add is None else complex(np.conj(state.add[ann[1], ann[0]]))
    # k == 3
    if pi is not None:
        xyz = "xyz"[pi]
        if len(dag) == 1:
            b = blk("adas_" + xyz)
            return 0.0 if b is None else complex(b[dag[0], ann[0]])
        b = blk("adds_" + xyz)
        if b is None:
            return 0.0
        if len(dag) == 2:
            return complex(b[dag[0], dag[1]])
        return complex(np.conj(b[ann[1], ann[0]]))
    if len(dag) == 3:
        return 0.0 if state.addd is None else complex(state.addd[dag[0], dag[1], dag[2]])
    if len(dag) == 0:
        return 0.0 if state.addd is None else complex(np.conj(state.addd[ann[2], ann[1], ann[0]]))
    if state.adda is None:
        return 0.0
    if len(dag) == 2:
        return complex(state.adda[dag[0], dag[1], ann[0]])
    # <a_n^+ a_m a_l>_c = conj(<a_l^+ a_m^+ a_n>_c)
    return complex(np.conj(state.adda[ann[1], ann[0], dag[0]]))


def set_partitions(items):
    """All set partitions of a list, blocks keeping the original order."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]


def expansion_terms(n_ops):
    """Index partitions of range(n_ops): one per summand of the cumulant expansion."""
    return [
        [sorted(b) for b in part] for part in set_partitions(list(range(n_ops)))
    ]


def expand_cumulants(state, ops):
    """Expectation value of a normal-ordered pattern (<= 4 operators) from stored cumulants.

    Cumulants that are not stored (fourth order always) count as zero.
    """
    ops = tuple(ops)
    if len(ops) > 4:
        raise UnsupportedPattern("patterns of more than four operators are not supported")
    _normalize(ops)
    total = 0.0 + 0.0j
    for part in expansion_terms(len(ops)):
        term = 1.0 + 0.0j
        for block in part:
            term *= cumulant(state, [ops[i] for i in block])
            if term == 0:
                break
        total += term
    return total


# ---------------------------------------------------------------------------
# whole-state conversion between cumulants and expectation values


def to_expectations(state):
    """Raw expectation values of every stored block."""
    if state.kind != "cumulant":
        raise ValueError("state already holds expectation values")
    out = state.copy()
    out.kind = "expectation"
    s = state.pauli
    a = state.a
    ac = a.conj()
    if state.ads is not None:
        out.ads[...] = state.ads + s[:, None] * ac[None, :]
        out.ada[...] = state.ada + np.outer(ac, a)
        out.add[...] = state.add + np.outer(ac, ac)
    for i, xyz in enumerate("xyz"):
        c = getattr(state, "adas_" + xyz)
        if c is not None:
            getattr(out, "adas_" + xyz)[...] = c + _adas_products(s[i], a, state.ads[i], state.ada)
        c = getattr(state, "adds_" + xyz)
        if c is not None:
            getattr(out, "adds_" + xyz)[...] = c + _adds_products(s[i], a, state.ads[i], state.add)
    if state.adda is not None:
        out.adda[...] = state.adda + _adda_products(a, state.ada, state.add)
        out.addd[...] = state.addd + _addd_products(a, state.add)
    return out


def from_expectations(raw):
    """Inverse of :func:`to_expectations`."""
    if raw.kind != "expectation":
        raise ValueError("state does not hold expectation values")
    out = raw.copy()
    out.kind = "cumulant"
    s = raw.pauli
    a = raw.a
    ac = a.conj()
    if raw.ads is not None:
        out.ads[...] = raw.ads - s[:, None] * ac[None, :]
        out.ada[...] = raw.ada - np.outer(ac, a)
        out.add[...] = raw.add - np.outer(ac, ac)
    for i, xyz in enumerate("xyz"):
        r = getattr(raw, "adas_" + xyz)
        if r is not None:
            getattr(out, "adas_" + xyz)[...] = r - _adas_products(s[i], a, out.ads[i], out.ada)
        r = getattr(raw, "adds_" + xyz)
        if r is not None:
            getattr(out, "adds_" + xyz)[...] = r - _adds_products(s[i], a, out.ads[i], out.add)
    if raw.adda is not None:
        out.adda[...] = raw.adda - _adda_products(a, out.ada, out.add)
        out.addd[...] = raw.addd - _addd_products(a, out.add)
    return out


def _adas_products(s, a, cads, cada):
    # <a_n^+ a_m s> minus its connected part
    ac = a.conj()
    return (
        s * np.outer(ac, a)
        + np.outer(ac, cads.conj())
        + np.outer(cads, a)
        + s * cada
    )


def _adds_products(s, a, cads, cadd):
    ac = a.conj()
    return s * np.outer(ac, ac) + np.outer(ac, cads) + np.outer(cads, ac) + s * cadd


def _adda_products(a, cada, cadd):
    ac = a.conj()
    return (
        ac[:, None, None] * ac[None, :, None] * a[None, None, :]
        + ac[:, None, None] * cada[None, :, :]
        + ac[None, :, None] * cada[:, None, :]
        + a[None, None, :] * cadd[:, :, None]
    )


def _addd_products(a, cadd):
    ac = a.conj()
    return (
        ac[:, None, None] * ac[None, :, None] * ac[None, None, :]
        + ac[:, None, None] * cadd[None, :, :]
        + ac[None, :, None] * cadd[:, None, :]
        + ac[None, None, :] * cadd[:, :, None]
    )


def random_state(n_modes, order, rng, scale=0.3):
    """Random cumulant state obeying all block symmetries (for tests and checks)."""
    state = MomentState.zeros(n_modes, order)

    def cplx(*shape):
        return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))

    state.pauli[:] = rng.uniform(-0.8, 0.8, 3)
    state.a[:] = cplx(n_modes)
    if state.ads is not None:
        state.ads[:] = cplx(3, n_modes)
        h = cplx(n_modes, n_modes)
        state.ada[:] = h + h.conj().T
        s = cplx(n_modes, n_modes)
        state.add[:] = s + s.T
    for name in ("adas_x", "adas_y", "adas_z"):
        if getattr(state, name) is not None:
            h = cplx(n_modes, n_modes)
            getattr(state, name)[:] = h + h.conj().T
    for name in ("adds_x", "adds_y", "adds_z"):
        if getattr(state, name) is not None:
            s = cplx(n_modes, n_modes)
            getattr(state, name)[:] = s + s.T
    if state.adda is not None:
        t = cplx(n_modes, n_modes, n_modes)
        state.adda[:] = t + t.transpose(1, 0, 2)
        t = cplx(n_modes, n_modes, n_modes)
        state.addd[:] = sum(t.transpose(p) for p in itertools.permutations(range(3)))
    return state
