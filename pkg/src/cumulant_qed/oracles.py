"""Reference solvers: single-excitation sector, dissipative Rabi model, driven
two-level system, Wigner-Weisskopf decay, and a dense Fock-space check of the
moment equations themselves.
"""

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .drive import NoDrive, mu_field
from .eom import expectation_rates
from .integrator import solve


class FockCutoffNotConverged(RuntimeError):
    pass


class CutoffTooSmall(ValueError):
    pass


@dataclass
class OracleResult:
    times: np.ndarray
    population: np.ndarray
    photon_number: np.ndarray = None
    extra: dict = field(default_factory=dict)


def _time_grid(t_end, dt_out):
    n = int(np.floor(t_end / dt_out + 1e-9))
    t = dt_out * np.arange(n + 1)
    if t_end - t[-1] > 1e-9 * dt_out:
        t = np.append(t, t_end)
    return t


def _c2r(z):
    return np.concatenate([z.real.ravel(), z.imag.ravel()])


def _r2c(x, shape=None):
    n = x.size // 2
    z = x[:n] + 1j * x[n:]
    return z if shape is None else z.reshape(shape)


# ---------------------------------------------------------------------------
# single excitation (rotating-wave sector)


def single_excitation_exact(modes, omega0, t_end, dt_out):
    """Excited emitter in the one-excitation sector, by diagonalization.

    i dc_e/dt = W0 c_e + sum g_n c_n,  i dc_n/dt = w_n c_n + g_n c_e.
    """
    omega = np.asarray(modes.omega, dtype=float)
    g = np.asarray(modes.g, dtype=float)
    n = omega.size
    h = np.zeros((n + 1, n + 1))
    h[0, 0] = omega0
    h[0, 1:] = h[1:, 0] = g
    h[1:, 1:] = np.diag(omega)
    energies, vecs = np.linalg.eigh(h)
    times = _time_grid(t_end, dt_out)
    # c(t) = V exp(-iEt) V^T e_0
    coeff = vecs[0, :]
    amps = (np.exp(-1j * np.outer(times, energies)) * coeff) @ vecs.T
    pop = np.abs(amps[:, 0]) ** 2
    photons = np.sum(np.abs(amps[:, 1:]) ** 2, axis=1)
    norm = np.sum(np.abs(amps) ** 2, axis=1)
    return OracleResult(times, pop, photons, {"norm": norm})


def ww_exponential(J_at_omega0, t_end, dt_out):
    """Markovian decay exp(-2 pi J t)."""
    times = _time_grid(t_end, dt_out)
    return OracleResult(times, np.exp(-2 * np.pi * J_at_omega0 * times))


# ---------------------------------------------------------------------------
# driven two-level system


def semiclassical_tls(omega0, pulse, t_end, dt_out, rtol=1e-11, atol=1e-13):
    """Bare emitter driven by -F(t) s^x, starting in the ground state."""
    times = _time_grid(t_end, dt_out)

    def f(t, y):
        cg, ce = y[0] + 1j * y[2], y[1] + 1j * y[3]
        F = mu_field(pulse, t)
        dcg = 1j * F * ce
        dce = -1j * (-F * cg + omega0 * ce)
        return np.array([dcg.real, dce.real, dcg.imag, dce.imag])

    y = solve(f, np.array([1.0, 0.0, 0.0, 0.0]), times, rtol, atol)
    pop = y[:, 1] ** 2 + y[:, 3] ** 2
    norm = pop + y[:, 0] ** 2 + y[:, 2] ** 2
    return OracleResult(times, pop, None, {"norm": norm})


# ---------------------------------------------------------------------------
# dissipative Rabi model


def _rabi_operators(n_max):
    a = np.diag(np.sqrt(np.arange(1, n_max)), 1)
    sz = np.diag([-1.0, 1.0])  # basis (g, e)
    sx = np.array([[0.0, 1.0], [1.0, 0.0]])
    eye_f, eye_e = np.eye(n_max), np.eye(2)
    return np.kron(eye_e, a), np.kron(sx, eye_f), np.kron(sz, eye_f)


def _lindblad_run(g, gamma, omega_c, omega0, pulse, n_max, initial, times, rtol, atol):
    A, SX, SZ = _rabi_operators(n_max)
    Ad = A.T
    dim = 2 * n_max
    H0 = 0.5 * omega0 * SZ + omega_c * Ad @ A + g * (A + Ad) @ SX
    nop = Ad @ A
    psi0 = np.zeros(dim)
    psi0[n_max if initial == "excited" else 0] = 1.0  # |e,0> or |g,0>
    rho0 = np.outer(psi0, psi0).astype(complex)

    def f(t, y):
        rho = _r2c(y, (dim, dim))
        H = H0 - mu_field(pulse, t) * SX
        hr = H @ rho
        d = -1j * (hr - hr.conj().T)
        if gamma:
            ar = A @ rho
            nr = nop @ rho
            d += gamma * (ar @ Ad - 0.5 * (nr + nr.conj().T))
        return _c2r(d)

    ys = solve(f, _c2r(rho0), times, rtol, atol)
    pe = np.diag(np.kron(np.diag([0.0, 1.0]), np.eye(n_max)))
    rhos = ys[:, : dim * dim].reshape(-1, dim, dim) + 1j * ys[:, dim * dim :].reshape(-1, dim, dim)
    diag = np.real(np.diagonal(rhos, axis1=1, axis2=2))
    pop = diag @ pe
    photons = diag @ np.real(np.diag(nop))
    trace = diag.sum(axis=1)
    herm = np.max(np.abs(rhos - np.conj(np.transpose(rhos, (0, 2, 1)))), axis=(1, 2))
    return pop, photons, trace, herm, diag


def lindblad_rabi(g, gamma, omega_c, omega0, pulse=NoDrive(), n_max=2, initial="excited",
                  t_end=1.0, dt_out=0.1, rtol=1e-10, atol=1e-12, check_tol=1e-4):
    """Single lossy mode coupled to the emitter without rotating-wave approximation.

    ``n_max`` is the number of Fock levels.  The run is repeated with
    ``2 * n_max`` levels; a population change above ``check_tol`` raises
    FockCutoffNotConverged.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    if initial not in ("excited", "ground"):
        raise ValueError("initial must be 'excited' or 'ground'")
    times = _time_grid(t_end, dt_out)
    args = (g, gamma, omega_c, omega0, pulse)
    pop, photons, trace, herm, diag = _lindblad_run(*args, n_max, initial, times, rtol, atol)
    pop2 = _lindblad_run(*args, 2 * n_max, initial, times, rtol, atol)[0]
    dev = float(np.max(np.abs(pop - pop2)))
    if dev > check_tol:
        raise FockCutoffNotConverged(
            f"n_max={n_max}: doubling the cutoff changes the population by {dev:.3g}"
        )
    return OracleResult(
        times, pop, photons,
        {"trace": trace, "hermiticity": herm, "min_population": diag.min(axis=1),
         "cutoff_change": dev},
    )


# ---------------------------------------------------------------------------
# dense Fock-space check of the raw moment equations


class DenseSystem:
    """Emitter plus ``n_modes`` oscillators, each truncated at ``cutoff`` photons."""

    def __init__(self, modes, omega0, cutoff, pulse=NoDrive()):
        self.omega = np.asarray(modes.omega, dtype=float)
        self.g = np.asarray(modes.g, dtype=float)
        self.omega0 = float(omega0)
        self.pulse = pulse
        self.cutoff = cutoff
        n = self.omega.size
        nf = cutoff + 1
        a1 = np.diag(np.sqrt(np.arange(1, nf)), 1)
        eyes = [np.eye(2)] + [np.eye(nf)] * n

        def embed(op, site):
            parts = list(eyes)
            parts[site] = op
            return reduce(np.kron, parts)

        # emitter basis (g, e); s^z = |e><e| - |g><g|
        paulis = [
            np.array([[0, 1], [1, 0]], dtype=complex),
            np.array([[0, 1j], [-1j, 0]], dtype=complex),
            np.diag([-1.0, 1.0]).astype(complex),
        ]
        self.s = [embed(p, 0) for p in paulis]
        self.a = [embed(a1.astype(complex), k + 1) for k in range(n)]
        self.ad = [x.conj().T for x in self.a]
        self.dim = self.s[0].shape[0]
        self.H0 = 0.5 * self.omega0 * self.s[2]
        for k in range(n):
            self.H0 = self.H0 + self.omega[k] * self.ad[k] @ self.a[k]
            self.H0 = self.H0 + self.g[k] * (self.ad[k] + self.a[k]) @ self.s[0]
        self.bplus = sum(gk * x for gk, x in zip(self.g, self.ad))
        self.bminus = self.bplus.conj().T
        # photon number per mode in the top Fock layer
        self.top = [np.diag(np.real(np.diag(x.conj().T @ x)) >= cutoff - 0.5) for x in self.a]

    def hamiltonian(self, t):
        return self.H0 - mu_field(self.pulse, t) * self.s[0]

    def product_state(self, bloch, alphas):
        """Emitter Bloch vector times per-mode states (|0> + alpha|1>)/norm."""
        x, y, z = bloch
        theta = np.arccos(np.clip(z, -1, 1))
        phi = np.arctan2(y, x)
        # basis (g, e): <s^z> = |c_e|^2 - |c_g|^2 = cos(theta)
        emitter = np.array([np.sin(theta / 2), np.cos(theta / 2) * np.exp(1j * phi)])
        parts = [emitter]
        for alpha in alphas:
            v = np.zeros(self.cutoff + 1, dtype=complex)
            v[0], v[1] = 1.0, alpha
            parts.append(v / np.linalg.norm(v))
        return reduce(np.kron, parts)

    def propagate(self, psi0, times, rtol=1e-12, atol=1e-14):
        """State at each of ``times`` (starting at ``times[0]``)."""
        if isinstance(self.pulse, NoDrive):
            energies, vecs = np.linalg.eigh(self.H0)
            c0 = vecs.conj().T @ psi0
            ph = np.exp(-1j * np.outer(np.asarray(times) - times[0], energies))
            return (ph * c0) @ vecs.T

        def f(t, y):
            return _c2r(-1j * (self.hamiltonian(t) @ _r2c(y)))

        ys = solve(f, _c2r(psi0), times, rtol, atol)
        return np.array([_r2c(y) for y in ys])

    def top_layer_population(self, psi):
        return max(float(np.real(np.vdot(psi, p @ psi))) for p in self.top)

    def moments(self, psi):
        """Raw moments up to third order and the exact T, Q, R contractions."""
        n = self.omega.size

        ev = np.vdot
        s_psi = [x @ psi for x in self.s]
        a_psi = [x @ psi for x in self.a]
        # vectors for <X Y ...>: <psi| A^+ ... = (A psi)^dagger
        s = np.array([np.real(np.vdot(psi, v)) for v in s_psi])
        a = np.array([np.vdot(psi, v) for v in a_psi])
        ads = np.array([[np.vdot(a_psi[k], v) for k in range(n)] for v in s_psi])
        ada = np.array([[np.vdot(a_psi[k], a_psi[m]) for m in range(n)] for k in range(n)])
        aa_psi = [[self.a[k] @ a_psi[m] for m in range(n)] for k in range(n)]
        add = np.array([[np.vdot(aa_psi[m][k], psi) for m in range(n)] for k in range(n)])
        # <a_n^+ a_m s> = <a_n psi| a_m s psi>
        as_psi = [[self.a[m] @ s_psi[i] for m in range(n)] for i in range(3)]
        adas = [np.array([[ev(a_psi[k], as_psi[i][m]) for m in range(n)] for k in range(n)])
                for i in range(3)]
        # <a_n^+ a_m^+ s> = <a_m a_n psi| s psi>
        adds = [np.array([[ev(aa_psi[m][k], s_psi[i]) for m in range(n)] for k in range(n)])
                for i in range(3)]
        adda = np.array([[[ev(aa_psi[m][k], a_psi[l]) for l in range(n)] for m in range(n)]
                         for k in range(n)])
        addd = np.array([[[ev(self.a[l] @ aa_psi[m][k], psi) for l in range(n)]
                          for m in range(n)] for k in range(n)])
        raw = {"s": s, "a": a, "ads": ads, "ada": ada, "add": add, "adas": adas,
               "adds": adds, "adda": adda, "addd": addd}
        # four-operator sums with B+ = sum g a^+, B- = sum g a
        bm_psi = self.bminus @ psi
        T, Q, R = [], [], []
        for i in range(3):
            # T = <B+ a_n^+ s> + <a_n^+ B- s>
            T.append(np.array([
                np.vdot(self.a[k] @ bm_psi, s_psi[i]) + np.vdot(a_psi[k], self.bminus @ s_psi[i])
                for k in range(n)
            ]))
            Q.append(np.array([[
                np.vdot(self.a[k] @ bm_psi, as_psi[i][m])
                + np.vdot(a_psi[k], self.a[m] @ (self.bminus @ s_psi[i]))
                for m in range(n)] for k in range(n)]))
            R.append(np.array([[
                np.vdot(self.a[m] @ (self.a[k] @ bm_psi), s_psi[i])
                + np.vdot(aa_psi[m][k], self.bminus @ s_psi[i])
                for m in range(n)] for k in range(n)]))
        return raw, {"T": T, "Q": Q, "R": R}


RESIDUAL_FAMILIES = (
    "pauli", "a", "ads", "ada", "add",
    "adas_x", "adas_y", "adas_z", "adds_x", "adds_y", "adds_z", "adda", "addd",
)


def _flatten_raw(raw):
    parts = [raw["s"], raw["a"], raw["ads"], raw["ada"], raw["add"]]
    parts += list(raw["adas"]) + list(raw["adds"]) + [raw["adda"], raw["addd"]]
    return parts


def rhs_residual(modes, omega0, fock_cutoff, t_grid, pulse=NoDrive(), psi0=None,
                 h=1e-2, rates=expectation_rates, leakage_tol=1e-6):
    """Max |exact derivative - equation of motion| per equation family.

    The exact derivative is a five-point centred difference of moments of
    the exact state; the equations get the exact higher moments.  ``rates``
    may be replaced to test a modified set of equations.
    """
    n = len(modes.omega)
    if n > 3 or fock_cutoff > 4:
        raise ValueError("dense check is limited to 3 modes and 4 photons per mode")
    system = DenseSystem(modes, omega0, fock_cutoff, pulse)
    if psi0 is None:
        # tilted emitter, photon vacuum: every family is populated within a short time
        psi0 = system.product_state((0.6, -0.3, 0.5), np.zeros(n))
    t_grid = np.asarray(t_grid, dtype=float)
    offsets = np.array([-2, -1, 1, 2]) * h
    stencil = np.array([1, -8, 8, -1]) / (12 * h)
    sample_t = np.unique(np.concatenate([[0.0], t_grid, (t_grid[:, None] + offsets).ravel()]))
    if sample_t[0] < 0:
        raise ValueError("t_grid must leave room for the difference stencil (t >= 2h)")
    states = system.propagate(psi0, sample_t)
    index = {round(t, 12): i for i, t in enumerate(sample_t)}
    worst = {name: 0.0 for name in RESIDUAL_FAMILIES}
    leakage = 0.0
    for t in t_grid:
        psi = states[index[round(t, 12)]]
        leakage = max(leakage, system.top_layer_population(psi))
        raw, contr = system.moments(psi)
        F = float(mu_field(pulse, t))
        eq = rates(raw, contr, system.omega0, system.omega, system.g, F, RESIDUAL_FAMILIES)
        fd = [np.zeros_like(p, dtype=complex) for p in _flatten_raw(raw)]
        for w, dt in zip(stencil, offsets):
            moms = _flatten_raw(system.moments(states[index[round(t + dt, 12)]])[0])
            for acc, m in zip(fd, moms):
                acc += w * m
        fd_map = dict(zip(("pauli", "a", "ads", "ada", "add"), fd[:5]))
        for i, c in enumerate("xyz"):
            fd_map["adas_" + c] = fd[5 + i]
            fd_map["adds_" + c] = fd[8 + i]
        fd_map["adda"], fd_map["addd"] = fd[11], fd[12]
        for name in RESIDUAL_FAMILIES:
            worst[name] = max(worst[name], float(np.max(np.abs(eq[name] - fd_map[name]))))
    if leakage > leakage_tol:
        raise CutoffTooSmall(
            f"top Fock layer holds population {leakage:.3g} > {leakage_tol:g}"
        )
    return worst
