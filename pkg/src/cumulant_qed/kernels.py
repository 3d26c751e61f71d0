"""Fused loops for the memory-bound parts of a time step.

Each kernel makes one pass over its N x N (or N x N x N) block, fusing the
free rotation, the source terms and the index contractions that the
equations need next.  Loops are serial with a fixed reduction order, so
results do not depend on scheduling.
"""

import numpy as np
from numba import njit


# reassociation lets LLVM vectorize the reductions; NaN/inf semantics are kept
_FLAGS = {"reassoc", "contract"}
_CHUNK = 512  # elements per pass; fixed-size slices let the loops vectorize


@njit(cache=True)
def stage_sum(out, y, K, coef, rows):
    """out = y + sum_j coef[j] * K[rows[j]]."""
    n = y.size
    acc = np.empty(_CHUNK)
    full = n // _CHUNK * _CHUNK
    for lo in range(0, full, _CHUNK):
        ys = y[lo:lo + _CHUNK]
        for i in range(_CHUNK):
            acc[i] = ys[i]
        for j in range(rows.size):
            c = coef[j]
            k = K[rows[j], lo:lo + _CHUNK]
            for i in range(_CHUNK):
                acc[i] += c * k[i]
        o = out[lo:lo + _CHUNK]
        for i in range(_CHUNK):
            o[i] = acc[i]
    for i in range(full, n):
        v = y[i]
        for j in range(rows.size):
            v += coef[j] * K[rows[j], i]
        out[i] = v


@njit(cache=True)
def error_norm(y, ynew, K, coef, rows, rtol, atol):
    """Scaled max-norm of the error estimate, and max |ynew|.

    The error is sum_j coef[j] K[rows[j]], each component scaled by
    atol + rtol * max(|y_i|, |ynew_i|).  Both results are NaN if any input is.
    """
    n = y.size
    e = np.empty(_CHUNK)
    worst = 0.0
    big = 0.0
    total = 0.0
    for lo in range(0, n, _CHUNK):
        m = min(_CHUNK, n - lo)
        for i in range(m):
            e[i] = 0.0
        for j in range(rows.size):
            c = coef[j]
            k = K[rows[j], lo:lo + m]
            for i in range(m):
                e[i] += c * k[i]
        ys = y[lo:lo + m]
        yn = ynew[lo:lo + m]
        for i in range(m):
            b = abs(yn[i])
            r = abs(e[i]) / (atol + rtol * max(abs(ys[i]), b))
            worst = r if r > worst else worst
            big = b if b > big else big
            total += r + b
    if total != total:
        return np.nan, np.nan
    return worst, big


@njit(cache=True, fastmath=_FLAGS)
def photon_pairs(omega, g, cx, cada, cadd, dcada, dcadd, adas_z, cg, u, v, tz):
    """Derivatives of <a^+ a>_c and <a^+ a^+>_c plus the contractions

    cg = cada @ g, u = cadd @ g, v = g @ cada, tz = adas_z @ g (if adas_z has rows).
    """
    n = omega.size
    cxc = np.conj(cx)
    for j in range(n):
        v[j] = 0.0
    for i in range(n):
        gi = g[i]
        cxi = cx[i]
        wi = omega[i]
        x = cada[i]
        dx = dcada[i]
        acc = 0j
        for j in range(n):
            xij = x[j]
            dx[j] = 1j * ((wi - omega[j]) * xij + gi * cxc[j] - cxi * g[j])
            acc += xij * g[j]
            v[j] += gi * xij
        cg[i] = acc
        y = cadd[i]
        dy = dcadd[i]
        acc = 0j
        for j in range(n):
            yij = y[j]
            dy[j] = 1j * ((wi + omega[j]) * yij + gi * cx[j] + cxi * g[j])
            acc += yij * g[j]
        u[i] = acc
        acc = 0j
        if adas_z.shape[0] > 0:
            z = adas_z[i]
            for j in range(n):
                acc += z[j] * g[j]
        tz[i] = acc


@njit(cache=True, fastmath=_FLAGS)
def low_rank_rate(omega, kappa, c, dc, sz, mu, P, Q, out):
    """out = i(w_n - w_m)(kappa + sz c) + mu c - sz dc + sum_r P[r, n] Q[r, m].

    The 2+1 equation for <a_n^+ a_m s^z>_c has this shape once its
    disconnected products are grouped into outer products.
    """
    n = omega.size
    R = P.shape[0]
    for i in range(n):
        wi = omega[i]
        k_row = kappa[i]
        c_row = c[i]
        dc_row = dc[i]
        o = out[i]
        for j in range(n):
            x = c_row[j]
            o[j] = 1j * (wi - omega[j]) * (k_row[j] + sz * x) + mu * x - sz * dc_row[j]
        for r in range(R):
            p = P[r, i]
            q = Q[r]
            for j in range(n):
                o[j] += p * q[j]


@njit(cache=True, fastmath=_FLAGS)
def triple_photons(omega, g, ax, dx, adda, addd, dadda, daddd, m1, m2, m3):
    """Derivatives of <a^+ a^+ a>_c and <a^+ a^+ a^+>_c plus the contractions

    m1[n, m] = sum_l g_l adda[l, n, m], m2[n, m] = sum_l adda[n, m, l] g_l,
    m3[n, m] = sum_l g_l addd[l, n, m].
    """
    n = omega.size
    m1[:, :] = 0.0
    m3[:, :] = 0.0
    for i in range(n):
        gi = g[i]
        wi = omega[i]
        ax_i = ax[i]
        dx_i = dx[i]
        for j in range(n):
            gj = g[j]
            wij = wi + omega[j]
            dxij = dx_i[j]
            ax_j = ax[j]
            dx_j = dx[j]
            x = adda[i, j]
            y = addd[i, j]
            dxo = dadda[i, j]
            dyo = daddd[i, j]
            r1 = m1[j]
            r3 = m3[j]
            acc = 0j
            for l in range(n):
                gl = g[l]
                xl = x[l]
                yl = y[l]
                dxo[l] = 1j * ((wij - omega[l]) * xl + gi * ax_j[l] + gj * ax_i[l] - dxij * gl)
                dyo[l] = 1j * ((wij + omega[l]) * yl + gi * dx_j[l] + gj * dx_i[l] + dxij * gl)
                acc += xl * gl
                r1[l] += gi * xl
                r3[l] += gi * yl
            m2[i, j] = acc


@njit(cache=True, fastmath=_FLAGS)
def third_pairs(omega, g, omega0, F, s, ds, a, da, cads, dcads, cada, cadd, dcada, dcadd,
                blocks, out, m1, m2, m3, vec, scal):
    """Cumulant derivatives of the six third-order N x N blocks, element by element.

    ``blocks``/``out`` are (adas_x, adas_y, adas_z, adds_x, adds_y, adds_z).
    ``vec`` rows: u + cg, v + conj(u), then for i = y, z the rows
    rads_i, g @ adas_i, adas_i @ g, g @ adds_i.  ``scal`` = (2 Re g.a, 2 Re g.cads_y,
    2 Re g.cads_z).  Absent blocks are passed as zeros (their outputs are scratch).
    """
    n = omega.size
    ga = scal[0].real
    xq = vec[0]
    qb = vec[1]
    radas = np.empty(3, np.complex128)
    radds = np.empty(3, np.complex128)
    pa = np.empty(3, np.complex128)
    pd = np.empty(3, np.complex128)
    QR = np.empty(4, np.complex128)
    for i in range(n):
        acn = np.conj(a[i])
        dacn = np.conj(da[i])
        gi = g[i]
        wi = omega[i]
        for j in range(n):
            am = a[j]
            acm = np.conj(am)
            dam = da[j]
            dacm = np.conj(dam)
            gj = g[j]
            xnm = cada[i, j]
            ynm = cadd[i, j]
            dxnm = dcada[i, j]
            dynm = dcadd[i, j]
            rada = xnm + acn * am
            radd = ynm + acn * acm
            for k in range(3):
                sk = s[k]
                dsk = ds[k]
                cn = cads[k, i]
                cm = cads[k, j]
                dcn = dcads[k, i]
                dcm = dcads[k, j]
                radas[k] = blocks[k][i, j] + sk * (acn * am + xnm) + acn * np.conj(cm) + cn * am
                radds[k] = blocks[3 + k][i, j] + sk * (acn * acm + ynm) + acn * cm + cn * acm
                pa[k] = (dsk * (acn * am + xnm) + sk * (dacn * am + acn * dam + dxnm)
                         + dacn * np.conj(cm) + acn * np.conj(dcm) + dcn * am + cn * dam)
                pd[k] = (dsk * (acn * acm + ynm) + sk * (dacn * acm + acn * dacm + dynm)
                         + dacn * cm + acn * dcm + dcn * acm + cn * dacm)
            for k in range(2):
                c = 1 + k
                r = vec[2 + 4 * k]
                gas = vec[3 + 4 * k]
                cas = vec[4 + 4 * k]
                gdd = vec[5 + 4 * k]
                w2 = scal[c].real
                sk = s[c]
                QR[k] = (ga * radas[c] + xq[i] * np.conj(r[j]) + r[i] * qb[j] + w2 * rada
                         + acn * gas[j] + cas[i] * am + gdd[i] * am + acn * np.conj(gdd[j])
                         + sk * (m1[i, j] + np.conj(m1[j, i])))
                QR[2 + k] = (ga * radds[c] + xq[i] * r[j] + r[i] * xq[j] + w2 * radd
                             + acn * gdd[j] + gdd[i] * acm + acn * cas[j] + cas[i] * acm
                             + sk * (m2[i, j] + m3[i, j]))
            ry = vec[2]
            rz = vec[6]
            W = 1j * (wi - omega[j])
            S = 1j * (wi + omega[j])
            out[0][i, j] = W * radas[0] - omega0 * radas[1] + 1j * (gi * am - acn * gj) - pa[0]
            out[1][i, j] = (W * radas[1] + omega0 * radas[0] - 2 * QR[1] + 2 * F * radas[2]
                            - (gi * np.conj(rz[j]) + rz[i] * gj) - pa[1])
            out[2][i, j] = (W * radas[2] + 2 * QR[0] - 2 * F * radas[1]
                            + (gi * np.conj(ry[j]) + ry[i] * gj) - pa[2])
            out[3][i, j] = S * radds[0] - omega0 * radds[1] + 1j * (gi * acm + acn * gj) - pd[0]
            out[4][i, j] = (S * radds[1] + omega0 * radds[0] - 2 * QR[3] + 2 * F * radds[2]
                            - (gi * rz[j] + rz[i] * gj) - pd[1])
            out[5][i, j] = (S * radds[2] + 2 * QR[2] - 2 * F * radds[1]
                            + (gi * ry[j] + ry[i] * gj) - pd[2])


@njit(cache=True)
def error_norm_pair(y, ynew, K, coef5, coef3, rows, rtol, atol):
    """Two scaled max-norm error estimates in one pass, plus max |ynew|.

    Like :func:`error_norm` with the weight sets ``coef5`` and ``coef3`` over
    the same rows; all three results are NaN if any input is.
    """
    n = y.size
    e5 = np.empty(_CHUNK)
    e3 = np.empty(_CHUNK)
    w5 = 0.0
    w3 = 0.0
    big = 0.0
    total = 0.0
    for lo in range(0, n, _CHUNK):
        m = min(_CHUNK, n - lo)
        for i in range(m):
            e5[i] = 0.0
            e3[i] = 0.0
        for j in range(rows.size):
            c5 = coef5[j]
            c3 = coef3[j]
            k = K[rows[j], lo:lo + m]
            for i in range(m):
                e5[i] += c5 * k[i]
                e3[i] += c3 * k[i]
        ys = y[lo:lo + m]
        yn = ynew[lo:lo + m]
        for i in range(m):
            b = abs(yn[i])
            sc = atol + rtol * max(abs(ys[i]), b)
            r5 = abs(e5[i]) / sc
            r3 = abs(e3[i]) / sc
            w5 = r5 if r5 > w5 else w5
            w3 = r3 if r3 > w3 else w3
            big = b if b > big else big
            total += r5 + r3 + b
    if total != total:
        return np.nan, np.nan, np.nan
    return w5, w3, big
