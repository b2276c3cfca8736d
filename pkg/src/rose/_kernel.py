"""Compiled Maxwell-Bloch time marcher.

State layout is ``(n_z, n_c, n_det)`` real arrays ``x, y, w`` with
``s = x + i y``; ``n_c`` is the number of optical-phase samples actually
integrated.  Fields are algebraic in the state at every RK stage (transit
time through the slab is neglected), so one step is four bulk atom updates,
each followed by a serial sweep that rebuilds both fields slice by slice.

Every slice row is reduced inside a single chunk, and the cross-slice sums
run serially in slice order, so results do not depend on ``n_chunks``.
"""

import warnings

import numpy as np
from numba import njit, prange
from numba.core.errors import NumbaWarning

# an outdated system TBB is reported on first parallel call; the workqueue
# or OpenMP layer is used instead and results are unaffected
warnings.filterwarnings("ignore", message="The TBB threading layer", category=NumbaWarning)


@njit(cache=True)
def _fields(Pp, Pm, fin, bin_, kdz, Fp, Fm):
    nz = Pp.shape[0]
    acc = 0j
    for k in range(nz):
        Fp[k] = fin - 1j * kdz * (acc + 0.5 * Pp[k])
        acc += Pp[k]
    out_f = fin - 1j * kdz * acc
    acc = 0j
    for k in range(nz - 1, -1, -1):
        Fm[k] = bin_ - 1j * kdz * (acc + 0.5 * Pm[k])
        acc += Pm[k]
    out_b = bin_ - 1j * kdz * acc
    return out_f, out_b


@njit(cache=True, parallel=True)
def _stage(x0, y0, w0, xs, ys, ws, ax, ay, aw, det, wt, cph, sph,
           Fp, Fm, g1, g2, h, acc_coef, mode, Pp, Pm, n_chunks):
    """One RK4 stage.

    mode 0: k = f(y0); acc = k; ys = y0 + h k
    mode 1: k = f(ys); acc += acc_coef k; ys = y0 + h k
    mode 2: k = f(ys); y0 += h (acc + k)       (final combination)
    Projections of the updated stage state are written to Pp/Pm.
    """
    nz, nc, nd = x0.shape
    inv_nc = 1.0 / nc
    for ch in prange(n_chunks):
        z_lo = (ch * nz) // n_chunks
        z_hi = ((ch + 1) * nz) // n_chunks
        for z in range(z_lo, z_hi):
            fpr, fpi = Fp[z].real, Fp[z].imag
            fmr, fmi = Fm[z].real, Fm[z].imag
            pp = 0j
            pm = 0j
            for j in range(nc):
                c = cph[j]
                sn = sph[j]
                a = (fpr + fmr) * c + (fmi - fpi) * sn
                b = (fpi + fmi) * c + (fpr - fmr) * sn
                ha = 0.5 * a
                hb = 0.5 * b
                sx = 0.0
                sy = 0.0
                for d in range(nd):
                    if mode == 0:
                        xv = x0[z, j, d]
                        yv = y0[z, j, d]
                        wv = w0[z, j, d]
                    else:
                        xv = xs[z, j, d]
                        yv = ys[z, j, d]
                        wv = ws[z, j, d]
                    dd = det[d]
                    kx = dd * yv - g2 * xv - hb * wv
                    ky = -dd * xv - g2 * yv + ha * wv
                    kw = 2.0 * (b * xv - a * yv) - g1 * (wv + 1.0)
                    if mode == 0:
                        ax[z, j, d] = kx
                        ay[z, j, d] = ky
                        aw[z, j, d] = kw
                        nx = x0[z, j, d] + h * kx
                        ny = y0[z, j, d] + h * ky
                        xs[z, j, d] = nx
                        ys[z, j, d] = ny
                        ws[z, j, d] = w0[z, j, d] + h * kw
                    elif mode == 1:
                        ax[z, j, d] += acc_coef * kx
                        ay[z, j, d] += acc_coef * ky
                        aw[z, j, d] += acc_coef * kw
                        nx = x0[z, j, d] + h * kx
                        ny = y0[z, j, d] + h * ky
                        xs[z, j, d] = nx
                        ys[z, j, d] = ny
                        ws[z, j, d] = w0[z, j, d] + h * kw
                    else:
                        nx = x0[z, j, d] + h * (ax[z, j, d] + kx)
                        ny = y0[z, j, d] + h * (ay[z, j, d] + ky)
                        x0[z, j, d] = nx
                        y0[z, j, d] = ny
                        w0[z, j, d] = w0[z, j, d] + h * (aw[z, j, d] + kw)
                    sx += wt[d] * nx
                    sy += wt[d] * ny
                s = sx + 1j * sy
                e = c - 1j * sn
                pp += s * e
                pm += s * np.conj(e)
            Pp[z] = pp * inv_nc
            Pm[z] = pm * inv_nc


@njit(cache=True)
def _project(x, y, wt, cph, sph, Pp, Pm):
    nz, nc, nd = x.shape
    for z in range(nz):
        pp = 0j
        pm = 0j
        for j in range(nc):
            sx = 0.0
            sy = 0.0
            for d in range(nd):
                sx += wt[d] * x[z, j, d]
                sy += wt[d] * y[z, j, d]
            s = sx + 1j * sy
            e = cph[j] - 1j * sph[j]
            pp += s * e
            pm += s * np.conj(e)
        Pp[z] = pp / nc
        Pm[z] = pm / nc


@njit(cache=True)
def _band_population(w, band):
    nz, nc, nd = w.shape
    tot = 0.0
    for z in range(nz):
        for j in range(nc):
            for d in range(nd):
                tot += band[d] * (w[z, j, d] + 1.0)
    return 0.5 * tot / (nz * nc)


@njit(cache=True)
def _profiles(Pp, fin, kdz, flux, area, h):
    nz = Pp.shape[0]
    acc = 0j
    for k in range(nz + 1):
        f = fin - 1j * kdz * acc
        flux[k] += h * (f.real * f.real + f.imag * f.imag)
        area[k] += h * f
        if k < nz:
            acc += Pp[k]


@njit(cache=True)
def march(x, y, w, det, wt, cph, sph, kdz, g1, g2, dt,
          f_s, f_m, f_e, b_s, b_m, b_e, band,
          snap_idx, snap_x, snap_y, snap_w,
          out_f, out_b, nb_line, flux, area, track, n_chunks):
    """Advance the ensemble over ``len(f_s)`` steps of size ``dt``.

    ``f_*``/``b_*`` are the forward (z=0) and backward (z=L) boundary drives
    at the start, middle and end of every step.  Output arrays have one
    entry per step edge (n_steps + 1).
    """
    nz, nc, nd = x.shape
    n = f_s.shape[0]
    xs = np.empty_like(x)
    ys = np.empty_like(y)
    ws = np.empty_like(w)
    ax = np.empty_like(x)
    ay = np.empty_like(y)
    aw = np.empty_like(w)
    Pp = np.zeros(nz, np.complex128)
    Pm = np.zeros(nz, np.complex128)
    Fp = np.zeros(nz, np.complex128)
    Fm = np.zeros(nz, np.complex128)
    _project(x, y, wt, cph, sph, Pp, Pm)
    snap_next = 0
    n_snap = snap_idx.shape[0]
    for k in range(n + 1):
        fin = f_s[k] if k < n else f_e[n - 1]
        bin_ = b_s[k] if k < n else b_e[n - 1]
        of, ob = _fields(Pp, Pm, fin, bin_, kdz, Fp, Fm)
        out_f[k] = of
        out_b[k] = ob
        nb_line[k] = _band_population(w, band)
        while snap_next < n_snap and snap_idx[snap_next] == k:
            snap_x[snap_next] = x
            snap_y[snap_next] = y
            snap_w[snap_next] = w
            snap_next += 1
        if k == n:
            break
        if track:
            _profiles(Pp, f_s[k], kdz, flux, area, dt)
        h2 = 0.5 * dt
        _stage(x, y, w, xs, ys, ws, ax, ay, aw, det, wt, cph, sph,
               Fp, Fm, g1, g2, h2, 1.0, 0, Pp, Pm, n_chunks)
        _fields(Pp, Pm, f_m[k], b_m[k], kdz, Fp, Fm)
        _stage(x, y, w, xs, ys, ws, ax, ay, aw, det, wt, cph, sph,
               Fp, Fm, g1, g2, h2, 2.0, 1, Pp, Pm, n_chunks)
        _fields(Pp, Pm, f_m[k], b_m[k], kdz, Fp, Fm)
        _stage(x, y, w, xs, ys, ws, ax, ay, aw, det, wt, cph, sph,
               Fp, Fm, g1, g2, dt, 2.0, 1, Pp, Pm, n_chunks)
        _fields(Pp, Pm, f_e[k], b_e[k], kdz, Fp, Fm)
        _stage(x, y, w, xs, ys, ws, ax, ay, aw, det, wt, cph, sph,
               Fp, Fm, g1, g2, dt / 6.0, 1.0, 2, Pp, Pm, n_chunks)
