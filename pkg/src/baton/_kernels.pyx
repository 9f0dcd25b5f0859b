# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-slot kernels; see ``baton._pykernels`` for the reference twin."""
import numpy as np

from libc.math cimport hypot, sqrt, fabs, isfinite, NAN, isnan

cdef enum:
    STATUS_OK = 0
    STATUS_INSUFFICIENT = 1
    STATUS_SINGULAR = 2
    STATUS_DEGENERATE = 3

cdef enum:
    MODE_FULL = 0
    MODE_PRED1 = 1
    MODE_PRED2 = 2
    MODE_PRED3 = 3
    MODE_PRED12 = 4
    MODE_PRED13 = 5

cdef enum:
    CASE_OBSERVED = 0
    CASE_CROSSLINK = 1
    CASE_ALLMISSING = 2

BACKEND = "cython"


cdef int _fresnel(const double[:, ::1] tx, const double[:, ::1] rx, double x, double y,
                  double eps_pos, double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t n
    cdef double tdx, tdy, rdx, rdy, nt, nr
    for n in range(tx.shape[0]):
        tdx = x - tx[n, 0]
        tdy = y - tx[n, 1]
        rdx = x - rx[n, 0]
        rdy = y - rx[n, 1]
        nt = hypot(tdx, tdy)
        nr = hypot(rdx, rdy)
        if nt <= eps_pos or nr <= eps_pos:
            return STATUS_DEGENERATE
        out[n, 0] = tdx / nt + rdx / nr
        out[n, 1] = tdy / nt + rdy / nr
    return STATUS_OK


cdef int _solve(const double[:, ::1] A, const double[::1] r, const double[::1] weight,
                double reg, double vmax, double max_cond, double* vx, double* vy) noexcept nogil:
    cdef double m00 = 0.0, m01 = 0.0, m11 = 0.0, b0 = 0.0, b1 = 0.0
    cdef double ax, ay, wn, half_tr, disc, lam_max, lam_min, det, speed
    cdef Py_ssize_t n
    cdef int count = 0
    vx[0] = 0.0
    vy[0] = 0.0
    for n in range(A.shape[0]):
        wn = weight[n]
        if not wn > 0.0:
            continue
        ax = A[n, 0]
        ay = A[n, 1]
        m00 += wn * ax * ax
        m01 += wn * ax * ay
        m11 += wn * ay * ay
        b0 += wn * ax * r[n]
        b1 += wn * ay * r[n]
        count += 1
    if count < 2:
        return STATUS_INSUFFICIENT
    half_tr = 0.5 * (m00 + m11)
    disc = sqrt(0.25 * (m00 - m11) * (m00 - m11) + m01 * m01)
    lam_max = half_tr + disc
    lam_min = half_tr - disc
    if lam_max <= 0.0 or lam_min <= lam_max / (max_cond * max_cond):
        return STATUS_SINGULAR
    m00 += reg
    m11 += reg
    det = m00 * m11 - m01 * m01
    vx[0] = (m11 * b0 - m01 * b1) / det
    vy[0] = (m00 * b1 - m01 * b0) / det
    speed = hypot(vx[0], vy[0])
    if speed > vmax:
        vx[0] *= vmax / speed
        vy[0] *= vmax / speed
    return STATUS_OK


def fresnel_matrix(const double[:, ::1] tx, const double[:, ::1] rx, double x, double y, double eps_pos):
    out = np.zeros((tx.shape[0], 2))
    cdef double[:, ::1] o = out
    cdef int st = _fresnel(tx, rx, x, y, eps_pos, o)
    if st != STATUS_OK:
        out[:] = 0.0
    return out, st


def solve_velocity(const double[:, ::1] A, const double[::1] r, const double[::1] weight,
                   double reg, double vmax, double max_cond):
    cdef double vx, vy
    cdef int st = _solve(A, r, weight, reg, vmax, max_cond, &vx, &vy)
    return vx, vy, st


def dead_reckon(const double[::1] anchor, const double[:, ::1] rows, const double[:, ::1] weight,
                const double[:, ::1] tx, const double[:, ::1] rx, double dt, double reg, double vmax,
                double max_cond, int n_iter, const double[::1] v_prev, double eps_pos):
    cdef Py_ssize_t w = rows.shape[0]
    pos_arr = np.empty((w, 2))
    vel_arr = np.empty((w, 2))
    flags_arr = np.zeros(w, dtype=np.int8)
    A_arr = np.empty((tx.shape[0], 2))
    cdef double[:, ::1] pos = pos_arr
    cdef double[:, ::1] vel = vel_arr
    cdef signed char[::1] flags = flags_arr
    cdef double[:, ::1] A = A_arr
    cdef double px = anchor[0], py = anchor[1], hx = v_prev[0], hy = v_prev[1]
    cdef double vx = 0.0, vy = 0.0, ux, uy
    cdef Py_ssize_t k
    cdef int st, st2, it
    with nogil:
        for k in range(w):
            st = _fresnel(tx, rx, px, py, eps_pos, A)
            if st == STATUS_OK:
                st = _solve(A, rows[k], weight[k], reg, vmax, max_cond, &vx, &vy)
            if st != STATUS_OK:
                vx = hx
                vy = hy
            else:
                for it in range(n_iter - 1):
                    st2 = _fresnel(tx, rx, px + vx * dt, py + vy * dt, eps_pos, A)
                    if st2 != STATUS_OK:
                        break
                    st2 = _solve(A, rows[k], weight[k], reg, vmax, max_cond, &ux, &uy)
                    if st2 != STATUS_OK:
                        break
                    vx = ux
                    vy = uy
            flags[k] = st
            px += vx * dt
            py += vy * dt
            pos[k, 0] = px
            pos[k, 1] = py
            vel[k, 0] = vx
            vel[k, 1] = vy
            hx = vx
            hy = vy
    return pos_arr, vel_arr, flags_arr


def offset_fit(const double[:, ::1] pos, const double[:, ::1] vel, const double[:, ::1] r_obs,
               const unsigned char[:, ::1] obs_mask, const double[:, ::1] tx, const double[:, ::1] rx,
               double prior, int n_iter, double eps_pos):
    cdef double dx = 0.0, dy = 0.0
    cdef double h00, h01, h11, g0, g1, px, py, vx, vy
    cdef double tdx, tdy, rdx, rdy, dtn, drn, utx, uty, urx, ury, pred, ut_v, ur_v, jx, jy, res
    cdef double det, sx, sy
    cdef Py_ssize_t k, n
    cdef int it, n_used = 0
    with nogil:
        for it in range(n_iter):
            h00 = 0.0
            h01 = 0.0
            h11 = 0.0
            g0 = 0.0
            g1 = 0.0
            n_used = 0
            for k in range(pos.shape[0]):
                px = pos[k, 0] + dx
                py = pos[k, 1] + dy
                vx = vel[k, 0]
                vy = vel[k, 1]
                for n in range(tx.shape[0]):
                    if not obs_mask[k, n]:
                        continue
                    tdx = px - tx[n, 0]
                    tdy = py - tx[n, 1]
                    rdx = px - rx[n, 0]
                    rdy = py - rx[n, 1]
                    dtn = hypot(tdx, tdy)
                    drn = hypot(rdx, rdy)
                    if dtn <= eps_pos or drn <= eps_pos:
                        continue
                    utx = tdx / dtn
                    uty = tdy / dtn
                    urx = rdx / drn
                    ury = rdy / drn
                    pred = (utx + urx) * vx + (uty + ury) * vy
                    ut_v = utx * vx + uty * vy
                    ur_v = urx * vx + ury * vy
                    jx = (vx - utx * ut_v) / dtn + (vx - urx * ur_v) / drn
                    jy = (vy - uty * ut_v) / dtn + (vy - ury * ur_v) / drn
                    res = r_obs[k, n] - pred
                    h00 += jx * jx
                    h01 += jx * jy
                    h11 += jy * jy
                    g0 += jx * res
                    g1 += jy * res
                    n_used += 1
            if n_used == 0:
                dx = 0.0
                dy = 0.0
                break
            h00 += prior
            h11 += prior
            g0 -= prior * dx
            g1 -= prior * dy
            det = h00 * h11 - h01 * h01
            if det <= 0.0:
                break
            sx = (h11 * g0 - h01 * g1) / det
            sy = (h00 * g1 - h01 * g0) / det
            dx += sx
            dy += sy
            if fabs(sx) + fabs(sy) < 1e-9:
                break
    return dx, dy, n_used


cdef inline int _sign(double x) noexcept nogil:
    return (x > 0.0) - (x < 0.0)


cdef double _pred2(const double[::1] obs, const unsigned char[::1] obs_mask, const double[::1] prev,
                   Py_ssize_t n1, double eps_den, double max_ratio) noexcept nogil:
    cdef Py_ssize_t n2, best = -1
    cdef double best_abs = -1.0, d, q
    for n2 in range(obs.shape[0]):
        if n2 == n1 or not obs_mask[n2] or not isfinite(prev[n2]):
            continue
        if fabs(prev[n2]) > best_abs:
            best_abs = fabs(prev[n2])
            best = n2
    if best < 0 or not isfinite(prev[n1]):
        return NAN
    d = prev[best]
    if fabs(d) < eps_den or _sign(obs[best]) != _sign(d):
        return NAN
    q = obs[best] / d
    if q > max_ratio:
        return NAN
    return q * prev[n1]


def pred2_row(const double[::1] obs, const unsigned char[::1] obs_mask, const double[::1] prev,
              Py_ssize_t n1, double eps_den, double max_ratio):
    return _pred2(obs, obs_mask, prev, n1, eps_den, max_ratio)


def fill_row(const double[::1] obs, const unsigned char[::1] obs_mask, const double[::1] p1,
             const unsigned char[::1] p1_avail, const double[::1] weights, const double[::1] pred3,
             const double[::1] prev_row, bint use_model, double eps_den, double max_ratio, int mode):
    cdef Py_ssize_t n_links = obs.shape[0]
    out_arr = np.empty(n_links)
    case_arr = np.empty(n_links, dtype=np.int8)
    p2_arr = np.full(n_links, np.nan)
    cdef double[::1] out = out_arr
    cdef signed char[::1] case = case_arr
    cdef double[::1] p2 = p2_arr
    cdef const double[::1] ref = pred3 if use_model else prev_row
    cdef bint any_obs = False
    cdef bint has2
    cdef Py_ssize_t n
    cdef double w, v1, v3
    for n in range(n_links):
        if obs_mask[n]:
            any_obs = True
    with nogil:
        for n in range(n_links):
            if obs_mask[n]:
                out[n] = obs[n]
                case[n] = CASE_OBSERVED
                continue
            w = weights[n] if p1_avail[n] else 0.0
            v1 = p1[n] if p1_avail[n] else 0.0
            v3 = pred3[n]
            if any_obs:
                case[n] = CASE_CROSSLINK
                p2[n] = _pred2(obs, obs_mask, ref, n, eps_den, max_ratio)
            else:
                case[n] = CASE_ALLMISSING
            has2 = not isnan(p2[n])
            if mode == MODE_FULL:
                out[n] = w * v1 + (1.0 - w) * (p2[n] if has2 else v3)
            elif mode == MODE_PRED13:
                out[n] = w * v1 + (1.0 - w) * v3
            elif mode == MODE_PRED3:
                out[n] = v3
            elif mode == MODE_PRED12 and has2:
                out[n] = w * v1 + (1.0 - w) * p2[n]
            elif mode == MODE_PRED2 and has2:
                out[n] = p2[n]
            else:
                out[n] = v1 if p1_avail[n] else v3
    return out_arr, case_arr, p2_arr
