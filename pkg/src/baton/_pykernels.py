"""Pure-Python (numpy) implementations of the per-slot kernels.

Every function here has a twin with an identical signature in the compiled
``baton._kernels`` extension.  Status codes are returned instead of raising so
the compiled twin can run without the GIL; ``baton.kernels`` maps them to
exceptions.
"""
import math

import numpy as np

STATUS_OK = 0
STATUS_INSUFFICIENT = 1
STATUS_SINGULAR = 2
STATUS_DEGENERATE = 3

MODE_FULL = 0
MODE_PRED1 = 1
MODE_PRED2 = 2
MODE_PRED3 = 3
MODE_PRED12 = 4
MODE_PRED13 = 5

CASE_OBSERVED = 0
CASE_CROSSLINK = 1
CASE_ALLMISSING = 2

BACKEND = "python"


def fresnel_matrix(tx, rx, x, y, eps_pos):
    """Return ``(A, status)`` with one Fresnel coefficient row per link."""
    p = np.array([x, y], dtype=np.float64)
    dt = p - tx
    dr = p - rx
    nt = np.hypot(dt[:, 0], dt[:, 1])
    nr = np.hypot(dr[:, 0], dr[:, 1])
    if np.any(nt <= eps_pos) or np.any(nr <= eps_pos):
        return np.zeros_like(tx), STATUS_DEGENERATE
    return dt / nt[:, None] + dr / nr[:, None], STATUS_OK


def solve_velocity(A, r, weight, reg, vmax, max_cond):
    """Weighted, regularized least squares for ``A v = r``.

    Rows with zero weight are ignored.  Returns ``(vx, vy, status)``; on a
    non-OK status the velocity is zero.
    """
    m00 = m01 = m11 = b0 = b1 = 0.0
    count = 0
    for n in range(A.shape[0]):
        wn = float(weight[n])
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
        return 0.0, 0.0, STATUS_INSUFFICIENT
    half_tr = 0.5 * (m00 + m11)
    disc = math.sqrt(0.25 * (m00 - m11) ** 2 + m01 * m01)
    lam_max = half_tr + disc
    lam_min = half_tr - disc
    # cond(A) = sqrt(lam_max / lam_min)
    if lam_max <= 0.0 or lam_min <= lam_max / (max_cond * max_cond):
        return 0.0, 0.0, STATUS_SINGULAR
    m00 += reg
    m11 += reg
    det = m00 * m11 - m01 * m01
    vx = (m11 * b0 - m01 * b1) / det
    vy = (m00 * b1 - m01 * b0) / det
    speed = math.hypot(vx, vy)
    if speed > vmax:
        vx *= vmax / speed
        vy *= vmax / speed
    return vx, vy, STATUS_OK


def dead_reckon(anchor, rows, weight, tx, rx, dt, reg, vmax, max_cond, n_iter, v_prev, eps_pos):
    """Integrate per-slot velocity solutions forward from ``anchor``.

    Each slot's velocity is a fixed point of ``A(p_prev + v dt) v = r`` so the
    coefficients are evaluated at the slot's own (end) position.  Slots whose
    solve fails hold the previous velocity and carry the failing status in
    ``flags``.
    """
    w = rows.shape[0]
    pos = np.empty((w, 2))
    vel = np.empty((w, 2))
    flags = np.zeros(w, dtype=np.int8)
    px, py = float(anchor[0]), float(anchor[1])
    hx, hy = float(v_prev[0]), float(v_prev[1])
    for k in range(w):
        A, st = fresnel_matrix(tx, rx, px, py, eps_pos)
        if st == STATUS_OK:
            vx, vy, st = solve_velocity(A, rows[k], weight[k], reg, vmax, max_cond)
        if st != STATUS_OK:
            vx, vy = hx, hy
        else:
            for _ in range(n_iter - 1):
                A, st2 = fresnel_matrix(tx, rx, px + vx * dt, py + vy * dt, eps_pos)
                if st2 != STATUS_OK:
                    break
                ux, uy, st2 = solve_velocity(A, rows[k], weight[k], reg, vmax, max_cond)
                if st2 != STATUS_OK:
                    break
                vx, vy = ux, uy
        flags[k] = st
        px += vx * dt
        py += vy * dt
        pos[k, 0] = px
        pos[k, 1] = py
        vel[k, 0] = vx
        vel[k, 1] = vy
        hx, hy = vx, vy
    return pos, vel, flags


def offset_fit(pos, vel, r_obs, obs_mask, tx, rx, prior, n_iter, eps_pos):
    """Gauss-Newton estimate of a rigid 2-D shift of ``pos`` explaining ``r_obs``.

    Only cells with ``obs_mask`` set contribute.  ``prior`` is a ridge weight
    pulling the shift toward zero.  Returns ``(dx, dy, n_used)``.
    """
    dx = dy = 0.0
    n_used = 0
    for _ in range(n_iter):
        h00 = h01 = h11 = g0 = g1 = 0.0
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
                dtn = math.hypot(tdx, tdy)
                drn = math.hypot(rdx, rdy)
                if dtn <= eps_pos or drn <= eps_pos:
                    continue
                utx, uty = tdx / dtn, tdy / dtn
                urx, ury = rdx / drn, rdy / drn
                pred = (utx + urx) * vx + (uty + ury) * vy
                # d(a . v)/dp = (I - u u^T) v / d, summed over both endpoints
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
            return 0.0, 0.0, 0
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
        if abs(sx) + abs(sy) < 1e-9:
            break
    return dx, dy, n_used


def _sign(x):
    return int(x > 0.0) - int(x < 0.0)


def pred2_row(obs, obs_mask, prev, n1, eps_den, max_ratio):
    """Cross-link proportionate prediction for link ``n1``.

    ``prev`` holds the previous-slot PLCRs used in the quotient.  The reference
    is the observed link with the largest ``|prev|``; the result is NaN when
    that denominator is below ``eps_den``, flips sign against the observation,
    or implies a speed ratio above ``max_ratio``.
    """
    best = -1
    best_abs = -1.0
    for n2 in range(obs.shape[0]):
        if n2 == n1 or not obs_mask[n2] or not math.isfinite(prev[n2]):
            continue
        if abs(prev[n2]) > best_abs:
            best_abs = abs(prev[n2])
            best = n2
    if best < 0 or not math.isfinite(prev[n1]):
        return math.nan
    d = prev[best]
    if abs(d) < eps_den or _sign(obs[best]) != _sign(d):
        return math.nan
    q = obs[best] / d
    if q > max_ratio:
        return math.nan
    return float(q * prev[n1])


def fill_row(obs, obs_mask, p1, p1_avail, weights, pred3, prev_row, use_model, eps_den, max_ratio, mode):
    """Integrate the three predictions for one row.

    Returns ``(out, case, pred2)``.  ``pred3`` holds the model-based values
    for this row (carried over from the previous slot); when ``use_model`` is
    set they also serve as the previous-slot values in the cross-link quotient,
    otherwise ``prev_row`` does.
    """
    n_links = obs.shape[0]
    out = np.empty(n_links)
    case = np.empty(n_links, dtype=np.int8)
    p2 = np.full(n_links, np.nan)
    any_obs = bool(np.any(obs_mask))
    ref = pred3 if use_model else prev_row
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
            p2[n] = pred2_row(obs, obs_mask, ref, n, eps_den, max_ratio)
        else:
            case[n] = CASE_ALLMISSING
        has2 = not math.isnan(p2[n])
        if mode == MODE_FULL:
            partner = p2[n] if has2 else v3
            out[n] = w * v1 + (1.0 - w) * partner
        elif mode == MODE_PRED13:
            out[n] = w * v1 + (1.0 - w) * v3
        elif mode == MODE_PRED3:
            out[n] = v3
        elif mode == MODE_PRED12 and has2:
            out[n] = w * v1 + (1.0 - w) * p2[n]
        elif mode == MODE_PRED2 and has2:
            out[n] = p2[n]
        else:
            # Pred.1 alone, or the Pred.1 fallback of the Pred.2 variants
            out[n] = v1 if p1_avail[n] else v3
    return out, case, p2
