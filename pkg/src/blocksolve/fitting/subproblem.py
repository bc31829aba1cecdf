"""Bound-constrained trust-region subproblem.

Minimizes the quadratic model over the intersection of the 2-norm trust
region and the shifted box. A projected-gradient (Cauchy) sweep secures a
guaranteed decrease; truncated conjugate gradients on the free coordinates
then refine the step. Every candidate stays exactly inside the box.
"""

from __future__ import annotations

import numpy as np


def _quad(g, h, s):
    return float(g @ s + 0.5 * s @ (h @ s))


def _clip_to_region(s, lower, upper, delta):
    s = np.clip(s, lower, upper)
    norm = np.linalg.norm(s)
    if norm > delta:
        # the box contains 0, so radial scaling preserves box feasibility
        s = s * (delta / norm)
    return s


def projected_cauchy_step(g, h, delta, lower, upper):
    """Backtracking projected-gradient step with best-seen selection."""
    gnorm = np.linalg.norm(g)
    if gnorm == 0.0:
        return np.zeros_like(g), 0.0
    t = delta / gnorm
    best_s = np.zeros_like(g)
    best_q = 0.0
    for _ in range(30):
        s = _clip_to_region(-t * g, lower, upper, delta)
        q = _quad(g, h, s)
        if q < best_q:
            best_s, best_q = s, q
            # keep backtracking a little to dodge ridges, then stop early
            if q <= -1e-4 * gnorm * np.linalg.norm(s):
                break
        t *= 0.5
    return best_s, best_q


def solve_subproblem(g, h, delta, lower, upper, max_cg=None):
    """Approximately minimize g.s + s.H.s/2 over {||s|| <= delta} in the box.

    Returns (step, predicted_decrease); the decrease is nonnegative.
    """
    g = np.asarray(g, dtype=float)
    h = np.asarray(h, dtype=float)
    n = len(g)
    max_cg = max_cg or 2 * n
    s, q_best = projected_cauchy_step(g, h, delta, lower, upper)
    if q_best >= 0.0:
        # stationary or uphill gradient: try the most negative curvature mode
        vals, vecs = np.linalg.eigh(h)
        if vals[0] < 0.0:
            for sign in (1.0, -1.0):
                cand = _clip_to_region(sign * delta * vecs[:, 0], lower, upper, delta)
                q = _quad(g, h, cand)
                if q < q_best:
                    s, q_best = cand, q

    # truncated CG on the coordinates free at the Cauchy point
    at_bound = (np.abs(s - lower) < 1e-14) | (np.abs(s - upper) < 1e-14)
    free = ~at_bound
    if np.any(free):
        s_try = s.copy()
        r = -(g + h @ s_try)
        r[~free] = 0.0
        p = r.copy()
        rs = float(r @ r)
        for _ in range(max_cg):
            if rs <= 1e-24:
                break
            hp = h @ p
            hp[~free] = 0.0
            curv = float(p @ hp)
            if curv <= 1e-14 * float(p @ p):
                # negative curvature: walk to the region boundary
                alpha = _step_to_boundary(s_try, p, lower, upper, delta)
                s_cand = _clip_to_region(s_try + alpha * p, lower, upper, delta)
                q = _quad(g, h, s_cand)
                if q < q_best:
                    s, q_best = s_cand, q
                break
            alpha = rs / curv
            bound_alpha = _step_to_boundary(s_try, p, lower, upper, delta)
            hit = alpha >= bound_alpha
            alpha = min(alpha, bound_alpha)
            s_next = _clip_to_region(s_try + alpha * p, lower, upper, delta)
            q = _quad(g, h, s_next)
            if q < q_best:
                s, q_best = s_next, q
            if hit:
                break
            s_try = s_next
            r_new = r - alpha * hp
            r_new[~free] = 0.0
            rs_new = float(r_new @ r_new)
            p = r_new + (rs_new / rs) * p
            p[~free] = 0.0
            r, rs = r_new, rs_new
    return s, -q_best


def _step_to_boundary(s, p, lower, upper, delta):
    """Largest alpha keeping s + alpha p inside the box and the ball."""
    alpha = np.inf
    for i in range(len(s)):
        if p[i] > 0 and np.isfinite(upper[i]):
            alpha = min(alpha, (upper[i] - s[i]) / p[i])
        elif p[i] < 0 and np.isfinite(lower[i]):
            alpha = min(alpha, (lower[i] - s[i]) / p[i])
    pp = float(p @ p)
    if pp > 0:
        sp = float(s @ p)
        ss = float(s @ s)
        disc = sp * sp + pp * (delta * delta - ss)
        if disc >= 0:
            alpha = min(alpha, (-sp + np.sqrt(disc)) / pp)
    return max(alpha, 0.0)
