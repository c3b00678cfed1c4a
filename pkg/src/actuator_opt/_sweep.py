"""Jitted inner loop of the path solver.

One sweep visits every step, probes a damped steering perturbation both
ways, and commits improvement-scaled perturbations that lower the cost.
The math mirrors ``optimizer._window_perturbation`` and the window cost
convention of ``optimizer._Workspace`` exactly; scalar loops are used so
the whole sweep runs without interpreter overhead.  The solver's tests
check this kernel against a reference loop assembled from the public
``perturb``/``total_cost`` functions.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

TAU = 2.0 * math.pi


@njit(cache=True, inline="always")
def _wrap(a):
    if -math.pi < a <= math.pi:
        return a
    w = (a + math.pi) % TAU - math.pi
    if w <= -math.pi:
        w += TAU
    return w


@njit(cache=True, inline="always")
def _penalty(v, bound, alpha, beta):
    mag = abs(v)
    if mag < bound:
        return alpha * mag
    return alpha * bound + beta * (mag - bound)


@njit(cache=True, inline="always")
def _bilinear(cost, res, ox, oy, oom, x, y):
    height, width = cost.shape
    u = (x - ox) / res
    v = (y - oy) / res
    if u < -0.5 or u > width - 0.5 or v < -0.5 or v > height - 0.5:
        return oom
    if u < 0.0:
        u = 0.0
    elif u > width - 1.0:
        u = width - 1.0
    if v < 0.0:
        v = 0.0
    elif v > height - 1.0:
        v = height - 1.0
    c0 = int(math.floor(u))
    if c0 > width - 2:
        c0 = width - 2
    if c0 < 0:
        c0 = 0
    r0 = int(math.floor(v))
    if r0 > height - 2:
        r0 = height - 2
    if r0 < 0:
        r0 = 0
    c1 = c0 + 1 if c0 + 1 < width else width - 1
    r1 = r0 + 1 if r0 + 1 < height else height - 1
    fu = u - c0
    fv = v - r0
    top = cost[r0, c0] * (1.0 - fu) + cost[r0, c1] * fu
    bot = cost[r1, c0] * (1.0 - fu) + cost[r1, c1] * fu
    return top * (1.0 - fv) + bot * fv


@njit(cache=True)
def _window_cost(cost, res, ox, oy, oom, m,
                 phis, drs, xy, lo, hi,
                 index, kend, cand_phis, cand_drs, cand_xy, use_cand,
                 phi_max, rate_max, alpha_phi, beta_phi, alpha_rate, beta_rate):
    """Sub-path cost of steps [lo, hi); with ``use_cand`` the candidate
    window [index, kend) overrides the live arrays."""
    total = 0.0
    for j in range(lo, hi):
        if use_cand and index <= j < kend:
            x0, y0 = cand_xy[j - index, 0], cand_xy[j - index, 1]
        else:
            x0, y0 = xy[j, 0], xy[j, 1]
        jj = j + 1
        if use_cand and index <= jj <= kend:
            x1, y1 = cand_xy[jj - index, 0], cand_xy[jj - index, 1]
        else:
            x1, y1 = xy[jj, 0], xy[jj, 1]
        acc = 0.0
        for t in range(m):
            f = t / m
            acc += _bilinear(cost, res, ox, oy, oom,
                             x0 + f * (x1 - x0), y0 + f * (y1 - y0))
        total += acc / m
    if use_cand and index <= hi <= kend:
        xf, yf = cand_xy[hi - index, 0], cand_xy[hi - index, 1]
    else:
        xf, yf = xy[hi, 0], xy[hi, 1]
    total += _bilinear(cost, res, ox, oy, oom, xf, yf)

    prev = cand_phis[lo - index] if use_cand and index <= lo < kend else phis[lo]
    total += _penalty(prev, phi_max, alpha_phi, beta_phi)
    for j in range(lo + 1, hi):
        p = cand_phis[j - index] if use_cand and index <= j < kend else phis[j]
        total += _penalty(p, phi_max, alpha_phi, beta_phi)
        total += _penalty(p - prev, rate_max, alpha_rate, beta_rate)
        prev = p
    return total


@njit(cache=True)
def _make_candidate(phis, drs, xy, thetas, index, delta, damping, n,
                    cand_phis, cand_drs, cand_xy):
    """Damped perturbation on its support; returns (kend, ok)."""
    kend = min(index + damping, n)
    w = kend - index
    cand_xy[0, 0] = xy[index, 0]
    cand_xy[0, 1] = xy[index, 1]
    theta = thetas[index]
    for k in range(w):
        ph = phis[index + k]
        if k == 0:
            ph += delta
        step = drs[index + k]
        cand_xy[k + 1, 0] = cand_xy[k, 0] + math.cos(theta) * step
        cand_xy[k + 1, 1] = cand_xy[k, 1] + math.sin(theta) * step
        theta += ph
    for k in range(w + 1):
        t = k / damping
        s = t * t * (3.0 - 2.0 * t)
        cand_xy[k, 0] = cand_xy[k, 0] + s * (xy[index + k, 0] - cand_xy[k, 0])
        cand_xy[k, 1] = cand_xy[k, 1] + s * (xy[index + k, 1] - cand_xy[k, 1])
    if kend == index + damping:
        cand_xy[w, 0] = xy[kend, 0]  # pin the window exit exactly
        cand_xy[w, 1] = xy[kend, 1]

    prev_head = 0.0
    for k in range(w):
        dx = cand_xy[k + 1, 0] - cand_xy[k, 0]
        dy = cand_xy[k + 1, 1] - cand_xy[k, 1]
        dr_new = math.hypot(dx, dy)
        if dr_new == 0.0:
            return kend, False
        cand_drs[k] = dr_new
        head = math.atan2(dy, dx)
        if k > 0:
            cand_phis[k - 1] = _wrap(head - prev_head)
        prev_head = head
    if kend < n:
        dxn = xy[kend + 1, 0] - cand_xy[w, 0]
        dyn = xy[kend + 1, 1] - cand_xy[w, 1]
        cand_phis[w - 1] = _wrap(math.atan2(dyn, dxn) - prev_head)
    else:
        cand_phis[w - 1] = phis[n - 1] + (delta if index == n - 1 else 0.0)
    return kend, True


@njit(cache=True)
def sweep(cost, res, ox, oy, oom, m,
          phis, drs, xy, thetas,
          damping, probe_delta, step_scale, max_phi_step,
          phi_max, rate_max, alpha_phi, beta_phi, alpha_rate, beta_rate):
    """One in-order pass over every step; mutates the path arrays in
    place and returns the number of accepted perturbations."""
    n = phis.shape[0]
    size = damping + 2
    probe_phis = np.empty(size)
    probe_drs = np.empty(size)
    probe_xy = np.empty((size, 2))
    cand_phis = np.empty(size)
    cand_drs = np.empty(size)
    cand_xy = np.empty((size, 2))
    accepted = 0

    for index in range(n):
        lo = index - 1 if index >= 1 else 0
        hi = index + damping + 1
        if hi > n:
            hi = n
        w_cur = _window_cost(cost, res, ox, oy, oom, m, phis, drs, xy,
                             lo, hi, 0, 0, cand_phis, cand_drs, cand_xy, False,
                             phi_max, rate_max, alpha_phi, beta_phi,
                             alpha_rate, beta_rate)
        # both probes are measured before either direction is applied
        w_probe = np.empty(2)
        for side in range(2):
            sgn = 1.0 if side == 0 else -1.0
            kend, ok = _make_candidate(phis, drs, xy, thetas, index,
                                       sgn * probe_delta, damping, n,
                                       probe_phis, probe_drs, probe_xy)
            if ok:
                w_probe[side] = _window_cost(
                    cost, res, ox, oy, oom, m, phis, drs, xy, lo, hi,
                    index, kend, probe_phis, probe_drs, probe_xy, True,
                    phi_max, rate_max, alpha_phi, beta_phi, alpha_rate, beta_rate)
            else:
                w_probe[side] = np.inf
        for side in range(2):
            if w_probe[side] >= w_cur:
                continue
            sgn = 1.0 if side == 0 else -1.0
            mag = step_scale * (w_cur - w_probe[side])
            if mag < probe_delta:
                mag = probe_delta
            elif mag > max_phi_step:
                mag = max_phi_step
            kend, ok = _make_candidate(phis, drs, xy, thetas, index,
                                       sgn * mag, damping, n,
                                       cand_phis, cand_drs, cand_xy)
            if not ok:
                continue
            w_cand = _window_cost(
                cost, res, ox, oy, oom, m, phis, drs, xy, lo, hi,
                index, kend, cand_phis, cand_drs, cand_xy, True,
                phi_max, rate_max, alpha_phi, beta_phi, alpha_rate, beta_rate)
            if w_cand < w_cur:
                for k in range(kend - index):
                    phis[index + k] = cand_phis[k]
                    drs[index + k] = cand_drs[k]
                for k in range(kend - index + 1):
                    xy[index + k, 0] = cand_xy[k, 0]
                    xy[index + k, 1] = cand_xy[k, 1]
                theta = thetas[index]
                for k in range(index, kend):
                    theta += phis[k]
                    thetas[k + 1] = theta
                w_cur = w_cand
                accepted += 1
    return accepted
