"""Batched bracketing and root polishing for sign-change roots.

All brackets advance together; each sweep costs one vectorized call of
the target function, which is what makes enumeration over a hundred
eigenvalues affordable when every evaluation is an ODE solve.  The
polish is the Illinois variant of regula falsi (superlinear on simple
roots of analytic functions) with a plain-bisection finishing pass for
any bracket that has not collapsed.
"""

from __future__ import annotations

import numpy as np

from .errors import BracketingError

_XTOL = 1e-12


def _illinois_sweeps(f, lo, hi, flo, fhi, sweeps: int):
    last = np.zeros_like(lo)  # +1: lo moved last, -1: hi moved last
    for it in range(sweeps):
        width = hi - lo
        mid = 0.5 * (lo + hi)
        denom = fhi - flo
        sec = np.where(denom != 0.0,
                       (lo * fhi - hi * flo) / np.where(denom == 0.0, 1.0, denom), mid)
        inside = (sec > lo + 1e-3 * width) & (sec < hi - 1e-3 * width)
        c = np.where(inside & (it % 4 != 3), sec, mid)
        fc = f(c)
        move_lo = np.sign(fc) * np.sign(flo) > 0  # root stays in [c, hi]
        # Illinois: when the same end moves twice running, halve the stale end
        fhi = np.where(move_lo & (last == 1.0), 0.5 * fhi, fhi)
        flo = np.where(~move_lo & (last == -1.0), 0.5 * flo, flo)
        lo = np.where(move_lo, c, lo)
        flo = np.where(move_lo, fc, flo)
        hi = np.where(move_lo, hi, c)
        fhi = np.where(move_lo, fhi, fc)
        last = np.where(move_lo, 1.0, -1.0)
        if np.all(hi - lo < _XTOL * np.maximum(1.0, np.abs(hi))):
            break
    return lo, hi, flo, fhi


def batched_sign_change_roots(f, centers, w_init, w_cap, iters: int = 52,
                              expand_rounds: int = 4, floor: float = 1e-6):
    """Roots of f near `centers`, one per bracket [c - w, c + w].

    f maps an array of abscissae to an array of values.  Brackets without
    a sign change are widened geometrically up to w_cap; a bracket that
    never produces a sign change raises BracketingError.  Returns
    (roots, f_at_roots).
    """
    centers = np.asarray(centers, dtype=float)
    w = np.broadcast_to(np.asarray(w_init, dtype=float), centers.shape).copy()
    cap = np.broadcast_to(np.asarray(w_cap, dtype=float), centers.shape)
    lo = np.maximum(centers - w, floor)
    hi = centers + w
    flo, fhi = f(lo), f(hi)
    no_change = np.sign(flo) * np.sign(fhi) >= 0
    for _ in range(expand_rounds):
        if not np.any(no_change):
            break
        w2 = np.minimum(w * 1.45, cap)
        idx = no_change & (w2 > w)
        if not np.any(idx):
            break
        w = np.where(idx, w2, w)
        lo2 = np.maximum(centers - w, floor)
        hi2 = centers + w
        flo = np.where(idx, f(lo2), flo)
        fhi = np.where(idx, f(hi2), fhi)
        lo = np.where(idx, lo2, lo)
        hi = np.where(idx, hi2, hi)
        no_change = np.sign(flo) * np.sign(fhi) >= 0
    if np.any(no_change):
        i = int(np.argmax(no_change))
        raise BracketingError(
            f"no sign change in bracket {i}: ({lo[i]:.9g}, {hi[i]:.9g})")

    lo, hi, flo, fhi = _illinois_sweeps(f, lo, hi, flo, fhi, sweeps=min(iters, 18))
    # finish any stragglers by guaranteed bisection on the shrunk brackets
    for _ in range(iters):
        open_w = hi - lo > _XTOL * np.maximum(1.0, np.abs(hi))
        if not np.any(open_w):
            break
        mid = np.where(open_w, 0.5 * (lo + hi), lo)
        fm = f(mid)
        left = np.sign(fm) * np.sign(flo) > 0
        lo = np.where(open_w & left, mid, lo)
        flo = np.where(open_w & left, fm, flo)
        hi = np.where(open_w & ~left, mid, hi)
        fhi = np.where(open_w & ~left, fm, fhi)
    roots = 0.5 * (lo + hi)
    return roots, f(roots)
