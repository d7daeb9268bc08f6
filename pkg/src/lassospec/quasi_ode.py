"""Fundamental solutions of -y'' + q y = lam y with q = sigma' on one edge.

The equation is integrated in quasi-derivative form.  With u = y and
v = y' - sigma*y the first-order system is

    u' = sigma*u + v,      v' = -sigma*v - (sigma^2 + lam)*u,

which stays well defined when q = sigma' only exists distributionally.
The cosine-type solution C starts from (u, v) = (1, 0), the sine-type
solution S from (0, 1); both columns are propagated together as a 4-row
state [C, C1, S, S1].

The integrator is an embedded Dormand-Prince 5(4) pair with adaptive
steps, vectorized over a whole batch of lam values at once (the step
size is shared across the batch and driven by the worst member).  It
advances cell by cell over the potential grid so the right-hand side is
smooth (sigma linear) within every step.  A numba-compiled kernel does
the stepping when numba is importable; a numpy fallback with identical
logic is kept for environments without it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergedIntegrationError, StiffnessError
from .gridfn import GridFunction

__all__ = [
    "EndpointData",
    "integrate_fundamental",
    "integrate_fundamental_many",
    "evaluate_solution_grid",
    "check_wronskian",
]

# Dormand-Prince 5(4) tableau (RK45 "DOPRI5").
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# Error weights: 5th-order minus embedded 4th-order coefficients.
_E1 = _B1 - 5179 / 57600
_E3 = _B3 - 7571 / 16695
_E4 = _B4 - 393 / 640
_E5 = _B5 + 92097 / 339200
_E6 = _B6 - 187 / 2100
_E7 = -1 / 40

_MAX_STEPS = 2_000_000
_MIN_STEP_FRACTION = 1e-14

_STATUS_OK = 0
_STATUS_DIVERGED = 1
_STATUS_UNDERFLOW = 2
_STATUS_BUDGET = 3


def _step_loop(bounds, v0s, slopes, x0s, rec_rows, lams, rtol, atol, h_cap,
               max_steps, y, recorded):
    """Advance y over the segments [bounds[i], bounds[i+1]].

    Segment i carries sigma(x) = v0s[i] + slopes[i]*(x - x0s[i]); when
    rec_rows[i] >= 0 the S row is copied into recorded[rec_rows[i]] at
    the segment end.  Returns a status code and the failure position.
    """
    L = lams.shape[0]
    k = np.empty((7, 4, L))
    yt = np.empty((4, L))
    y5 = np.empty((4, L))
    n_steps = 0
    for seg in range(bounds.shape[0] - 1):
        xa = bounds[seg]
        xb = bounds[seg + 1]
        if xb - xa <= 0.0:
            if rec_rows[seg] >= 0:
                recorded[rec_rows[seg]] = y[2]
            continue
        v0 = v0s[seg]
        slope = slopes[seg]
        x0 = x0s[seg]
        x = xa
        h = min(xb - xa, h_cap)
        fsal_valid = False
        while x < xb - 1e-15 * max(1.0, xb):
            if h > xb - x:
                h = xb - x
            if h < _MIN_STEP_FRACTION * max(1.0, xb):
                return _STATUS_UNDERFLOW, x
            n_steps += 1
            if n_steps > max_steps:
                return _STATUS_BUDGET, x
            if not fsal_valid:
                s = v0 + slope * (x - x0)
                w = s * s
                for i in range(L):
                    k[0, 0, i] = s * y[0, i] + y[1, i]
                    k[0, 1, i] = -s * y[1, i] - (w + lams[i]) * y[0, i]
                    k[0, 2, i] = s * y[2, i] + y[3, i]
                    k[0, 3, i] = -s * y[3, i] - (w + lams[i]) * y[2, i]
                fsal_valid = True

            for stage in range(1, 7):
                if stage == 1:
                    cs, xs = _C2, x + _C2 * h
                    for c in range(4):
                        for i in range(L):
                            yt[c, i] = y[c, i] + h * _A21 * k[0, c, i]
                elif stage == 2:
                    xs = x + _C3 * h
                    for c in range(4):
                        for i in range(L):
                            yt[c, i] = y[c, i] + h * (_A31 * k[0, c, i] + _A32 * k[1, c, i])
                elif stage == 3:
                    xs = x + _C4 * h
                    for c in range(4):
                        for i in range(L):
                            yt[c, i] = y[c, i] + h * (_A41 * k[0, c, i] + _A42 * k[1, c, i]
                                                      + _A43 * k[2, c, i])
                elif stage == 4:
                    xs = x + _C5 * h
                    for c in range(4):
                        for i in range(L):
                            yt[c, i] = y[c, i] + h * (_A51 * k[0, c, i] + _A52 * k[1, c, i]
                                                      + _A53 * k[2, c, i] + _A54 * k[3, c, i])
                elif stage == 5:
                    xs = x + h
                    for c in range(4):
                        for i in range(L):
                            yt[c, i] = y[c, i] + h * (_A61 * k[0, c, i] + _A62 * k[1, c, i]
                                                      + _A63 * k[2, c, i] + _A64 * k[3, c, i]
                                                      + _A65 * k[4, c, i])
                else:
                    xs = x + h
                    for c in range(4):
                        for i in range(L):
                            y5[c, i] = y[c, i] + h * (_B1 * k[0, c, i] + _B3 * k[2, c, i]
                                                      + _B4 * k[3, c, i] + _B5 * k[4, c, i]
                                                      + _B6 * k[5, c, i])
                    for c in range(4):
                        for i in range(L):
                            yt[c, i] = y5[c, i]
                s = v0 + slope * (xs - x0)
                w = s * s
                for i in range(L):
                    k[stage, 0, i] = s * yt[0, i] + yt[1, i]
                    k[stage, 1, i] = -s * yt[1, i] - (w + lams[i]) * yt[0, i]
                    k[stage, 2, i] = s * yt[2, i] + yt[3, i]
                    k[stage, 3, i] = -s * yt[3, i] - (w + lams[i]) * yt[2, i]

            err = 0.0
            for c in range(4):
                for i in range(L):
                    e = h * (_E1 * k[0, c, i] + _E3 * k[2, c, i] + _E4 * k[3, c, i]
                             + _E5 * k[4, c, i] + _E6 * k[5, c, i] + _E7 * k[6, c, i])
                    ay = abs(y[c, i])
                    ay5 = abs(y5[c, i])
                    sc = atol + rtol * (ay if ay > ay5 else ay5)
                    q = abs(e) / sc
                    # NaN fails every comparison, so test for "not small"
                    # rather than "large" to catch overflow and NaN alike
                    if not (q <= 1.0e300):
                        return _STATUS_DIVERGED, x
                    if q > err:
                        err = q
            if err <= 1.0:
                x += h
                for c in range(4):
                    for i in range(L):
                        y[c, i] = y5[c, i]
                        k[0, c, i] = k[6, c, i]
                fsal_valid = True
                grow = 5.0 if err == 0.0 else min(5.0, 0.9 * err ** -0.2)
                h = min(h * grow, h_cap)
            else:
                h *= max(0.2, 0.9 * err ** -0.2)
        if rec_rows[seg] >= 0:
            recorded[rec_rows[seg]] = y[2]
    return _STATUS_OK, bounds[-1]


try:  # compiled kernel; the numpy fallback above stays authoritative for semantics
    from numba import njit as _njit

    _step_loop_jit = _njit(cache=True, fastmath=False)(_step_loop)
except ImportError:  # pragma: no cover - numba is an optional accelerator
    _step_loop_jit = _step_loop


@dataclass(frozen=True)
class EndpointData:
    """C, C^[1], S, S^[1] of one edge evaluated at x = length."""

    c: float
    c1: float
    s: float
    s1: float
    lam: float

    def wronskian_defect(self) -> float:
        return abs(self.c * self.s1 - self.c1 * self.s - 1.0)


def _propagate(sigma: GridFunction, lams, rtol: float, atol: float,
               stops=None, max_steps: int = _MAX_STEPS, use_jit: bool = True):
    """Propagate the 4-row state over [0, sigma.length] for all lams at once.

    Returns the final state (4, L) and, when `stops` is given (interior
    sample points), the S row recorded at each stop.
    """
    lams = np.ascontiguousarray(np.atleast_1d(np.asarray(lams, dtype=float)))
    L = lams.size
    y = np.zeros((4, L))
    y[0] = 1.0
    y[3] = 1.0
    if L == 0:
        return y, np.zeros((0, 0))
    if not np.all(np.isfinite(lams)):
        raise ValueError("lambda values must be finite")

    sig_max = float(np.max(np.abs(sigma.values)))
    freq = np.sqrt(np.max(np.abs(lams)) + sig_max * sig_max) + 1.0
    h_cap = 0.5 / freq

    bounds = sigma.nodes
    if stops is not None and len(stops):
        bounds = np.union1d(bounds, np.asarray(stops, dtype=float))
    nseg = len(bounds) - 1
    h_cell = sigma.spacing
    v0s = np.empty(nseg)
    slopes = np.empty(nseg)
    x0s = np.empty(nseg)
    for i, xa in enumerate(bounds[:-1]):
        ci = min(int(xa / h_cell + 1e-9), sigma.n_nodes - 2)
        v0s[i], slopes[i] = sigma.cell(ci)
        x0s[i] = ci * h_cell

    rec_rows = np.full(nseg, -1, dtype=np.int64)
    n_rec = 0
    if stops is not None and len(stops):
        stop_set = {round(float(sx), 15) for sx in stops}
        for i in range(nseg):
            if round(float(bounds[i + 1]), 15) in stop_set:
                rec_rows[i] = n_rec
                n_rec += 1
    recorded = np.zeros((max(n_rec, 1), L))

    runner = _step_loop_jit if use_jit else _step_loop
    status, x_fail = runner(bounds, v0s, slopes, x0s, rec_rows, lams,
                            float(rtol), float(atol), float(h_cap),
                            max_steps, y, recorded)
    if status == _STATUS_DIVERGED:
        raise DivergedIntegrationError(
            f"non-finite state at x = {x_fail:.6g} (|lam| up to {np.max(np.abs(lams)):.3g})")
    if status == _STATUS_UNDERFLOW:
        raise StiffnessError(f"step size underflow at x = {x_fail:.6g}")
    if status == _STATUS_BUDGET:
        raise StiffnessError(f"step budget {max_steps} exhausted at x = {x_fail:.6g}")
    return y, recorded[:n_rec]


def integrate_fundamental_many(sigma: GridFunction, lams, rtol: float = 1e-10,
                               atol: float = 1e-10, max_steps: int = _MAX_STEPS):
    """Endpoint values (C, C1, S, S1) for a whole batch of lam values.

    Returns four arrays aligned with `lams`.
    """
    y, _ = _propagate(sigma, lams, rtol, atol, max_steps=max_steps)
    return y[0], y[1], y[2], y[3]


def integrate_fundamental(sigma: GridFunction, lam: float, rtol: float = 1e-10,
                          atol: float = 1e-10) -> EndpointData:
    """C(l, lam), C^[1](l, lam), S(l, lam), S^[1](l, lam) for one edge."""
    c, c1, s, s1 = integrate_fundamental_many(sigma, [lam], rtol, atol)
    return EndpointData(float(c[0]), float(c1[0]), float(s[0]), float(s1[0]), float(lam))


def evaluate_solution_grid(sigma: GridFunction, lam: float, points: int,
                           rtol: float = 1e-10, atol: float = 1e-10) -> np.ndarray:
    """Sample S(x, lam) at `points` uniform nodes on [0, length].

    Returns an array of rows (x, S(x, lam)); the first sample is exactly
    (0, 0) by the initial condition.
    """
    if points < 1:
        raise ValueError("points must be >= 1")
    xs = np.linspace(0.0, sigma.length, points)
    out = np.zeros((points, 2))
    out[:, 0] = xs
    if points > 1:
        _, rec = _propagate(sigma, [float(lam)], rtol, atol, stops=xs[1:])
        out[1:, 1] = rec[:, 0]
    return out


def check_wronskian(data: EndpointData) -> float:
    """|C*S1 - C1*S - 1|, which vanishes identically in exact arithmetic."""
    return data.wronskian_defect()
