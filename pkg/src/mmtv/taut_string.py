"""Exact solver for the weighted 1-D total-variation proximal problem

    minimize_x  (1/2) ||y - x||^2 + sum_k w_k |x_{k+1} - x_k|.

Taut-string view: with S_k = y_1 + ... + y_k, the running sum X_k of the
solution is the shortest path from (0, 0) to (n, S_n) that passes the gate
[S_k - w_k, S_k + w_k] at every interior knot k.  The solution x is the
slope of that path on each unit interval.

The path is traced with a funnel: a convex chain under the upper gate points
and a concave chain over the lower gate points, both hanging from the
current apex.  When a new gate point crosses the opposite chain the apex
moves along that chain, the passed segments are emitted, and the scan
restarts from the new apex.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


@njit(cache=True)
def _taut_string(y, w, x):
    n = y.shape[0]
    s = np.empty(n + 1)
    s[0] = 0.0
    acc = 0.0
    for i in range(n):
        acc += y[i]
        s[i + 1] = acc

    uk = np.empty(n + 1, dtype=np.int64)
    uv = np.empty(n + 1)
    lk = np.empty(n + 1, dtype=np.int64)
    lv = np.empty(n + 1)

    ak = 0
    av = 0.0
    while ak < n:
        uk[0] = ak
        uv[0] = av
        lk[0] = ak
        lv[0] = av
        nu = 1
        nl = 1
        moved = False
        k = ak + 1
        while k <= n:
            if k == n:
                hi = s[n]
                lo = s[n]
            else:
                hi = s[k] + w[k - 1]
                lo = s[k] - w[k - 1]

            # upper gate point below the lower chain: the path hugs the lower chain
            i = 0
            while i + 1 < nl and (hi - lv[i]) / (k - lk[i]) < (lv[i + 1] - lv[i]) / (
                lk[i + 1] - lk[i]
            ):
                slope = (lv[i + 1] - lv[i]) / (lk[i + 1] - lk[i])
                for t in range(lk[i], lk[i + 1]):
                    x[t] = slope
                i += 1
            if i > 0:
                ak = lk[i]
                av = lv[i]
                moved = True
                break

            # lower gate point above the upper chain: the path hugs the upper chain
            i = 0
            while i + 1 < nu and (lo - uv[i]) / (k - uk[i]) > (uv[i + 1] - uv[i]) / (
                uk[i + 1] - uk[i]
            ):
                slope = (uv[i + 1] - uv[i]) / (uk[i + 1] - uk[i])
                for t in range(uk[i], uk[i + 1]):
                    x[t] = slope
                i += 1
            if i > 0:
                ak = uk[i]
                av = uv[i]
                moved = True
                break

            # convex chain under the upper points
            while nu >= 2 and (hi - uv[nu - 2]) / (k - uk[nu - 2]) <= (
                uv[nu - 1] - uv[nu - 2]
            ) / (uk[nu - 1] - uk[nu - 2]):
                nu -= 1
            uk[nu] = k
            uv[nu] = hi
            nu += 1

            # concave chain over the lower points
            while nl >= 2 and (lo - lv[nl - 2]) / (k - lk[nl - 2]) >= (
                lv[nl - 1] - lv[nl - 2]
            ) / (lk[nl - 1] - lk[nl - 2]):
                nl -= 1
            lk[nl] = k
            lv[nl] = lo
            nl += 1

            k += 1

        if not moved:
            slope = (s[n] - av) / (n - ak)
            for t in range(ak, n):
                x[t] = slope
            ak = n
    return x


def _validate(y, weights):
    y = np.ascontiguousarray(y, dtype=float)
    if y.ndim != 1 or y.size < 1:
        raise ValueError("y must be a non-empty one-dimensional array")
    if not np.all(np.isfinite(y)):
        raise ValueError("y must be finite")
    w = np.ascontiguousarray(np.broadcast_to(np.asarray(weights, dtype=float), (max(y.size - 1, 0),)))
    if w.size and not (np.all(np.isfinite(w)) and np.all(w > 0)):
        raise ValueError("edge weights must be positive and finite")
    return y, w


def solve(y, weights) -> np.ndarray:
    """Minimize (1/2)||y - x||^2 + sum_k weights[k] * |x[k+1] - x[k]|.

    Parameters
    ----------
    y : array_like, shape (n,)
        Observations.
    weights : array_like or float, shape (n - 1,)
        Per-edge penalty weights, all strictly positive.  A scalar is
        broadcast to every edge.

    Returns
    -------
    numpy.ndarray
        The unique minimizer.  Samples inside one flat segment are exactly
        equal, so ``np.diff`` of the result is exactly zero there.
    """
    y, w = _validate(y, weights)
    if y.size == 1:
        return y.copy()
    return _taut_string(y, w, np.empty_like(y))


def solve_l1_filter(y, lam: float) -> np.ndarray:
    """Minimize (1/2n)||y - x||^2 + lam * sum |x[k+1] - x[k]|."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    y = np.asarray(y, dtype=float)
    return solve(y, y.size * lam)


def dual_residual(y, x, weights) -> float:
    """Worst violation of the optimality system of the weighted TV problem.

    With s_k = sum_{i<=k} (y_i - x_i) the minimizer satisfies |s_k| <= w_k,
    s_k = -w_k where x rises across edge k, s_k = +w_k where it falls, and
    s_n = 0.  Returned value is the largest violation, unnormalized.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    w = np.broadcast_to(np.asarray(weights, dtype=float), (y.size - 1,))
    s = np.cumsum(y - x)
    worst = abs(s[-1])
    sk = s[:-1]
    dz = np.diff(x)
    scale = max(1.0, float(np.max(np.abs(y))))
    flat = np.abs(dz) <= 1e-12 * scale
    if np.any(flat):
        worst = max(worst, float(np.max(np.abs(sk[flat]) - w[flat], initial=0.0)))
    jump = ~flat
    if np.any(jump):
        worst = max(worst, float(np.max(np.abs(sk[jump] + w[jump] * np.sign(dz[jump])))))
    return float(worst)
