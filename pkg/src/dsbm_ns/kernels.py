"""Hot inner loops of the coupled Dyson solver, with switchable backends.

Two numerically identical implementations of each kernel exist: a numba
@njit version (default when numba imports) and a pure-numpy fallback.
Selection is via the environment variable ``DSBM_NS_BACKEND`` set to
``numba`` or ``numpy``, read at import time, or programmatically with
:func:`set_backend`.  ``benchmarks/bench_kernels.py`` compares the two.

Both kernels work on log-coordinates x = log v, y = log w so positivity is
exact and the iterates survive the extreme-tau regime where components
spread over many orders of magnitude:

* ``fixed_point``: damped iteration of the Dyson map with per-iteration
  rescaling at eta = 0, adaptive damping (halved on residual increase,
  floored), and stagnation detection.  Its contraction rate degrades like
  1 - O(tau^kappa), so it is used to enter the Newton basin only.
* ``newton``: Newton's method on the log-domain residual.  All Jacobian
  entries are bounded by 1 in absolute value regardless of how extreme the
  solution components are, and the eta = 0 scaling gauge is pinned by a
  rank-one shift along the known null direction.

Status codes: 0 converged, 1 iteration budget exhausted, 2 stagnated or
line search failed.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "STATUS_OK",
    "STATUS_MAXITER",
    "STATUS_STALLED",
    "available_backends",
    "get_backend",
    "set_backend",
    "get_kernels",
    "log_matrix",
]

STATUS_OK = 0
STATUS_MAXITER = 1
STATUS_STALLED = 2

_STALL_WINDOW = 50
_STALL_FACTOR = 0.99


def log_matrix(s: np.ndarray) -> np.ndarray:
    """Entrywise log with -inf at structural zeros."""
    out = np.full(s.shape, -np.inf)
    np.log(s, out=out, where=s > 0)
    return out


# ---------------------------------------------------------------------------
# pure-numpy backend
# ---------------------------------------------------------------------------

def _lse_rows_np(log_m, y):
    # log of (M @ exp(y)) rowwise, safe for -inf rows
    t = log_m + y[None, :]
    m = t.max(axis=1)
    out = np.full_like(m, -np.inf)
    ok = m > -np.inf
    if np.any(ok):
        out[ok] = m[ok] + np.log(np.exp(t[ok] - m[ok, None]).sum(axis=1))
    return out


def _log_mean_exp_np(x):
    m = x.max()
    return m + np.log(np.mean(np.exp(x - m)))


def _rhs_np(log_s, log_st, log_tau, log_eta, x, y):
    a = _lse_rows_np(log_s, y)       # log (S w)
    b = _lse_rows_np(log_st, x)      # log (S^t v)
    den_v = np.logaddexp(log_eta, b)
    den_w = np.logaddexp(log_eta, a)
    stack_v = np.stack((np.full_like(a, log_eta), a, log_tau - den_v))
    stack_w = np.stack((np.full_like(b, log_eta), b, log_tau - den_w))
    mv = stack_v.max(axis=0)
    mw = stack_w.max(axis=0)
    rhs_v = mv + np.log(np.exp(stack_v - mv).sum(axis=0))
    rhs_w = mw + np.log(np.exp(stack_w - mw).sum(axis=0))
    return rhs_v, rhs_w


def fixed_point_numpy(log_s, log_st, tau, eta, x, y, damping, damping_floor,
                      tol, max_iter):
    x = x.copy()
    y = y.copy()
    log_tau = np.log(tau)
    log_eta = np.log(eta) if eta > 0 else -np.inf
    last = np.inf
    best = np.inf
    best_it = 0
    defect = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        rhs_v, rhs_w = _rhs_np(log_s, log_st, log_tau, log_eta, x, y)
        defect = max(np.abs(x + rhs_v).max(), np.abs(y + rhs_w).max())
        if not np.isfinite(defect):
            return x, y, defect, it, STATUS_STALLED
        if defect <= tol:
            return x, y, defect, it, STATUS_OK
        if defect > last:
            damping = max(damping_floor, 0.5 * damping)
        last = defect
        if defect < _STALL_FACTOR * best:
            best = defect
            best_it = it
        elif it - best_it >= _STALL_WINDOW:
            return x, y, defect, it, STATUS_STALLED
        x = x - damping * (x + rhs_v)
        y = y - damping * (y + rhs_w)
        if eta == 0.0:
            shift = 0.5 * (_log_mean_exp_np(y) - _log_mean_exp_np(x))
            x += shift
            y -= shift
    return x, y, defect, max_iter, STATUS_MAXITER


def _newton_system_np(s, st, tau, eta, x, y):
    k = x.shape[0]
    ev = np.exp(x)
    ew = np.exp(y)
    a = s @ ew
    b = st @ ev
    den_v = eta + b
    den_w = eta + a
    big_v = eta + a + tau / den_v     # equals 1/v at the solution
    big_w = eta + b + tau / den_w
    res = np.concatenate((x + np.log(big_v), y + np.log(big_w)))
    jac = np.empty((2 * k, 2 * k))
    jac[:k, :k] = np.eye(k) - (tau / (den_v ** 2 * big_v))[:, None] * (st * ev[None, :])
    jac[:k, k:] = (s * ew[None, :]) / big_v[:, None]
    jac[k:, :k] = (st * ev[None, :]) / big_w[:, None]
    jac[k:, k:] = np.eye(k) - (tau / (den_w ** 2 * big_w))[:, None] * (s * ew[None, :])
    return res, jac


def newton_numpy(s, st, tau, eta, x, y, tol, max_iter):
    k = x.shape[0]
    x = x.copy()
    y = y.copy()
    res, jac = _newton_system_np(s, st, tau, eta, x, y)
    defect = np.abs(res).max()
    for it in range(1, max_iter + 1):
        if defect <= tol:
            return x, y, defect, it - 1, STATUS_OK
        if eta == 0.0:
            # pin the scaling gauge (v, w) -> (c v, w / c) along its null direction
            null = np.concatenate((np.ones(k), -np.ones(k)))
            jac = jac + np.outer(null, null) / (2.0 * k)
        try:
            step = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError:
            return x, y, defect, it, STATUS_STALLED
        scale = 1.0
        for _ in range(40):
            xn = x + scale * step[:k]
            yn = y + scale * step[k:]
            if eta == 0.0:
                shift = 0.5 * (_log_mean_exp_np(yn) - _log_mean_exp_np(xn))
                xn += shift
                yn -= shift
            res_n, jac_n = _newton_system_np(s, st, tau, eta, xn, yn)
            defect_n = np.abs(res_n).max()
            if np.isfinite(defect_n) and defect_n < defect:
                break
            scale *= 0.5
        else:
            return x, y, defect, it, STATUS_STALLED
        x, y, res, jac, defect = xn, yn, res_n, jac_n, defect_n
    return x, y, defect, max_iter, STATUS_MAXITER


_NUMPY_KERNELS = {"fixed_point": fixed_point_numpy, "newton": newton_numpy}

# ---------------------------------------------------------------------------
# numba backend: same algorithms with explicit loops
# ---------------------------------------------------------------------------

_NUMBA_KERNELS = None
_NUMBA_IMPORT_ERROR = None

try:
    from numba import njit

    @njit(cache=True, nogil=True)
    def _lse3(u1, u2, u3):
        m = max(u1, max(u2, u3))
        if m == -np.inf:
            return -np.inf
        return m + np.log(np.exp(u1 - m) + np.exp(u2 - m) + np.exp(u3 - m))

    @njit(cache=True, nogil=True)
    def _lse_rows_nb(log_m, y, out):
        k = y.shape[0]
        for i in range(k):
            m = -np.inf
            for j in range(k):
                t = log_m[i, j] + y[j]
                if t > m:
                    m = t
            if m == -np.inf:
                out[i] = -np.inf
            else:
                acc = 0.0
                for j in range(k):
                    t = log_m[i, j] + y[j]
                    if t > -np.inf:
                        acc += np.exp(t - m)
                out[i] = m + np.log(acc)

    @njit(cache=True, nogil=True)
    def _log_mean_exp_nb(x):
        m = x.max()
        acc = 0.0
        for i in range(x.shape[0]):
            acc += np.exp(x[i] - m)
        return m + np.log(acc / x.shape[0])

    @njit(cache=True, nogil=True)
    def fixed_point_numba(log_s, log_st, tau, eta, x0, y0, damping,
                          damping_floor, tol, max_iter):
        k = x0.shape[0]
        x = x0.copy()
        y = y0.copy()
        a = np.empty(k)
        b = np.empty(k)
        log_tau = np.log(tau)
        log_eta = np.log(eta) if eta > 0.0 else -np.inf
        last = np.inf
        best = np.inf
        best_it = 0
        defect = np.inf
        it = 0
        for it in range(1, max_iter + 1):
            _lse_rows_nb(log_s, y, a)
            _lse_rows_nb(log_st, x, b)
            defect = 0.0
            bad = False
            for i in range(k):
                rhs_v = _lse3(log_eta, a[i], log_tau - np.logaddexp(log_eta, b[i]))
                rhs_w = _lse3(log_eta, b[i], log_tau - np.logaddexp(log_eta, a[i]))
                dv = abs(x[i] + rhs_v)
                dw = abs(y[i] + rhs_w)
                if not (np.isfinite(dv) and np.isfinite(dw)):
                    bad = True
                    break
                if dv > defect:
                    defect = dv
                if dw > defect:
                    defect = dw
                a[i] = rhs_v  # reuse buffers for the updates below
                b[i] = rhs_w
            if bad:
                return x, y, np.inf, it, STATUS_STALLED
            if defect <= tol:
                return x, y, defect, it, STATUS_OK
            if defect > last:
                damping = max(damping_floor, 0.5 * damping)
            last = defect
            if defect < _STALL_FACTOR * best:
                best = defect
                best_it = it
            elif it - best_it >= _STALL_WINDOW:
                return x, y, defect, it, STATUS_STALLED
            for i in range(k):
                x[i] = x[i] - damping * (x[i] + a[i])
                y[i] = y[i] - damping * (y[i] + b[i])
            if eta == 0.0:
                shift = 0.5 * (_log_mean_exp_nb(y) - _log_mean_exp_nb(x))
                for i in range(k):
                    x[i] += shift
                    y[i] -= shift
        return x, y, defect, max_iter, STATUS_MAXITER

    @njit(cache=True, nogil=True)
    def _newton_system_nb(s, st, tau, eta, x, y, res, jac):
        k = x.shape[0]
        ev = np.exp(x)
        ew = np.exp(y)
        a = s @ ew
        b = st @ ev
        for i in range(k):
            den_v = eta + b[i]
            den_w = eta + a[i]
            big_v = eta + a[i] + tau / den_v
            big_w = eta + b[i] + tau / den_w
            res[i] = x[i] + np.log(big_v)
            res[k + i] = y[i] + np.log(big_w)
            cv = tau / (den_v * den_v * big_v)
            cw = tau / (den_w * den_w * big_w)
            for j in range(k):
                jac[i, j] = -cv * st[i, j] * ev[j]
                jac[i, k + j] = s[i, j] * ew[j] / big_v
                jac[k + i, j] = st[i, j] * ev[j] / big_w
                jac[k + i, k + j] = -cw * s[i, j] * ew[j]
            jac[i, i] += 1.0
            jac[k + i, k + i] += 1.0

    @njit(cache=True, nogil=True)
    def newton_numba(s, st, tau, eta, x0, y0, tol, max_iter):
        k = x0.shape[0]
        x = x0.copy()
        y = y0.copy()
        res = np.empty(2 * k)
        jac = np.empty((2 * k, 2 * k))
        res_n = np.empty(2 * k)
        jac_n = np.empty((2 * k, 2 * k))
        _newton_system_nb(s, st, tau, eta, x, y, res, jac)
        defect = np.abs(res).max()
        gauge = 1.0 / (2.0 * k)
        for it in range(1, max_iter + 1):
            if defect <= tol:
                return x, y, defect, it - 1, STATUS_OK
            if eta == 0.0:
                for i in range(2 * k):
                    si = 1.0 if i < k else -1.0
                    for j in range(2 * k):
                        sj = 1.0 if j < k else -1.0
                        jac[i, j] += si * sj * gauge
            step = np.linalg.solve(jac, -res)
            scale = 1.0
            ok = False
            xn = x.copy()
            yn = y.copy()
            defect_n = defect
            for _ in range(40):
                for i in range(k):
                    xn[i] = x[i] + scale * step[i]
                    yn[i] = y[i] + scale * step[k + i]
                if eta == 0.0:
                    shift = 0.5 * (_log_mean_exp_nb(yn) - _log_mean_exp_nb(xn))
                    for i in range(k):
                        xn[i] += shift
                        yn[i] -= shift
                _newton_system_nb(s, st, tau, eta, xn, yn, res_n, jac_n)
                defect_n = np.abs(res_n).max()
                if np.isfinite(defect_n) and defect_n < defect:
                    ok = True
                    break
                scale *= 0.5
            if not ok:
                return x, y, defect, it, STATUS_STALLED
            x[:] = xn
            y[:] = yn
            res[:] = res_n
            jac[:, :] = jac_n
            defect = defect_n
        return x, y, defect, max_iter, STATUS_MAXITER

    _NUMBA_KERNELS = {"fixed_point": fixed_point_numba, "newton": newton_numba}
except ImportError as exc:  # pragma: no cover - depends on environment
    _NUMBA_IMPORT_ERROR = exc


def available_backends() -> list:
    names = ["numpy"]
    if _NUMBA_KERNELS is not None:
        names.insert(0, "numba")
    return names


_backend = os.environ.get("DSBM_NS_BACKEND", "").strip().lower() or None
if _backend is None:
    _backend = "numba" if _NUMBA_KERNELS is not None else "numpy"
if _backend not in ("numba", "numpy"):
    raise ValueError(f"DSBM_NS_BACKEND must be 'numba' or 'numpy', got {_backend!r}")
if _backend == "numba" and _NUMBA_KERNELS is None:
    raise ImportError(
        f"DSBM_NS_BACKEND=numba but numba is unavailable: {_NUMBA_IMPORT_ERROR}")


def get_backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    """Switch kernel backend at runtime (used by tests and benchmarks)."""
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and _NUMBA_KERNELS is None:
        raise ImportError(f"numba backend unavailable: {_NUMBA_IMPORT_ERROR}")
    _backend = name


def get_kernels() -> dict:
    """Active kernel set: {'fixed_point': fn, 'newton': fn}."""
    return _NUMBA_KERNELS if _backend == "numba" else _NUMPY_KERNELS
