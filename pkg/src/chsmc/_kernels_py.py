"""Pure NumPy versions of the hot loops.

Used when the compiled extension is missing or ``CHSMC_PURE=1`` is set.
The compiled module in ``_kernels.pyx`` must agree with these to round-off.
"""

import numpy as np

ZERO, POLYNOMIAL, OBSTACLE, LOGARITHMIC = 0, 1, 2, 3

RESIDUAL_TOL = 1e-12
MAX_ITER = 200
_ULP = np.finfo(float).eps


def _residual(kind, eps, x, r):
    if kind == POLYNOMIAL:
        return x + eps * x**3 - r, 1.0 + 3.0 * eps * x**2
    # logarithmic
    return x + eps * (np.log1p(x) - np.log1p(-x)) - r, 1.0 + 2.0 * eps / ((1.0 - x) * (1.0 + x))


def resolvent(kind, eps, r):
    """Solve ``x + eps*beta(x) = r`` samplewise.

    Returns ``(x, nfail)`` where ``nfail`` counts samples whose safeguarded
    Newton iteration did not meet the stopping test.
    """
    r = np.array(r, dtype=float)
    if kind == ZERO:
        return r, 0
    if kind == OBSTACLE:
        return np.clip(r, -1.0, 1.0), 0

    # 0 in beta(0) puts the root between 0 and r
    lo = np.minimum(r, 0.0)
    hi = np.maximum(r, 0.0)
    if kind == POLYNOMIAL:
        a = np.minimum(np.abs(r), np.cbrt(np.abs(r) / eps))
        x = np.copysign(a, r)
    else:
        lo = np.maximum(lo, -1.0)
        hi = np.minimum(hi, 1.0)
        x = 0.5 * (lo + hi)

    active = np.flatnonzero(r != 0.0)
    x = x.ravel()
    lo = lo.ravel()
    hi = hi.ravel()
    rf = r.ravel()
    x[rf == 0.0] = 0.0
    for _ in range(MAX_ITER):
        if active.size == 0:
            break
        xa = x[active]
        h, dh = _residual(kind, eps, xa, rf[active])
        pos = h > 0
        hi[active[pos]] = xa[pos]
        lo[active[~pos]] = xa[~pos]
        step = h / dh
        xn = xa - step
        la, ha = lo[active], hi[active]
        bad = ~((xn > la) & (xn < ha))
        xn[bad] = 0.5 * (la[bad] + ha[bad])
        scale = np.maximum(np.abs(xa), 1e-300)
        done = (
            # relative for |r| < 1 so tiny inputs are not accepted at x = 0
            (np.abs(h) <= RESIDUAL_TOL * np.minimum(1.0, np.abs(rf[active])))
            | (np.abs(step) <= 4 * _ULP * scale)
            | (ha - la <= 4 * _ULP * np.maximum(np.abs(la), np.abs(ha)))
        )
        upd = ~done
        x[active[upd]] = xn[upd]
        active = active[upd]
    return x.reshape(r.shape), int(active.size)


def solve_modes(lam, tau, ell, nu, gamma, stab, r1, r2):
    """Per-mode 2x2 solve of the linearly implicit update.

    Rows: ``(1 + tau lam) th + ell ph = r1`` and
    ``-tau lam gamma th + (1 + tau lam (nu lam + stab)) ph = r2``.
    """
    tl = tau * lam
    m11 = 1.0 + tl
    m22 = 1.0 + tl * (nu * lam + stab)
    det = m11 * m22 + ell * gamma * tl
    th = (m22 * r1 - ell * r2) / det
    ph = (m11 * r2 + gamma * tl * r1) / det
    return th, ph
