"""Sliding-mode experiments for the feedback law ``A = rho * Sign``.

With ``a = 1`` and ``ell = b`` the deviation ``eta = theta + b phi - eta*``
obeys ``eta_t - Lap eta + rho sigma = g`` with
``g = f - b Lap phi + Lap eta*``.  Any ``rho`` above
``rho* = c^2 + 2c + (2/T) psi_0`` (``c`` bounding ``||g|| / (1 + sqrt(rho))``)
drives ``psi = ||eta||_H`` to zero before ``T``.  Here ``c`` is measured
from the simulated trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .field import Field, dct, idct, norm_h
from .graphs import HilbertOperator
from .stepper import ModelParams, SimState, Trajectory, prepare_initial_state, run

DEFAULT_TOL_REL = 1e-3
DEFAULT_SWEEP = (1.2, 1.2 * (8 / 1.2) ** 0.25, 1.2 * (8 / 1.2) ** 0.5, 1.2 * (8 / 1.2) ** 0.75, 8.0)


def psi(state: SimState, p: ModelParams) -> float:
    """``||a theta + b phi - eta*||_H``."""
    eta = p.a * state.theta.values + p.b * state.phi.values - p.eta_star_values
    return float(np.sqrt(np.sum(eta**2) * p.grid.weight))


def rho_star(c_hat: float, T: float, theta0: Field, phi0: Field, eta_star: Field | None, b: float) -> float:
    if c_hat < 0 or T <= 0:
        raise ValueError("need c_hat >= 0 and T > 0")
    eta0 = theta0 + b * phi0
    if eta_star is not None:
        eta0 = eta0 - eta_star
    return c_hat**2 + 2 * c_hat + 2.0 / T * norm_h(eta0)


def g_norm(state: SimState, p: ModelParams) -> float:
    """``||f(t) - b Lap phi + Lap eta*||_H``."""
    lam = p.grid.lam
    g = -lam * (-p.b * dct(state.phi.values) + dct(p.eta_star_values))
    g = idct(g) + p.source_values(state.t)
    return float(np.sqrt(np.sum(np.broadcast_to(g, p.grid.shape) ** 2) * p.grid.weight))


def estimate_c_hat(trajectory: Trajectory | Sequence[SimState], p: ModelParams, rho: float) -> float:
    """``max_t ||f - b Lap phi + Lap eta*||_H / (1 + sqrt(rho))`` over stored states."""
    if rho < 0:
        raise ValueError("rho must be non-negative")
    states = trajectory.states if isinstance(trajectory, Trajectory) else trajectory
    if not states:
        raise ValueError("trajectory has no stored states")
    return max(g_norm(s, p) for s in states) / (1.0 + math.sqrt(rho))


def reaching_time(psi_series: Sequence[tuple[float, float]], tol_abs: float) -> float | None:
    """Earliest sampled ``t`` with ``psi <= tol_abs`` at every later sample too."""
    if not psi_series:
        raise ValueError("empty series")
    t_star = None
    for t, v in reversed(psi_series):
        if v > tol_abs:
            break
        t_star = t
    return t_star


@dataclass(frozen=True)
class SmcConfig:
    """Sliding-mode setup; forces ``a = 1``, ``ell = b`` and ``A = rho Sign``."""

    rho: float
    base: ModelParams
    tol_rel: float = DEFAULT_TOL_REL
    c_hat: float | None = None
    # overrides tol_rel * max(psi0, 1) when given
    tol_abs: float | None = None

    def __post_init__(self):
        if self.rho < 0:
            raise ValidationError("rho", "must be non-negative")
        if not self.base.b > 0:
            raise ValidationError("b", "sliding mode needs b > 0")
        if not self.tol_rel > 0 or (self.tol_abs is not None and not self.tol_abs > 0):
            raise ValidationError("tol", "must be positive")

    @property
    def b(self) -> float:
        return self.base.b

    @property
    def params(self) -> ModelParams:
        return replace(self.base, a=1.0, ell=self.b, operator=HilbertOperator.from_name("sign", self.rho))

    def with_rho(self, rho: float) -> "SmcConfig":
        return replace(self, rho=rho)


@dataclass
class ReachingReport:
    rho: float
    psi0: float
    tol_abs: float
    times: np.ndarray
    psi_series: np.ndarray
    sigma_norms: np.ndarray
    g_norms: np.ndarray
    t_star: float | None
    c_hat: float
    a0: float
    b0: float
    bound: float | None
    monotone_before: bool
    stays_after: bool
    inequality_max_excess: float
    slack: float
    extra: dict = field(default_factory=dict)

    @property
    def inequality_holds(self) -> bool:
        return self.inequality_max_excess <= self.slack

    def summary(self) -> dict:
        return {
            "rho": self.rho,
            "psi0": self.psi0,
            "tol_abs": self.tol_abs,
            "t_star": "none" if self.t_star is None else self.t_star,
            "bound": "none" if self.bound is None else self.bound,
            "c_hat": self.c_hat,
            "a0": self.a0,
            "b0": self.b0,
            "monotone_before": self.monotone_before,
            "stays_after": self.stays_after,
            "inequality_max_excess": self.inequality_max_excess,
            "inequality_slack": self.slack,
            "inequality_holds": self.inequality_holds,
            "psi_final": float(self.psi_series[-1]),
            **self.extra,
        }


class _SmcObserver:
    def __init__(self, p: ModelParams, rho: float):
        self.p, self.rho = p, rho
        self.t, self.psi, self.sigma, self.g = [], [], [], []

    def __call__(self, s: SimState) -> None:
        self.t.append(s.t)
        self.psi.append(psi(s, self.p))
        # zeta = rho * sigma
        self.sigma.append(norm_h(s.zeta) / self.rho if self.rho > 0 else 0.0)
        self.g.append(g_norm(s, self.p))


def run_smc_experiment(cfg: SmcConfig, theta0: Field, phi0: Field, smooth_eps: float = 0.0) -> ReachingReport:
    """Simulate the controlled system and check the reaching-time claims.

    Records ``psi`` and ``||sigma||`` every step.  ``c_hat`` is measured
    post hoc and used for ``a0 = b0 = c_hat`` in the bound
    ``2 psi0 / (rho - a0^2 - 2 b0)``.  The discrete inequality
    ``psi' + rho ||sigma||^2 <= c_hat (sqrt(rho) + 1)`` is checked with
    forward differences and slack ``10 tau (1 + rho)``.
    """
    p = cfg.params
    state0 = prepare_initial_state(theta0, phi0, p, smooth_eps)
    obs = _SmcObserver(p, cfg.rho)
    run(state0, p, [obs])
    t = np.array(obs.t)
    ps = np.array(obs.psi)
    sig = np.array(obs.sigma)
    gn = np.array(obs.g)
    psi0 = float(ps[0])
    tol_abs = cfg.tol_abs if cfg.tol_abs is not None else cfg.tol_rel * max(psi0, 1.0)
    if tol_abs < 10 * p.eps_A:
        raise ValidationError("tol", f"absolute tolerance {tol_abs:.3g} must be >= 10*eps_A = {10 * p.eps_A:.3g}")

    c_hat = float(gn.max() / (1.0 + math.sqrt(cfg.rho)))
    a0 = b0 = c_hat
    denom = cfg.rho - a0**2 - 2 * b0
    bound = 2 * psi0 / denom if denom > 0 else None
    series = list(zip(t.tolist(), ps.tolist()))
    t_star = reaching_time(series, tol_abs)

    slack = 10 * p.tau * (1 + cfg.rho)
    dpsi = np.diff(ps)
    if t_star is None:
        before = np.ones(dpsi.size, dtype=bool)
        after_ok = False
    else:
        k_star = int(np.searchsorted(t, t_star))
        before = np.arange(dpsi.size) < k_star
        after_ok = bool(np.all(ps[k_star:] <= tol_abs))
    monotone = bool(np.all(dpsi[before] <= slack))

    # implicit zeta is evaluated at the new state, so pair the step with sigma^{n+1}
    sig_step = sig[1:] if p.zeta_scheme == "implicit" else sig[:-1]
    lhs = dpsi / p.tau + cfg.rho * sig_step**2
    excess = float(np.max(lhs - c_hat * (math.sqrt(cfg.rho) + 1))) if lhs.size else 0.0

    return ReachingReport(
        rho=cfg.rho, psi0=psi0, tol_abs=tol_abs, times=t, psi_series=ps, sigma_norms=sig,
        g_norms=gn, t_star=t_star, c_hat=c_hat, a0=a0, b0=b0, bound=bound,
        monotone_before=monotone, stays_after=after_ok,
        inequality_max_excess=excess, slack=slack,
    )


@dataclass
class SweepReport:
    rho_star: float
    c_hat_pilot: float
    factors: tuple[float, ...]
    reports: list[ReachingReport]

    @property
    def t_stars(self) -> list[float | None]:
        return [r.t_star for r in self.reports]

    @property
    def non_increasing(self) -> bool:
        ts = self.t_stars
        if any(v is None for v in ts):
            return False
        return all(b <= a + 1e-12 for a, b in zip(ts, ts[1:]))


def pilot_c_hat(cfg: SmcConfig, theta0: Field, phi0: Field, smooth_eps: float = 0.0) -> float:
    """``c_hat`` from an uncontrolled (``rho = 0``) run of the same data."""
    p = cfg.with_rho(0.0).params
    obs = _SmcObserver(p, 0.0)
    run(prepare_initial_state(theta0, phi0, p, smooth_eps), p, [obs])
    return float(max(obs.g))


def rho_sweep(cfg: SmcConfig, theta0: Field, phi0: Field, factors: Sequence[float] = DEFAULT_SWEEP,
              smooth_eps: float = 0.0) -> SweepReport:
    """Estimate ``rho*`` from a pilot run and simulate at ``factor * rho*``."""
    c0 = cfg.c_hat if cfg.c_hat is not None else pilot_c_hat(cfg, theta0, phi0, smooth_eps)
    p = cfg.params
    rs = rho_star(c0, p.T, theta0, phi0, p.eta_star, cfg.b)
    reports = [run_smc_experiment(cfg.with_rho(k * rs), theta0, phi0, smooth_eps) for k in factors]
    return SweepReport(rs, c0, tuple(factors), reports)
