"""Linearly implicit time stepping of the regularized system.

Per step, with ``N = beta_eps(phi^n) + pi(phi^n)``::

    (th' - th)/tau + ell (ph' - ph)/tau - Lap th' + zeta = f(t_n)
    (ph' - ph)/tau = Lap mu'
    mu' = -nu Lap ph' + N - gamma th' + stab (ph' - ph)

In cosine space each mode ``j`` is a 2x2 linear solve.  Mode 0 of ``ph``
is left untouched, so the mean of ``phi`` is conserved to round-off.

``zeta`` is either lagged (``zeta_scheme="explicit"``, ``A_eps`` at time
``t_n``) or applied afterwards as a backward-Euler substep
``eta' = (I + a tau A_eps)^-1 eta~`` on ``eta = a th + b ph - eta*`` with
``ph`` frozen (``zeta_scheme="implicit"``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .errors import Blowup, MeanOutsideDomain, PotentialInfinite, ValidationError
from .field import Field, Grid, dct, helmholtz_smooth, idct, mean
from .graphs import (
    HilbertOperator,
    MonotoneGraph,
    SmoothPerturbation,
    apply_yosida_operator,
    yosida,
    yosida_operator_resolvent,
)

BLOWUP_THRESHOLD = 1e12

Source = Callable[[float], "Field | np.ndarray | float"]


class SampledSource:
    """Piecewise-constant source from samples; ``f(t)`` uses the last sample time ``<= t``."""

    def __init__(self, times: Sequence[float], fields: Sequence[Field]):
        if len(times) != len(fields) or not times:
            raise ValueError("need matching, nonempty times and fields")
        self.times = np.asarray(times, dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("sample times must be increasing")
        self.fields = list(fields)

    def __call__(self, t: float) -> Field:
        k = int(np.searchsorted(self.times, t + 1e-12 * max(1.0, abs(t)), side="right")) - 1
        return self.fields[max(k, 0)]


@dataclass(frozen=True)
class ModelParams:
    grid: Grid
    ell: float = 1.0
    nu: float = 0.01
    gamma: float = 1.0
    a: float = 1.0
    b: float = 1.0
    eps_beta: float = 1e-2
    eps_A: float = 1e-2
    graph: MonotoneGraph = field(default_factory=lambda: MonotoneGraph("polynomial"))
    perturbation: SmoothPerturbation = field(default_factory=SmoothPerturbation.double_well)
    operator: HilbertOperator = field(default_factory=HilbertOperator.zero)
    eta_star: Field | None = None
    source: Source | None = None
    T: float = 1.0
    tau: float = 1e-3
    stabilization: float = 0.0
    zeta_scheme: str = "implicit"

    def __post_init__(self):
        for name in ("ell", "nu", "gamma", "tau"):
            if not getattr(self, name) > 0:
                raise ValidationError(name, "must be strictly positive")
        for name in ("eps_beta", "eps_A"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValidationError(name, f"must lie in (0, 1], got {v}")
        if not self.T >= self.tau * (1 - 1e-12):
            raise ValidationError("T", "must be at least tau")
        if self.stabilization < 0:
            raise ValidationError("stabilization", "must be non-negative")
        if self.zeta_scheme not in ("implicit", "explicit"):
            raise ValidationError("zeta_scheme", "must be 'implicit' or 'explicit'")
        if self.zeta_scheme == "implicit" and self.operator.kind != "zero" and not self.a > 0:
            raise ValidationError("a", "implicit zeta treatment needs a > 0")
        if self.eta_star is not None and self.eta_star.grid != self.grid:
            raise ValidationError("eta_star", "grid mismatch")

    @property
    def eta_star_values(self) -> np.ndarray:
        if self.eta_star is None:
            return np.zeros(self.grid.shape)
        return self.eta_star.values

    def source_values(self, t: float) -> np.ndarray | float:
        if self.source is None:
            return 0.0
        f = self.source(t)
        return f.values if isinstance(f, Field) else f

    @property
    def n_steps(self) -> int:
        return max(1, int(math.ceil(self.T / self.tau - 1e-9)))

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class SimState:
    t: float
    theta: Field
    phi: Field
    mu: Field
    xi: Field
    zeta: Field
    m0: float
    step: int = 0
    # cosine coefficients of phi carried between steps so mode 0 is never
    # re-derived from physical samples
    phi_hat: np.ndarray | None = field(default=None, repr=False)

    @property
    def grid(self) -> Grid:
        return self.phi.grid


def eta_of(theta: Field, phi: Field, p: ModelParams) -> Field:
    """Shifted variable ``a theta + b phi - eta*``."""
    return Field(p.grid, p.a * theta.values + p.b * phi.values - p.eta_star_values)


def _mu_values(theta: np.ndarray, phi: np.ndarray, xi: np.ndarray, p: ModelParams) -> np.ndarray:
    lap_phi = idct(-p.grid.lam * dct(phi))
    return -p.nu * lap_phi + xi + p.perturbation.pi(phi) - p.gamma * theta


def _assemble(t, theta, phi, zeta, m0, step, p, phi_hat=None) -> SimState:
    if phi_hat is None:
        phi_hat = dct(phi)
    xi = yosida(p.graph, p.eps_beta, phi)
    mu = p.nu * idct(p.grid.lam * phi_hat) + xi + p.perturbation.pi(phi) - p.gamma * theta
    g = p.grid
    w = Field._raw
    return SimState(t, w(g, theta), w(g, phi), w(g, mu), w(g, xi), w(g, zeta), m0, step, phi_hat)


def compute_mu(state: SimState, p: ModelParams) -> Field:
    """``mu = -nu Lap phi + beta_eps(phi) + pi(phi) - gamma theta``."""
    xi = yosida(p.graph, p.eps_beta, state.phi.values)
    return Field(p.grid, _mu_values(state.theta.values, state.phi.values, xi, p))


def prepare_initial_state(theta0: Field, phi0: Field, p: ModelParams, smooth_eps: float = 0.0) -> SimState:
    """Smooth the data with ``(I - eps Lap)^-1`` and build the state at ``t = 0``.

    Raises
    ------
    PotentialInfinite
        If ``beta_hat(phi0)`` is infinite somewhere (checked first).
    MeanOutsideDomain
        If ``mean(phi0)`` is not in the interior of ``D(beta)``.
    """
    if theta0.grid != p.grid or phi0.grid != p.grid:
        raise ValidationError("grid", "initial data live on a different grid")
    if not np.all(np.isfinite(p.graph.beta_hat(phi0.values))):
        raise PotentialInfinite(f"beta_hat(phi0) is infinite for the {p.graph.kind} graph")
    m0 = mean(phi0)
    if not p.graph.in_interior(m0):
        raise MeanOutsideDomain(f"m0 = {m0} is not in int D(beta) for the {p.graph.kind} graph")
    theta = helmholtz_smooth(theta0, smooth_eps).values
    phi = helmholtz_smooth(phi0, smooth_eps).values
    eta = eta_of(Field(p.grid, theta), Field(p.grid, phi), p)
    zeta = apply_yosida_operator(p.operator, p.eps_A, eta).values
    return _assemble(0.0, theta, phi, zeta, mean(Field(p.grid, phi)), 0, p)


def step(state: SimState, p: ModelParams) -> SimState:
    """Advance one time step of size ``p.tau``.

    Raises
    ------
    Blowup
        If any field leaves ``[-1e12, 1e12]`` or becomes non-finite.
    """
    g = p.grid
    lam, tau = g.lam, p.tau
    th, ph = state.theta.values, state.phi.values
    f = p.source_values(state.t)
    zeta_lag = state.zeta.values if p.zeta_scheme == "explicit" else 0.0

    nonlin = state.xi.values + p.perturbation.pi(ph)
    ph_hat = state.phi_hat if state.phi_hat is not None else dct(ph)
    r1 = dct(th + tau * (f - zeta_lag)) + p.ell * ph_hat
    r2 = ph_hat - tau * lam * (dct(nonlin) - p.stabilization * ph_hat)
    th_hat, ph_hat_new = kernels.solve_modes(lam, tau, p.ell, p.nu, p.gamma, p.stabilization, r1, r2)
    ph_hat_new.flat[0] = ph_hat.flat[0]
    th_new = idct(th_hat)
    ph_new = idct(ph_hat_new)

    if p.operator.kind == "zero":
        zeta = np.zeros(g.shape)
    elif p.zeta_scheme == "implicit":
        eta_new = Field._raw(g, p.a * th_new + p.b * ph_new - p.eta_star_values)
        s = p.a * tau
        eta_after = yosida_operator_resolvent(p.operator, p.eps_A, s, eta_new)
        zeta = (eta_new.values - eta_after.values) / s
        th_new = th_new + (eta_after.values - eta_new.values) / p.a
    else:
        eta_new = Field._raw(g, p.a * th_new + p.b * ph_new - p.eta_star_values)
        zeta = apply_yosida_operator(p.operator, p.eps_A, eta_new).values

    for name, arr in (("theta", th_new), ("phi", ph_new), ("zeta", zeta)):
        # written so that NaN also fails
        if not np.max(np.abs(arr)) <= BLOWUP_THRESHOLD:
            raise Blowup(f"{name} blew up at step {state.step + 1}; reduce tau")

    k = state.step + 1
    return _assemble(k * tau, th_new, ph_new, zeta, state.m0, k, p, ph_hat_new)


@dataclass
class Trajectory:
    final: SimState
    steps: int
    states: list[SimState] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])


Observer = Callable[[SimState], None]


def run(state0: SimState, p: ModelParams, observers: Sequence[Observer] = (),
        stride: int = 1, keep_states: bool = False) -> Trajectory:
    """Step from ``state0`` until ``t >= T``.

    Observers see the initial state, every ``stride``-th state and the
    final state.  With ``keep_states`` the same states are stored on the
    returned trajectory.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    n = p.n_steps - state0.step
    traj = Trajectory(state0, 0)

    def emit(s):
        for obs in observers:
            obs(s)
        if keep_states:
            traj.states.append(s)

    s = state0
    emit(s)
    for k in range(1, n + 1):
        s = step(s, p)
        if k % stride == 0 or k == n:
            emit(s)
    traj.final = s
    traj.steps = n
    return traj
