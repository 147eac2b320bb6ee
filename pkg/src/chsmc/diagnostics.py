"""Per-step monitors, the continuous-dependence experiment and the eps-refinement study."""

from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import MeanMismatch, ParamMismatch
from .field import Field, grad_norm, mean, norm_h, norm_v, norm_vstar, norm_w
from .graphs import moreau_envelope
from .stepper import ModelParams, SimState, prepare_initial_state, run


def energy(state: SimState, p: ModelParams) -> float:
    """``(gamma/2 ell)||theta||^2 + (nu/2)||grad phi||^2 + int (beta_hat_eps + pi_hat)(phi)``.

    Only the gradient part of the V-norm enters: with ``f = 0`` and
    ``A = 0`` this is the quantity the scheme dissipates.
    """
    phi = state.phi.values
    bulk = moreau_envelope(p.graph, p.eps_beta, phi) + p.perturbation.pi_hat(phi)
    return float(
        p.gamma / (2 * p.ell) * norm_h(state.theta) ** 2
        + 0.5 * p.nu * grad_norm(state.phi) ** 2
        + np.sum(bulk) * p.grid.weight
    )


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass: float
    energy: float
    theta_h: float
    phi_v: float
    mu_v: float
    xi_h: float
    zeta_h: float
    dphi_dt_vstar: float
    psi: float

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def record(state: SimState, p: ModelParams, prev: SimState | None = None) -> DiagnosticsRecord:
    """Scalar monitors for ``state``; the time derivative uses ``prev`` (0 without it)."""
    if prev is not None and state.t > prev.t:
        dphi = norm_vstar((state.phi - prev.phi) / (state.t - prev.t))
    else:
        dphi = 0.0
    eta = p.a * state.theta.values + p.b * state.phi.values - p.eta_star_values
    return DiagnosticsRecord(
        t=state.t,
        mass=mean(state.phi),
        energy=energy(state, p),
        theta_h=norm_h(state.theta),
        phi_v=norm_v(state.phi),
        mu_v=norm_v(state.mu),
        xi_h=norm_h(state.xi),
        zeta_h=norm_h(state.zeta),
        dphi_dt_vstar=dphi,
        psi=float(np.sqrt(np.sum(eta**2) * p.grid.weight)),
    )


class DiagnosticsRecorder:
    """Observer collecting a :class:`DiagnosticsRecord` per emitted state."""

    def __init__(self, p: ModelParams):
        self.p = p
        self.records: list[DiagnosticsRecord] = []
        self._prev: SimState | None = None

    def __call__(self, state: SimState) -> None:
        self.records.append(record(state, self.p, self._prev))
        self._prev = state

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def summary(self) -> dict[str, float]:
        """Suprema over the run of the monitored norms."""
        out = {}
        for name in ("theta_h", "phi_v", "mu_v", "xi_h", "zeta_h", "dphi_dt_vstar"):
            out[f"sup_{name}"] = float(self.column(name).max())
        # data-regularity quantity at t = 0; reported, never enforced
        out["initial_mu_v"] = float(self.records[0].mu_v)
        mass = self.column("mass")
        out["mass_drift"] = float(np.max(np.abs(mass - mass[0])))
        e = self.column("energy")
        out["energy_initial"] = float(e[0])
        out["energy_final"] = float(e[-1])
        out["energy_max_increase"] = float(max(0.0, np.diff(e).max())) if e.size > 1 else 0.0
        return out

    def write_csv(self, path: str | Path) -> None:
        write_records(path, self.records)


def write_records(path: str | Path, records: Sequence[DiagnosticsRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(DiagnosticsRecord.columns())
        for r in records:
            w.writerow([repr(float(v)) for v in astuple(r)])


def energy_violations(energies: Sequence[float]) -> np.ndarray:
    """Positive parts of consecutive energy increments."""
    return np.maximum(np.diff(np.asarray(energies, dtype=float)), 0.0)


# -- time norms ---------------------------------------------------------------

def linf_time(values: Sequence[float]) -> float:
    return float(np.max(values)) if len(values) else 0.0


def l2_time(values: Sequence[float], tau: float) -> float:
    """``sqrt(int |v|^2 dt)`` by the trapezoidal rule on samples spaced ``tau`` apart."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return 0.0
    mid = 0.5 * (v[1:] ** 2 + v[:-1] ** 2)
    return float(np.sqrt(tau * np.sum(mid)))


def _l2_time_of_fields(series: Sequence[Field], tau: float, norm) -> float:
    return l2_time([norm(u) for u in series], tau)


# -- continuous dependence ---------------------------------------------------

@dataclass(frozen=True)
class ContDepData:
    theta0: Field
    phi0: Field
    eta_star: Field | None = None
    source: object | None = None


@dataclass(frozen=True)
class ContDepReport:
    lhs: float
    rhs: float
    ratio: float
    lhs_terms: dict
    rhs_terms: dict


def cont_dep_experiment(data1: ContDepData, data2: ContDepData, p: ModelParams) -> ContDepReport:
    """Run both data sets and compare the two sides of the stability estimate.

    ``lhs = ||eta1-eta2||_{Linf H} + ||eta1-eta2||_{L2 V} + ||phi1-phi2||_{Linf V*} + ||phi1-phi2||_{L2 V}``
    and ``rhs`` sums the data differences in V*, H, L2(H) and W.

    Raises
    ------
    ParamMismatch
        Unless ``a, b > 0`` and ``a * ell == b``.
    MeanMismatch
        If the two initial phase fields have different means.
    """
    if not (p.a > 0 and p.b > 0) or abs(p.a * p.ell - p.b) > 1e-12 * max(1.0, abs(p.b)):
        raise ParamMismatch(f"need a, b > 0 and a*ell = b; got a={p.a}, b={p.b}, ell={p.ell}")
    m1, m2 = mean(data1.phi0), mean(data2.phi0)
    if abs(m1 - m2) > 1e-12 * max(1.0, abs(m1)):
        raise MeanMismatch(f"mean(phi01) = {m1} differs from mean(phi02) = {m2}")

    def params_for(d):
        return replace(p, eta_star=d.eta_star if d.eta_star is not None else p.eta_star,
                       source=d.source if d.source is not None else p.source)

    p1, p2 = params_for(data1), params_for(data2)
    tr1 = run(prepare_initial_state(data1.theta0, data1.phi0, p1), p1, keep_states=True)
    tr2 = run(prepare_initial_state(data2.theta0, data2.phi0, p2), p2, keep_states=True)

    def eta(s, q):
        return Field._raw(q.grid, q.a * s.theta.values + q.b * s.phi.values - q.eta_star_values)

    d_eta = [eta(s1, p1) - eta(s2, p2) for s1, s2 in zip(tr1.states, tr2.states)]
    d_phi = [s1.phi - s2.phi for s1, s2 in zip(tr1.states, tr2.states)]
    lhs_terms = {
        "eta_linf_h": linf_time([norm_h(u) for u in d_eta]),
        "eta_l2_v": _l2_time_of_fields(d_eta, p.tau, norm_v),
        "phi_linf_vstar": linf_time([norm_vstar(u) for u in d_phi]),
        "phi_l2_v": _l2_time_of_fields(d_phi, p.tau, norm_v),
    }

    def src(q, t):
        return Field(q.grid, np.broadcast_to(q.source_values(t), q.grid.shape))

    df = [norm_h(src(p1, s.t) - src(p2, s.t)) for s in tr1.states[:-1]]
    es1 = p1.eta_star if p1.eta_star is not None else Field.zeros(p.grid)
    es2 = p2.eta_star if p2.eta_star is not None else Field.zeros(p.grid)
    eta01 = eta(tr1.states[0], p1)
    eta02 = eta(tr2.states[0], p2)
    rhs_terms = {
        "phi0_vstar": norm_vstar(data1.phi0 - data2.phi0),
        "eta0_h": norm_h(eta01 - eta02),
        "f_l2_h": math.sqrt(p.tau * sum(v * v for v in df)),
        "eta_star_w": norm_w(es1 - es2),
    }
    lhs = sum(lhs_terms.values())
    rhs = sum(rhs_terms.values())
    if rhs > 0:
        ratio = lhs / rhs
    else:
        ratio = 0.0 if lhs == 0 else math.inf
    return ContDepReport(lhs, rhs, ratio, lhs_terms, rhs_terms)


# -- eps refinement ------------------------------------------------------------

@dataclass(frozen=True)
class EpsStudyReport:
    eps: tuple[float, ...]
    distances: tuple[float, ...]
    sup_norms: tuple[dict, ...]

    @property
    def strictly_decreasing(self) -> bool:
        d = self.distances
        return all(d[k + 1] < d[k] for k in range(len(d) - 1))


def eps_refinement_study(theta0: Field, phi0: Field, p: ModelParams,
                         eps_values: Sequence[float] = (1e-1, 1e-2, 1e-3),
                         smooth_eps: float = 0.0) -> EpsStudyReport:
    """Run with ``eps_beta = eps_A = eps`` and measure ``||phi_k - phi_{k+1}||_{L2(Q)}``."""
    runs, sups = [], []
    for eps in eps_values:
        q = replace(p, eps_beta=eps, eps_A=eps)
        rec = DiagnosticsRecorder(q)
        tr = run(prepare_initial_state(theta0, phi0, q, smooth_eps), q, [rec], keep_states=True)
        runs.append([s.phi for s in tr.states])
        sups.append(rec.summary())
    dists = []
    for a, b in zip(runs[:-1], runs[1:]):
        dists.append(l2_time([norm_h(u - v) for u, v in zip(a, b)], p.tau))
    return EpsStudyReport(tuple(eps_values), tuple(dists), tuple(sups))
