"""Fast property checks of every module, run by ``chsmc selftest``."""

from __future__ import annotations

import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import field as fld
from . import graphs
from .diagnostics import DiagnosticsRecorder, energy_violations
from .field import Field, Grid
from .smc import SmcConfig, run_smc_experiment
from .stepper import ModelParams, prepare_initial_state, run


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _zero_mean_field(g: Grid, rng) -> Field:
    v = rng.standard_normal(g.shape)
    return Field(g, v - v.mean())


def check_neumann_inverse(rng) -> tuple[bool, str]:
    worst = sym = 0.0
    for n in (32, 64):
        g = Grid.uniform(n)
        for _ in range(10):
            u, v = _zero_mean_field(g, rng), _zero_mean_field(g, rng)
            back = fld.laplacian(fld.inv_neumann_laplacian(u))
            worst = max(worst, fld.norm_h(back + u) / fld.norm_h(u))
            a = fld.inner_h(u, fld.inv_neumann_laplacian(v))
            b = fld.inner_h(fld.inv_neumann_laplacian(u), v)
            sym = max(sym, abs(a - b))
    return worst <= 1e-10 and sym <= 1e-12, f"rel err {worst:.1e}, asym {sym:.1e}"


def check_yosida(rng) -> tuple[bool, str]:
    eps = 0.05
    bad = []
    for kind in graphs.GRAPH_KINDS:
        g = graphs.MonotoneGraph(kind)
        r, s = rng.uniform(-3, 3, 1000), rng.uniform(-3, 3, 1000)
        br, bs = graphs.yosida(g, eps, r), graphs.yosida(g, eps, s)
        jr, js = graphs.resolvent(g, eps, r), graphs.resolvent(g, eps, s)
        d = r - s
        ok = np.all((br - bs) * d >= -1e-12)
        ok &= np.all(np.abs(br - bs) <= np.abs(d) / eps * (1 + 1e-9) + 1e-12)
        ok &= np.all(np.abs(jr - js) <= np.abs(d) * (1 + 1e-12) + 1e-14)
        if not ok:
            bad.append(kind)
    return not bad, "all kinds ok" if not bad else f"failed: {bad}"


def check_mass(rng) -> tuple[bool, str]:
    g = Grid.uniform(64)
    p = ModelParams(g, nu=1e-3, T=0.1, tau=1e-4)
    phi0 = Field(g, 0.1 + 0.05 * rng.standard_normal(g.shape))
    rec = DiagnosticsRecorder(p)
    run(prepare_initial_state(Field.zeros(g), phi0, p), p, [rec], stride=10)
    drift = rec.summary()["mass_drift"]
    inc = energy_violations(rec.column("energy")).max()
    return drift <= 1e-12 and inc <= 1e-8, f"mass drift {drift:.1e}, energy rise {inc:.1e}"


def check_linear_modes(rng) -> tuple[bool, str]:
    g = Grid.uniform(32)
    p = ModelParams(g, nu=0.02, gamma=0.7, ell=1.3, graph=graphs.MonotoneGraph("zero"),
                    perturbation=graphs.SmoothPerturbation.zero(), T=20 * 1e-3, tau=1e-3)
    th0, ph0 = Field(g, rng.standard_normal(g.shape)), Field(g, rng.standard_normal(g.shape))
    final = run(prepare_initial_state(th0, ph0, p), p).final
    lam, tau = g.lam, p.tau
    x = np.stack([fld.dct(th0.values), fld.dct(ph0.values)])
    for _ in range(p.n_steps):
        nxt = np.empty_like(x)
        for j in range(g.size):
            m = np.array([[1 + tau * lam[j], p.ell], [-tau * lam[j] * p.gamma, 1 + tau * p.nu * lam[j] ** 2]])
            nxt[:, j] = np.linalg.solve(m, [x[0, j] + p.ell * x[1, j], x[1, j]])
        x = nxt
    err = max(np.abs(fld.dct(final.theta.values) - x[0]).max(), np.abs(fld.dct(final.phi.values) - x[1]).max())
    return err <= 1e-12, f"max mode error {err:.1e}"


def check_snapshot(rng) -> tuple[bool, str]:
    g = Grid((8, 5), (1.0, 0.5))
    u = Field(g, rng.standard_normal(g.shape))
    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "u.chsf"
        fld.write_snapshot(path, u, 0.25)
        v, t = fld.read_snapshot(path)
    ok = t == 0.25 and v.grid == g and np.array_equal(v.values, u.values)
    return ok, "round trip exact" if ok else "mismatch"


def check_on_manifold(rng) -> tuple[bool, str]:
    g = Grid.uniform(32)
    p = ModelParams(g, nu=0.05, eps_A=1e-5, T=0.02, tau=1e-4)
    phi0 = Field.cosine(g, 1, 0.2)
    rep = run_smc_experiment(SmcConfig(5.0, p), -phi0, phi0)
    worst = float(rep.psi_series.max())
    return worst <= rep.tol_abs, f"max psi {worst:.1e} (tol {rep.tol_abs:.0e})"


CHECKS: dict[str, Callable] = {
    "field: Neumann inverse": check_neumann_inverse,
    "graphs: Yosida properties": check_yosida,
    "stepper: mass and energy": check_mass,
    "stepper: linear mode oracle": check_linear_modes,
    "field: CHSF round trip": check_snapshot,
    "smc: on-manifold start": check_on_manifold,
}


def run_all(seed: int = 0) -> list[CheckResult]:
    out = []
    for name, fn in CHECKS.items():
        rng = np.random.default_rng(seed)
        t0 = time.perf_counter()
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # a crash is a failed check, not a crashed selftest
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))
    return out


def format_table(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  result  time    detail"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.seconds:5.2f}s  {r.detail}")
    return "\n".join(lines)
