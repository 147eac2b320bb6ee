"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or ``python tests/test_acceptance.py``.
"""

import math
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
import scipy.fft

from chsmc import diagnostics as dg
from chsmc import field as fld
from chsmc import graphs, smc
from chsmc.config import load_config, preset_path
from chsmc.field import Field, Grid
from chsmc.graphs import MonotoneGraph, SmoothPerturbation
from chsmc.stepper import ModelParams, prepare_initial_state, run

sys.path.insert(0, str(Path(__file__).parent))
from conftest import ACCEPTANCE_LINES  # noqa: E402


def report(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def preset(name):
    return load_config(preset_path(name))


class Column:
    def __init__(self, fn):
        self.fn, self.values = fn, []

    def __call__(self, s):
        self.values.append(self.fn(s))


# 1 -------------------------------------------------------------------------------

def test_mass_conservation():
    cfg = preset("doublewell_1d").with_(T=1.0, tau=1e-4)
    p = cfg.model_params()
    assert p.n_steps == 10_000
    mass = Column(lambda s: fld.mean(s.phi))
    t0 = time.perf_counter()
    run(prepare_initial_state(*cfg.initial_data(), p), p, [mass], stride=1)
    wall = time.perf_counter() - t0
    m = np.array(mass.values)
    drift = float(np.abs(m - m[0]).max())
    report(1, len(m) == 10_001 and drift <= 1e-12 and wall < 10,
           f"max |m - m0| = {drift:.2e} over {len(m) - 1} steps, {wall:.1f} s")


# 2 -------------------------------------------------------------------------------

# an increment this small is indistinguishable from summation round-off
ROUNDOFF = 1e-13


def test_energy_dissipation():
    cfg = preset("doublewell_1d").with_(operator="zero", source_mean=0.0, source_amp=0.0, source_noise=0.0)
    worst, t0 = [], time.perf_counter()
    for tau in (1e-4, 5e-5, 2.5e-5):
        p = cfg.with_(tau=tau).model_params()
        e = Column(lambda s, p=p: dg.energy(s, p))
        run(prepare_initial_state(*cfg.initial_data(), p), p, [e], stride=1)
        worst.append(float(dg.energy_violations(e.values).max()))
        floor = ROUNDOFF * (1 + abs(e.values[0]))
    wall = time.perf_counter() - t0
    shrinks = worst[2] <= worst[0] / 4 or worst[0] <= floor
    ok = worst[0] <= 1e-8 and shrinks and wall < 30
    report(2, ok, "max violations " + ", ".join(f"{v:.1e}" for v in worst) + f" (floor {floor:.0e}), {wall:.1f} s")


# 3 -------------------------------------------------------------------------------

def test_neumann_operator():
    rng = np.random.default_rng(2024)
    rel, sym = 0.0, 0.0
    for n in (64, 128, 256):
        g = Grid.uniform(n)
        for _ in range(100):
            u = rng.standard_normal(n)
            v = rng.standard_normal(n)
            u, v = Field(g, u - u.mean()), Field(g, v - v.mean())
            u, v = u / fld.norm_h(u), v / fld.norm_h(v)
            back = fld.laplacian(fld.inv_neumann_laplacian(u))
            rel = max(rel, fld.norm_h(back + u) / fld.norm_h(u))
            sym = max(sym, abs(fld.inner_h(u, fld.inv_neumann_laplacian(v))
                               - fld.inner_h(fld.inv_neumann_laplacian(u), v)))
    report(3, rel <= 1e-10 and sym <= 1e-12, f"max rel error {rel:.1e}, max symmetry defect {sym:.1e}")


# 4 -------------------------------------------------------------------------------

def test_yosida_properties():
    rng = np.random.default_rng(7)
    failures, t0 = [], time.perf_counter()
    worst_fd = 0.0
    for kind in ("zero", "polynomial", "obstacle", "logarithmic"):
        g = MonotoneGraph(kind)
        lo, hi, _ = g.domain
        for eps in (1e-3, 1e-2, 1e-1, 1.0):
            r, s = rng.uniform(-3, 3, 2500), rng.uniform(-3, 3, 2500)
            br, bs = graphs.yosida(g, eps, r), graphs.yosida(g, eps, s)
            jr, js = graphs.resolvent(g, eps, r), graphs.resolvent(g, eps, s)
            d = r - s
            scale = 1e-12 * (1 + np.abs(r) + np.abs(s)) / eps
            checks = {
                "monotone": (br - bs) * d >= -scale * np.abs(d),
                "lipschitz": np.abs(br - bs) <= np.abs(d) / eps + scale,
                "nonexpansive": np.abs(jr - js) <= np.abs(d) + 1e-12 * (1 + np.abs(r) + np.abs(s)),
            }
            # minimal section bound, sampled inside D(beta)
            q = rng.uniform(max(lo, -3), min(hi, 3), 2500)
            q = q[g.in_domain(q)]
            checks["minimal_section"] = np.abs(graphs.yosida(g, eps, q)) <= np.abs(g.minimal_section(q)) * (1 + 1e-10) + 1e-12
            h = 1e-6
            fd = (graphs.moreau_envelope(g, eps, r + h) - graphs.moreau_envelope(g, eps, r - h)) / (2 * h)
            err = np.abs(fd - br)
            worst_fd = max(worst_fd, float(err.max()))
            checks["envelope"] = err <= 1e-5
            failures += [f"{kind}/{eps}/{name}" for name, ok in checks.items() if not np.all(ok)]
    wall = time.perf_counter() - t0
    report(4, not failures and wall < 5,
           f"4 kinds x 1e4 pairs, envelope FD error {worst_fd:.1e}, {wall:.1f} s"
           + (f", failed: {failures}" if failures else ""))


# 5 -------------------------------------------------------------------------------

def smc_setup(cfg):
    theta0, phi0 = cfg.initial_data()
    base = cfg.model_params()
    psi0 = smc.psi(prepare_initial_state(theta0, phi0, smc.SmcConfig(1.0, base).params), base)
    return theta0, phi0, base, psi0


def test_sliding_mode_reaching():
    cfg = preset("smc_reaching_1d").with_(eps_A=1e-5, b=1.0, ell=1.0)
    t0 = time.perf_counter()
    theta0, phi0, base, psi0 = smc_setup(cfg)
    sc = smc.SmcConfig(0.0, base, tol_abs=1e-3 * psi0)
    sw = smc.rho_sweep(sc, theta0, phi0, factors=(1.2, 2.0, 4.0, 8.0))
    wall = time.perf_counter() - t0
    reps = sw.reports
    exists = all(r.t_star is not None for r in reps)
    within = exists and all(r.bound is not None and r.t_star <= 1.2 * r.bound for r in reps)
    ok = (exists and sw.non_increasing and within and all(r.monotone_before for r in reps)
          and all(r.stays_after for r in reps) and wall < 60)
    ts = ", ".join("none" if r.t_star is None else f"{r.t_star:.4f}" for r in reps)
    bounds = ", ".join("none" if r.bound is None else f"{r.bound:.4f}" for r in reps)
    report(5, ok, f"rho* = {sw.rho_star:.3f}, T* = [{ts}], bounds = [{bounds}], {wall:.1f} s")


# 6 -------------------------------------------------------------------------------

def test_on_manifold_start():
    cfg = preset("smc_reaching_1d").with_(on_manifold=True)
    theta0, phi0, base, psi0 = smc_setup(cfg)
    sc = smc.SmcConfig(0.0, base, tol_rel=cfg.tol_rel)
    sw = smc.rho_sweep(sc, theta0, phi0, factors=(1.2, 8.0))
    worst = max(float(r.psi_series.max()) for r in sw.reports)
    tol = sw.reports[0].tol_abs
    ok = psi0 <= 1e-15 and worst <= tol and all(r.t_star == 0.0 for r in sw.reports)
    report(6, ok, f"psi0 = {psi0:.1e}, max psi = {worst:.1e} <= tol {tol:.0e}")


# 7 -------------------------------------------------------------------------------

def test_continuous_dependence():
    cfg = preset("contdep_1d")
    p = cfg.model_params()
    theta0, phi0 = cfg.initial_data()
    base = dg.ContDepData(theta0, phi0)
    t0 = time.perf_counter()
    same = dg.cont_dep_experiment(base, base, p)
    ratios = []
    for d in (1e-2, 1e-3, 1e-4):
        pert = dg.ContDepData(theta0 + Field.cosine(p.grid, 1, d), phi0)
        ratios.append(dg.cont_dep_experiment(base, pert, p).ratio)
    wall = time.perf_counter() - t0
    ratios = np.array(ratios)
    spread = ratios.max() / ratios.min()
    ok = np.all(np.isfinite(ratios)) and spread <= 3 and same.ratio == 0 and wall < 60
    report(7, ok, f"ratios {np.array2string(ratios, precision=3)}, spread {spread:.3f}, "
                  f"identical ratio {same.ratio}, {wall:.1f} s")


# 8 -------------------------------------------------------------------------------

def test_eps_refinement():
    cfg = preset("contdep_1d")
    rep = dg.eps_refinement_study(*cfg.initial_data(), cfg.model_params(), (1e-1, 1e-2, 1e-3))
    report(8, rep.strictly_decreasing, "distances " + ", ".join(f"{v:.2e}" for v in rep.distances))


# 9 -------------------------------------------------------------------------------

def test_linear_oracle():
    n, L, tau, steps = 64, 1.0, 1e-3, 100
    nu, gamma, ell = 0.02, 0.7, 1.3
    g = Grid.uniform(n, L)
    p = ModelParams(g, nu=nu, gamma=gamma, ell=ell, graph=MonotoneGraph("zero"),
                    perturbation=SmoothPerturbation.zero(), tau=tau, T=steps * tau)
    assert p.operator.kind == "zero"
    rng = np.random.default_rng(9)
    th0, ph0 = rng.standard_normal(n), rng.standard_normal(n)
    final = run(prepare_initial_state(Field(g, th0), Field(g, ph0), p), p).final

    # independent oracle: scipy DCT, eigenvalues from the formula, one dense solve per mode and step
    lam = (np.pi * np.arange(n) / L) ** 2
    th, ph = scipy.fft.dct(th0, norm="ortho"), scipy.fft.dct(ph0, norm="ortho")
    for _ in range(steps):
        for j in range(n):
            m = np.array([[1 + tau * lam[j], ell], [-tau * lam[j] * gamma, 1 + tau * nu * lam[j] ** 2]])
            th[j], ph[j] = np.linalg.solve(m, [th[j] + ell * ph[j], ph[j]])
    err = max(np.abs(final.theta.values - scipy.fft.idct(th, norm="ortho")).max(),
              np.abs(final.phi.values - scipy.fft.idct(ph, norm="ortho")).max())
    report(9, err <= 1e-12, f"max nodal error after {steps} steps {err:.1e}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
