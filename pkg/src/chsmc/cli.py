"""Command-line entry point: ``chsmc <subcommand> [--config FILE | --preset NAME]``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .diagnostics import ContDepData, DiagnosticsRecorder, cont_dep_experiment, eps_refinement_study
from .errors import Blowup, ChsmcError, NoConvergence, ParseError, ValidationError
from .field import Field, write_snapshot
from .kernels import BACKEND_NAME
from .config import RunConfig, format_config, load_config, preset_names, preset_path
from .selftest import format_table, run_all
from .smc import DEFAULT_SWEEP, SmcConfig, rho_sweep, run_smc_experiment
from .stepper import prepare_initial_state, run

log = logging.getLogger("chsmc")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def write_summary(path: Path, items: dict) -> None:
    with open(path, "w") as fh:
        for k, v in items.items():
            fh.write(f"{k}={v!r}\n" if isinstance(v, float) else f"{k}={v}\n")


class SnapshotWriter:
    """Observer writing ``phi`` and ``theta`` on every ``stride``-th emitted state.

    ``stride = 0`` keeps only the first state; call :meth:`finish` to add the last one.
    """

    def __init__(self, out: Path, stride: int):
        self.dir = out / "snapshots"
        self.dir.mkdir(parents=True, exist_ok=True)
        self.stride, self.count, self.last = stride, 0, None

    def __call__(self, s) -> None:
        if self.count == 0 or (self.stride and self.count % self.stride == 0):
            self.write(s)
        self.count += 1

    def write(self, s) -> None:
        write_snapshot(self.dir / f"phi_{s.step:07d}.chsf", s.phi, s.t)
        write_snapshot(self.dir / f"theta_{s.step:07d}.chsf", s.theta, s.t)
        self.last = s.step

    def finish(self, s) -> None:
        if self.last != s.step:
            self.write(s)


def cmd_run(cfg: RunConfig, out: Path) -> dict:
    p = cfg.model_params()
    theta0, phi0 = cfg.initial_data()
    state0 = prepare_initial_state(theta0, phi0, p, cfg.smooth_eps)
    rec = DiagnosticsRecorder(p)
    snaps = SnapshotWriter(out, cfg.snapshot_stride)
    traj = run(state0, p, [rec, snaps], stride=cfg.stride)
    snaps.finish(traj.final)
    rec.write_csv(out / "diagnostics.csv")
    return {"steps": traj.steps, "t_final": traj.final.t, **rec.summary()}


def _smc_config(cfg: RunConfig, rho: float, tol_rel: float | None) -> SmcConfig:
    return SmcConfig(
        rho=rho, base=cfg.model_params(), tol_rel=tol_rel or cfg.tol_rel,
        tol_abs=cfg.tol_abs or None,
    )


def _write_reaching(path: Path, rep) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "psi", "sigma_norm"])
        for row in zip(rep.times, rep.psi_series, rep.sigma_norms):
            w.writerow([repr(float(v)) for v in row])


def cmd_smc(cfg: RunConfig, out: Path, rho: float | None, sweep: bool, tol: float | None) -> dict:
    theta0, phi0 = cfg.initial_data()
    if not sweep:
        rho = rho if rho is not None else cfg.rho
        rep = run_smc_experiment(_smc_config(cfg, rho, tol), theta0, phi0, cfg.smooth_eps)
        _write_reaching(out / "reaching.csv", rep)
        return rep.summary()
    factors = cfg.rho_factors or DEFAULT_SWEEP
    sw = rho_sweep(_smc_config(cfg, 0.0, tol), theta0, phi0, factors, cfg.smooth_eps)
    summary = {"rho_star": sw.rho_star, "c_hat_pilot": sw.c_hat_pilot, "t_star_non_increasing": sw.non_increasing}
    for k, rep in enumerate(sw.reports):
        _write_reaching(out / f"reaching_{k}.csv", rep)
        for key, v in rep.summary().items():
            summary[f"run{k}.{key}"] = v
    # the first run doubles as reaching.csv so single and sweep outputs share a name
    _write_reaching(out / "reaching.csv", sw.reports[0])
    return summary


def cmd_contdep(cfg: RunConfig, out: Path) -> dict:
    p = cfg.model_params()
    theta0, phi0 = cfg.initial_data()
    base = ContDepData(theta0, phi0)
    same = cont_dep_experiment(base, base, p)
    rows, summary = [], {"identical_ratio": same.ratio}
    for d in cfg.contdep_deltas:
        pert = ContDepData(theta0 + Field.cosine(p.grid, cfg.contdep_mode, d), phi0)
        rep = cont_dep_experiment(base, pert, p)
        rows.append((d, rep.lhs, rep.rhs, rep.ratio))
    with open(out / "contdep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["delta", "lhs", "rhs", "ratio"])
        for row in rows:
            w.writerow([repr(float(v)) for v in row])
    ratios = np.array([r[3] for r in rows])
    summary.update({f"ratio_{k}": float(r) for k, r in enumerate(ratios)})
    summary["ratio_spread"] = float(ratios.max() / ratios.min()) if np.all(ratios > 0) else float("inf")
    return summary


def cmd_eps_study(cfg: RunConfig, out: Path) -> dict:
    p = cfg.model_params()
    theta0, phi0 = cfg.initial_data()
    rep = eps_refinement_study(theta0, phi0, p, cfg.eps_list, cfg.smooth_eps)
    with open(out / "eps_study.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["eps_coarse", "eps_fine", "distance"])
        for e1, e2, dist in zip(rep.eps, rep.eps[1:], rep.distances):
            w.writerow([repr(e1), repr(e2), repr(dist)])
    summary = {"strictly_decreasing": rep.strictly_decreasing}
    summary.update({f"distance_{k}": d for k, d in enumerate(rep.distances)})
    for eps, sups in zip(rep.eps, rep.sup_norms):
        for key, v in sups.items():
            summary[f"eps={eps:g}.{key}"] = v
    return summary


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chsmc", description="Regularized Cahn-Hilliard system with sliding-mode feedback.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND_NAME} kernels)")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        src = sp.add_mutually_exclusive_group()
        src.add_argument("--config", type=Path, help="key=value configuration file")
        src.add_argument("--preset", help=f"shipped preset ({', '.join(preset_names())})")
        sp.add_argument("--out", type=Path, help="output directory (default: output_dir from the config)")

    common(sub.add_parser("run", help="simulate and write diagnostics and snapshots"))
    sp = sub.add_parser("smc", help="sliding-mode reaching experiment")
    common(sp)
    sp.add_argument("--rho", type=float, help="feedback gain for a single run")
    sp.add_argument("--rho-sweep", action="store_true", help="sweep rho over multiples of the estimated rho*")
    sp.add_argument("--tol", type=float, help="reaching tolerance relative to max(psi0, 1)")
    common(sub.add_parser("contdep", help="continuous-dependence ratio sweep"))
    common(sub.add_parser("eps-study", help="eps-refinement study"))
    sp = sub.add_parser("selftest", help="quick property checks")
    sp.add_argument("--seed", type=int, default=0)
    sub.add_parser("presets", help="list shipped presets")
    return ap


def _load(args) -> RunConfig:
    if args.preset:
        return load_config(preset_path(args.preset))
    if args.config:
        return load_config(args.config)
    return RunConfig().validate()


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")

    if args.command == "presets":
        print("\n".join(preset_names()))
        return EXIT_OK
    if args.command == "selftest":
        results = run_all(args.seed)
        print(format_table(results))
        return EXIT_OK if all(r.passed for r in results) else EXIT_INVALID

    try:
        cfg = _load(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ParseError, ValidationError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID

    out = args.out or Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        if args.command == "run":
            summary = cmd_run(cfg, out)
        elif args.command == "smc":
            summary = cmd_smc(cfg, out, args.rho, args.rho_sweep or cfg.experiment == "smc-sweep", args.tol)
        elif args.command == "contdep":
            summary = cmd_contdep(cfg, out)
        else:
            summary = cmd_eps_study(cfg, out)
    except (Blowup, NoConvergence) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValidationError, ChsmcError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    summary = {"command": args.command, "backend": BACKEND_NAME, **summary,
               "wall_seconds": round(time.perf_counter() - t0, 3)}
    write_summary(out / "summary.txt", summary)
    (out / "config_used.cfg").write_text(format_config(cfg))
    log.info("wrote outputs to %s", out)
    print(f"{args.command}: done in {summary['wall_seconds']} s, outputs in {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
