"""Flat ``key = value`` run configuration.

Blank lines and ``#`` comments are ignored.  Lists are comma separated.
Every key has a default, so an empty file is a valid configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .field import Field, Grid
from .graphs import GRAPH_KINDS, HilbertOperator, MonotoneGraph, SmoothPerturbation
from .stepper import ModelParams, SampledSource

EXPERIMENTS = ("simulate", "smc", "smc-sweep", "contdep", "selftest", "eps-study")
OPERATORS = ("zero", "sign") + tuple(k for k in GRAPH_KINDS if k != "zero")
PRESET_DIR = Path(__file__).with_name("presets")


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(v) for v in s.split(",") if v.strip())


def _ints(s: str) -> tuple[int, ...]:
    return tuple(int(v) for v in s.split(",") if v.strip())


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _str(s: str) -> str:
    return s.strip()


def _init_keys(prefix):
    return {
        f"{prefix}_mean": 0.0,
        f"{prefix}_amp": 0.0,
        f"{prefix}_mode": (1,),
        f"{prefix}_noise": 0.0,
    }


@dataclass(frozen=True)
class RunConfig:
    experiment: str = "simulate"
    dims: int = 1
    n: tuple[int, ...] = (128,)
    length: tuple[float, ...] = (1.0,)
    ell: float = 1.0
    nu: float = 0.01
    gamma: float = 1.0
    a: float = 1.0
    b: float = 1.0
    graph: str = "polynomial"
    perturbation: str = "double_well"
    kappa: float = 1.0
    operator: str = "zero"
    rho: float = 0.0
    growth: float = 1.0
    eps_beta: float = 1e-2
    eps_A: float = 1e-2
    smooth_eps: float = 0.0
    stabilization: float = 0.0
    zeta_scheme: str = "implicit"
    tau: float = 1e-3
    T: float = 1.0
    stride: int = 100
    snapshot_stride: int = 0
    output_dir: str = "out"
    seed: int = 0
    theta0_mean: float = 0.0
    theta0_amp: float = 0.0
    theta0_mode: tuple[int, ...] = (1,)
    theta0_noise: float = 0.0
    phi0_mean: float = 0.0
    phi0_amp: float = 0.1
    phi0_mode: tuple[int, ...] = (1,)
    phi0_noise: float = 0.0
    eta_star_mean: float = 0.0
    eta_star_amp: float = 0.0
    eta_star_mode: tuple[int, ...] = (1,)
    eta_star_noise: float = 0.0
    source_mean: float = 0.0
    source_amp: float = 0.0
    source_mode: tuple[int, ...] = (1,)
    source_noise: float = 0.0
    on_manifold: bool = False
    tol_rel: float = 1e-3
    tol_abs: float = 0.0
    rho_factors: tuple[float, ...] = ()
    contdep_deltas: tuple[float, ...] = (1e-2, 1e-3, 1e-4)
    contdep_mode: tuple[int, ...] = (1,)
    eps_list: tuple[float, ...] = (1e-1, 1e-2, 1e-3)

    # -- derived objects ------------------------------------------------------

    @property
    def grid(self) -> Grid:
        n = self.n * self.dims if len(self.n) == 1 else self.n
        length = self.length * self.dims if len(self.length) == 1 else self.length
        return Grid(n, length)

    def _field(self, prefix: str, rng: np.random.Generator) -> Field:
        g = self.grid
        get = lambda k: getattr(self, f"{prefix}_{k}")  # noqa: E731
        u = Field.cosine(g, get("mode"), get("amp"), get("mean")).values
        if get("noise") > 0:
            z = rng.standard_normal(g.shape)
            u = u + get("noise") * (z - z.mean())
        return Field(g, u)

    def initial_data(self) -> tuple[Field, Field]:
        """``(theta0, phi0)``; noise is drawn from ``seed`` in a fixed order."""
        rng = np.random.default_rng(self.seed)
        theta0 = self._field("theta0", rng)
        phi0 = self._field("phi0", rng)
        if self.on_manifold:
            eta = self.eta_star
            theta0 = (eta.values if eta is not None else 0.0) - self.b * phi0.values
            theta0 = Field(self.grid, np.broadcast_to(theta0, self.grid.shape))
        return theta0, phi0

    @property
    def eta_star(self) -> Field | None:
        if not (self.eta_star_mean or self.eta_star_amp or self.eta_star_noise):
            return None
        return self._field("eta_star", np.random.default_rng(self.seed + 1))

    @property
    def source(self):
        if not (self.source_mean or self.source_amp or self.source_noise):
            return None
        f = self._field("source", np.random.default_rng(self.seed + 2))
        return SampledSource([0.0], [f])

    def model_params(self) -> ModelParams:
        if self.perturbation == "double_well":
            pert = SmoothPerturbation.double_well(self.kappa)
        else:
            pert = SmoothPerturbation.zero()
        return ModelParams(
            grid=self.grid, ell=self.ell, nu=self.nu, gamma=self.gamma, a=self.a, b=self.b,
            eps_beta=self.eps_beta, eps_A=self.eps_A, graph=MonotoneGraph(self.graph),
            perturbation=pert,
            operator=HilbertOperator.from_name(self.operator, self.rho, self.growth),
            eta_star=self.eta_star, source=self.source, T=self.T, tau=self.tau,
            stabilization=self.stabilization, zeta_scheme=self.zeta_scheme,
        )

    def validate(self) -> "RunConfig":
        """Check names and ranges; raises :class:`ValidationError` naming the field."""
        choices = {
            "experiment": EXPERIMENTS,
            "graph": tuple(GRAPH_KINDS),
            "perturbation": ("double_well", "zero"),
            "operator": OPERATORS,
        }
        for key, allowed in choices.items():
            if getattr(self, key) not in allowed:
                raise ValidationError(key, f"must be one of {', '.join(allowed)}")
        if self.dims not in (1, 2):
            raise ValidationError("dims", "must be 1 or 2")
        if len(self.n) not in (1, self.dims) or any(k < 4 for k in self.n):
            raise ValidationError("n", "need one size (or one per axis), each >= 4")
        if len(self.length) not in (1, self.dims) or any(not v > 0 for v in self.length):
            raise ValidationError("length", "need positive lengths")
        for key in ("stride", "seed"):
            if getattr(self, key) < (1 if key == "stride" else 0):
                raise ValidationError(key, "out of range")
        if self.snapshot_stride < 0:
            raise ValidationError("snapshot_stride", "must be >= 0")
        for key in ("rho", "growth", "smooth_eps", "tol_abs"):
            if getattr(self, key) < 0:
                raise ValidationError(key, "must be non-negative")
        if not self.tol_rel > 0:
            raise ValidationError("tol_rel", "must be positive")
        if self.operator == "sign" and self.experiment in ("simulate", "contdep", "eps-study") and not self.rho > 0:
            raise ValidationError("rho", "sign operator needs rho > 0")
        for key in ("rho_factors", "contdep_deltas", "eps_list"):
            if any(not v > 0 for v in getattr(self, key)):
                raise ValidationError(key, "entries must be positive")
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float) and not math.isfinite(v):
                raise ValidationError(f.name, "must be finite")
        self.model_params()
        return self

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)


_DEFAULTS = RunConfig()


def _converter(name: str):
    v = getattr(_DEFAULTS, name)
    if isinstance(v, bool):
        return _bool
    if isinstance(v, int):
        return int
    if isinstance(v, float):
        return float
    if isinstance(v, tuple):
        return _ints if name in ("n",) or name.endswith("_mode") else _floats
    return _str


KEYS = {f.name: _converter(f.name) for f in fields(RunConfig)}


def parse_config(text: str) -> RunConfig:
    """Parse and validate configuration text.

    Raises
    ------
    ParseError
        On malformed lines, duplicates and unknown keys.
    ValidationError
        On values that do not convert or violate a constraint.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(lineno, f"expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ParseError(lineno, f"unknown key {key!r}")
        if key in values:
            raise ParseError(lineno, f"duplicate key {key!r}")
        try:
            values[key] = KEYS[key](value)
        except ValueError as exc:
            raise ValidationError(key, f"cannot parse {value!r} ({exc})") from None
    cfg = RunConfig(**values)
    try:
        return cfg.validate()
    except ValidationError:
        raise
    except ValueError as exc:
        raise ValidationError("config", str(exc)) from None


def load_config(path: str | Path) -> RunConfig:
    return parse_config(Path(path).read_text())


def preset_names() -> list[str]:
    return sorted(p.stem for p in PRESET_DIR.glob("*.cfg"))


def preset_path(name: str) -> Path:
    path = PRESET_DIR / f"{name}.cfg"
    if not path.is_file():
        raise FileNotFoundError(f"no preset named {name!r}; available: {', '.join(preset_names())}")
    return path


def format_config(cfg: RunConfig) -> str:
    """Render ``cfg`` back into parseable text."""
    out = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ", ".join(repr(x) for x in v)
        elif isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = repr(v)
        out.append(f"{f.name} = {v}")
    return "\n".join(out) + "\n"
