"""Maximal monotone graphs, their Yosida/Moreau regularizations, and operators on H.

Scalar graphs ``beta = d(beta_hat)`` act samplewise on fields.  Every
regularized quantity is assembled from the resolvent
``R_eps = (I + eps*beta)^-1``:

* Yosida map ``beta_eps(r) = (r - R_eps r) / eps``
* Moreau envelope ``beta_hat_eps(r) = beta_hat(R_eps r) + (r - R_eps r)^2 / (2 eps)``
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import xlogy

from . import kernels
from .errors import NoConvergence
from .field import Field, norm_h

GRAPH_KINDS = {
    "zero": kernels.ZERO,
    "polynomial": kernels.POLYNOMIAL,
    "obstacle": kernels.OBSTACLE,
    "logarithmic": kernels.LOGARITHMIC,
}


@dataclass(frozen=True)
class MonotoneGraph:
    """A scalar maximal monotone graph with ``0 in beta(0)`` and ``beta_hat(0) = 0``.

    ``kind`` is one of ``polynomial`` (``beta = r^3``), ``obstacle``
    (subdifferential of the indicator of ``[-1, 1]``), ``logarithmic``
    (``beta = ln((1+r)/(1-r))``) or ``zero``.
    """

    kind: str

    def __post_init__(self):
        if self.kind not in GRAPH_KINDS:
            raise ValueError(f"unknown graph kind {self.kind!r}; choose from {sorted(GRAPH_KINDS)}")

    @property
    def code(self) -> int:
        return GRAPH_KINDS[self.kind]

    @property
    def domain(self) -> tuple[float, float, bool]:
        """``(lo, hi, closed)`` describing ``D(beta)``."""
        if self.kind == "obstacle":
            return -1.0, 1.0, True
        if self.kind == "logarithmic":
            return -1.0, 1.0, False
        return -np.inf, np.inf, False

    def in_domain(self, r):
        lo, hi, closed = self.domain
        r = np.asarray(r, dtype=float)
        if closed:
            return (r >= lo) & (r <= hi)
        return (r > lo) & (r < hi)

    def in_interior(self, r):
        lo, hi, _ = self.domain
        r = np.asarray(r, dtype=float)
        return (r > lo) & (r < hi)

    def beta_hat(self, r):
        """Convex potential; ``+inf`` outside its effective domain."""
        r = np.asarray(r, dtype=float)
        if self.kind == "zero":
            out = np.zeros_like(r)
        elif self.kind == "polynomial":
            out = 0.25 * r**4
        elif self.kind == "obstacle":
            out = np.where(np.abs(r) <= 1.0, 0.0, np.inf)
        else:
            inside = np.abs(r) <= 1.0
            rc = np.clip(r, -1.0, 1.0)
            out = np.where(inside, xlogy(1 + rc, 1 + rc) + xlogy(1 - rc, 1 - rc), np.inf)
        return out[()] if out.ndim == 0 else out

    def minimal_section(self, r):
        """``beta^0(r)``, the least-modulus element of ``beta(r)``; NaN off ``D(beta)``."""
        r = np.asarray(r, dtype=float)
        if self.kind == "zero":
            out = np.zeros_like(r)
        elif self.kind == "polynomial":
            out = r**3
        elif self.kind == "obstacle":
            out = np.where(np.abs(r) <= 1.0, 0.0, np.nan)
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.where(np.abs(r) < 1.0, np.log1p(r) - np.log1p(-r), np.nan)
        return out[()] if out.ndim == 0 else out


def resolvent(g: MonotoneGraph, eps: float, r):
    """``x = (I + eps*beta)^-1 r``, samplewise for arrays.

    Obstacle uses the clamp; polynomial and logarithmic use safeguarded
    Newton with bisection inside the bracket ``[min(0,r), max(0,r)]``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    x, nfail = kernels.resolvent(g.code, float(eps), r)
    if nfail:
        raise NoConvergence(f"{nfail} resolvent solves failed for {g.kind} graph at eps={eps}")
    return x[()] if np.ndim(x) == 0 else x


def yosida(g: MonotoneGraph, eps: float, r):
    r = np.asarray(r, dtype=float)
    out = (r - resolvent(g, eps, r)) / eps
    return out[()] if np.ndim(out) == 0 else out


def moreau_envelope(g: MonotoneGraph, eps: float, r):
    r = np.asarray(r, dtype=float)
    x = resolvent(g, eps, r)
    out = g.beta_hat(x) + (r - x) ** 2 / (2 * eps)
    return out[()] if np.ndim(out) == 0 else out


# -- smooth non-convex perturbation -----------------------------------------

@dataclass(frozen=True)
class SmoothPerturbation:
    """Lipschitz ``pi = pi_hat'`` with ``pi_hat(0) = 0``."""

    pi: Callable[[np.ndarray], np.ndarray]
    pi_hat: Callable[[np.ndarray], np.ndarray]
    lipschitz_constant: float
    name: str = "custom"

    @classmethod
    def double_well(cls, kappa: float = 1.0) -> "SmoothPerturbation":
        """``pi(r) = -kappa r``; with the cubic graph gives ``r^4/4 - kappa r^2/2``."""
        return cls(lambda r: -kappa * np.asarray(r),
                   lambda r: -0.5 * kappa * np.asarray(r) ** 2,
                   abs(kappa), "double_well")

    @classmethod
    def zero(cls) -> "SmoothPerturbation":
        return cls(np.zeros_like, np.zeros_like, 0.0, "zero")


PERTURBATIONS = ("double_well", "zero")


# -- operators on H ----------------------------------------------------------

def sign_eps(v: Field, eps: float) -> Field:
    """Yosida regularization of Sign: ``v / max(eps, ||v||_H)``."""
    return v / max(eps, norm_h(v))


@dataclass(frozen=True)
class HilbertOperator:
    """A maximal monotone operator ``A`` on ``H`` with ``0 in A(0)``.

    Kinds: ``sign`` (``rho * Sign``), ``pointwise`` (``graph`` applied
    samplewise) and ``zero``.  ``growth`` is the constant ``C_A`` of the
    linear bound ``||v||_H <= C_A (1 + ||eta||_H)``.
    """

    kind: str
    rho: float = 0.0
    graph: MonotoneGraph | None = None
    growth: float = 0.0

    def __post_init__(self):
        if self.kind not in ("sign", "pointwise", "zero"):
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if self.kind == "sign" and not self.rho > 0:
            raise ValueError("sign operator needs rho > 0")
        if self.kind == "pointwise" and self.graph is None:
            raise ValueError("pointwise operator needs a graph")

    @classmethod
    def scaled_sign(cls, rho: float) -> "HilbertOperator":
        return cls("sign", rho=float(rho), growth=float(rho))

    @classmethod
    def pointwise(cls, graph: MonotoneGraph, growth: float = 1.0) -> "HilbertOperator":
        return cls("pointwise", graph=graph, growth=float(growth))

    @classmethod
    def zero(cls) -> "HilbertOperator":
        return cls("zero")

    @classmethod
    def from_name(cls, name: str, rho: float = 0.0, growth: float = 1.0) -> "HilbertOperator":
        if name == "zero" or (name == "sign" and rho == 0):
            return cls.zero()
        if name == "sign":
            return cls.scaled_sign(rho)
        return cls.pointwise(MonotoneGraph(name), growth)


def apply_yosida_operator(A: HilbertOperator, eps: float, eta: Field) -> Field:
    """``A_eps(eta) = (eta - (I + eps A)^-1 eta) / eps``.

    For ``A = rho * Sign`` the resolvent is block soft-thresholding,
    ``eta * max(0, 1 - eps*rho/||eta||)``, so
    ``A_eps(eta) = rho * eta / max(rho*eps, ||eta||)``, i.e. ``rho * Sign_{rho*eps}``.
    """
    if A.kind == "zero":
        return Field.zeros(eta.grid)
    if A.kind == "sign":
        return A.rho * sign_eps(eta, A.rho * eps)
    return Field(eta.grid, yosida(A.graph, eps, eta.values))


def yosida_operator_resolvent(A: HilbertOperator, eps: float, s: float, eta: Field) -> Field:
    """``(I + s A_eps)^-1 eta``.

    Uses ``(I + s A_eps)^-1 = eps/(eps+s) I + s/(eps+s) (I + (eps+s) A)^-1``,
    which holds for any maximal monotone ``A``.
    """
    if A.kind == "zero" or s == 0:
        return eta
    lev = eps + s
    if A.kind == "sign":
        nrm = norm_h(eta)
        shrink = max(0.0, 1.0 - lev * A.rho / nrm) if nrm > 0 else 0.0
        base = eta * shrink
    else:
        base = Field(eta.grid, resolvent(A.graph, lev, eta.values))
    return (eps / lev) * eta + (s / lev) * base


@dataclass(frozen=True)
class GrowthReport:
    max_ratio: float
    growth: float
    passed: bool


def check_linear_growth(A: HilbertOperator, eps: float, samples: Sequence[Field]) -> GrowthReport:
    """Largest ``||A_eps eta|| / (1 + ||eta||)`` over ``samples`` against ``C_A``."""
    if not samples:
        raise ValueError("need at least one sample")
    ratios = [norm_h(apply_yosida_operator(A, eps, s)) / (1.0 + norm_h(s)) for s in samples]
    worst = max(ratios)
    return GrowthReport(worst, A.growth, bool(worst <= A.growth * (1 + 1e-12)))
