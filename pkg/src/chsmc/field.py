"""Cell-centred fields on rectangles with cosine-spectral Neumann operators.

Samples live at cell centres ``x_i = (i + 1/2) h``.  The orthonormal DCT-II
maps these samples onto the Neumann eigenfunctions ``cos(pi j x / L)``, so
the Laplacian, its inverse on zero-mean fields and the Helmholtz smoother
are all diagonal multipliers and exact on resolved modes.
"""

from __future__ import annotations

import struct
from functools import lru_cache
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import fft as sfft

from .errors import NonZeroMean

SNAPSHOT_MAGIC = b"CHSF"
SNAPSHOT_VERSION = 1

# relative tolerance on the mean for membership in D(N)
ZERO_MEAN_RTOL = 1e-10

# axes up to this size use a cached dense DCT matrix; the FFT path has
# ~25us of Python overhead per call, which dominates small 1D runs
DENSE_DCT_MAX = 512
DENSE_DCT_MAX_2D = 128


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centred grid on ``[0, L_x] (x [0, L_y])``."""

    n: tuple[int, ...]
    length: tuple[float, ...]
    lam: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = tuple(int(k) for k in np.atleast_1d(self.n))
        length = tuple(float(v) for v in np.atleast_1d(self.length))
        if len(length) == 1 and len(n) > 1:
            length = length * len(n)
        if len(n) not in (1, 2) or len(length) != len(n):
            raise ValueError(f"grid must be 1D or 2D, got n={n}, length={length}")
        if any(k < 4 for k in n):
            raise ValueError(f"need at least 4 points per axis, got {n}")
        if any(not (v > 0 and np.isfinite(v)) for v in length):
            raise ValueError(f"lengths must be positive, got {length}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "length", length)

        axes = [(np.pi * np.arange(k) / L) ** 2 for k, L in zip(n, length)]
        lam = axes[0] if len(n) == 1 else axes[0][:, None] + axes[1][None, :]
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)

    @classmethod
    def uniform(cls, n: int | Sequence[int] = 128, length: float | Sequence[float] = 1.0):
        return cls(tuple(np.atleast_1d(n)), tuple(np.atleast_1d(length)))

    @property
    def dims(self) -> int:
        return len(self.n)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def size(self) -> int:
        return int(np.prod(self.n))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / k for k, L in zip(self.n, self.length))

    @property
    def weight(self) -> float:
        """Midpoint quadrature weight of one cell."""
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod(self.length))

    @property
    def lam_min(self) -> float:
        """Smallest nonzero eigenvalue of the Neumann ``-Laplacian``."""
        return (np.pi / max(self.length)) ** 2

    def axes(self) -> list[np.ndarray]:
        return [(np.arange(k) + 0.5) * h for k, h in zip(self.n, self.spacing)]

    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.axes(), indexing="ij"))


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples of a scalar function at the cell centres of ``grid``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} samples, got {v.size}")
        v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite samples")
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "Field":
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[..., np.ndarray]) -> "Field":
        return cls(grid, np.broadcast_to(fn(*grid.mesh()), grid.shape).copy())

    @classmethod
    def cosine(cls, grid: Grid, modes: int | Sequence[int], amp: float = 1.0, mean: float = 0.0):
        """``mean + amp * prod_k cos(pi m_k x_k / L_k)``."""
        modes = tuple(np.atleast_1d(modes)) + (0,) * grid.dims
        out = np.full(grid.shape, 1.0)
        for m, x, L in zip(modes, grid.mesh(), grid.length):
            out = out * np.cos(np.pi * m * x / L)
        return cls(grid, mean + amp * out)

    @classmethod
    def _raw(cls, grid: Grid, values: np.ndarray) -> "Field":
        """Wrap an array already known to have the right shape; no checks."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "grid", grid)
        object.__setattr__(obj, "values", values)
        return obj

    def _wrap(self, other):
        return other.values if isinstance(other, Field) else other

    def __add__(self, other):
        return Field(self.grid, self.values + self._wrap(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Field(self.grid, self.values - self._wrap(other))

    def __rsub__(self, other):
        return Field(self.grid, self._wrap(other) - self.values)

    def __mul__(self, c):
        return Field(self.grid, self.values * self._wrap(c))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return Field(self.grid, self.values / self._wrap(c))

    def __neg__(self):
        return Field(self.grid, -self.values)

    def __repr__(self):
        return f"Field(n={self.grid.n}, length={self.grid.length})"


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Orthonormal DCT-II coefficients of a :class:`Field`."""

    grid: Grid
    coeffs: np.ndarray


# -- raw array transforms, shared with the stepper ---------------------------

@lru_cache(maxsize=16)
def _dct_matrix(n: int) -> np.ndarray:
    m = sfft.dct(np.eye(n), type=2, norm="ortho", axis=0)
    m.setflags(write=False)
    return m


def dct(a: np.ndarray) -> np.ndarray:
    """Orthonormal DCT-II over every axis."""
    if a.ndim == 1 and a.shape[0] <= DENSE_DCT_MAX:
        return _dct_matrix(a.shape[0]) @ a
    if a.ndim == 2 and max(a.shape) <= DENSE_DCT_MAX_2D:
        return _dct_matrix(a.shape[0]) @ a @ _dct_matrix(a.shape[1]).T
    return sfft.dctn(a, type=2, norm="ortho")


def idct(c: np.ndarray) -> np.ndarray:
    if c.ndim == 1 and c.shape[0] <= DENSE_DCT_MAX:
        return _dct_matrix(c.shape[0]).T @ c
    if c.ndim == 2 and max(c.shape) <= DENSE_DCT_MAX_2D:
        return _dct_matrix(c.shape[0]).T @ c @ _dct_matrix(c.shape[1])
    return sfft.idctn(c, type=2, norm="ortho")


def transform(u: Field) -> SpectralField:
    return SpectralField(u.grid, dct(u.values))


def inverse_transform(s: SpectralField) -> Field:
    return Field(s.grid, idct(s.coeffs))


# -- operators ---------------------------------------------------------------

def mean(u: Field) -> float:
    """Spatial average ``(1/|Omega|) int u``; equals the zero cosine mode."""
    return float(np.sum(u.values) * u.grid.weight / u.grid.volume)


def laplacian(u: Field) -> Field:
    return Field(u.grid, idct(-u.grid.lam * dct(u.values)))


def inv_neumann_laplacian(u: Field) -> Field:
    """Solve ``-Lap w = u`` with Neumann conditions and ``mean(w) = 0``.

    Raises
    ------
    NonZeroMean
        If ``|mean(u)| > 1e-10 * ||u||_H``.
    """
    m = mean(u)
    if abs(m) > ZERO_MEAN_RTOL * norm_h(u):
        raise NonZeroMean(f"mean {m:.3e} is not zero relative to ||u||_H = {norm_h(u):.3e}")
    return Field(u.grid, idct(_inv_lam_multiply(u.grid, dct(u.values))))


def _inv_lam_multiply(grid: Grid, c: np.ndarray) -> np.ndarray:
    out = np.zeros_like(c)
    nz = grid.lam > 0
    out[nz] = c[nz] / grid.lam[nz]
    return out


def helmholtz_smooth(u: Field, eps: float) -> Field:
    """Solve ``(I - eps Lap) u_eps = u`` with Neumann conditions."""
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if eps == 0:
        return u
    return Field(u.grid, idct(dct(u.values) / (1.0 + eps * u.grid.lam)))


def inner_h(u: Field, v: Field) -> float:
    return float(np.sum(u.values * v.values) * u.grid.weight)


def norm_h(u: Field) -> float:
    return float(np.sqrt(np.sum(u.values**2) * u.grid.weight))


def grad_norm(u: Field) -> float:
    """``||grad u||_H`` from the spectral symbol (Parseval)."""
    c = dct(u.values)
    return float(np.sqrt(np.sum(u.grid.lam * c**2) * u.grid.weight))


def norm_v(u: Field) -> float:
    return float(np.hypot(norm_h(u), grad_norm(u)))


def norm_vstar(u: Field) -> float:
    """Dual norm ``sqrt(||grad N(u - m(u))||^2 + m(u)^2)``."""
    c = dct(u.values)
    g2 = np.sum(_inv_lam_multiply(u.grid, c) * c) * u.grid.weight
    return float(np.sqrt(g2 + mean(u) ** 2))


def norm_w(u: Field) -> float:
    """``||u||_H + ||Lap u||_H``, equivalent to the H^2 norm on Neumann fields."""
    return norm_h(u) + norm_h(laplacian(u))


# -- snapshot format ---------------------------------------------------------

def write_snapshot(path: str | Path, u: Field, t: float) -> None:
    """Write ``u`` at time ``t`` in the little-endian CHSF v1 layout."""
    g = u.grid
    parts = [SNAPSHOT_MAGIC, struct.pack("<HB", SNAPSHOT_VERSION, g.dims)]
    for k, L in zip(g.n, g.length):
        parts.append(struct.pack("<Id", k, L))
    parts.append(struct.pack("<d", t))
    parts.append(np.ascontiguousarray(u.values, dtype="<f8").tobytes(order="C"))
    Path(path).write_bytes(b"".join(parts))


def read_snapshot(path: str | Path) -> tuple[Field, float]:
    data = Path(path).read_bytes()
    if data[:4] != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: not a CHSF snapshot")
    version, dims = struct.unpack_from("<HB", data, 4)
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"{path}: unsupported snapshot version {version}")
    off = 7
    n, length = [], []
    for _ in range(dims):
        k, L = struct.unpack_from("<Id", data, off)
        n.append(k)
        length.append(L)
        off += 12
    (t,) = struct.unpack_from("<d", data, off)
    off += 8
    grid = Grid(tuple(n), tuple(length))
    values = np.frombuffer(data, dtype="<f8", count=grid.size, offset=off)
    return Field(grid, values.astype(float).reshape(grid.shape)), t
