"""Small deterministic numerical kernel shared by every other module.

Linear solves, type-7 quantiles, trapezoid integration, chi-square tail
probabilities and seeded random draws.  Matrices are plain ``numpy``
arrays; every function rejects non-finite input eagerly.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy import stats

__all__ = [
    "SingularSystemError",
    "RngStream",
    "Normal",
    "Uniform",
    "StudentT",
    "ols_solve",
    "sample_quantile",
    "trapezoid_integrate",
    "chi_square_sf",
    "draw",
    "check_finite",
]

RNG_ALGORITHM = "PCG64"


class SingularSystemError(np.linalg.LinAlgError):
    """Raised when a least-squares design does not have full column rank."""

    def __init__(self, message: str, columns: Sequence[int] = ()):
        super().__init__(message)
        self.columns = list(columns)


def check_finite(name: str, values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinite values")
    return arr


def ols_solve(X, Y, rcond: float = 1e-10) -> np.ndarray:
    """Least-squares coefficients of ``Y`` on the columns of ``X``.

    Uses a QR decomposition. ``Y`` may be a vector or a matrix with several
    right-hand sides; the result has the matching shape.

    Raises
    ------
    SingularSystemError
        If ``X`` has fewer rows than columns or is numerically rank
        deficient. The error lists the offending column positions.
    """
    X = check_finite("X", X)
    Y = check_finite("Y", Y)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    if Y.shape[0] != n:
        raise ValueError(f"X has {n} rows but Y has {Y.shape[0]}")
    if n < k:
        raise SingularSystemError(
            f"underdetermined system: {n} rows for {k} columns", range(n, k)
        )
    Q, R = np.linalg.qr(X, mode="reduced")
    diag = np.abs(np.diag(R))
    scale = diag.max() if k else 0.0
    bad = np.flatnonzero(diag <= rcond * max(scale, 1e-300))
    if bad.size:
        raise SingularSystemError(
            f"design is rank deficient: {bad.size} of {k} columns are "
            f"collinear with earlier ones (positions {bad.tolist()})",
            bad.tolist(),
        )
    return np.linalg.solve(R, Q.T @ Y)


def sample_quantile(values, alpha: float) -> float:
    """Type-7 (linear interpolation between order statistics) quantile."""
    v = check_finite("values", values).ravel()
    if v.size == 0:
        raise ValueError("cannot take a quantile of an empty sample")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return float(np.quantile(v, alpha, method="linear"))


def trapezoid_integrate(xs, ys) -> float:
    xs = check_finite("xs", xs).ravel()
    ys = check_finite("ys", ys).ravel()
    if xs.shape != ys.shape:
        raise ValueError(f"grid has {xs.size} points but values have {ys.size}")
    if xs.size < 2:
        raise ValueError("need at least two grid points")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("grid must be strictly increasing")
    return float(np.sum(0.5 * (ys[1:] + ys[:-1]) * np.diff(xs)))


def chi_square_sf(x: float, df: int) -> float:
    """P(chi2_df > x)."""
    if not np.isfinite(x):
        raise ValueError("x must be finite")
    if x < 0:
        raise ValueError(f"x must be non-negative, got {x}")
    if df < 1:
        raise ValueError(f"df must be a positive integer, got {df}")
    return float(stats.chi2.sf(x, df))


class RngStream:
    """Seeded random stream backed by PCG64.

    Streams are single-owner. Use :meth:`spawn` to derive independent
    child streams (e.g. one per Monte-Carlo replication) instead of sharing.
    """

    algorithm = RNG_ALGORITHM

    def __init__(self, seed: Union[int, np.random.SeedSequence] = 0):
        if isinstance(seed, np.random.SeedSequence):
            self._seq = seed
            self.seed = int(seed.entropy) if isinstance(seed.entropy, int) else 0
        else:
            if int(seed) < 0 or int(seed) >= 2**64:
                raise ValueError("seed must be an unsigned 64-bit integer")
            self.seed = int(seed)
            self._seq = np.random.SeedSequence(self.seed)
        self.generator = np.random.Generator(np.random.PCG64(self._seq))

    def spawn(self, n: int) -> list["RngStream"]:
        return [RngStream(child) for child in self._seq.spawn(n)]

    def integers(self, high: int = 2**63 - 1) -> int:
        return int(self.generator.integers(0, high))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, algorithm={self.algorithm!r})"


@dataclass(frozen=True)
class Normal:
    mu: float = 0.0
    sigma: float = 1.0


@dataclass(frozen=True)
class Uniform:
    a: float = 0.0
    b: float = 1.0


@dataclass(frozen=True)
class StudentT:
    df: float


Distribution = Union[Normal, Uniform, StudentT]


def draw(stream: RngStream, dist: Distribution, size=None):
    """Draw from ``dist`` using ``stream``.

    Student-t variates are built as ``Z / sqrt(V / df)`` with ``Z`` standard
    normal and ``V`` chi-square with ``df`` degrees of freedom.
    """
    g = stream.generator
    if isinstance(dist, Normal):
        if not dist.sigma > 0:
            raise ValueError(f"normal sigma must be positive, got {dist.sigma}")
        return dist.mu + dist.sigma * g.standard_normal(size)
    if isinstance(dist, Uniform):
        if not dist.a < dist.b:
            raise ValueError(f"uniform needs a < b, got ({dist.a}, {dist.b})")
        return g.uniform(dist.a, dist.b, size)
    if isinstance(dist, StudentT):
        if not dist.df > 0:
            raise ValueError(f"student-t df must be positive, got {dist.df}")
        z = g.standard_normal(size)
        v = g.chisquare(dist.df, size)
        return z / np.sqrt(v / dist.df)
    raise TypeError(f"unsupported distribution {dist!r}")
