"""Simulation data-generating processes.

Each DGP separates the regressors (drawn once per seed and held fixed across
Monte-Carlo replications) from the additive noise (redrawn for every
replication).  Frames carry the regressors, the response ``y`` and the
noiseless conditional mean ``truth``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
import pandas as pd

from ..numerics import Normal, RngStream, StudentT, Uniform, draw

__all__ = [
    "DgpSpec",
    "DgpLayout",
    "KINDS",
    "generate",
    "layout",
    "chaos_map",
    "irregular_iid_fn",
    "model1_g",
    "model2_nonlinear",
    "HIGH_DIM_FUNCTIONS",
    "high_dim_function",
]

BURN_IN = 100
CHAOS_PHASE = 1.0 / 3.0
KINDS = ("chaos", "irregular_iid", "high_dim", "model1", "model2", "linear")

DEFAULT_N = {"chaos": 400, "irregular_iid": 400, "high_dim": 500, "model1": 1250,
             "model2": 1250, "linear": 200}
DEFAULT_NOISE = {"chaos": 0.0, "irregular_iid": 16.0, "high_dim": 9.0,
                 "model1": math.sqrt(0.1), "model2": 0.5, "linear": 1.0}


@dataclass(frozen=True)
class DgpSpec:
    """Declarative description of a simulation design.

    ``noise_sd`` overrides the design's default error standard deviation
    (the high-dimensional design defaults to 9; 7 is the alternative).
    ``relevant`` and ``irrelevant`` only apply to ``high_dim``.
    """

    kind: str
    n: Optional[int] = None
    seed: int = 0
    relevant: int = 2
    irrelevant: int = 1
    noise_sd: Optional[float] = None
    y0: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown DGP kind {self.kind!r}; choose from {KINDS}")
        if self.n is None:
            object.__setattr__(self, "n", DEFAULT_N[self.kind])
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.kind == "high_dim":
            if not 1 <= self.relevant <= 15:
                raise ValueError("relevant predictors must be between 1 and 15")
            if self.irrelevant < 0:
                raise ValueError("irrelevant predictors must be non-negative")
        if self.noise_sd is not None and self.noise_sd < 0:
            raise ValueError("noise_sd must be non-negative")

    @property
    def sigma(self) -> float:
        return DEFAULT_NOISE[self.kind] if self.noise_sd is None else float(self.noise_sd)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DgpSpec":
        return cls(**d)


@dataclass(frozen=True)
class DgpLayout:
    regressors: tuple
    linear: tuple = ()
    nonparam: tuple = ()
    grid_column: Optional[str] = None
    grid: Optional[np.ndarray] = None
    grid_truth: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)
    time_series: bool = False


# --------------------------------------------------------------------------
# component functions

def chaos_map(y_prev):
    return 0.3 * y_prev + 22.0 / np.pi * np.sin(2.0 * np.pi * y_prev + CHAOS_PHASE)


def irregular_iid_fn(x):
    x = np.asarray(x, dtype=float)
    base = 0.4 * (x - 10.0) ** 3 + 0.1 * (x / 7.0) ** 7 + 600.0 * np.sin(2.0 * x)
    return base + np.where(x > 1.0, -800.0 * np.sin(2.0 * x) - 200.0, 0.0)


def model1_g(x3):
    x3 = np.asarray(x3, dtype=float)
    return 0.3 * np.exp(-4.0 * (x3 + 1.0) ** 2) + 0.7 * np.exp(-16.0 * (x3 - 1.0) ** 2)


def model2_nonlinear(x1, x2):
    return ((x1 + x2) / (1.0 + x1**2 + x2**2)) ** 2


def _f9(x):
    return -(0.9 * x**2 + x**3) / np.maximum(np.sin(x) + 2.0 * x**5, 0.9)


HIGH_DIM_FUNCTIONS = (
    lambda x: 3.5 * np.sin(x),
    lambda x: 8.0 * np.log(np.maximum(np.abs(x), 1.0)),
    lambda x: 2.0 * x**4,
    lambda x: -0.4 * (x**2 + x**3 + 0.1 * np.log(np.maximum(np.abs(x), 0.5))),
    lambda x: -4.0 * x**3,
    lambda x: 7.0 * x**2,
    lambda x: 2.0 * np.log(np.maximum(np.abs(x), 0.3)) ** 3,
    lambda x: np.abs(x),
    _f9,
    lambda x: -4.0 * np.cos(x),
)


def high_dim_function(k: int) -> Callable[[np.ndarray], np.ndarray]:
    """Component ``f_k`` (1-based); beyond the tenth the component is linear."""
    if k < 1:
        raise ValueError("k is 1-based")
    return HIGH_DIM_FUNCTIONS[k - 1] if k <= 10 else (lambda x: np.asarray(x, dtype=float))


# --------------------------------------------------------------------------
# generation

def _streams(spec: DgpSpec, replication: int):
    regressors = RngStream(np.random.SeedSequence(spec.seed, spawn_key=(0,)))
    noise = RngStream(np.random.SeedSequence(spec.seed, spawn_key=(1, replication)))
    return regressors, noise


def layout(spec: DgpSpec) -> DgpLayout:
    k = spec.kind
    if k == "chaos":
        return DgpLayout(("y_lag1",), nonparam=("y_lag1",), time_series=True)
    if k == "irregular_iid":
        return DgpLayout(("x",), nonparam=("x",), grid_column="x",
                         grid=np.linspace(-10.0, 10.0, 201), grid_truth=irregular_iid_fn)
    if k == "high_dim":
        names = tuple(f"x{i + 1}" for i in range(spec.relevant)) + \
            tuple(f"noise{i + 1}" for i in range(spec.irrelevant))
        return DgpLayout(names, nonparam=names)
    if k == "model1":
        return DgpLayout(("x1", "x2", "x3"), linear=("x1", "x2"), nonparam=("x3",),
                         grid_column="x3", grid=np.linspace(-2.0, 2.0, 201), grid_truth=model1_g)
    if k == "model2":
        return DgpLayout(("v_lag1", "v_lag2", "x_lag1", "x_lag2"), linear=("v_lag1", "v_lag2"),
                         nonparam=("x_lag1", "x_lag2"), time_series=True)
    return DgpLayout(("x1", "x2"), linear=("x1", "x2"), nonparam=("z",))


def _regressors(spec: DgpSpec, g: RngStream) -> tuple[pd.DataFrame, np.ndarray]:
    n = spec.n
    if spec.kind == "chaos":
        y = spec.y0
        for _ in range(BURN_IN):
            y = chaos_map(y)
        path = np.empty(n + 1)
        path[0] = y
        for t in range(1, n + 1):
            path[t] = chaos_map(path[t - 1])
        return pd.DataFrame({"y_lag1": path[:-1]}), path[1:]
    if spec.kind == "irregular_iid":
        x = draw(g, Uniform(-10.0, 10.0), n)
        return pd.DataFrame({"x": x}), irregular_iid_fn(x)
    if spec.kind == "high_dim":
        rel = draw(g, Uniform(0.0, 3.0), (n, spec.relevant))
        irr = draw(g, Uniform(-1.0, 1.0), (n, spec.irrelevant))
        truth = sum(high_dim_function(k + 1)(rel[:, k]) for k in range(spec.relevant))
        cols = {f"x{i + 1}": rel[:, i] for i in range(spec.relevant)}
        cols.update({f"noise{i + 1}": irr[:, i] for i in range(spec.irrelevant)})
        return pd.DataFrame(cols), truth
    if spec.kind == "model1":
        x3 = draw(g, Uniform(-2.0, 2.0), n)
        x1 = 0.5 * x3 + draw(g, Normal(0.0, 1.0), n)
        x2 = draw(g, StudentT(4), n)
        return pd.DataFrame({"x1": x1, "x2": x2, "x3": x3}), 2.0 * x1 + x2 + model1_g(x3)
    if spec.kind == "model2":
        total = n + BURN_IN + 2
        delta = draw(g, Uniform(-0.5, 0.5), total)
        eta = draw(g, Uniform(-0.5, 0.5), total)
        v = np.zeros(total)
        x = np.zeros(total)
        for t in range(2, total):
            v[t] = 0.55 * v[t - 1] - 0.42 * v[t - 2] + delta[t]
            x[t] = 0.8 * np.sin(2 * np.pi * x[t - 1]) - 0.2 * np.cos(2 * np.pi * x[t - 2]) + eta[t]
        s = slice(BURN_IN + 2, total)
        idx = np.arange(total)[s]
        frame = pd.DataFrame({"v_lag1": v[idx - 1], "v_lag2": v[idx - 2],
                              "x_lag1": x[idx - 1], "x_lag2": x[idx - 2]})
        truth = 0.47 * frame.v_lag1 + (-0.45) * frame.v_lag2 + \
            model2_nonlinear(frame.x_lag1, frame.x_lag2)
        return frame, truth.to_numpy()
    # linear: y = x1 - 0.5 x2 + phi(z) with phi = 0
    X = draw(g, Normal(0.0, 1.0), (n, 3))
    return pd.DataFrame({"x1": X[:, 0], "x2": X[:, 1], "z": X[:, 2]}), X[:, 0] - 0.5 * X[:, 1]


def generate(spec: DgpSpec, replication: int = 0) -> pd.DataFrame:
    """Frame with regressors, ``y`` and the noiseless ``truth`` column.

    Regressors depend only on ``spec.seed``; the noise depends on the seed
    and ``replication``, so replications share the design.
    """
    reg_stream, noise_stream = _streams(spec, replication)
    frame, truth = _regressors(spec, reg_stream)
    sigma = spec.sigma
    noise = draw(noise_stream, Normal(0.0, sigma), spec.n) if sigma > 0 else np.zeros(spec.n)
    frame = frame.copy()
    frame["y"] = truth + noise
    frame["truth"] = truth
    frame.index.name = "t"
    return frame
