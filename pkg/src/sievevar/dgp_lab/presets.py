"""Named study configurations shared by the CLI and the acceptance suite."""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..sieve_net import TrainConfig
from .dgps import DgpSpec
from .estimators import Ann, KernelPlm, LinearModel, LocalLinear, MeanModel, Sann, TrueModel

__all__ = ["Study", "PRESETS", "TABLE2_TRAIN", "TABLE3_TRAIN", "FIT_TRAIN", "SWEEP_ORDERS",
           "CHAOS_SIZES", "table2", "table3", "fig2", "fig3", "parse_cell"]

# momentum GD with a light L1 penalty on the output layer
TABLE2_TRAIN = TrainConfig(l1_penalty=0.01)
TABLE3_TRAIN = TrainConfig(optimizer="adam", learning_rate=0.01, init="quantile",
                           l1_penalty=0.001)
# unpenalized approximation runs (noiseless chaos map, sieve-order sweep)
FIT_TRAIN = TrainConfig(optimizer="adam", learning_rate=0.01, init="quantile",
                        solve_output=True, max_epochs=3000)
SWEEP_ORDERS = (2, 5, 10, 25, 50, 100)
CHAOS_SIZES = (2, 5, 10, 25, 50)


@dataclass(frozen=True)
class Study:
    name: str
    spec: DgpSpec
    estimators: tuple = ()
    B: int = 50
    split: object = None
    orders: tuple = ()
    train_config: TrainConfig = field(default_factory=TrainConfig)


def parse_cell(cell: str) -> tuple[int, int]:
    m = re.fullmatch(r"\s*(\d+)\s*[xX]\s*(\d+)\s*", str(cell))
    if not m:
        raise ValueError(f"cell must look like '2x1' (relevant x noise), got {cell!r}")
    return int(m.group(1)), int(m.group(2))


def table2(cell: str = "2x1", n: int = 500, B: int = 10, seed: int = 0, noise_sd=None,
           hidden: int = 25) -> Study:
    """High-dimensional comparison of local-linear and sieve regression."""
    rel, irr = parse_cell(cell)
    spec = DgpSpec("high_dim", n=n, seed=seed, relevant=rel, irrelevant=irr, noise_sd=noise_sd)
    ests = (LocalLinear(), Ann(hidden_sizes=(hidden,), train_config=TABLE2_TRAIN), LinearModel())
    return Study(f"table2_{rel}x{irr}", spec, ests, B)


def table3(model: str = "model2", n: int = 1250, B: int = 20, seed: int = 0,
           hidden: int = 25) -> Study:
    """Partially linear designs: ``model1``, ``model2`` or ``model2a`` (all inputs in both parts)."""
    if model not in ("model1", "model2", "model2a"):
        raise ValueError(f"unknown table3 model {model!r}")
    spec = DgpSpec("model2" if model == "model2a" else model, n=n, seed=seed)
    h = (hidden,)
    ests = [TrueModel(), Sann(hidden_sizes=h, train_config=TABLE3_TRAIN), LinearModel(),
            Ann(hidden_sizes=h, train_config=TABLE3_TRAIN)]
    if model == "model1":
        ests.insert(2, KernelPlm())
    if model == "model2a":
        ests.insert(2, Sann(name="sann_all", hidden_sizes=h, train_config=TABLE3_TRAIN,
                            overlap=True))
    return Study(f"table3_{model}", spec, tuple(ests), B, split=250)


def fig2(seed: int = 0, n: int = 400) -> Study:
    """Noiseless chaos map fitted with growing hidden layers."""
    return Study("fig2", DgpSpec("chaos", n=n, seed=seed), orders=CHAOS_SIZES,
                 train_config=FIT_TRAIN)


def fig3(B: int = 20, seed: int = 0, n: int = 400) -> Study:
    """Bias/variance decomposition across sieve orders on the irregular iid design."""
    return Study("fig3", DgpSpec("irregular_iid", n=n, seed=seed), (TrueModel(), MeanModel()),
                 B, orders=SWEEP_ORDERS, train_config=FIT_TRAIN)


PRESETS = {"table2": table2, "table3": table3, "fig2": fig2, "fig3": fig3}
