"""Per-column penalty tags for the regularized logistic objective.

A penalty assignment is a sequence with exactly one tag per design column,
always constructed from the column directory (by block), never by position
in some unrelated list.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

from icepartial.errors import DimensionMismatch, InvalidConfig


@dataclass(frozen=True)
class Ridge:
    """Gaussian prior: contributes coef^2 / (2 sigma^2) to the objective."""

    sigma: float = 1.0

    def __post_init__(self):
        if not (self.sigma > 0):
            raise InvalidConfig(f"ridge sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class Laplace:
    """Fixed-weight L1 prior: contributes rate * |coef|."""

    rate: float

    def __post_init__(self):
        if not (self.rate > 0):
            raise InvalidConfig(f"laplace rate must be positive, got {self.rate}")


@dataclass(frozen=True)
class GammaLasso:
    """Gamma-mixed L1 prior: contributes s * log(1 + |coef| / r).

    The implied adaptive L1 weight at coefficient value b is s / (r + |b|),
    so the expected penalty rate at zero is s / r.
    """

    s: float
    r: float

    def __post_init__(self):
        if not (self.s > 0) or not (self.r > 0):
            raise InvalidConfig(f"gamma-lasso needs s > 0 and r > 0, got s={self.s} r={self.r}")

    @property
    def expected_rate(self) -> float:
        return self.s / self.r

    def weight_at(self, value: float) -> float:
        return self.s / (self.r + abs(value))


Penalty = Union[Ridge, Laplace, GammaLasso]


def gamma_lasso_for(elambda: float) -> GammaLasso:
    """Gamma-lasso tag for a target expected penalty rate.

    Keeps the prior-variance convention var = 2 * E[rate]: shape s = elambda / 2
    and inverse-scale r = 1/2, so s / r = elambda.
    """
    if not (elambda > 0):
        raise InvalidConfig(f"expected penalty rate must be positive, got {elambda}")
    return GammaLasso(s=elambda / 2.0, r=0.5)


def validate_penalties(penalties: Sequence[Penalty], n_cols: int) -> None:
    if len(penalties) != n_cols:
        raise DimensionMismatch(
            f"{len(penalties)} penalty tags for {n_cols} design columns"
        )
    for j, pen in enumerate(penalties):
        if not isinstance(pen, (Ridge, Laplace, GammaLasso)):
            raise InvalidConfig(f"column {j}: unsupported penalty tag {pen!r}")


def penalty_to_dict(pen: Penalty) -> dict:
    if isinstance(pen, Ridge):
        return {"kind": "ridge", "sigma": pen.sigma}
    if isinstance(pen, Laplace):
        return {"kind": "laplace", "rate": pen.rate}
    if isinstance(pen, GammaLasso):
        return {"kind": "gamma_lasso", "s": pen.s, "r": pen.r}
    raise InvalidConfig(f"unsupported penalty tag {pen!r}")


def penalty_from_dict(data: dict) -> Penalty:
    kind = data.get("kind")
    if kind == "ridge":
        return Ridge(sigma=data["sigma"])
    if kind == "laplace":
        return Laplace(rate=data["rate"])
    if kind == "gamma_lasso":
        return GammaLasso(s=data["s"], r=data["r"])
    raise InvalidConfig(f"unsupported penalty kind {kind!r}")
