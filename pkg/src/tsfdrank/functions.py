"""Increasing concave functions used for user fairness and diversity.

Two families are supported: a shifted logarithm ``log(x + shift)`` and a
continuous piecewise-linear function with decreasing positive slopes.  Both
expose value, a supergradient, the inverse and their domain so that the
solvers can keep iterates feasible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError


class ConcaveFn:
    """Interface shared by the supported concave families."""

    #: infimum of the open domain; ``-inf`` when defined everywhere
    lower: float = -np.inf

    def __call__(self, x):
        raise NotImplementedError

    def derivative(self, x):
        raise NotImplementedError

    def inverse(self, y):
        raise NotImplementedError

    def in_domain(self, x) -> bool:
        return bool(np.all(np.asarray(x, dtype=float) > self.lower))

    def check_domain(self, x, what: str = "input") -> None:
        if not self.in_domain(x):
            xs = np.atleast_1d(np.asarray(x, dtype=float))
            raise DomainError(
                f"{what} {xs.min():.6g} outside domain (> {self.lower:.6g}) of {self!r}"
            )

    def to_dict(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_dict(d: dict) -> "ConcaveFn":
        kind = d.get("kind")
        if kind == "shifted_log":
            return ShiftedLog(float(d["shift"]))
        if kind == "piecewise_linear":
            return PiecewiseLinear(tuple(d["slopes"]), tuple(d["breakpoints"]))
        raise ValueError(f"unknown concave function kind {kind!r}")


@dataclass(frozen=True)
class ShiftedLog(ConcaveFn):
    """``x -> log(x + shift)`` on ``x > -shift``."""

    shift: float = 0.0

    @property
    def lower(self) -> float:  # type: ignore[override]
        return -float(self.shift)

    def __call__(self, x):
        self.check_domain(x)
        return np.log(np.asarray(x, dtype=float) + self.shift)

    def derivative(self, x):
        self.check_domain(x)
        return 1.0 / (np.asarray(x, dtype=float) + self.shift)

    def inverse(self, y):
        return np.exp(np.asarray(y, dtype=float)) - self.shift

    def to_dict(self) -> dict:
        return {"kind": "shifted_log", "shift": self.shift}


@dataclass(frozen=True)
class PiecewiseLinear(ConcaveFn):
    """Continuous concave piecewise-linear function with ``f(t_1) = 0``.

    ``slopes`` has one more entry than ``breakpoints``: slope ``k_1`` applies
    left of ``t_1``, ``k_{j+1}`` between ``t_j`` and ``t_{j+1}``, and the last
    slope right of the last breakpoint.
    """

    slopes: tuple
    breakpoints: tuple

    def __post_init__(self):
        k = np.asarray(self.slopes, dtype=float)
        t = np.asarray(self.breakpoints, dtype=float)
        if k.ndim != 1 or t.ndim != 1 or len(k) != len(t) + 1 or len(t) < 1:
            raise ValueError("need len(slopes) == len(breakpoints) + 1 >= 2")
        if np.any(k <= 0) or np.any(np.diff(k) >= 0):
            raise ValueError("slopes must be positive and strictly decreasing")
        if np.any(np.diff(t) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "slopes", tuple(float(v) for v in k))
        object.__setattr__(self, "breakpoints", tuple(float(v) for v in t))

    def _values_at_breakpoints(self) -> np.ndarray:
        t = np.asarray(self.breakpoints)
        k = np.asarray(self.slopes)
        return np.concatenate([[0.0], np.cumsum(k[1:-1] * np.diff(t))])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        t = np.asarray(self.breakpoints)
        k = np.asarray(self.slopes)
        ft = self._values_at_breakpoints()
        # segment j covers (t_{j-1}, t_j]; segment 0 is x <= t_1
        j = np.searchsorted(t, x, side="left")
        anchor = np.where(j == 0, 0, j - 1)
        return ft[anchor] + k[j] * (x - t[anchor])

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        j = np.searchsorted(np.asarray(self.breakpoints), x, side="left")
        return np.asarray(self.slopes)[j]

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        t = np.asarray(self.breakpoints)
        k = np.asarray(self.slopes)
        ft = self._values_at_breakpoints()
        j = np.searchsorted(ft, y, side="left")
        anchor = np.where(j == 0, 0, j - 1)
        return t[anchor] + (y - ft[anchor]) / k[j]

    def to_dict(self) -> dict:
        return {
            "kind": "piecewise_linear",
            "slopes": list(self.slopes),
            "breakpoints": list(self.breakpoints),
        }


def parse_concave(spec: str) -> ConcaveFn:
    """Parse ``"log:-0.6"`` or ``"pwl:k1,k2;t1"`` into a concave function."""
    kind, _, rest = spec.partition(":")
    if kind == "log":
        return ShiftedLog(float(rest or 0.0))
    if kind == "pwl":
        ks, _, ts = rest.partition(";")
        return PiecewiseLinear(
            tuple(float(v) for v in ks.split(",")), tuple(float(v) for v in ts.split(","))
        )
    raise ValueError(f"cannot parse concave function {spec!r}")
