"""Tolerance schedules for the builder and window functions for estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class ToleranceSchedule:
    """Cover radius ``eps(i)``, ball radius ``delta(i)`` and slack ``zeta(i)``.

    Two families are supported, both starting from ``eps(1) = 2`` and
    ``delta(1) = 4 (k + 1)``:

    ``geometric``
        ``eps(i) = 2 * eps_rate**(i-1)``, ``delta(i) = 4(k+1) * delta_rate**(i-1)``.
    ``power``
        ``eps(i) = 2 * i**-eps_rate``, ``delta(i) = 4(k+1) * i**-delta_rate``.

    ``zeta`` follows the delta family scaled by ``zeta0`` (zero by default:
    cover centres lie on the target polyline).
    """

    k: int
    kind: str = "geometric"
    eps_rate: float = 0.5
    delta_rate: float = 0.5
    zeta0: float = 0.0

    def __post_init__(self):
        self.validate()

    def _decay(self, rate: float, i: int) -> float:
        if self.kind == "geometric":
            return rate ** (i - 1)
        return float(i) ** (-rate)

    def eps(self, i: int) -> float:
        return 2.0 * self._decay(self.eps_rate, i)

    def delta(self, i: int) -> float:
        return 4.0 * (self.k + 1) * self._decay(self.delta_rate, i)

    def zeta(self, i: int) -> float:
        return self.zeta0 * self._decay(self.delta_rate, i)

    def validate(self) -> None:
        if self.k < 2:
            raise ScheduleError(f"k must be at least 2, got {self.k}")
        if self.kind == "geometric":
            ok = 0 < self.eps_rate < 1 and 0 < self.delta_rate < 1
        elif self.kind == "power":
            ok = self.eps_rate > 0 and self.delta_rate > 0
        else:
            raise ScheduleError(f"unknown schedule kind {self.kind!r}")
        if not ok:
            raise ScheduleError(
                f"{self.kind} schedule rates must make eps and delta decrease to 0: "
                f"eps_rate={self.eps_rate}, delta_rate={self.delta_rate}"
            )
        if self.zeta0 < 0:
            raise ScheduleError("zeta0 must be nonnegative")

    def block_length(self, i: int) -> int:
        """``v_i = ceil(4(k+1) / delta_i) + 1``, so ``4(k+1)/v_i < delta_i``."""
        return math.ceil(Fraction(4 * (self.k + 1)) / Fraction(self.delta(i))) + 1

    def min_length(self, i: int) -> int:
        """Smallest ``l`` with ``2 v_i / (l + v_i) <= delta_i``, computed exactly."""
        v = self.block_length(i)
        d = Fraction(self.delta(i))
        return max(1, math.ceil(Fraction(2 * v) / d - v))

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "kind": self.kind,
            "eps_rate": self.eps_rate,
            "delta_rate": self.delta_rate,
            "zeta0": self.zeta0,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ToleranceSchedule":
        return cls(**d)

    @classmethod
    def default(cls, k: int) -> "ToleranceSchedule":
        return cls(k=k)


@dataclass(frozen=True)
class WindowFunction:
    """A named map ``n -> kappa(n)`` with ``1 <= kappa(n) <= n``, nondecreasing.

    Specs: ``"sqrt"`` (``ceil(sqrt(n))``), ``"identity"`` (``n``),
    ``"pow:a"`` (``ceil(n**a)``, ``0 < a <= 1``), ``"log"``
    (``ceil(log(n)**2)`` clipped to ``[1, n]``), ``"frac:c"``
    (``ceil(c * n)``, ``0 < c <= 1``).
    """

    spec: str = "sqrt"
    _exp: float = field(default=0.5, repr=False, compare=False)

    def __post_init__(self):
        name, _, arg = self.spec.partition(":")
        if name == "sqrt":
            exp = 0.5
        elif name == "identity":
            exp = 1.0
        elif name == "pow":
            exp = float(arg)
            if not 0 < exp <= 1:
                raise ScheduleError(f"pow exponent must be in (0, 1], got {exp}")
        elif name == "frac":
            exp = float(arg)
            if not 0 < exp <= 1:
                raise ScheduleError(f"frac must be in (0, 1], got {exp}")
        elif name == "log":
            exp = 0.0
        else:
            raise ScheduleError(f"unknown window spec {self.spec!r}")
        object.__setattr__(self, "_exp", exp)

    def __call__(self, n: int) -> int:
        if n < 1:
            raise ScheduleError(f"window undefined for n={n}")
        name = self.spec.partition(":")[0]
        if name == "sqrt":
            val = math.isqrt(n - 1) + 1  # exact ceil(sqrt(n))
        elif name == "identity":
            val = n
        elif name == "frac":
            val = math.ceil(self._exp * n)
        elif name == "log":
            val = math.ceil(math.log(n) ** 2)
        else:
            val = math.ceil(n ** self._exp)
        return min(max(val, 1), n)

    def array(self, n_max: int):
        """``kappa(n)`` for ``n = 1..n_max`` as an int64 array."""
        import numpy as np

        n = np.arange(1, n_max + 1, dtype=np.int64)
        name = self.spec.partition(":")[0]
        if name == "sqrt":
            val = np.ceil(np.sqrt(n.astype(float))).astype(np.int64)
            # fix float rounding around perfect squares
            val -= ((val - 1) * (val - 1) >= n).astype(np.int64)
            val += (val * val < n).astype(np.int64)
        elif name == "identity":
            val = n.copy()
        elif name == "frac":
            val = np.ceil(self._exp * n).astype(np.int64)
        elif name == "log":
            val = np.ceil(np.log(n) ** 2).astype(np.int64)
        else:
            val = np.ceil(n.astype(float) ** self._exp).astype(np.int64)
        return np.minimum(np.maximum(val, 1), n)


def parse_window(spec) -> WindowFunction:
    if isinstance(spec, WindowFunction):
        return spec
    return WindowFunction(str(spec))
