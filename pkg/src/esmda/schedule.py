"""Inflation-coefficient schedules.

A schedule ``alpha_1..alpha_Na`` must have reciprocals summing to one for the
linear-Gaussian case to end on the correct posterior.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

TOLERANCE = 1e-12


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class Validation:
    ok: bool
    residual: float
    message: str = ""

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class AlphaSchedule:
    alphas: tuple[float, ...]

    def __post_init__(self):
        alphas = tuple(float(a) for a in self.alphas)
        if not alphas:
            raise ScheduleError("schedule must contain at least one coefficient")
        if not all(math.isfinite(a) and a > 0.0 for a in alphas):
            raise ScheduleError(f"inflation coefficients must be finite and > 0, got {list(alphas)}")
        object.__setattr__(self, "alphas", alphas)

    @property
    def n_a(self) -> int:
        return len(self.alphas)

    def __len__(self):
        return len(self.alphas)

    def __iter__(self):
        return iter(self.alphas)

    def __getitem__(self, i):
        return self.alphas[i]

    def to_dict(self) -> dict:
        return {"type": "explicit", "alphas": list(self.alphas)}


def equal_weights(n_a: int) -> AlphaSchedule:
    if n_a < 1:
        raise ScheduleError(f"number of assimilations must be >= 1, got {n_a}")
    return AlphaSchedule((float(n_a),) * n_a)


def geometric_decreasing(n_a: int, ratio: float) -> AlphaSchedule:
    """``alpha_l = a * ratio**(l-1)`` with ``a = sum_i ratio**-i`` so the reciprocals sum to one."""
    if n_a < 1:
        raise ScheduleError(f"number of assimilations must be >= 1, got {n_a}")
    if not 0.0 < ratio < 1.0:
        raise ScheduleError(f"ratio must lie in (0, 1), got {ratio}")
    a = math.fsum(ratio ** -i for i in range(n_a))
    return AlphaSchedule(tuple(a * ratio**i for i in range(n_a)))


def explicit(alphas: Sequence[float]) -> AlphaSchedule:
    return AlphaSchedule(tuple(alphas))


def validate(schedule: AlphaSchedule | Sequence[float]) -> Validation:
    alphas = list(schedule.alphas if isinstance(schedule, AlphaSchedule) else schedule)
    if not alphas:
        return Validation(False, -1.0, "empty schedule")
    if not all(math.isfinite(a) and a > 0.0 for a in alphas):
        return Validation(False, math.nan, "inflation coefficients must all be > 0")
    residual = math.fsum(1.0 / a for a in alphas) - 1.0
    if abs(residual) > TOLERANCE:
        return Validation(
            False,
            residual,
            f"sum of 1/alpha must equal 1 (got residual {residual:+.3e}); "
            "required for the correct linear-Gaussian posterior",
        )
    return Validation(True, residual)


def from_dict(spec: dict) -> AlphaSchedule:
    """Build a schedule from ``{"type": "equal"|"geometric"|"explicit", ...}``."""
    kind = spec.get("type")
    allowed = {"equal": {"type", "n_a"}, "geometric": {"type", "n_a", "ratio"}, "explicit": {"type", "alphas"}}
    if kind not in allowed:
        raise ScheduleError(f"unknown schedule type {kind!r}; expected one of {sorted(allowed)}")
    extra = set(spec) - allowed[kind]
    missing = allowed[kind] - set(spec)
    if extra:
        raise ScheduleError(f"unknown keys for {kind} schedule: {sorted(extra)}")
    if missing:
        raise ScheduleError(f"missing keys for {kind} schedule: {sorted(missing)}")
    if kind == "equal":
        return equal_weights(_count(spec["n_a"]))
    if kind == "geometric":
        return geometric_decreasing(_count(spec["n_a"]), float(spec["ratio"]))
    if not isinstance(spec["alphas"], list):
        raise ScheduleError("explicit schedule 'alphas' must be a list of numbers")
    return explicit(spec["alphas"])


def _count(value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScheduleError(f"n_a must be an integer, got {value!r}")
    return value
