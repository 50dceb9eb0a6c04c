"""Polarization angles on the half-turn circle.

Linear polarization is orientation, not direction: an angle and the same
angle plus a half turn describe the same state, so every value is reduced
modulo pi at construction.  Equality is circular and carries a small
tolerance, which makes instances unhashable by design.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

PI = math.pi

#: Two angles closer than this (circularly, mod pi) compare equal.
ANGLE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PolAngle:
    """An angle in radians, canonically reduced into [0, pi)."""

    value: float

    def __post_init__(self):
        v = float(self.value)
        if not math.isfinite(v):
            raise ValueError(f"non-finite angle: {v!r}")
        v = v % PI
        if v >= PI:  # ``%`` can round up to the modulus itself
            v = 0.0
        object.__setattr__(self, "value", v)

    @classmethod
    def from_degrees(cls, degrees: float) -> "PolAngle":
        return cls(math.radians(degrees))

    @property
    def degrees(self) -> float:
        return math.degrees(self.value)

    def perpendicular(self) -> "PolAngle":
        """The orthogonal polarization (a quarter turn away)."""
        return PolAngle(self.value + PI / 2)

    def rotated(self, offset: float) -> "PolAngle":
        return PolAngle(self.value + offset)

    def separation(self, other: "PolAngle") -> float:
        """Circular distance mod pi, in [0, pi/2]."""
        d = abs(self.value - other.value) % PI
        return min(d, PI - d)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolAngle):
            return NotImplemented
        return self.separation(other) < ANGLE_TOL

    # Tolerance-based equality cannot be made consistent with hashing.
    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"PolAngle({self.value:.12g})"
