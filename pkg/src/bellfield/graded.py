"""Truncated bivariate polynomials in the model's two small parameters.

Relative probabilities in the random-field model are polynomials in the
detector absorption scale (``alpha`` throughout) and the polarizer
conversion cost (``beta``).  Keeping both formal makes small-parameter
limits exact: the limiting value of a ratio is read off the lowest
surviving orders instead of being estimated at some finite parameter value.

Coefficients are exact rationals internally, so addition and multiplication
are commutative, associative and distributive *exactly* -- several
downstream identities are asserted term-by-term and would not survive float
reassociation.  Floats are accepted at the boundary and converted
losslessly (every float is a rational).
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Mapping, Tuple, Union

Scalar = Union[int, float, Fraction]
Key = Tuple[int, int]  # (alpha exponent, beta exponent)

DEFAULT_MAX_TOTAL_DEGREE = 8


class MismatchedAlphaOrder(ArithmeticError):
    """The ratio's small-parameter limit would depend on alpha.

    Raised when numerator and denominator carry different minimal alpha
    orders: the joint limit is then direction-dependent, so we refuse to
    guess.
    """


class DivergentLimit(ArithmeticError):
    """The numerator dominates the denominator as beta goes to zero."""


def _as_fraction(x: Scalar) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite coefficient: {x!r}")
        return Fraction(x)
    raise TypeError(f"unsupported coefficient type: {type(x).__name__}")


class GradedCoeff:
    """Polynomial ``sum c_ij * alpha^i * beta^j`` truncated by total degree.

    Immutable.  Terms with a zero coefficient or with ``i + j`` above
    ``max_total_degree`` are never stored.
    """

    __slots__ = ("_terms", "max_total_degree")

    def __init__(
        self,
        terms: Mapping[Key, Scalar] | None = None,
        max_total_degree: int = DEFAULT_MAX_TOTAL_DEGREE,
    ):
        if max_total_degree < 0:
            raise ValueError("max_total_degree must be nonnegative")
        object.__setattr__(self, "max_total_degree", max_total_degree)
        clean: dict[Key, Fraction] = {}
        for (i, j), c in (terms or {}).items():
            if i < 0 or j < 0:
                raise ValueError(f"negative exponent in term ({i}, {j})")
            if i + j > max_total_degree:
                continue
            f = _as_fraction(c)
            if f != 0:
                clean[(i, j)] = f
        object.__setattr__(self, "_terms", clean)

    def __setattr__(self, name, value):  # pragma: no cover - immutability guard
        raise AttributeError("GradedCoeff is immutable")

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, c: Scalar, max_total_degree: int = DEFAULT_MAX_TOTAL_DEGREE) -> "GradedCoeff":
        return cls({(0, 0): c}, max_total_degree)

    @classmethod
    def zero(cls, max_total_degree: int = DEFAULT_MAX_TOTAL_DEGREE) -> "GradedCoeff":
        if max_total_degree == DEFAULT_MAX_TOTAL_DEGREE:
            return _ZERO  # immutable, safe to share
        return cls({}, max_total_degree)

    @classmethod
    def one(cls, max_total_degree: int = DEFAULT_MAX_TOTAL_DEGREE) -> "GradedCoeff":
        return cls.constant(1, max_total_degree)

    @classmethod
    def term(
        cls,
        c: Scalar,
        alpha_exp: int = 0,
        beta_exp: int = 0,
        max_total_degree: int = DEFAULT_MAX_TOTAL_DEGREE,
    ) -> "GradedCoeff":
        return cls({(alpha_exp, beta_exp): c}, max_total_degree)

    @classmethod
    def alpha(cls, max_total_degree: int = DEFAULT_MAX_TOTAL_DEGREE) -> "GradedCoeff":
        return cls.term(1, 1, 0, max_total_degree)

    @classmethod
    def beta(cls, max_total_degree: int = DEFAULT_MAX_TOTAL_DEGREE) -> "GradedCoeff":
        return cls.term(1, 0, 1, max_total_degree)

    # -- queries -----------------------------------------------------------

    @property
    def terms(self) -> dict[Key, Fraction]:
        return dict(self._terms)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    @property
    def is_constant(self) -> bool:
        return not self._terms or set(self._terms) == {(0, 0)}

    def constant_value(self) -> Fraction:
        if not self.is_constant:
            raise ValueError(f"not a constant: {self!r}")
        return self._terms.get((0, 0), Fraction(0))

    def min_alpha_order(self) -> int:
        if not self._terms:
            raise ValueError("zero polynomial has no alpha order")
        return min(i for i, _ in self._terms)

    def min_beta_order(self) -> int:
        if not self._terms:
            raise ValueError("zero polynomial has no beta order")
        return min(j for _, j in self._terms)

    def at_alpha_order(self, order: int) -> dict[int, Fraction]:
        """Coefficients of alpha^order, keyed by beta exponent."""
        return {j: c for (i, j), c in self._terms.items() if i == order}

    def leading_terms(self) -> dict[Key, Fraction]:
        """Terms at the minimal total degree (empty for zero)."""
        if not self._terms:
            return {}
        lead = min(i + j for i, j in self._terms)
        return {k: c for k, c in self._terms.items() if k[0] + k[1] == lead}

    def eval(self, alpha: float, beta: float) -> float:
        """Numeric value at concrete parameter values."""
        return float(
            sum(c * Fraction(alpha) ** i * Fraction(beta) ** j for (i, j), c in self._terms.items())
        )

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> "GradedCoeff | None":
        if isinstance(other, GradedCoeff):
            return other
        if isinstance(other, (int, float, Fraction)):
            return GradedCoeff.constant(other, self.max_total_degree)
        return None

    def __add__(self, other) -> "GradedCoeff":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        out = dict(self._terms)
        for k, c in o._terms.items():
            out[k] = out.get(k, Fraction(0)) + c
        return GradedCoeff(out, min(self.max_total_degree, o.max_total_degree))

    __radd__ = __add__

    def __neg__(self) -> "GradedCoeff":
        return GradedCoeff({k: -c for k, c in self._terms.items()}, self.max_total_degree)

    def __sub__(self, other) -> "GradedCoeff":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other) -> "GradedCoeff":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other) -> "GradedCoeff":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        cap = min(self.max_total_degree, o.max_total_degree)
        out: dict[Key, Fraction] = {}
        for (i1, j1), c1 in self._terms.items():
            for (i2, j2), c2 in o._terms.items():
                i, j = i1 + i2, j1 + j2
                if i + j > cap:
                    continue
                k = (i, j)
                out[k] = out.get(k, Fraction(0)) + c1 * c2
        return GradedCoeff(out, cap)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self._terms == o._terms

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __repr__(self) -> str:
        if not self._terms:
            return "GradedCoeff(0)"
        parts = []
        for (i, j), c in sorted(self._terms.items()):
            factors = [f"{float(c):g}"]
            if i:
                factors.append(f"a^{i}" if i > 1 else "a")
            if j:
                factors.append(f"b^{j}" if j > 1 else "b")
            parts.append("*".join(factors))
        return f"GradedCoeff({' + '.join(parts)})"


_ZERO = GradedCoeff({}, DEFAULT_MAX_TOTAL_DEGREE)


def coeff_ratio_limit(num: GradedCoeff, den: GradedCoeff) -> float:
    """Limit of ``num/den`` as both small parameters go to zero.

    The alpha dependence must cancel (same minimal alpha order on both
    sides); among the surviving terms the limit is the ratio of the
    coefficients at the denominator's minimal beta order.  A numerator of
    strictly higher beta order vanishes in the limit.
    """
    if den.is_zero:
        raise ZeroDivisionError("ratio limit with zero denominator")
    if num.is_zero:
        return 0.0
    a_num = num.min_alpha_order()
    a_den = den.min_alpha_order()
    if a_num != a_den:
        raise MismatchedAlphaOrder(
            f"numerator carries alpha^{a_num} but denominator alpha^{a_den}; "
            "the limit depends on alpha"
        )
    num_by_beta = num.at_alpha_order(a_num)
    den_by_beta = den.at_alpha_order(a_den)
    b_den = min(den_by_beta)
    b_num = min(num_by_beta)
    if b_num > b_den:
        return 0.0
    if b_num < b_den:
        raise DivergentLimit(
            f"numerator is beta^{b_num} against denominator beta^{b_den}"
        )
    return float(num_by_beta[b_den] / den_by_beta[b_den])
