"""Exact rate polynomials  sum coeff * gamma^a * (1 - gamma)^b  /  normalization."""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterable, Mapping
from fractions import Fraction
from math import comb
import re


class RatePolynomial:
    """Integer combination of gamma^a (1-gamma)^b terms, divided by ``normalization``.

    Per-user rates carry normalization K; totals and bit counts per F carry 1.
    Two polynomials compare equal when they agree as functions of gamma,
    i.e. after expanding into the monomial basis; their (a, b)
    representations may differ.
    """

    __slots__ = ("coefficients", "normalization")

    def __init__(self, coefficients: Mapping[tuple[int, int], int] | Iterable = (), normalization: int = 1):
        counts: Counter = Counter()
        items = coefficients.items() if isinstance(coefficients, Mapping) else coefficients
        for (a, b), coeff in items:
            if a < 0 or b < 0:
                raise ValueError(f"negative exponent in term ({a},{b})")
            counts[(int(a), int(b))] += int(coeff)
        self.coefficients = {k: v for k, v in sorted(counts.items()) if v}
        if normalization < 0:
            raise ValueError("normalization must be non-negative")
        self.normalization = int(normalization)

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[int, int]], normalization: int = 1) -> RatePolynomial:
        """One unit coefficient per (a, b) occurrence in ``terms``."""
        return cls(Counter(terms), normalization)

    def __call__(self, gamma):
        """Value at ``gamma``; exact when gamma is an int or Fraction."""
        if self.normalization == 0:
            raise ZeroDivisionError("rate per user is undefined for K = 0")
        g = gamma
        one_minus = 1 - g
        total = sum(coeff * g**a * one_minus**b for (a, b), coeff in self.coefficients.items())
        if isinstance(g, (int, Fraction)):
            return Fraction(total, 1) / self.normalization
        return total / self.normalization

    def total(self) -> RatePolynomial:
        """The un-normalized polynomial (e.g. per-user rate times K)."""
        return RatePolynomial(self.coefficients, 1)

    def expand(self) -> tuple[Fraction, ...]:
        """Coefficients in the basis 1, gamma, gamma^2, ... (normalization applied)."""
        degree = max((a + b for a, b in self.coefficients), default=0)
        out = [0] * (degree + 1)
        for (a, b), coeff in self.coefficients.items():
            for j in range(b + 1):
                out[a + j] += coeff * comb(b, j) * (-1) ** j
        while len(out) > 1 and out[-1] == 0:
            out.pop()
        if self.normalization == 0:
            if any(out):
                raise ZeroDivisionError("non-zero polynomial with zero normalization")
            return (Fraction(0),)
        return tuple(Fraction(v, self.normalization) for v in out)

    def __eq__(self, other):
        if not isinstance(other, RatePolynomial):
            return NotImplemented
        return self.expand() == other.expand()

    def __hash__(self):
        return hash(self.expand())

    def __add__(self, other: RatePolynomial) -> RatePolynomial:
        return self._combine(other, 1)

    def __sub__(self, other: RatePolynomial) -> RatePolynomial:
        return self._combine(other, -1)

    def _combine(self, other, sign):
        if not isinstance(other, RatePolynomial):
            return NotImplemented
        if self.normalization == other.normalization:
            merged = Counter(self.coefficients)
            for k, v in other.coefficients.items():
                merged[k] += sign * v
            return RatePolynomial(merged, self.normalization)
        merged = Counter({k: v * other.normalization for k, v in self.coefficients.items()})
        for k, v in other.coefficients.items():
            merged[k] += sign * v * self.normalization
        return RatePolynomial(merged, self.normalization * other.normalization)

    def scale(self, factor: int) -> RatePolynomial:
        return RatePolynomial({k: v * factor for k, v in self.coefficients.items()}, self.normalization)

    def __str__(self):
        terms = " ".join(f"({a},{b}):{v}" for (a, b), v in self.coefficients.items())
        return f"[{terms}]/{self.normalization}"

    def __repr__(self):
        return f"RatePolynomial({self.coefficients!r}, normalization={self.normalization})"

    def pretty(self) -> str:
        def mono(a, b):
            parts = []
            if a:
                parts.append("g" if a == 1 else f"g^{a}")
            if b:
                parts.append("(1-g)" if b == 1 else f"(1-g)^{b}")
            return "*".join(parts) or "1"

        body = " + ".join(
            (mono(a, b) if v == 1 else f"{v}*{mono(a, b)}") for (a, b), v in self.coefficients.items()
        ) or "0"
        return body if self.normalization == 1 else f"[{body}]/{self.normalization}"

    _TERM = re.compile(r"\((\d+),(\d+)\):(-?\d+)")

    @classmethod
    def parse(cls, text: str) -> RatePolynomial:
        body, _, norm = text.strip().rpartition("/")
        if not (body.startswith("[") and body.endswith("]")):
            raise ValueError(f"not a serialized rate polynomial: {text!r}")
        terms = {(int(a), int(b)): int(v) for a, b, v in cls._TERM.findall(body)}
        return cls(terms, int(norm))
