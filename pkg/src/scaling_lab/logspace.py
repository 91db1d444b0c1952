"""Overflow-safe log-domain arithmetic over iterated-logarithm towers.

A ``Tower`` holds a chain of atoms ``a[0] > a[1] > ...`` with
``a[k] = exp(a[k+1])`` (for example ``L, ln L, ln ln L``).  A ``LogQuantity``
is an exact rational combination of atoms plus a float constant, so
leading-order cancellations between huge terms are done in exact arithmetic
and only the small remainder touches floating point.  Plain floats are
accepted everywhere and follow the same code paths.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence, Tuple, Union

F = Fraction
Number = Union[int, float, Fraction]

_EXP_SAFE = 700.0


def _exp(x: float) -> float:
    if x > _EXP_SAFE + 9:
        return math.inf
    return math.exp(x)


class Tower:
    """Iterated-logarithm chain ``a[k] = exp(a[k+1])``."""

    __slots__ = ("atoms",)

    def __init__(self, atoms: Sequence[float]):
        self.atoms = tuple(float(a) for a in atoms)
        if not self.atoms:
            raise ValueError("empty tower")
        if not math.isfinite(self.atoms[-1]):
            raise ValueError("deepest atom must be finite")

    @classmethod
    def from_level(cls, level: int, value: float, depth: int) -> "Tower":
        """Chain of ``depth`` atoms whose atom ``level`` equals ``value``."""
        if not 0 <= level < depth:
            raise ValueError("level out of range")
        atoms = [0.0] * depth
        atoms[level] = float(value)
        for k in range(level - 1, -1, -1):
            atoms[k] = _exp(atoms[k + 1])
        for k in range(level + 1, depth):
            if atoms[k - 1] <= 0:
                raise ValueError("tower atom must be positive to take its log")
            atoms[k] = math.log(atoms[k - 1])
        return cls(atoms)

    def __len__(self) -> int:
        return len(self.atoms)

    def log_atom(self, m: int) -> float:
        if m + 1 < len(self.atoms):
            return self.atoms[m + 1]
        return math.log(self.atoms[m])

    def __eq__(self, other) -> bool:
        return isinstance(other, Tower) and other.atoms == self.atoms

    def __hash__(self) -> int:
        return hash(self.atoms)

    def __repr__(self) -> str:
        return f"Tower({list(self.atoms)!r})"


class LogQuantity:
    """``sum_k coeffs[k] * atoms[k] + const`` with exact rational coefficients."""

    __slots__ = ("tower", "coeffs", "const")

    def __init__(self, tower: Tower, coeffs: Sequence[Number], const: float = 0.0):
        if len(coeffs) != len(tower):
            raise ValueError("coefficient count does not match tower depth")
        self.tower = tower
        self.coeffs = tuple(F(c) for c in coeffs)
        self.const = float(const)

    @classmethod
    def atom(cls, tower: Tower, k: int, coeff: Number = 1) -> "LogQuantity":
        c = [F(0)] * len(tower)
        c[k] = F(coeff)
        return cls(tower, c)

    @classmethod
    def constant(cls, tower: Tower, c: float) -> "LogQuantity":
        return cls(tower, [0] * len(tower), c)

    def leading(self) -> int:
        for k, c in enumerate(self.coeffs):
            if c != 0:
                return k
        return -1

    def value(self) -> float:
        k = self.leading()
        if k < 0:
            return self.const
        a = self.tower.atoms
        if math.isinf(a[k]):
            return math.copysign(math.inf, self.coeffs[k])
        total = self.const
        for c, x in zip(self.coeffs[k:], a[k:]):
            if c:
                total += float(c) * x
        return total

    def __float__(self) -> float:
        return self.value()

    def _coerce(self, other) -> "LogQuantity":
        if isinstance(other, LogQuantity):
            if other.tower != self.tower:
                raise ValueError("mixing quantities from different towers")
            return other
        return LogQuantity.constant(self.tower, float(other))

    def __add__(self, other):
        o = self._coerce(other)
        return LogQuantity(self.tower, [a + b for a, b in zip(self.coeffs, o.coeffs)], self.const + o.const)

    __radd__ = __add__

    def __neg__(self):
        return LogQuantity(self.tower, [-c for c in self.coeffs], -self.const)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, s: Number):
        if isinstance(s, LogQuantity):
            raise TypeError("log quantities only scale by rationals")
        s = F(s)
        return LogQuantity(self.tower, [c * s for c in self.coeffs], self.const * float(s))

    __rmul__ = __mul__

    def __repr__(self) -> str:
        parts = [f"{c}*a{k}" for k, c in enumerate(self.coeffs) if c]
        parts.append(f"{self.const:.17g}")
        return "LQ(" + " + ".join(parts) + ")"


LogLike = Union[float, LogQuantity]


def as_float(x: LogLike) -> float:
    return x.value() if isinstance(x, LogQuantity) else float(x)


def add(a: LogLike, b: LogLike) -> LogLike:
    if isinstance(a, LogQuantity):
        return a + b
    if isinstance(b, LogQuantity):
        return b + a
    return float(a) + float(b)


def sub(a: LogLike, b: LogLike) -> LogLike:
    if isinstance(a, LogQuantity):
        return a - b
    if isinstance(b, LogQuantity):
        return b._coerce(a) - b
    return float(a) - float(b)


def scale(a: LogLike, s: Number) -> LogLike:
    if isinstance(a, LogQuantity):
        return a * s
    return float(a) * float(s)


def log_of(q: LogLike) -> LogLike:
    """Natural log of the quantity ``q`` itself (``q`` must be positive)."""
    if not isinstance(q, LogQuantity):
        return math.log(q)
    k = q.leading()
    tw = q.tower
    if k < 0 or k == len(tw) - 1:
        v = q.value()
        if not v > 0:
            raise ValueError("log of a non-positive quantity")
        return LogQuantity.constant(tw, math.log(v))
    pivot = tw.atoms[k + 1]
    ck = q.coeffs[k]
    if ck <= 0:
        raise ValueError("log of a quantity with negative leading term")
    inner = float(ck)
    for m in range(k + 1, len(tw)):
        c = q.coeffs[m]
        if c:
            inner += float(c) * math.exp(tw.log_atom(m) - pivot)
    if q.const:
        inner += q.const * math.exp(-pivot)
    if not inner > 0:
        raise ValueError("log of a non-positive quantity")
    return LogQuantity.atom(tw, k + 1) + math.log(inner)


_LN3 = math.log(3.0)


def ln3p(x: LogLike) -> LogLike:
    """``ln(3 + e^x)``, the log argument shape used by every regime."""
    v = as_float(x)
    if v > 40.0:
        corr = math.log1p(3.0 * math.exp(-v)) if math.isfinite(v) else 0.0
        return add(x, corr)
    if v < -700:
        val = _LN3
    else:
        val = math.log(3.0 + math.exp(v))
    if isinstance(x, LogQuantity):
        return LogQuantity.constant(x.tower, val)
    return val


def logsumexp(items: Sequence[LogLike]) -> LogLike:
    items = list(items)
    if not items:
        raise ValueError("empty log-sum-exp")
    best = 0
    for i in range(1, len(items)):
        if as_float(sub(items[i], items[best])) > 0:
            best = i
    top = items[best]
    s = 0.0
    for it in items:
        d = as_float(sub(it, top))
        s += math.exp(d) if d > -745 else 0.0
    return add(top, math.log(s))


def const_like(ref: LogLike, c: float) -> LogLike:
    if isinstance(ref, LogQuantity):
        return LogQuantity.constant(ref.tower, c)
    return float(c)


def fsum_tree(values: Iterable[float]) -> float:
    """Pairwise (tree) summation with a fixed order."""
    vals = list(values)
    if not vals:
        return 0.0
    while len(vals) > 1:
        nxt = [vals[i] + vals[i + 1] for i in range(0, len(vals) - 1, 2)]
        if len(vals) % 2:
            nxt.append(vals[-1])
        vals = nxt
    return vals[0]


def log_atoms(tower: Tower) -> Tuple[LogQuantity, ...]:
    return tuple(LogQuantity.atom(tower, k) for k in range(len(tower)))
