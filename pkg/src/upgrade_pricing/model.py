#!/usr/bin/env python3
"""
Core domain types: instances, direct mechanisms and upgrade menus.

Type and item indices are 1-based throughout the public API, matching the
file formats and the usual notation; index 0 stands for the outside option
(q_0, t_0) = (0, 0), which is never stored.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .errors import (
    BadDistribution,
    InconsistentPricing,
    InvalidMechanism,
    NegativeValue,
    NotChainOrdered,
    ShapeMismatch,
)
from .rational import ONE, ZERO, parse_rational

logger = logging.getLogger(__name__)

Vector = Tuple[Fraction, ...]
Matrix = Tuple[Vector, ...]


@dataclass(frozen=True)
class Instance:
    """Type space theta (n x d) and its probability vector f."""
    theta: Matrix
    f: Vector

    @property
    def n(self) -> int:
        return len(self.theta)

    @property
    def d(self) -> int:
        return len(self.theta[0]) if self.theta else 0

    @cached_property
    def F(self) -> Vector:
        """Cumulative sums F_1..F_n; F_0 = 0 is implicit."""
        total = ZERO
        cumulative = []
        for p in self.f:
            total += p
            cumulative.append(total)
        return tuple(cumulative)

    def value(self, i: int, k: int) -> Fraction:
        return self.theta[i - 1][k - 1]

    def row(self, i: int) -> Vector:
        return self.theta[i - 1]

    def column(self, k: int) -> Vector:
        return tuple(r[k - 1] for r in self.theta)

    def prob(self, i: int) -> Fraction:
        return self.f[i - 1]

    def cdf(self, i: int) -> Fraction:
        """F_i, with F_0 = 0."""
        return ZERO if i == 0 else self.F[i - 1]

    def survival(self, i: int) -> Fraction:
        """1 - F_i."""
        return ONE - self.cdf(i)

    def types(self) -> range:
        return range(1, self.n + 1)

    def items(self) -> range:
        return range(1, self.d + 1)

    def permuted(self, order: Sequence[int]) -> "Instance":
        """Reorder types: position p of the result holds old type order[p]."""
        if sorted(order) != list(self.types()):
            raise ShapeMismatch(f"{list(order)} is not a permutation of 1..{self.n}")
        return Instance(
            theta=tuple(self.row(i) for i in order),
            f=tuple(self.prob(i) for i in order),
        )


def validate_instance(raw: Mapping) -> Instance:
    """
    Build a validated Instance from a mapping with keys n, d, theta, f.
    Entries may be anything parse_rational accepts.
    """
    try:
        n = int(raw["n"])
        d = int(raw["d"])
        theta_raw = raw["theta"]
        f_raw = raw["f"]
    except (KeyError, TypeError, ValueError) as e:
        raise ShapeMismatch(f"instance needs integer n, d and lists theta, f: {e}") from e

    if n < 1 or d < 1:
        raise ShapeMismatch(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    if len(theta_raw) != n or any(len(r) != d for r in theta_raw):
        raise ShapeMismatch(f"theta must be {n}x{d}")
    if len(f_raw) != n:
        raise ShapeMismatch(f"f must have length {n}, got {len(f_raw)}")

    theta = tuple(tuple(parse_rational(v) for v in r) for r in theta_raw)
    f = tuple(parse_rational(v) for v in f_raw)

    for i, r in enumerate(theta, start=1):
        for k, v in enumerate(r, start=1):
            if v < 0:
                raise NegativeValue(f"theta_{i}^{k} = {v} < 0")
    for i, p in enumerate(f, start=1):
        if p <= 0:
            raise BadDistribution(f"f_{i} = {p} is not strictly positive")
    if sum(f) != 1:
        raise BadDistribution(f"probabilities sum to {sum(f)}, not 1")

    return Instance(theta=theta, f=f)


@dataclass(frozen=True)
class Mechanism:
    """Direct mechanism: allocation q (n x d, entries in [0, 1]) and transfers t."""
    q: Matrix
    t: Vector

    def __post_init__(self):
        if len(self.q) != len(self.t):
            raise InvalidMechanism(f"{len(self.q)} allocation rows but {len(self.t)} transfers")
        widths = {len(r) for r in self.q}
        if len(widths) > 1:
            raise InvalidMechanism("allocation rows have different lengths")
        for r in self.q:
            for v in r:
                if v < 0 or v > 1:
                    raise InvalidMechanism(f"allocation entry {v} outside [0, 1]")

    @classmethod
    def from_rows(cls, q: Sequence[Sequence], t: Sequence) -> "Mechanism":
        return cls(
            q=tuple(tuple(parse_rational(v) for v in r) for r in q),
            t=tuple(parse_rational(v) for v in t),
        )

    @classmethod
    def zero(cls, n: int, d: int) -> "Mechanism":
        return cls(q=tuple((ZERO,) * d for _ in range(n)), t=(ZERO,) * n)

    @property
    def n(self) -> int:
        return len(self.q)

    @property
    def d(self) -> int:
        return len(self.q[0]) if self.q else 0

    def alloc(self, i: int) -> Vector:
        """q_i, with q_0 = 0."""
        return (ZERO,) * self.d if i == 0 else self.q[i - 1]

    def transfer(self, i: int) -> Fraction:
        """t_i, with t_0 = 0."""
        return ZERO if i == 0 else self.t[i - 1]

    def with_transfer(self, i: int, value: Fraction) -> "Mechanism":
        t = list(self.t)
        t[i - 1] = Fraction(value)
        return Mechanism(q=self.q, t=tuple(t))


def check_shapes(inst: Instance, m: Mechanism) -> None:
    if m.n != inst.n or m.d != inst.d:
        raise ShapeMismatch(
            f"mechanism is {m.n}x{m.d} but the instance is {inst.n}x{inst.d}"
        )


def dot(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), ZERO)


def utility(inst: Instance, i: int, q: Sequence[Fraction], t: Fraction) -> Fraction:
    """Quasi-linear utility <theta_i, q> - t."""
    return dot(inst.row(i), q) - t


def revenue(inst: Instance, m: Mechanism) -> Fraction:
    """Expected revenue sum_i f_i t_i."""
    return dot(inst.f, m.t)


def ic_slack(inst: Instance, m: Mechanism, j: int, i: int) -> Fraction:
    """s_ji: how much type j prefers its own outcome to type i's (i = 0 is IR)."""
    own = utility(inst, j, m.alloc(j), m.transfer(j))
    deviation = utility(inst, j, m.alloc(i), m.transfer(i))
    return own - deviation


@dataclass(frozen=True)
class IncentiveViolation:
    """Type j strictly prefers the outcome of type i (i = 0: the outside option)."""
    j: int
    i: int
    slack: Fraction

    @property
    def is_ir(self) -> bool:
        return self.i == 0


def ic_ir_violations(inst: Instance, m: Mechanism) -> List[IncentiveViolation]:
    """Every (j, i) with negative slack; empty means IC and IR hold."""
    check_shapes(inst, m)
    violations = []
    for j in inst.types():
        for i in range(0, inst.n + 1):
            if i == j:
                continue
            s = ic_slack(inst, m, j, i)
            if s < 0:
                violations.append(IncentiveViolation(j=j, i=i, slack=s))
    return violations


def dominates(a: Sequence[Fraction], b: Sequence[Fraction]) -> bool:
    """Component-wise a >= b."""
    return all(x >= y for x, y in zip(a, b))


@dataclass(frozen=True)
class ChainCheck:
    is_chain: bool
    order: Optional[Tuple[int, ...]] = None
    incomparable: Optional[Tuple[int, int]] = None

    def __bool__(self) -> bool:
        return self.is_chain


def is_upgrade_menu(m: Mechanism) -> ChainCheck:
    """
    Whether the allocations (together with the zero allocation) form a chain.
    On success `order` lists types from the smallest to the largest bundle;
    otherwise `incomparable` names two types whose bundles are incomparable.
    """
    order = sorted(range(1, m.n + 1), key=lambda i: (sum(m.alloc(i)), i))
    for lower, upper in zip(order, order[1:]):
        if not dominates(m.alloc(upper), m.alloc(lower)):
            pair = tuple(sorted((lower, upper)))
            return ChainCheck(is_chain=False, incomparable=pair)
    return ChainCheck(is_chain=True, order=tuple(order))


@dataclass(frozen=True)
class UpgradeMenu:
    """
    Nested bundles b_0 = 0 < b_1 < ... < b_K with prices 0 = t_0 < ... < t_K.
    `assignment[i-1]` is the bundle index chosen by type i, when known.
    """
    bundles: Matrix
    prices: Vector
    assignment: Optional[Tuple[int, ...]] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.bundles or len(self.bundles) != len(self.prices):
            raise InconsistentPricing("a menu needs one price per bundle, starting with b_0")
        if any(v != 0 for v in self.bundles[0]) or self.prices[0] != 0:
            raise InconsistentPricing("b_0 must be the zero bundle at price 0")
        for k in range(1, len(self.bundles)):
            lower, upper = self.bundles[k - 1], self.bundles[k]
            if not dominates(upper, lower) or upper == lower:
                raise NotChainOrdered(f"bundle {k - 1} is not strictly contained in bundle {k}")
            if self.prices[k] <= self.prices[k - 1]:
                raise InconsistentPricing(f"price of bundle {k} does not exceed price of bundle {k - 1}")

    @classmethod
    def from_offers(
        cls, bundles: Sequence[Sequence], prices: Sequence, d: Optional[int] = None
    ) -> "UpgradeMenu":
        """Build from the priced offers, with or without the leading outside option."""
        rows = [tuple(parse_rational(v) for v in b) for b in bundles]
        costs = [parse_rational(p) for p in prices]
        if len(rows) != len(costs):
            raise InconsistentPricing(f"{len(rows)} bundles but {len(costs)} prices")
        if rows and all(v == 0 for v in rows[0]):
            if costs[0] != 0:
                raise InconsistentPricing("the zero bundle must be priced at 0")
            rows, costs = rows[1:], costs[1:]
        if not rows:
            if d is None:
                raise InconsistentPricing("cannot infer the number of goods of an empty menu")
            return cls.empty(d)
        d = len(rows[0])
        return cls(bundles=((ZERO,) * d,) + tuple(rows), prices=(ZERO,) + tuple(costs))

    @classmethod
    def empty(cls, d: int) -> "UpgradeMenu":
        return cls(bundles=((ZERO,) * d,), prices=(ZERO,))

    @property
    def size(self) -> int:
        """K, the number of priced bundles."""
        return len(self.bundles) - 1

    @property
    def d(self) -> int:
        return len(self.bundles[0])

    def buyers(self, k: int) -> List[int]:
        if self.assignment is None:
            return []
        return [i for i, a in enumerate(self.assignment, start=1) if a == k]


def mechanism_to_menu(inst: Instance, m: Mechanism) -> UpgradeMenu:
    """Deduplicate a chain-ordered mechanism into its upgrade menu."""
    check_shapes(inst, m)
    chain = is_upgrade_menu(m)
    if not chain:
        a, b = chain.incomparable
        raise NotChainOrdered(f"types {a} and {b} receive incomparable bundles")

    price_of: Dict[Tuple[Fraction, ...], Fraction] = {(ZERO,) * m.d: ZERO}
    for i in chain.order:
        bundle, price = m.alloc(i), m.transfer(i)
        known = price_of.setdefault(bundle, price)
        if known != price:
            raise InconsistentPricing(
                f"bundle {bundle} is sold at both {known} and {price}"
            )

    bundles = sorted(price_of, key=sum)
    index = {b: k for k, b in enumerate(bundles)}
    assignment = tuple(index[m.alloc(i)] for i in inst.types())
    return UpgradeMenu(
        bundles=tuple(bundles),
        prices=tuple(price_of[b] for b in bundles),
        assignment=assignment,
    )


def choose_bundle(inst: Instance, i: int, menu: UpgradeMenu) -> int:
    """Utility-maximizing bundle index for type i; ties go to the pricier bundle."""
    best, best_utility = 0, ZERO
    for k in range(1, len(menu.bundles)):
        u = utility(inst, i, menu.bundles[k], menu.prices[k])
        if u >= best_utility:
            best, best_utility = k, u
    return best


def menu_to_mechanism(inst: Instance, menu: UpgradeMenu) -> Mechanism:
    """Expand a menu into a direct mechanism by letting each type choose."""
    if menu.d != inst.d:
        raise ShapeMismatch(f"menu has {menu.d} goods, instance has {inst.d}")
    choices = [choose_bundle(inst, i, menu) for i in inst.types()]
    return Mechanism(
        q=tuple(menu.bundles[k] for k in choices),
        t=tuple(menu.prices[k] for k in choices),
    )


def assign_menu(inst: Instance, menu: UpgradeMenu) -> UpgradeMenu:
    """The same menu with every type's choice recorded."""
    choices = tuple(choose_bundle(inst, i, menu) for i in inst.types())
    return UpgradeMenu(bundles=menu.bundles, prices=menu.prices, assignment=choices)
