#!/usr/bin/env python3
"""
Allocations, optimal transfers, separate monopoly pricing, and conversion
between upgrade menus and per-item posted prices.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

from .analysis import PASS, ConditionReport, Verdict, _fail
from .errors import (
    EmptyBundleTier,
    FractionalBundle,
    InfeasiblePriceBounds,
    LpInfeasible,
    LpUnbounded,
    NotMonotone,
    PricingError,
    ShapeMismatch,
)
from .lp import LpStatus, build_transfer_lp, solve_lp, t_name
from .model import Instance, Matrix, Mechanism, UpgradeMenu, Vector, assign_menu, is_upgrade_menu
from .rational import ONE, ZERO

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SeparatePrices:
    """Posted per-item prices; a type buys item k iff theta^k >= p_k."""
    p: Vector

    def __post_init__(self):
        if any(v < 0 for v in self.p):
            raise PricingError(f"negative posted price in {self.p}")

    @property
    def d(self) -> int:
        return len(self.p)


@dataclass(frozen=True)
class SeparatePricing:
    prices: SeparatePrices
    allocation: Matrix
    revenue: Fraction


@dataclass(frozen=True)
class NotChain:
    """Two types whose purchased bundles are incomparable."""
    first: int
    second: int
    first_bundle: Vector
    second_bundle: Vector

    def __bool__(self) -> bool:
        return False


def upgrade_allocation(inst: Instance, cutoffs: Sequence[int]) -> Matrix:
    """q_i^k = 1 iff i >= i^k."""
    if len(cutoffs) != inst.d:
        raise ShapeMismatch(f"{len(cutoffs)} cutoffs for {inst.d} items")
    return tuple(
        tuple(ONE if i >= c else ZERO for c in cutoffs)
        for i in inst.types()
    )


def price_allocation(inst: Instance, q: Sequence[Sequence[Fraction]]) -> Mechanism:
    """Revenue-maximizing IC/IR transfers for a fixed allocation."""
    solution = solve_lp(build_transfer_lp(inst, q))
    if solution.status is LpStatus.INFEASIBLE:
        raise LpInfeasible("transfer LP is infeasible")
    if solution.status is LpStatus.UNBOUNDED:
        raise LpUnbounded("transfer LP is unbounded")
    t = tuple(solution[t_name(i)] for i in inst.types())
    return Mechanism(q=tuple(tuple(Fraction(v) for v in row) for row in q), t=t)


def separate_monopoly_pricing(inst: Instance) -> SeparatePricing:
    """Best posted price per item among the observed values; ties go to the lowest price."""
    prices = []
    total = ZERO
    for k in inst.items():
        column = inst.column(k)
        best_price, best_revenue = ZERO, ZERO
        for p in sorted(set(column)):
            demand = sum((inst.prob(i) for i in inst.types() if column[i - 1] >= p), ZERO)
            if p * demand > best_revenue:
                best_price, best_revenue = p, p * demand
        prices.append(best_price)
        total += best_revenue
    posted = SeparatePrices(p=tuple(prices))
    return SeparatePricing(
        prices=posted,
        allocation=separate_pricing_mechanism(inst, posted).q,
        revenue=total,
    )


def separate_pricing_mechanism(inst: Instance, prices: SeparatePrices) -> Mechanism:
    """The demand rule as a direct mechanism (not necessarily chain-ordered)."""
    if prices.d != inst.d:
        raise ShapeMismatch(f"{prices.d} prices for {inst.d} items")
    q, t = [], []
    for i in inst.types():
        row = tuple(ONE if inst.value(i, k) >= prices.p[k - 1] else ZERO for k in inst.items())
        q.append(row)
        t.append(sum((p for p, x in zip(prices.p, row) if x == 1), ZERO))
    return Mechanism(q=tuple(q), t=tuple(t))


def check_monotone_type_space(inst: Instance) -> Verdict:
    """theta_i <= theta_{i+1} component-wise for every i."""
    for i in range(1, inst.n):
        for k in inst.items():
            if inst.value(i, k) > inst.value(i + 1, k):
                return _fail(
                    f"theta_{i}^{k} = {inst.value(i, k)} exceeds theta_{i + 1}^{k} = {inst.value(i + 1, k)}",
                    i=i, j=i + 1, k=k,
                )
    return PASS


def separate_to_upgrade(inst: Instance, prices: SeparatePrices) -> Union[Mechanism, NotChain]:
    """The separate-pricing outcome as a mechanism, or the pair that breaks the chain."""
    m = separate_pricing_mechanism(inst, prices)
    chain = is_upgrade_menu(m)
    if chain:
        return m
    a, b = chain.incomparable
    return NotChain(first=a, second=b, first_bundle=m.alloc(a), second_bundle=m.alloc(b))


def _drop_unsold(menu: UpgradeMenu) -> Tuple[UpgradeMenu, List[int]]:
    sold = set(menu.assignment)
    keep = [k for k in range(len(menu.bundles)) if k == 0 or k in sold]
    dropped = [k for k in range(1, len(menu.bundles)) if k not in sold]
    reindex = {old: new for new, old in enumerate(keep)}
    trimmed = UpgradeMenu(
        bundles=tuple(menu.bundles[k] for k in keep),
        prices=tuple(menu.prices[k] for k in keep),
        assignment=tuple(reindex[a] for a in menu.assignment),
    )
    return trimmed, dropped


def upgrade_to_separate(inst: Instance, menu: UpgradeMenu, drop_unsold: bool = True) -> SeparatePrices:
    """
    Per-item prices reproducing every type's purchase and payment under a
    0/1 upgrade menu on a monotone type space.

    The upgrade u_k = b_k minus b_{k-1} costs tau_k = t_k - t_{k-1}. Its item
    prices must lie between the values of the highest buyer of b_{k-1} (0 when
    nobody buys it) and the lowest buyer of b_k; they are placed at the same
    fraction of the way through every item's range so that the sum is tau_k.
    Items no one buys are priced above every value.
    """
    monotone = check_monotone_type_space(inst)
    if not monotone:
        raise NotMonotone(monotone.reason)
    if menu.d != inst.d:
        raise ShapeMismatch(f"menu has {menu.d} goods, instance has {inst.d}")
    for bundle in menu.bundles:
        if any(v not in (ZERO, ONE) for v in bundle):
            raise FractionalBundle(f"bundle {bundle} is not a 0/1 vector")

    assigned = assign_menu(inst, menu)
    if drop_unsold:
        assigned, dropped = _drop_unsold(assigned)
        if dropped:
            logger.debug("dropping unsold menu tiers %s", dropped)
    else:
        for k in range(1, len(assigned.bundles)):
            if not assigned.buyers(k):
                raise EmptyBundleTier(f"bundle {k} is chosen by no type")

    prices: List[Optional[Fraction]] = [None] * inst.d
    for k in range(1, len(assigned.bundles)):
        upgrade = [
            j for j in inst.items()
            if assigned.bundles[k][j - 1] == 1 and assigned.bundles[k - 1][j - 1] == 0
        ]
        tau = assigned.prices[k] - assigned.prices[k - 1]
        below = assigned.buyers(k - 1)
        lowest = min(assigned.buyers(k))
        lo = {j: inst.value(max(below), j) if below else ZERO for j in upgrade}
        hi = {j: inst.value(lowest, j) for j in upgrade}
        lo_total = sum(lo.values(), ZERO)
        hi_total = sum(hi.values(), ZERO)
        if not lo_total <= tau <= hi_total:
            raise InfeasiblePriceBounds(
                f"upgrade {k} costs {tau}, outside [{lo_total}, {hi_total}]"
            )
        # buyers take an item at p_j == theta_j, so the top buyer below needs lo_j < p_j
        tied = [j for j in upgrade if below and hi[j] == lo[j]]
        if tied:
            raise InfeasiblePriceBounds(
                f"upgrade {k}: types {max(below)} and {lowest} both value item {tied[0]} at {lo[tied[0]]}"
            )
        alpha = ZERO if hi_total == lo_total else (tau - lo_total) / (hi_total - lo_total)
        for j in upgrade:
            prices[j - 1] = lo[j] + alpha * (hi[j] - lo[j])

    unsold = [j for j in inst.items() if prices[j - 1] is None]
    for j in unsold:
        prices[j - 1] = max(inst.column(j)) + ONE
    return SeparatePrices(p=tuple(prices))


@dataclass(frozen=True)
class SeparatePricingVerdict:
    """Whether the sufficient conditions imply separate monopoly pricing is optimal."""
    optimal: bool
    monotone: Verdict
    pricing: SeparatePricing
    reason: str = ""

    def __bool__(self) -> bool:
        return self.optimal


def separate_pricing_verdict(inst: Instance, report: ConditionReport) -> SeparatePricingVerdict:
    """Monotone type space plus a satisfied upgrade-pricing condition route."""
    monotone = check_monotone_type_space(inst)
    pricing = separate_monopoly_pricing(inst)
    if not monotone:
        reason = f"type space is not monotone: {monotone.reason}"
    elif not report.satisfied:
        reason = "no sufficient condition for upgrade pricing holds"
    else:
        reason = f"monotone type space and {report.route.value} cutoffs {report.cutoffs}"
    return SeparatePricingVerdict(
        optimal=bool(monotone) and report.satisfied,
        monotone=monotone,
        pricing=pricing,
        reason=reason,
    )
