#!/usr/bin/env python3
"""
Pseudo-revenues, initial virtual values, quasi-concave closures and the
sufficient-condition checkers for upgrade pricing optimality.

Every check is relative to the input type order; search_type_orders is the
only place that looks at other orders.
"""

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

from .errors import BadCutoff, TooLarge
from .model import Instance, Matrix, Vector

logger = logging.getLogger(__name__)

CutoffVector = Tuple[int, ...]

MAX_ORDER_SEARCH_TYPES = 8


class CutoffMode(Enum):
    """Which sufficient condition a cutoff search targets."""
    REGULAR = "regular"
    MOSTLY_REGULAR = "mostly-regular"


@dataclass(frozen=True)
class Verdict:
    """Outcome of a condition check; negative verdicts always carry a witness."""
    holds: bool
    witness: Optional[Dict[str, Any]] = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.holds


PASS = Verdict(holds=True)


def _fail(reason: str, **witness) -> Verdict:
    return Verdict(holds=False, witness=witness, reason=reason)


@dataclass(frozen=True)
class IroningInterval:
    """Maximal run lo..hi (inclusive, 1-based) where an item's closure exceeds its curve."""
    item: int
    lo: int
    hi: int

    def __contains__(self, i: int) -> bool:
        return self.lo <= i <= self.hi

    def __len__(self) -> int:
        return self.hi - self.lo + 1

    def members(self) -> range:
        return range(self.lo, self.hi + 1)

    def strictly_inside(self, other: "IroningInterval") -> bool:
        """Contained in `other` without touching its endpoints."""
        return other.lo < self.lo and self.hi < other.hi

    def same_span(self, other: "IroningInterval") -> bool:
        return self.lo == other.lo and self.hi == other.hi

    def as_set(self) -> List[int]:
        return list(self.members())

    def __str__(self) -> str:
        return "{" + ", ".join(str(i) for i in self.members()) + "}"


def quasi_concave_closure(seq: Sequence[Fraction]) -> Vector:
    """
    Pointwise smallest quasi-concave sequence dominating `seq`: running
    maxima from the left up to a peak, from the right after it.
    """
    if not seq:
        raise ValueError("closure of an empty sequence")
    values = list(seq)
    top = max(values)
    peaks = [i for i, v in enumerate(values) if v == top]

    def around(p: int) -> List[Fraction]:
        out = list(values)
        running = values[0]
        for i in range(p + 1):
            running = max(running, values[i])
            out[i] = running
        running = values[-1]
        for i in range(len(values) - 1, p - 1, -1):
            running = max(running, values[i])
            out[i] = running
        return out

    closure = around(peaks[0])
    if len(peaks) > 1:
        assert closure == around(peaks[-1]), "closure depends on the argmax choice"
    return tuple(closure)


def is_quasi_concave(seq: Sequence[Fraction]) -> bool:
    """Nondecreasing up to some index, nonincreasing afterwards."""
    i, n = 0, len(seq)
    while i + 1 < n and seq[i] <= seq[i + 1]:
        i += 1
    while i + 1 < n and seq[i] >= seq[i + 1]:
        i += 1
    return i >= n - 1


def is_single_peaked(seq: Sequence[Fraction], peak: int) -> bool:
    """Nondecreasing up to `peak` (1-based) and nonincreasing from it."""
    p = peak - 1
    rising = all(seq[i] <= seq[i + 1] for i in range(p))
    falling = all(seq[i] >= seq[i + 1] for i in range(p, len(seq) - 1))
    return rising and falling


def argmax_set(seq: Sequence[Fraction]) -> Tuple[int, ...]:
    top = max(seq)
    return tuple(i for i, v in enumerate(seq, start=1) if v == top)


@dataclass(frozen=True)
class RevenueCurves:
    """Per-item pseudo-revenue sequences R^k with their closures and peaks."""
    curves: Matrix  # curves[k-1][i-1] = R_i^k

    @cached_property
    def closures(self) -> Matrix:
        return tuple(quasi_concave_closure(c) for c in self.curves)

    @property
    def d(self) -> int:
        return len(self.curves)

    def curve(self, k: int) -> Vector:
        return self.curves[k - 1]

    def closure(self, k: int) -> Vector:
        return self.closures[k - 1]

    def peaks(self, k: int) -> Tuple[int, ...]:
        return argmax_set(self.curves[k - 1])

    def is_ironed(self, i: int, k: int) -> bool:
        return self.closure(k)[i - 1] != self.curve(k)[i - 1]


def pseudo_revenues(inst: Instance) -> RevenueCurves:
    """R_i^k = (1 - F_{i-1}) theta_i^k."""
    return RevenueCurves(curves=tuple(
        tuple(inst.survival(i - 1) * inst.value(i, k) for i in inst.types())
        for k in inst.items()
    ))


def initial_virtual_values(inst: Instance) -> Matrix:
    """
    phi_i = theta_i - ((1 - F_i) / f_i) (theta_{i+1} - theta_i), rows by type.
    The last type keeps its value since 1 - F_n = 0.
    """
    rows = []
    for i in inst.types():
        if i == inst.n:
            rows.append(inst.row(i))
            continue
        factor = inst.survival(i) / inst.prob(i)
        rows.append(tuple(
            inst.value(i, k) - factor * (inst.value(i + 1, k) - inst.value(i, k))
            for k in inst.items()
        ))
    return tuple(rows)


def candidate_ironing_intervals(curves: RevenueCurves, k: int) -> List[IroningInterval]:
    """Maximal contiguous runs where the closure of item k differs from its curve."""
    intervals = []
    start = None
    n = len(curves.curve(k))
    for i in range(1, n + 1):
        if curves.is_ironed(i, k):
            if start is None:
                start = i
        elif start is not None:
            intervals.append(IroningInterval(item=k, lo=start, hi=i - 1))
            start = None
    if start is not None:
        intervals.append(IroningInterval(item=k, lo=start, hi=n))
    return intervals


def _check_cutoff_range(inst: Instance, cutoffs: Sequence[int]) -> None:
    if len(cutoffs) != inst.d or any(not 1 <= c <= inst.n for c in cutoffs):
        raise BadCutoff(f"cutoffs {tuple(cutoffs)} must be {inst.d} indices in 1..{inst.n}")


def _weak_monotonicity_witness(inst: Instance, k: int, c: int) -> Optional[Tuple[int, int]]:
    for i in range(1, c + 1):
        for j in range(c, inst.n + 1):
            if inst.value(i, k) > inst.value(j, k):
                return i, j
    return None


def _regularity_witness(phi: Matrix, k: int, c: int) -> Optional[int]:
    for i, row in enumerate(phi, start=1):
        if i < c and row[k - 1] > 0:
            return i
        if i >= c and row[k - 1] < 0:
            return i
    return None


def check_weak_monotonicity(inst: Instance, cutoffs: Sequence[int]) -> Verdict:
    """i <= i^k <= j implies theta_i^k <= theta_j^k, for every item."""
    _check_cutoff_range(inst, cutoffs)
    for k, c in enumerate(cutoffs, start=1):
        pair = _weak_monotonicity_witness(inst, k, c)
        if pair:
            i, j = pair
            return _fail(
                f"theta_{i}^{k} > theta_{j}^{k} across cutoff {c}", i=i, j=j, k=k
            )
    return PASS


def check_regularity(inst: Instance, cutoffs: Sequence[int]) -> Verdict:
    """Virtual values nonpositive below each cutoff, nonnegative at and above it."""
    _check_cutoff_range(inst, cutoffs)
    phi = initial_virtual_values(inst)
    for k, c in enumerate(cutoffs, start=1):
        i = _regularity_witness(phi, k, c)
        if i is not None:
            side = "below" if i < c else "at or above"
            return _fail(
                f"phi_{i}^{k} = {phi[i - 1][k - 1]} has the wrong sign {side} cutoff {c}",
                i=i, k=k, phi=phi[i - 1][k - 1],
            )
    return PASS


def check_monotone_mrs(inst: Instance) -> Verdict:
    """theta_i^l theta_j^k <= theta_j^l theta_i^k for all i <= j and k <= l."""
    for i, j in itertools.combinations(inst.types(), 2):
        for k, l in itertools.combinations(inst.items(), 2):
            if inst.value(i, l) * inst.value(j, k) > inst.value(j, l) * inst.value(i, k):
                return _fail(
                    f"rate of substitution between goods {k} and {l} falls from type {i} to {j}",
                    i=i, j=j, k=k, l=l,
                )
    return PASS


def _overlap_ok(first: IroningInterval, second: IroningInterval) -> bool:
    if first.hi + 1 < second.lo or second.hi + 1 < first.lo:
        return True
    if first.same_span(second):
        return True
    return first.strictly_inside(second) or second.strictly_inside(first)


def _interval_witness(first: IroningInterval, second: IroningInterval) -> Dict[str, Any]:
    return {
        "items": [first.item, second.item],
        "intervals": [first.as_set(), second.as_set()],
    }


def check_mostly_regular(
    inst: Instance, cutoffs: Sequence[int], curves: Optional[RevenueCurves] = None
) -> Verdict:
    """
    No partial overlap, no ironing on neighbouring maxima, not too shuffled,
    checked for every pair of adjacent items. Returns the first violation.
    """
    _check_cutoff_range(inst, cutoffs)
    curves = curves or pseudo_revenues(inst)
    for k, c in enumerate(cutoffs, start=1):
        if c not in curves.peaks(k):
            raise BadCutoff(f"cutoff {c} of item {k} is not a peak of its pseudo-revenue")
    if any(a > b for a, b in zip(cutoffs, cutoffs[1:])):
        raise BadCutoff(f"cutoffs {tuple(cutoffs)} are not nondecreasing")

    intervals = {k: candidate_ironing_intervals(curves, k) for k in inst.items()}

    # 1: intervals of neighbouring items are separated, nested or identical
    for k in range(1, inst.d):
        for first in intervals[k]:
            for second in intervals[k + 1]:
                if not _overlap_ok(first, second):
                    return _fail(
                        f"intervals {first} (item {k}) and {second} (item {k + 1}) partially overlap",
                        condition=1, **_interval_witness(first, second),
                    )

    # 2: no interval of item k holds i^k or i^{k+1}
    for k in inst.items():
        neighbours = [cutoffs[k - 1]] + ([cutoffs[k]] if k < inst.d else [])
        for interval in intervals[k]:
            for c in neighbours:
                if c in interval:
                    return _fail(
                        f"interval {interval} of item {k} contains cutoff type {c}",
                        condition=2, item=k, interval=interval.as_set(), cutoff=c,
                    )

    # 3: inside a segment between cutoffs the types are not too shuffled
    for k in range(1, inst.d):
        segment = range(cutoffs[k - 1] + 1, cutoffs[k])
        for interval in intervals[k] + intervals[k + 1]:
            if interval.lo not in segment or interval.hi not in segment:
                continue
            base = inst.value(interval.lo, k + 1)
            for i in interval.members():
                if inst.value(i, k + 1) < base:
                    return _fail(
                        f"theta_{i}^{k + 1} falls below theta_{interval.lo}^{k + 1} inside {interval}",
                        condition=3, item=interval.item, interval=interval.as_set(), i=i,
                    )
            if inst.value(interval.hi, k) > inst.value(interval.hi + 1, k):
                return _fail(
                    f"theta_{interval.hi}^{k} exceeds theta_{interval.hi + 1}^{k} after {interval}",
                    condition=3, item=interval.item, interval=interval.as_set(), i=interval.hi,
                )
    return PASS


@dataclass(frozen=True)
class CutoffSearch:
    """Result of find_compatible_cutoffs; `empty_item` names the item with no admissible cutoff."""
    mode: CutoffMode
    cutoffs: Optional[CutoffVector] = None
    empty_item: Optional[int] = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.cutoffs is not None


def _nondecreasing_selections(choices: Sequence[Sequence[int]]) -> Iterator[CutoffVector]:
    for pick in itertools.product(*choices):
        if all(a <= b for a, b in zip(pick, pick[1:])):
            yield tuple(pick)


def find_compatible_cutoffs(inst: Instance, mode: CutoffMode) -> CutoffSearch:
    """Cutoffs under which the instance is weakly monotone and (mostly) regular."""
    if mode is CutoffMode.REGULAR:
        phi = initial_virtual_values(inst)
        chosen = []
        for k in inst.items():
            admissible = [
                c for c in inst.types()
                if _regularity_witness(phi, k, c) is None
                and _weak_monotonicity_witness(inst, k, c) is None
            ]
            if not admissible:
                logger.debug("item %d admits no regular, weakly monotone cutoff", k)
                return CutoffSearch(
                    mode=mode, empty_item=k,
                    reason=f"item {k}: no cutoff is both regular and weakly monotone",
                )
            chosen.append(admissible[0])
        return CutoffSearch(mode=mode, cutoffs=tuple(chosen))

    curves = pseudo_revenues(inst)
    peaks = [curves.peaks(k) for k in inst.items()]
    tried = 0
    for pick in _nondecreasing_selections(peaks):
        tried += 1
        if not check_weak_monotonicity(inst, pick):
            continue
        if check_mostly_regular(inst, pick, curves):
            return CutoffSearch(mode=mode, cutoffs=pick)
    reason = (
        "no nondecreasing selection of pseudo-revenue peaks"
        if tried == 0
        else f"none of {tried} peak selections is weakly monotone and mostly regular"
    )
    return CutoffSearch(mode=mode, reason=reason)


@dataclass(frozen=True)
class TypeOrder:
    """A reordering of types: position p of `instance` holds original type permutation[p]."""
    permutation: Tuple[int, ...]
    instance: Instance
    cutoffs: CutoffVector


def search_type_orders(inst: Instance, mode: CutoffMode) -> Optional[TypeOrder]:
    """
    Exhaustively try type orders until one admits compatible cutoffs. In
    mostly-regular mode the order must also have monotone MRS.
    """
    if inst.n > MAX_ORDER_SEARCH_TYPES:
        raise TooLarge(f"order search is limited to {MAX_ORDER_SEARCH_TYPES} types, got {inst.n}")
    for order in itertools.permutations(inst.types()):
        candidate = inst.permuted(order)
        if mode is CutoffMode.MOSTLY_REGULAR and not check_monotone_mrs(candidate):
            continue
        found = find_compatible_cutoffs(candidate, mode)
        if found:
            logger.debug("type order %s admits %s cutoffs %s", order, mode.value, found.cutoffs)
            return TypeOrder(permutation=tuple(order), instance=candidate, cutoffs=found.cutoffs)
    return None


@dataclass(frozen=True)
class ConditionReport:
    """Verdicts of every sufficient condition, plus the cutoffs the pipeline should use."""
    weakly_monotone: Verdict
    regular: Verdict
    compatible_regular: CutoffSearch
    monotone_mrs: Verdict
    mostly_regular: Verdict
    compatible_mostly_regular: CutoffSearch
    cutoffs: Optional[CutoffVector] = None
    route: Optional[CutoffMode] = None
    intervals: Dict[int, List[IroningInterval]] = field(default_factory=dict)

    @property
    def satisfied(self) -> bool:
        return self.route is not None


def _per_item_existence(inst: Instance, admissible, label: str) -> Verdict:
    for k in inst.items():
        if not any(admissible(k, c) for c in inst.types()):
            return _fail(f"item {k} has no {label} cutoff", k=k)
    return PASS


def analyze_conditions(inst: Instance) -> ConditionReport:
    """Run every checker and both cutoff searches."""
    phi = initial_virtual_values(inst)
    curves = pseudo_revenues(inst)

    weakly_monotone = _per_item_existence(
        inst, lambda k, c: _weak_monotonicity_witness(inst, k, c) is None, "weakly monotone"
    )
    regular = _per_item_existence(
        inst, lambda k, c: _regularity_witness(phi, k, c) is None, "regular"
    )
    compatible_regular = find_compatible_cutoffs(inst, CutoffMode.REGULAR)
    monotone_mrs = check_monotone_mrs(inst)

    mostly_regular = _fail("no nondecreasing selection of pseudo-revenue peaks")
    for pick in _nondecreasing_selections([curves.peaks(k) for k in inst.items()]):
        mostly_regular = check_mostly_regular(inst, pick, curves)
        if mostly_regular:
            break
    compatible_mostly_regular = find_compatible_cutoffs(inst, CutoffMode.MOSTLY_REGULAR)

    cutoffs, route = None, None
    if compatible_regular:
        cutoffs, route = compatible_regular.cutoffs, CutoffMode.REGULAR
    elif compatible_mostly_regular and monotone_mrs:
        cutoffs, route = compatible_mostly_regular.cutoffs, CutoffMode.MOSTLY_REGULAR
    logger.debug("conditions: route=%s cutoffs=%s", route and route.value, cutoffs)

    return ConditionReport(
        weakly_monotone=weakly_monotone,
        regular=regular,
        compatible_regular=compatible_regular,
        monotone_mrs=monotone_mrs,
        mostly_regular=mostly_regular,
        compatible_mostly_regular=compatible_mostly_regular,
        cutoffs=cutoffs,
        route=route,
        intervals={k: candidate_ironing_intervals(curves, k) for k in inst.items()},
    )
