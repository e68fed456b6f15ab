#!/usr/bin/env python3
"""
Ironing: assign each type the item whose closure it must attain, then
reroute the initial flow type by type, from the top down, until every
flow pseudo-revenue sits on its quasi-concave closure.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .analysis import IroningInterval, RevenueCurves, candidate_ironing_intervals, pseudo_revenues
from .duality import Edge, Flow, flow_pseudo_revenues, initial_flow
from .errors import AmbiguousContainment, BadCutoff, NoRoot
from .model import Instance
from .rational import ONE, ZERO

logger = logging.getLogger(__name__)

ProgressCallback = Callable[[int, str], None]


@dataclass(frozen=True)
class IroningMap:
    """kappa[i-1] is the item type i is ironed against."""
    kappa: Tuple[int, ...]

    def item(self, i: int) -> int:
        return self.kappa[i - 1]

    def __len__(self) -> int:
        return len(self.kappa)


def _widest(i: int, covering: List[IroningInterval]) -> IroningInterval:
    """The interval containing all the others; identical spans go to the lower item."""
    best = covering[0]
    for other in covering[1:]:
        if other.same_span(best):
            if other.item < best.item:
                best = other
        elif best.lo <= other.lo and other.hi <= best.hi:
            continue
        elif other.lo <= best.lo and best.hi <= other.hi:
            best = other
        else:
            raise AmbiguousContainment(i, best, other)
    return best


def ironing_map(inst: Instance, curves: RevenueCurves, cutoffs: Sequence[int]) -> IroningMap:
    """
    Types at or below the first cutoff go to item 1, those at or above the
    last go to item d, a middle cutoff i^k itself goes to k, and types
    strictly between i^k and i^{k+1} follow the widest candidate interval
    of item k or k+1 covering them (item k when none does).
    """
    if len(cutoffs) != inst.d or any(not 1 <= c <= inst.n for c in cutoffs):
        raise BadCutoff(f"cutoffs {tuple(cutoffs)} must be {inst.d} indices in 1..{inst.n}")
    intervals: Dict[int, List[IroningInterval]] = {
        k: candidate_ironing_intervals(curves, k) for k in inst.items()
    }
    first, last = cutoffs[0], cutoffs[-1]
    kappa = []
    for i in inst.types():
        if i <= first:
            kappa.append(1)
            continue
        if i >= last:
            kappa.append(inst.d)
            continue
        at_cutoff = [k for k in inst.items() if cutoffs[k - 1] == i]
        if at_cutoff:
            kappa.append(at_cutoff[0])
            continue
        # first < i < last, so some k has i^k < i < i^{k+1}
        k = max(k for k in inst.items() if cutoffs[k - 1] < i)
        covering = [iv for item in (k, k + 1) for iv in intervals[item] if i in iv]
        kappa.append(_widest(i, covering).item if covering else k)
    logger.debug("ironing map for cutoffs %s: %s", tuple(cutoffs), kappa)
    return IroningMap(kappa=tuple(kappa))


@dataclass(frozen=True)
class IroningStep:
    """State after processing type i."""
    i: int
    item: int
    gamma: Fraction
    flow: Flow
    curves: RevenueCurves


@dataclass(frozen=True)
class IroningTrace:
    """Steps in execution order, i = n down to 1."""
    steps: Tuple[IroningStep, ...]

    def gamma(self, i: int) -> Fraction:
        for step in self.steps:
            if step.i == i:
                return step.gamma
        raise KeyError(i)

    def gammas(self) -> Tuple[Fraction, ...]:
        """gamma_i indexed by type, i = 1..n."""
        return tuple(step.gamma for step in sorted(self.steps, key=lambda s: s.i))

    def __len__(self) -> int:
        return len(self.steps)


def reroute(weights: Dict[Edge, Fraction], n: int, i: int, gamma: Fraction) -> Dict[Edge, Fraction]:
    """
    Move a (1 - gamma) share of every edge j -> i (j > i) onto j -> i-1, and
    take the same total off i -> i-1 so node i stays balanced.
    """
    out = dict(weights)
    moved = ZERO
    for j in range(i + 1, n + 1):
        w = out.get((j, i), ZERO)
        if w == 0:
            continue
        share = (ONE - gamma) * w
        out[(j, i)] = w - share
        out[(j, i - 1)] = out.get((j, i - 1), ZERO) + share
        moved += share
    out[(i, i - 1)] = out.get((i, i - 1), ZERO) - moved
    return out


def _solve_gamma(inst: Instance, weights: Dict[Edge, Fraction], i: int, k: int, target: Fraction) -> Fraction:
    """R_i^k after rerouting is affine in gamma; pick the largest gamma in [0, 1] hitting target."""
    at_zero = flow_pseudo_revenues(inst, Flow.from_mapping(inst.n, reroute(weights, inst.n, i, ZERO))).curve(k)[i - 1]
    at_one = flow_pseudo_revenues(inst, Flow.from_mapping(inst.n, weights)).curve(k)[i - 1]
    slope = at_one - at_zero
    if slope == 0:
        if at_zero == target:
            return ONE
        raise NoRoot(i, k, f"pseudo-revenue is constant at {at_zero}, closure is {target}")
    gamma = (target - at_zero) / slope
    if not ZERO <= gamma <= ONE:
        raise NoRoot(i, k, f"closure {target} needs gamma = {gamma}, outside [0, 1]")
    return gamma


def iron(
    inst: Instance,
    cutoffs: Sequence[int],
    kappa: Optional[IroningMap] = None,
    progress_callback: Optional[ProgressCallback] = None,
) -> Tuple[Flow, IroningTrace]:
    """Run the ironing pass from the initial flow and return the final flow and its trace."""
    curves = pseudo_revenues(inst)
    if kappa is None:
        kappa = ironing_map(inst, curves, cutoffs)
    weights = initial_flow(inst).as_dict()
    steps = []
    for i in range(inst.n, 0, -1):
        k = kappa.item(i)
        target = curves.closure(k)[i - 1]
        gamma = _solve_gamma(inst, weights, i, k, target)
        if gamma != ONE:
            weights = reroute(weights, inst.n, i, gamma)
            logger.debug("type %d, item %d: gamma = %s", i, k, gamma)
        flow = Flow.from_mapping(inst.n, weights)
        steps.append(IroningStep(i=i, item=k, gamma=gamma, flow=flow, curves=flow_pseudo_revenues(inst, flow)))
        if progress_callback:
            done = inst.n - i + 1
            progress_callback(int(100 * done / inst.n), f"Ironed type {i} against item {k}")
    return Flow.from_mapping(inst.n, weights), IroningTrace(steps=tuple(steps))
