#!/usr/bin/env python3
"""
Flows on incentive constraints, the virtual values and pseudo-revenues they
induce, and exact verification of optimality certificates.

Flow entries lambda[(j, i)] sit on the constraint "type j does not mimic
type i"; node 0 is the participation sink, so (j, 0) edges are IR rows.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Dict, Iterable, Iterator, Mapping, Optional, Sequence, Tuple

from .analysis import PASS, RevenueCurves, Verdict, _fail
from .model import Instance, Matrix, Mechanism, check_shapes, dot, ic_ir_violations, ic_slack, revenue
from .rational import ZERO

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]
SINK = 0


@dataclass(frozen=True)
class Flow:
    """Nonzero multipliers lambda_ji, stored sorted by (j, i)."""
    n: int
    entries: Tuple[Tuple[Edge, Fraction], ...] = ()

    @classmethod
    def from_mapping(cls, n: int, weights: Mapping[Edge, Fraction]) -> "Flow":
        for (j, i) in weights:
            if not (1 <= j <= n and 0 <= i <= n and i != j):
                raise ValueError(f"edge ({j}, {i}) is not an incentive constraint for {n} types")
        kept = sorted(
            ((edge, Fraction(w)) for edge, w in weights.items() if w != 0),
            key=lambda e: e[0],
        )
        return cls(n=n, entries=tuple(kept))

    @classmethod
    def zero(cls, n: int) -> "Flow":
        return cls(n=n)

    @cached_property
    def weights(self) -> Dict[Edge, Fraction]:
        return dict(self.entries)

    def get(self, j: int, i: int) -> Fraction:
        return self.weights.get((j, i), ZERO)

    def edges(self) -> Iterator[Tuple[int, int, Fraction]]:
        for (j, i), w in self.entries:
            yield j, i, w

    def inflow(self, i: int) -> Fraction:
        """Mass entering type node i from other types."""
        return sum((w for (j, r), w in self.entries if r == i), ZERO)

    def outflow(self, i: int) -> Fraction:
        """Mass leaving type node i, sink edge included."""
        return sum((w for (j, r), w in self.entries if j == i), ZERO)

    def as_dict(self) -> Dict[Edge, Fraction]:
        return dict(self.entries)


def initial_flow(inst: Instance) -> Flow:
    """lambda_{(i+1) i} = 1 - F_i for i = 0..n-1; the chain inducing Myersonian virtual values."""
    return Flow.from_mapping(inst.n, {(i + 1, i): inst.survival(i) for i in range(inst.n)})


def is_downward(flow: Flow) -> bool:
    """Positive mass only on edges from higher to lower types (the sink counts as lowest)."""
    return all(j > i for j, i, w in flow.edges() if w > 0)


def is_non_negative(flow: Flow) -> bool:
    return all(w >= 0 for _, _, w in flow.edges())


def flow_excess(inst: Instance, flow: Flow, i: int) -> Fraction:
    """Outflow minus inflow at type node i; feasibility demands f_i."""
    return flow.outflow(i) - flow.inflow(i)


@dataclass(frozen=True)
class VirtualValueTable:
    """phi[i-1][k-1] = phi_i^{lambda,k}, with the flow that induced it."""
    phi: Matrix
    flow: Optional[Flow] = None

    def value(self, i: int, k: int) -> Fraction:
        return self.phi[i - 1][k - 1]


def virtual_values(inst: Instance, flow: Flow) -> VirtualValueTable:
    """phi_i = theta_i - (1/f_i) sum_{j in [n]} lambda_ji (theta_j - theta_i); sink edges do not enter."""
    incoming: Dict[int, list] = {i: [] for i in inst.types()}
    for j, i, w in flow.edges():
        if i != SINK:
            incoming[i].append((j, w))
    rows = []
    for i in inst.types():
        theta_i = inst.row(i)
        correction = [ZERO] * inst.d
        for j, w in incoming[i]:
            theta_j = inst.row(j)
            for k in range(inst.d):
                correction[k] += w * (theta_j[k] - theta_i[k])
        rows.append(tuple(theta_i[k] - correction[k] / inst.prob(i) for k in range(inst.d)))
    return VirtualValueTable(phi=tuple(rows), flow=flow)


def flow_pseudo_revenues(inst: Instance, flow: Flow) -> RevenueCurves:
    """R_i^{lambda,k} = sum_{j >= i} f_j phi_j^{lambda,k}, as per-item curves."""
    phi = virtual_values(inst, flow).phi
    curves = []
    for k in range(inst.d):
        suffix = ZERO
        column = [ZERO] * inst.n
        for i in range(inst.n, 0, -1):
            suffix += inst.prob(i) * phi[i - 1][k]
            column[i - 1] = suffix
        curves.append(tuple(column))
    return RevenueCurves(curves=tuple(curves))


def virtual_welfare(inst: Instance, q: Sequence[Sequence[Fraction]], phi: Matrix) -> Fraction:
    """sum_i f_i <q_i, phi_i>."""
    return sum((inst.prob(i) * dot(q[i - 1], phi[i - 1]) for i in inst.types()), ZERO)


def dual_bound(inst: Instance, flow: Flow) -> Fraction:
    """sum_{i,k} f_i max(phi_i^{lambda,k}, 0): an upper bound on revenue for feasible flows."""
    phi = virtual_values(inst, flow).phi
    return sum(
        (inst.prob(i) * max(v, ZERO) for i in inst.types() for v in phi[i - 1]),
        ZERO,
    )


def lagrangian(inst: Instance, m: Mechanism, flow: Flow) -> Fraction:
    """sum_i f_i t_i + sum_ji lambda_ji s_ji."""
    return revenue(inst, m) + sum(
        (w * ic_slack(inst, m, j, i) for j, i, w in flow.edges()), ZERO
    )


def check_non_negativity(flow: Flow) -> Verdict:
    for j, i, w in flow.edges():
        if w < 0:
            return _fail(f"lambda_({j},{i}) = {w} is negative", j=j, i=i, value=w)
    return PASS


def check_virtual_welfare_max(q: Sequence[Sequence[Fraction]], phi: Matrix) -> Verdict:
    """
    q maximizes virtual welfare over [0,1]^{n x d} iff positive virtual values
    are fully allocated and negative ones are not allocated at all.
    """
    if len(q) != len(phi) or any(len(a) != len(b) for a, b in zip(q, phi)):
        raise ValueError("allocation and virtual values differ in shape")
    d = len(phi[0]) if phi else 0
    for k in range(1, d + 1):
        for i in range(1, len(phi) + 1):
            v, x = phi[i - 1][k - 1], q[i - 1][k - 1]
            if v > 0 and x != 1:
                return _fail(f"phi_{i}^{k} = {v} > 0 but q_{i}^{k} = {x}", i=i, k=k, phi=v, q=x)
            if v < 0 and x != 0:
                return _fail(f"phi_{i}^{k} = {v} < 0 but q_{i}^{k} = {x}", i=i, k=k, phi=v, q=x)
    return PASS


def check_flow_feasibility(inst: Instance, flow: Flow) -> Verdict:
    for i in inst.types():
        excess = flow_excess(inst, flow, i)
        if excess != inst.prob(i):
            return _fail(
                f"type {i}: outflow minus inflow is {excess}, expected f_{i} = {inst.prob(i)}",
                i=i, excess=excess, f=inst.prob(i),
            )
    return PASS


def check_complementary_slackness(inst: Instance, m: Mechanism, flow: Flow) -> Verdict:
    """Every edge carrying positive flow must be a binding IC or IR constraint."""
    check_shapes(inst, m)
    for j, i, w in flow.edges():
        if w > 0:
            s = ic_slack(inst, m, j, i)
            if s != 0:
                return _fail(
                    f"lambda_({j},{i}) = {w} > 0 but the constraint has slack {s}",
                    j=j, i=i, slack=s,
                )
    return PASS


def check_implementability(inst: Instance, m: Mechanism) -> Verdict:
    violations = ic_ir_violations(inst, m)
    if violations:
        v = violations[0]
        kind = "IR" if v.is_ir else "IC"
        return _fail(
            f"{kind}: type {v.j} gains {-v.slack} by choosing the outcome of {v.i}",
            j=v.j, i=v.i, slack=v.slack, count=len(violations),
        )
    return PASS


@dataclass(frozen=True)
class CertificateVerdict:
    """The five duality conditions; together they certify revenue optimality."""
    non_negativity: Verdict
    virtual_welfare_max: Verdict
    feasibility: Verdict
    complementary_slackness: Verdict
    implementability: Verdict

    CONDITIONS = (
        "non_negativity",
        "virtual_welfare_max",
        "feasibility",
        "complementary_slackness",
        "implementability",
    )

    @property
    def overall(self) -> bool:
        return all(self.conditions().values())

    def conditions(self) -> Dict[str, Verdict]:
        return {name: getattr(self, name) for name in self.CONDITIONS}

    def failures(self) -> Iterable[Tuple[int, str, Verdict]]:
        for number, (name, verdict) in enumerate(self.conditions().items(), start=1):
            if not verdict:
                yield number, name, verdict

    def __bool__(self) -> bool:
        return self.overall


def verify_certificate(inst: Instance, m: Mechanism, flow: Flow) -> CertificateVerdict:
    """Evaluate all five conditions exactly."""
    check_shapes(inst, m)
    phi = virtual_values(inst, flow).phi
    verdict = CertificateVerdict(
        non_negativity=check_non_negativity(flow),
        virtual_welfare_max=check_virtual_welfare_max(m.q, phi),
        feasibility=check_flow_feasibility(inst, flow),
        complementary_slackness=check_complementary_slackness(inst, m, flow),
        implementability=check_implementability(inst, m),
    )
    for number, name, failed in verdict.failures():
        logger.debug("certificate condition %d (%s) fails: %s", number, name, failed.reason)
    return verdict
