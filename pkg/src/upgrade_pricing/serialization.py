#!/usr/bin/env python3
"""
JSON codecs. Rationals travel as canonical "p/q" strings on output and are
accepted as integers, "p/q" or finite decimal strings on input. Output is
key-sorted so identical inputs give byte-identical files.
"""

import json
import logging
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Mapping, Sequence, Union

from .analysis import ConditionReport, CutoffSearch, IroningInterval, RevenueCurves, Verdict
from .duality import CertificateVerdict, Flow
from .errors import FormatError, UpgradePricingError
from .ironing import IroningMap, IroningTrace
from .model import ChainCheck, Instance, Mechanism, UpgradeMenu, validate_instance
from .pricing import NotChain, SeparatePrices, SeparatePricing, SeparatePricingVerdict
from .rational import format_rational, format_tuple, parse_rational

logger = logging.getLogger(__name__)


def dumps(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def load_json(path: Union[str, Path]) -> Any:
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as handle:
            return json.load(handle)
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: invalid JSON ({e.msg} at line {e.lineno})") from e


def _require(raw: Any, keys: Sequence[str], what: str) -> Mapping:
    if not isinstance(raw, Mapping):
        raise FormatError(f"{what} must be a JSON object")
    missing = [k for k in keys if k not in raw]
    if missing:
        raise FormatError(f"{what} is missing {', '.join(missing)}")
    return raw


def _rationals(values: Sequence[Fraction]) -> list:
    return [format_rational(v) for v in values]


def _matrix(rows: Sequence[Sequence[Fraction]]) -> list:
    return [_rationals(r) for r in rows]


def _parse_rows(raw: Any, what: str) -> list:
    if not isinstance(raw, list) or any(not isinstance(r, list) for r in raw):
        raise FormatError(f"{what} must be a list of lists")
    return [[parse_rational(v) for v in r] for r in raw]


def _parse_list(raw: Any, what: str) -> list:
    if not isinstance(raw, list):
        raise FormatError(f"{what} must be a list")
    return [parse_rational(v) for v in raw]


# Instances

def instance_to_dict(inst: Instance) -> Dict[str, Any]:
    return {"n": inst.n, "d": inst.d, "theta": _matrix(inst.theta), "f": _rationals(inst.f)}


def instance_from_dict(raw: Any) -> Instance:
    _require(raw, ("n", "d", "theta", "f"), "instance")
    return validate_instance(raw)


def load_instance(path: Union[str, Path]) -> Instance:
    return instance_from_dict(load_json(path))


# Mechanisms, menus, prices

def mechanism_to_dict(m: Mechanism) -> Dict[str, Any]:
    return {"q": _matrix(m.q), "t": _rationals(m.t)}


def mechanism_from_dict(raw: Any) -> Mechanism:
    _require(raw, ("q", "t"), "mechanism")
    return Mechanism.from_rows(_parse_rows(raw["q"], "q"), _parse_list(raw["t"], "t"))


def menu_to_dict(menu: UpgradeMenu) -> Dict[str, Any]:
    payload = {
        "bundles": _matrix(menu.bundles[1:]),
        "prices": _rationals(menu.prices[1:]),
    }
    if menu.assignment is not None:
        payload["assignment"] = list(menu.assignment)
    return payload


def menu_from_dict(raw: Any, d: int) -> UpgradeMenu:
    _require(raw, ("bundles", "prices"), "menu")
    return UpgradeMenu.from_offers(
        _parse_rows(raw["bundles"], "bundles"), _parse_list(raw["prices"], "prices"), d=d
    )


def prices_to_dict(prices: SeparatePrices) -> Dict[str, Any]:
    return {"p": _rationals(prices.p)}


def prices_from_dict(raw: Any) -> SeparatePrices:
    _require(raw, ("p",), "prices")
    return SeparatePrices(p=tuple(_parse_list(raw["p"], "p")))


def separate_pricing_to_dict(result: SeparatePricing) -> Dict[str, Any]:
    return {
        "prices": _rationals(result.prices.p),
        "allocation": _matrix(result.allocation),
        "revenue": format_rational(result.revenue),
    }


def not_chain_to_dict(result: NotChain) -> Dict[str, Any]:
    return {
        "chain": False,
        "types": [result.first, result.second],
        "bundles": [_rationals(result.first_bundle), _rationals(result.second_bundle)],
    }


# Flows

def flow_to_dict(flow: Flow) -> Dict[str, Any]:
    return {"lambda": [[j, i, format_rational(w)] for j, i, w in flow.edges()]}


def flow_from_dict(raw: Any, n: int) -> Flow:
    _require(raw, ("lambda",), "flow")
    entries = raw["lambda"]
    if not isinstance(entries, list):
        raise FormatError("lambda must be a list of [j, i, weight] triples")
    weights: Dict = {}
    for entry in entries:
        if not isinstance(entry, list) or len(entry) != 3:
            raise FormatError(f"flow entry {entry!r} is not a [j, i, weight] triple")
        j, i, w = entry
        if not isinstance(j, int) or not isinstance(i, int):
            raise FormatError(f"flow entry {entry!r} has non-integer endpoints")
        weights[(j, i)] = weights.get((j, i), Fraction(0)) + parse_rational(w)
    try:
        return Flow.from_mapping(n, weights)
    except ValueError as e:
        raise FormatError(str(e)) from e


# Verdicts and reports

def _plain(value: Any) -> Any:
    if isinstance(value, Fraction):
        return format_rational(value)
    if isinstance(value, IroningInterval):
        return {"item": value.item, "types": value.as_set()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    return value


def verdict_to_dict(verdict: Verdict) -> Dict[str, Any]:
    payload: Dict[str, Any] = {"holds": verdict.holds}
    if not verdict.holds:
        payload["reason"] = verdict.reason
        payload["witness"] = _plain(verdict.witness or {})
    return payload


def certificate_to_dict(verdict: CertificateVerdict) -> Dict[str, Any]:
    payload = {name: verdict_to_dict(v) for name, v in verdict.conditions().items()}
    payload["overall"] = verdict.overall
    return payload


def cutoff_search_to_dict(search: CutoffSearch) -> Dict[str, Any]:
    payload: Dict[str, Any] = {
        "mode": search.mode.value,
        "cutoffs": list(search.cutoffs) if search.cutoffs else None,
    }
    if not search:
        payload["reason"] = search.reason
        if search.empty_item is not None:
            payload["empty_item"] = search.empty_item
    return payload


def condition_report_to_dict(report: ConditionReport) -> Dict[str, Any]:
    return {
        "weakly_monotone": verdict_to_dict(report.weakly_monotone),
        "regular": verdict_to_dict(report.regular),
        "compatible_regular": cutoff_search_to_dict(report.compatible_regular),
        "monotone_mrs": verdict_to_dict(report.monotone_mrs),
        "mostly_regular": verdict_to_dict(report.mostly_regular),
        "compatible_mostly_regular": cutoff_search_to_dict(report.compatible_mostly_regular),
        "cutoffs": list(report.cutoffs) if report.cutoffs else None,
        "route": report.route.value if report.route else None,
        "intervals": {
            str(k): [iv.as_set() for iv in ivs] for k, ivs in sorted(report.intervals.items())
        },
    }


def chain_check_to_dict(check: ChainCheck) -> Dict[str, Any]:
    if check:
        return {"chain": True, "order": list(check.order)}
    return {"chain": False, "types": list(check.incomparable)}


def separate_pricing_verdict_to_dict(verdict: SeparatePricingVerdict) -> Dict[str, Any]:
    return {
        "optimal": verdict.optimal,
        "monotone": verdict_to_dict(verdict.monotone),
        "reason": verdict.reason,
        "monopoly": separate_pricing_to_dict(verdict.pricing),
    }


def curves_to_dict(curves: RevenueCurves) -> Dict[str, Any]:
    return {
        str(k): {"R": _rationals(curves.curve(k)), "Rbar": _rationals(curves.closure(k))}
        for k in range(1, curves.d + 1)
    }


def trace_to_dict(trace: IroningTrace, kappa: IroningMap) -> Dict[str, Any]:
    return {
        "kappa": list(kappa.kappa),
        "gamma": _rationals(trace.gammas()),
        "gamma_text": format_tuple(trace.gammas()),
        "iterations": [
            {
                "i": step.i,
                "item": step.item,
                "gamma": format_rational(step.gamma),
                "flow": flow_to_dict(step.flow)["lambda"],
                "R": {str(k): _rationals(step.curves.curve(k)) for k in range(1, step.curves.d + 1)},
            }
            for step in trace.steps
        ],
    }


def error_to_dict(error: UpgradePricingError) -> Dict[str, Any]:
    return {"error": type(error).__name__, "message": str(error)}


def report_to_dict(report) -> Dict[str, Any]:
    """JSON view of a pipeline AnalysisReport."""
    payload: Dict[str, Any] = {
        "instance": {"n": report.instance.n, "d": report.instance.d},
        "status": report.status.value,
        "conditions": condition_report_to_dict(report.conditions),
        "cutoffs": list(report.cutoffs) if report.cutoffs else None,
        "monotone_type_space": verdict_to_dict(report.monotone),
        "separate_pricing": separate_pricing_verdict_to_dict(report.separate_pricing),
        "mechanism": None,
        "certificate": None,
        "ironing": None,
        "lp": None,
    }
    if report.mechanism is not None:
        payload["mechanism"] = dict(mechanism_to_dict(report.mechanism), revenue=format_rational(report.revenue))
    if report.certificate is not None:
        payload["certificate"] = certificate_to_dict(report.certificate)
    if report.flow is not None:
        payload["flow"] = flow_to_dict(report.flow)["lambda"]
    if report.trace is not None:
        payload["ironing"] = {
            "kappa": list(report.kappa.kappa),
            "gamma": _rationals(report.trace.gammas()),
            "gamma_text": format_tuple(report.trace.gammas()),
        }
    if report.lp_value is not None:
        gap = report.lp_gap
        payload["lp"] = {
            "optimum": format_rational(report.lp_value),
            "gap": format_rational(gap) if gap is not None else None,
        }
    if report.type_order is not None:
        payload["type_order"] = list(report.type_order.permutation)
    if report.note:
        payload["note"] = report.note
    return payload
