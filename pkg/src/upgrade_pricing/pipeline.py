#!/usr/bin/env python3
"""
Analysis engine: conditions, upgrade allocation, optimal transfers, the
dual certificate and the LP cross-check for one instance, plus a batch
runner that analyzes many instance files concurrently.
"""

import logging
import threading
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .analysis import ConditionReport, CutoffMode, TypeOrder, Verdict, analyze_conditions, pseudo_revenues, search_type_orders
from .duality import CertificateVerdict, Flow, initial_flow, verify_certificate
from .errors import NoRoot, AmbiguousContainment, TooLarge, UpgradePricingError
from .ironing import IroningMap, IroningTrace, iron, ironing_map
from .lp import build_revenue_lp, solve_lp
from .model import Instance, Mechanism, revenue
from .pricing import SeparatePricingVerdict, check_monotone_type_space, price_allocation, separate_pricing_verdict, upgrade_allocation
from .serialization import load_instance

try:
    import psutil
except ImportError:
    psutil = None

logger = logging.getLogger(__name__)

ProgressCallback = Callable[[int, str], None]


class AnalysisStatus(Enum):
    CERTIFIED_OPTIMAL = "certified-optimal"
    CONDITIONS_UNMET = "conditions-unmet"
    CERTIFICATE_FAILED = "certificate-failed"

    @property
    def exit_code(self) -> int:
        return {"certified-optimal": 0, "conditions-unmet": 3, "certificate-failed": 4}[self.value]


EXIT_INPUT_ERROR = 1


@dataclass(frozen=True)
class AnalysisReport:
    """Everything the analyze pipeline learned about one instance."""
    instance: Instance
    conditions: ConditionReport
    status: AnalysisStatus
    monotone: Verdict
    separate_pricing: SeparatePricingVerdict
    cutoffs: Optional[Tuple[int, ...]] = None
    mechanism: Optional[Mechanism] = None
    revenue: Optional[Fraction] = None
    kappa: Optional[IroningMap] = None
    trace: Optional[IroningTrace] = None
    flow: Optional[Flow] = None
    certificate: Optional[CertificateVerdict] = None
    lp_value: Optional[Fraction] = None
    type_order: Optional[TypeOrder] = None
    note: str = ""

    @property
    def lp_gap(self) -> Optional[Fraction]:
        if self.lp_value is None or self.revenue is None:
            return None
        return self.lp_value - self.revenue

    @property
    def exit_code(self) -> int:
        return self.status.exit_code


@dataclass(frozen=True)
class BatchResult:
    """Outcome for one file of a batch: a report, or the error that stopped it."""
    name: str
    report: Optional[AnalysisReport] = None
    error: Optional[str] = None

    @property
    def exit_code(self) -> int:
        return self.report.exit_code if self.report else EXIT_INPUT_ERROR


def default_workers() -> int:
    """One worker process per physical core, or 1 without psutil."""
    if psutil:
        count = psutil.cpu_count(logical=False)
        if count:
            return count
    return 1


class AnalysisEngine:
    """Runs the analysis pipeline; one engine can serve a whole batch."""

    def __init__(self, run_lp: bool = True, search_orders: bool = False):
        self.run_lp = run_lp
        self.search_orders = search_orders
        self._cancel_requested = threading.Event()

    def cancel(self) -> None:
        """Stop a running batch after the files already in progress."""
        self._cancel_requested.set()

    def _reorder(self, inst: Instance) -> Optional[TypeOrder]:
        for mode in (CutoffMode.REGULAR, CutoffMode.MOSTLY_REGULAR):
            try:
                found = search_type_orders(inst, mode)
            except TooLarge as e:
                logger.warning("skipping type order search: %s", e)
                return None
            if found:
                return found
        return None

    def analyze(self, inst: Instance, progress_callback: Optional[ProgressCallback] = None) -> AnalysisReport:
        def report_progress(percent: int, message: str) -> None:
            if progress_callback:
                progress_callback(percent, message)

        report_progress(5, "Checking sufficient conditions")
        conditions = analyze_conditions(inst)
        type_order = None
        working = inst
        if not conditions.satisfied and self.search_orders:
            report_progress(15, "Searching type orders")
            type_order = self._reorder(inst)
            if type_order:
                logger.info("type order %s satisfies the conditions", type_order.permutation)
                working = type_order.instance
                conditions = analyze_conditions(working)

        mechanism = flow = certificate = kappa = trace = None
        rev = None
        note = ""
        if conditions.satisfied:
            cutoffs = conditions.cutoffs
            report_progress(25, f"Pricing the upgrade allocation for cutoffs {cutoffs}")
            mechanism = price_allocation(working, upgrade_allocation(working, cutoffs))
            rev = revenue(working, mechanism)
            try:
                if conditions.route is CutoffMode.REGULAR:
                    flow = initial_flow(working)
                else:
                    report_progress(40, "Ironing")
                    kappa = ironing_map(working, pseudo_revenues(working), cutoffs)
                    flow, trace = iron(
                        working, cutoffs, kappa,
                        progress_callback=lambda p, m: report_progress(40 + p * 3 // 10, m),
                    )
            except (NoRoot, AmbiguousContainment) as e:
                note = str(e)
                logger.warning("ironing failed: %s", e)
            if flow is not None:
                report_progress(75, "Verifying the certificate")
                certificate = verify_certificate(working, mechanism, flow)

        lp_value = None
        if self.run_lp:
            report_progress(85, "Solving the revenue LP")
            solution = solve_lp(build_revenue_lp(working))
            if solution.is_optimal:
                lp_value = solution.value
            else:
                logger.error("revenue LP returned %s", solution.status.value)

        if not conditions.satisfied:
            status = AnalysisStatus.CONDITIONS_UNMET
        elif certificate is None or not certificate.overall:
            status = AnalysisStatus.CERTIFICATE_FAILED
        elif lp_value is not None and lp_value != rev:
            status = AnalysisStatus.CERTIFICATE_FAILED
            note = f"LP optimum {lp_value} differs from certified revenue {rev}"
        else:
            status = AnalysisStatus.CERTIFIED_OPTIMAL

        report_progress(100, f"Analysis complete: {status.value}")
        logger.info("analysis of %dx%d instance: %s", working.n, working.d, status.value)
        return AnalysisReport(
            instance=working,
            conditions=conditions,
            status=status,
            monotone=check_monotone_type_space(working),
            separate_pricing=separate_pricing_verdict(working, conditions),
            cutoffs=conditions.cutoffs,
            mechanism=mechanism,
            revenue=rev,
            kappa=kappa,
            trace=trace,
            flow=flow,
            certificate=certificate,
            lp_value=lp_value,
            type_order=type_order,
            note=note,
        )

    def analyze_file(self, path: Path) -> AnalysisReport:
        return self.analyze(load_instance(path))

    def run_batch(
        self,
        paths: Sequence[Path],
        workers: Optional[int] = None,
        progress_callback: Optional[ProgressCallback] = None,
    ) -> Dict[str, BatchResult]:
        """Analyze files in worker processes; results are keyed and ordered by file name."""
        self._cancel_requested.clear()
        paths = sorted(paths, key=lambda p: p.name)
        results: Dict[str, BatchResult] = {}
        if not paths:
            return results
        workers = workers or default_workers()
        logger.info("analyzing %d instances with %d workers", len(paths), workers)

        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_analyze_entry, p, self.run_lp, self.search_orders): p for p in paths}
            for done, future in enumerate(as_completed(futures), start=1):
                if self._cancel_requested.is_set():
                    for pending in futures:
                        pending.cancel()
                    break
                result = future.result()
                results[result.name] = result
                if progress_callback:
                    progress_callback(int(100 * done / len(paths)), f"Analyzed {result.name}")

        return {name: results[name] for name in sorted(results)}


def _analyze_entry(path: Path, run_lp: bool, search_orders: bool) -> BatchResult:
    """Worker-process entry point; the engine itself stays in the parent."""
    try:
        report = AnalysisEngine(run_lp=run_lp, search_orders=search_orders).analyze_file(path)
        return BatchResult(name=path.name, report=report)
    except (UpgradePricingError, OSError) as e:
        logger.warning("%s: %s", path.name, e)
        return BatchResult(name=path.name, error=f"{type(e).__name__}: {e}")


def batch_exit_code(results: Dict[str, BatchResult]) -> int:
    return max((r.exit_code for r in results.values()), default=0)


def instance_files(directory: Path) -> List[Path]:
    return sorted(p for p in Path(directory).glob("*.json") if p.is_file())
